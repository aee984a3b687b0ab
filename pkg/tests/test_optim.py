import numpy as np
import pytest

from trackdrqn.optim import ParameterStore, rmsprop_step


def make_store(values):
    store = ParameterStore()
    for name, v in values.items():
        store.add(name, np.asarray(v, dtype=np.float64))
    return store


def test_cache_keys_track_parameter_keys():
    store = make_store({"a": [1.0], "b": [[1.0, 2.0]]})
    assert set(store.cache) == set(store.params)
    assert all((store.cache[k] >= 0).all() for k in store.cache)


def test_zero_gradient_decays_cache_only():
    store = make_store({"w": [2.0, -3.0]})
    store.cache["w"][:] = 1.0
    before = store["w"].data.copy()
    rmsprop_step(store, {"w": np.zeros(2)}, lr=0.5)
    assert np.array_equal(store["w"].data, before)
    assert np.allclose(store.cache["w"], 0.95)


def test_single_step_hand_arithmetic():
    # cache = 0.05 * 1^2, update = 0.1 / sqrt(0.05 + 1e-6)
    store = make_store({"w": [0.0]})
    rmsprop_step(store, {"w": np.array([1.0])}, lr=0.1)
    assert np.isclose(store.cache["w"][0], 0.05)
    assert np.isclose(store["w"].data[0], -0.1 / np.sqrt(0.05 + 1e-6))


def test_two_steps_constant_gradient_closed_form():
    # cache after two steps: (1 - decay^2) * g^2
    g = np.array([3.0])
    store = make_store({"w": [0.0]})
    rmsprop_step(store, {"w": g}, lr=0.01, decay=0.95)
    rmsprop_step(store, {"w": g}, lr=0.01, decay=0.95)
    assert np.isclose(store.cache["w"][0], (1.0 - 0.95**2) * 9.0)


def test_lr_zero_leaves_parameters_bit_identical():
    rng = np.random.default_rng(0)
    store = make_store({"w": rng.standard_normal(50)})
    before = store["w"].data.copy()
    rmsprop_step(store, {"w": rng.standard_normal(50)}, lr=0.0)
    assert np.array_equal(store["w"].data, before)


def test_key_mismatch_rejected():
    store = make_store({"a": [1.0]})
    with pytest.raises(ValueError, match="mismatch"):
        rmsprop_step(store, {"b": np.array([1.0])}, lr=0.1)
    with pytest.raises(ValueError, match="mismatch"):
        rmsprop_step(store, {}, lr=0.1)


def test_duplicate_registration_rejected():
    store = make_store({"a": [1.0]})
    with pytest.raises(ValueError):
        store.add("a", np.zeros(1))


def test_store_copy_is_deep():
    store = make_store({"a": [1.0, 2.0]})
    dup = store.copy()
    dup["a"].data[0] = 99.0
    assert store["a"].data[0] == 1.0
