import numpy as np
import pytest

from trackdrqn.tensor import Tensor, ShapeError, NonFiniteError, assert_finite


def test_flat_length_matches_shape():
    t = Tensor(np.arange(12.0).reshape(3, 4))
    assert t.shape == (3, 4)
    assert t.size == int(np.prod(t.shape))
    assert t.data.ravel().shape[0] == t.size


def test_grad_must_match_data_shape():
    with pytest.raises(ShapeError):
        Tensor(np.zeros((2, 2)), grad=np.zeros(3))


def test_ensure_grad_allocates_once():
    t = Tensor(np.ones(5))
    g = t.ensure_grad()
    g[0] = 7.0
    assert t.ensure_grad() is g
    t.zero_grad()
    assert t.grad.sum() == 0.0


def test_int_input_promoted_to_float():
    t = Tensor([1, 2, 3])
    assert np.issubdtype(t.dtype, np.floating)


def test_assert_finite_ok():
    assert_finite(Tensor(np.zeros(4)))
    assert_finite(np.array([1.0, -2.0]))


def test_assert_finite_reports_first_nan_index():
    x = np.zeros(6)
    x[3] = np.nan
    with pytest.raises(NonFiniteError, match="flat index 3"):
        assert_finite(x)


def test_assert_finite_rejects_inf():
    with pytest.raises(NonFiniteError):
        assert_finite(np.array([0.0, np.inf]))
