import numpy as np
import pytest


def central_difference(f, params, step=1e-5):
    """Numerical gradient of scalar f() w.r.t. each array in ``params``.

    ``params`` maps names to float64 arrays that f reads when called; each
    entry is perturbed in place, two-sided.
    """
    grads = {}
    for name, arr in params.items():
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            fp = f()
            flat[i] = orig - step
            fm = f()
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * step)
        grads[name] = g
    return grads


def rel_error(analytic, numeric):
    """L2 relative error between two gradient arrays."""
    a = np.asarray(analytic).ravel()
    n = np.asarray(numeric).ravel()
    denom = max(np.linalg.norm(a), np.linalg.norm(n), 1e-30)
    return np.linalg.norm(a - n) / denom


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
