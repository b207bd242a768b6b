import numpy as np
import pytest

from annulus_dilation import _pykernels
from annulus_dilation.linalg import complex_gaussian, rng_from_seed

try:
    from annulus_dilation import _kernels
except ImportError:  # extension not built
    _kernels = None

KERNEL_MODULES = [pytest.param(_pykernels, id="python")]
if _kernels is not None:
    KERNEL_MODULES.append(pytest.param(_kernels, id="cython"))


@pytest.fixture(params=KERNEL_MODULES)
def kernels(request):
    return request.param


@pytest.fixture
def rng():
    return rng_from_seed(12345)


def random_matrix(rng, n, m=None):
    return complex_gaussian(rng, (n, m or n))


def power_norm(a, iters=500):
    """Largest singular value by power iteration on a^H a."""
    x = np.ones(a.shape[1], dtype=complex) / np.sqrt(a.shape[1])
    g = a.conj().T @ a
    for _ in range(iters):
        y = g @ x
        x = y / np.linalg.norm(y)
    return float(np.sqrt(np.vdot(x, g @ x).real))
