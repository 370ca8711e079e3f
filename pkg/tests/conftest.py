import numpy as np
import pytest

from dyadicsim import Closure, IntegratorConfig, ModelParams, integrate

# standard tolerances used throughout unless a test says otherwise
CFG = IntegratorConfig()


@pytest.fixture(scope="session")
def traj_conserve5():
    """beta=1, N=5, zero closure, geometric data: conservative reference."""
    p = ModelParams(beta=1.0, n_max=5, closure=Closure.GALERKIN_ZERO)
    x0 = np.array([1.0, 0.5, 0.25, 0.125, 0.0625])
    return integrate(p, CFG, x0, 2.0)


@pytest.fixture(scope="session")
def traj_mixed8():
    """beta=1, N=8, mirror, alternating-sign decaying data."""
    p = ModelParams(beta=1.0, n_max=8, closure=Closure.MIRROR)
    x0 = np.array([1.0, -0.1, 0.01, -1e-3, 1e-4, -1e-5, 1e-6, -1e-7])
    return integrate(p, CFG, x0, 5.0)


@pytest.fixture(scope="session")
def traj_positive10():
    """beta=1, N=10, mirror, positive geometric data over a long horizon."""
    p = ModelParams(beta=1.0, n_max=10, closure=Closure.MIRROR)
    n = np.arange(1, 11)
    x0 = np.exp2(-0.5 * n)
    x0 = x0 / np.linalg.norm(x0)
    return integrate(p, CFG, x0, 10.0)
