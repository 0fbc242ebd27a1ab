import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def truth():
    from physreg.simulator import simulate
    return simulate()


@pytest.fixture(scope="session")
def grid20(truth):
    import warnings

    from physreg.simulator import sample_grid
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return sample_grid(truth, 20)


@pytest.fixture(scope="session")
def grid20_index(grid20):
    from physreg.neighbors import SampleIndex
    return SampleIndex(grid20)


def rds_queries(index, n, seed=0, k=10):
    """Per-query systems at random points of the benchmark domain."""
    from physreg.constraints import assemble_arrays
    from physreg.predictor import idw, initial_theta
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        x = np.array([*rng.uniform(0, 10, 2), rng.uniform(0, 2.5)])
        ii, _ = index.nearest(x, k)
        X, U = index.X[ii], index.U[ii]
        sys_ = assemble_arrays(x, X, U)
        theta0 = initial_theta(sys_.layout.dim, k, idw(x, X, U, index.metric), 1e-3)
        out.append((x, X, U, sys_, theta0))
    return out
