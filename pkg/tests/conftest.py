import pytest

import friedrichs_lab as fl


@pytest.fixture(scope="session")
def pairs():
    """Session-cached ground-state solves keyed by (dim, p, q, n, seed)."""
    cache = {}

    def get(dim, p, q, n, seed=0):
        key = (dim, float(p), float(q), int(n), int(seed))
        if key not in cache:
            if dim == 1:
                grid = fl.interval_grid(0.0, 1.0, n)
            else:
                grid = fl.rectangle_grid(0.0, 1.0, 0.0, 1.0, n, n)
            cache[key] = fl.solve_eigenpair(
                grid, fl.Exponents(p, q), fl.SolverConfig(seed=seed))
        return cache[key]

    return get


@pytest.fixture(scope="session")
def squad16():
    return fl.SPathQuadrature.gauss(16)


@pytest.fixture(scope="session")
def squad32():
    return fl.SPathQuadrature.gauss(32)
