import numpy as np
import pytest

import exitspec as es


@pytest.fixture(scope="session")
def interval():
    return es.Interval(0, 1)


@pytest.fixture(scope="session")
def interval_grid(interval):
    return es.build_grid(interval, 1.0 / 256.0)


@pytest.fixture(scope="session")
def interval_pde_512(interval):
    """Moments through n=9 on the fine interval grid; shared by several
    suites because the recursion is the expensive part."""
    ms, fields, grid = es.pde_moments(interval, 1.0 / 512.0, 9)
    return ms, fields, grid


@pytest.fixture(scope="session")
def square_pde(interval):
    ms, fields, grid = es.pde_moments(es.Rectangle(1, 1), 1.0 / 64.0, 8)
    return ms, fields, grid


@pytest.fixture(scope="session")
def disk_pde():
    ms, fields, grid = es.pde_moments(es.Disk(1), 1.0 / 1000.0, 8)
    return ms, fields, grid


@pytest.fixture(scope="session")
def mc_interval_small(interval):
    cfg = es.SimConfig(interval, [0.5], 500, 1e-4, seed=4242)
    return cfg, es.simulate_exit_times(cfg)
