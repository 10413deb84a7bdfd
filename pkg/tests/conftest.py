import time

import numpy as np
import pytest

from bilayerctrl.config import PRESETS
from bilayerctrl.kernels import KernelGrid, solve_C, solve_kernels
from bilayerctrl.pipeline import build_pipeline, run_closed_loop
from bilayerctrl.verify import smooth_coupled_system, synthetic_coupled_system


@pytest.fixture(scope="session")
def sec4_cfg():
    return PRESETS["paper-sec4"]


@pytest.fixture(scope="session")
def sec4_pipeline(sec4_cfg):
    return build_pipeline(sec4_cfg)


@pytest.fixture(scope="session")
def sec4_trace(sec4_pipeline):
    """Full closed-loop run of the published configuration, with wall time."""
    t0 = time.perf_counter()
    trace = run_closed_loop(sec4_pipeline)
    elapsed = time.perf_counter() - t0
    return trace, elapsed


@pytest.fixture(scope="session")
def coupled_system():
    return synthetic_coupled_system()


@pytest.fixture(scope="session")
def coupled_kernels(coupled_system):
    grid = KernelGrid(96)
    kern = solve_kernels(coupled_system, grid)
    Cr, Cl, ci = solve_C(kern, coupled_system, grid)
    return kern.with_C(Cr, Cl, ci)


@pytest.fixture(scope="session")
def smooth_system():
    return smooth_coupled_system()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
