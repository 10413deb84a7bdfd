import dataclasses

import numpy as np
import pytest

from bilayerctrl.errors import SolverError, ValidationError
from bilayerctrl.hetero import constant_system
from bilayerctrl.kernels import (
    KernelGrid, KernelSet, export_kernels_csv, kernel_residuals, solve_C, solve_kernels,
)


def test_grid_minimum_resolution():
    with pytest.raises(ValidationError):
        KernelGrid(7)
    assert KernelGrid(8).h == pytest.approx(1 / 8)


def test_zero_coupling_gives_exact_zero_kernels():
    system = constant_system(lam_r=(1.0, 2.0), lam_l=(0.8, 1.6),
                             Q0=[[0.4, -0.3], [0.2, 0.5]],
                             R1=[[0.3, 0.1], [-0.2, 0.4]])
    kern = solve_kernels(system, KernelGrid(32))
    assert kern.iterations == 1
    assert np.all(kern.G21 == 0.0)
    assert np.all(kern.G22 == 0.0)
    assert np.all(kern.Delta == 0.0)
    report = kernel_residuals(kern, system, KernelGrid(32))
    assert report.interior_max == 0.0
    assert report.bc_sylvester_max == 0.0


def test_sr_alone_cannot_source_kernels():
    # with So = Sl = 0 the kernel equations are homogeneous with zero data
    # regardless of Sr, so the fixed point is identically zero
    system = constant_system(lam_r=(1.0, 2.0), lam_l=(0.8, 1.6),
                             Sr=[[0.9, -0.7], [0.3, 1.1]],
                             Q0=[[0.4, -0.3], [0.2, 0.5]])
    kern = solve_kernels(system, KernelGrid(24))
    assert kern.iterations == 1
    assert np.all(kern.G21 == 0.0) and np.all(kern.G22 == 0.0)


def test_scalar_diagonal_sylvester_datum():
    # lam_l = lam_r = 1, So = 2: the diagonal datum is -2 / (1 + 1) = -1 and
    # the homogeneous transport keeps that value on the whole triangle
    system = constant_system(lam_r=(1.0,), lam_l=(1.0,), So=[[2.0]])
    kern = solve_kernels(system, KernelGrid(32))
    N = 32
    for a in range(N + 1):
        assert kern.G21[0, 0, a, a] == pytest.approx(-1.0, abs=0)
    tri = np.tril_indices(N + 1)
    assert np.max(np.abs(kern.G21[0, 0][tri] + 1.0)) == 0.0
    assert np.all(kern.G22 == 0.0)


def _scalar_self_coupled(c):
    return constant_system(lam_r=(1.0,), lam_l=(1.0,), So=[[2.0]], Sr=[[c]])


def _scalar_exact(grid, c):
    ax = grid.axis
    X, XI = np.meshgrid(ax, ax, indexing="ij")
    return -np.exp(c * (X - XI) / 2.0)


@pytest.mark.parametrize("N,tol", [(64, 5e-6), (128, 2e-6)])
def test_scalar_self_coupled_closed_form(N, tol):
    c = 0.8
    grid = KernelGrid(N)
    kern = solve_kernels(_scalar_self_coupled(c), grid)
    exact = _scalar_exact(grid, c)
    tri = np.tril_indices(N + 1)
    assert np.max(np.abs((kern.G21[0, 0] - exact)[tri])) <= tol


def test_scalar_closed_form_error_shrinks_with_refinement():
    c = 0.8
    errs = []
    for N in (64, 128):
        grid = KernelGrid(N)
        kern = solve_kernels(_scalar_self_coupled(c), grid)
        tri = np.tril_indices(N + 1)
        errs.append(np.max(np.abs((kern.G21[0, 0] - _scalar_exact(grid, c))[tri])))
    assert errs[0] / errs[1] >= 1.5


def test_coupled_solve_boundary_data_and_delta(coupled_system, coupled_kernels):
    kern = coupled_kernels
    grid = kern.grid
    report = kernel_residuals(kern, coupled_system, grid)
    assert report.bc_sylvester_max == 0.0
    assert report.bc_commutator_imposed_max == 0.0
    assert report.bc_bottom_max <= 1e-7
    # Delta strictly lower triangular, upper entries bitwise zero
    assert np.all(kern.Delta[0, 0] == 0.0)
    assert np.all(kern.Delta[0, 1] == 0.0)
    assert np.all(kern.Delta[1, 1] == 0.0)
    assert np.max(np.abs(kern.Delta[1, 0])) > 1e-3
    assert report.delta_upper_norm == 0.0


def test_coupled_solve_picard_contraction(coupled_kernels):
    changes = np.array(coupled_kernels.changes)
    assert changes[-1] < 1e-8
    # geometric-style contraction after the initial fill sweep
    tail = changes[1:]
    assert np.all(tail[1:] <= tail[:-1] * 0.95)


def test_interior_residual_refines_on_smooth_system(smooth_system):
    res = {}
    for N in (48, 96):
        grid = KernelGrid(N)
        kern = solve_kernels(smooth_system, grid)
        res[N] = kernel_residuals(kern, smooth_system, grid).interior_max
    assert res[48] >= 1.5 * res[96]


def test_residual_flags_injected_fault(coupled_system, coupled_kernels):
    grid = coupled_kernels.grid
    base = kernel_residuals(coupled_kernels, coupled_system, grid)
    G21 = coupled_kernels.G21.copy()
    a0, b0 = 72, 24
    G21[0, 0, a0, b0] += 0.1
    broken = dataclasses.replace(coupled_kernels, G21=G21)
    report = kernel_residuals(broken, coupled_system, grid)
    assert report.interior_max > 10 * base.interior_max
    comp, x, xi = report.interior_argmax
    assert comp == "G21[1,1]"
    h = grid.h
    assert abs(x - a0 * h) <= 3 * h and abs(xi - b0 * h) <= 3 * h


def test_diagonal_component_without_datum_rejected():
    system = constant_system(lam_r=(1.0,), lam_l=(2.0,), So=[[1.0]])
    with pytest.raises(ValidationError):
        solve_kernels(system, KernelGrid(16))


def test_nonconvergence_raises(coupled_system):
    with pytest.raises(SolverError):
        solve_kernels(coupled_system, KernelGrid(32), max_iter=2)


# ---------------------------------------------------------------------------
# Volterra coefficients

def test_solve_C_zero_forcing():
    system = constant_system(lam_r=(1.0, 2.0), lam_l=(0.8, 1.6),
                             So=[[0.3, -0.2], [0.1, 0.25]])
    grid = KernelGrid(24)
    kern = solve_kernels(system, grid)
    Cr, Cl, _ = solve_C(kern, system, grid)
    assert np.all(Cr == 0.0) and np.all(Cl == 0.0)


def test_solve_C_one_term_series():
    # G22 = 0 forces Cl = 0, hence Cr(x, xi) = Sl(x) G21(x, xi) exactly
    N = 24
    grid = KernelGrid(N)
    system = constant_system(lam_r=(1.0,), lam_l=(1.0,), Sl=[[0.9]])
    g0 = -0.4
    shape = (1, 1, N + 1, N + 1)
    kern = KernelSet(grid=grid, G21=np.full(shape, g0), G22=np.zeros(shape),
                     Delta=np.zeros((1, 1, N + 1)), iterations=1, changes=(0.0,))
    Cr, Cl, _ = solve_C(kern, system, grid)
    assert np.all(Cl == 0.0)
    assert np.allclose(Cr, 0.9 * g0, atol=1e-14)


def test_solve_C_scalar_closed_form():
    gam, g0, s = 0.7, -0.4, 0.9
    N = 96
    grid = KernelGrid(N)
    system = constant_system(lam_r=(1.0,), lam_l=(1.0,), Sl=[[s]])
    shape = (1, 1, N + 1, N + 1)
    kern = KernelSet(grid=grid, G21=np.full(shape, g0), G22=np.full(shape, gam),
                     Delta=np.zeros((1, 1, N + 1)), iterations=1, changes=(0.0,))
    Cr, Cl, iters = solve_C(kern, system, grid)
    ax = grid.axis
    X, XI = np.meshgrid(ax, ax, indexing="ij")
    tri = XI <= X
    assert iters <= 50
    assert np.max(np.abs((Cl[0, 0] - s * gam * np.exp(gam * (X - XI)))[tri])) <= 1e-4
    assert np.max(np.abs((Cr[0, 0] - s * g0 * np.exp(gam * (X - XI)))[tri])) <= 1e-4


def test_solve_C_refinement_stability(coupled_system):
    sups = {}
    for N in (48, 96):
        grid = KernelGrid(N)
        kern = solve_kernels(coupled_system, grid)
        Cr, _, iters = solve_C(kern, coupled_system, grid)
        assert iters <= 50
        sups[N] = np.max(np.abs(Cr))
    assert abs(sups[96] - sups[48]) <= 0.05 * sups[48]


def test_preset_system_kernels_vanish(sec4_pipeline):
    # the two-layer system carries no leftward in-domain coupling, so the
    # transformation kernels, Delta, and the convolution coefficients are
    # all identically zero and the fixed point is reached in one sweep
    kern = sec4_pipeline.kernels
    assert kern.is_zero()
    assert kern.iterations == 1
    assert np.all(kern.Delta == 0.0)
    assert np.all(kern.Cr == 0.0) and np.all(kern.Cl == 0.0)


def test_full_kernel_at_blocks(coupled_kernels):
    G = coupled_kernels.full_kernel_at(0.7, 0.3)
    n, m = coupled_kernels.n, coupled_kernels.m
    assert G.shape == (n + m, n + m)
    assert np.all(G[:n, :] == 0.0)
    assert np.max(np.abs(G[n:, :])) > 0.0


def test_kernel_csv_export(tmp_path, coupled_kernels):
    path = tmp_path / "kernels.csv"
    export_kernels_csv(coupled_kernels, path)
    lines = path.read_text().strip().split("\n")
    N = coupled_kernels.grid.N
    nodes = (N + 1) * (N + 2) // 2
    assert lines[0] == "x,xi,component,value"
    assert len(lines) == 1 + 8 * nodes
    x, xi, comp, val = lines[1].split(",")
    assert comp == "G21_11"
    float(x), float(xi), float(val)
