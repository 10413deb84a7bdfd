"""Acceptance gate: one test per criterion, each printing a pass/fail line."""

import dataclasses
import time

import numpy as np

from bilayerctrl.bilayer import PhysicalParams, characteristic_speeds, from_riemann, to_riemann
from bilayerctrl.config import PRESETS
from bilayerctrl.controller import (
    KernelQuadrature, RiemannState, boundary_target_gap, quadrature_error_bound,
)
from bilayerctrl.hetero import from_bilayer
from bilayerctrl.bilayer import eigenbasis, linearize
from bilayerctrl.kernels import KernelGrid, kernel_residuals, solve_kernels
from bilayerctrl.lyapunov import certify_decay, evaluate_V, fit_decay_envelope
from bilayerctrl.pipeline import published_labeling, sim_config
from bilayerctrl.sim import SimConfig, SimGrid, init_state, run, write_trace_csv
from bilayerctrl.verify import trivial_scalar_system


def _report(num, ok, detail):
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num} failed: {detail}"


def test_criterion_1_eigen_speeds(sec4_cfg):
    params0 = PhysicalParams(g=9.81, r=0.0, Cf=sec4_cfg.cf)
    sp = sec4_cfg.setpoint()
    published = np.sort([6.42, 4.08, -4.42, -2.18])
    for _ in range(3):   # warm-up
        characteristic_speeds(sp, params0, mode="numeric_quartic")
    best = np.inf
    for _ in range(5):
        t0 = time.perf_counter()
        speeds = characteristic_speeds(sp, params0, mode="numeric_quartic")
        best = min(best, time.perf_counter() - t0)
    gap = float(np.max(np.abs(speeds - published)))
    ok = gap <= 0.01 and best < 1e-3
    _report(1, ok, f"max gap to published speeds {gap:.4f}, runtime {best * 1e6:.0f} us")


def test_criterion_2_riemann_round_trip(sec4_pipeline):
    basis = sec4_pipeline.basis
    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    U = rng.standard_normal((4, 1000))
    back = from_riemann(to_riemann(U, basis), basis)
    rel = np.linalg.norm(back - U, axis=0) / np.linalg.norm(U, axis=0)
    elapsed = time.perf_counter() - t0
    ok = float(rel.max()) <= 1e-10 and elapsed < 1.0
    _report(2, ok, f"worst relative error {rel.max():.2e}, runtime {elapsed:.3f} s")


def test_criterion_3_kernel_correctness(sec4_pipeline):
    t0 = time.perf_counter()
    # (a) zero-coupling system: exactly zero kernels and Delta
    cfg0 = PRESETS["trivial-decoupled"]
    model0 = linearize(cfg0.setpoint(), cfg0.physical_params())
    basis0 = eigenbasis(model0)
    sys0 = from_bilayer(model0, basis0, cfg0.q0_matrix(), cfg0.r1_matrix())
    k0 = solve_kernels(sys0, KernelGrid(64))
    a_ok = (np.all(k0.G21 == 0.0) and np.all(k0.G22 == 0.0)
            and np.all(k0.Delta == 0.0))

    # (b) published system at N = 100 and N = 200
    system = sec4_pipeline.system
    res = {}
    for N in (100, 200):
        grid = KernelGrid(N)
        kern = solve_kernels(system, grid, tol=sec4_pipeline.cfg.kernel_tol)
        res[N] = kernel_residuals(kern, system, grid)
    b_ok = (res[200].bc_sylvester_max == 0.0
            and res[100].interior_max >= 1.5 * res[200].interior_max - 1e-13)

    # (c) Delta strictly lower triangular bitwise
    kern = sec4_pipeline.kernels
    m = kern.m
    c_ok = all(np.all(kern.Delta[i, j] == 0.0)
               for i in range(m) for j in range(m) if i <= j)
    elapsed = time.perf_counter() - t0
    ok = a_ok and b_ok and c_ok and elapsed < 120.0
    _report(3, ok, f"zero-coupling exact {a_ok}, diag BC + refinement {b_ok} "
                   f"(interior {res[100].interior_max:.2e} -> {res[200].interior_max:.2e}), "
                   f"Delta lower-triangular {c_ok}, runtime {elapsed:.1f} s")


def test_criterion_4_closed_loop_decay(sec4_trace):
    trace, elapsed = sec4_trace
    ratio = trace.total_norm[-1] / trace.total_norm[0]
    rates = []
    covers = []
    for k in range(trace.norms.shape[1]):
        fit = fit_decay_envelope(trace.times, trace.norms[:, k])
        rates.append(fit.rate)
        covers.append(fit.covers)
    ok = (ratio <= 0.01 and all(r > 0 for r in rates) and all(covers)
          and elapsed < 60.0)
    _report(4, ok, f"final/initial norm {ratio:.2e}, envelope rates "
                   f"{['%.2f' % r for r in rates]}, runtime {elapsed:.1f} s")


def test_criterion_5_control_decay(sec4_pipeline, sec4_trace):
    trace, _ = sec4_trace
    _, _, control_order, _ = published_labeling(sec4_pipeline.basis)
    ctrl = np.abs(trace.controls[:, control_order])   # columns: u1, u2
    peaks = ctrl.max(axis=0)
    t = trace.times
    u2_ok = np.all(ctrl[t >= 4.0, 1] <= 0.05 * peaks[1])
    u1_ok = np.all(ctrl[t >= 7.0, 0] <= 0.05 * peaks[0])
    ok = bool(u1_ok and u2_ok)
    late2 = float(ctrl[t >= 4.0, 1].max(initial=0.0) / peaks[1])
    late1 = float(ctrl[t >= 7.0, 0].max(initial=0.0) / peaks[0])
    _report(5, ok, f"u2 after 4 s at {late2:.2e} of peak, u1 after 7 s at {late1:.2e}")


def test_criterion_6_target_boundary(sec4_pipeline, sec4_trace):
    trace, _ = sec4_trace
    pipe = sec4_pipeline
    quad = KernelQuadrature(pipe.kernels, trace.grid)
    worst = 0.0
    ok = True
    for k in range(trace.times.size):
        state = trace.state_at(k)
        gap = np.max(np.abs(boundary_target_gap(
            pipe.kernels, state, pipe.system.R1, trace.controls[k], quad=quad)))
        bound = 10 * quadrature_error_bound(pipe.kernels, state, quad=quad)
        worst = max(worst, gap - bound)
        ok = ok and gap <= bound
    _report(6, ok, f"worst excess of |beta(t,1)| over 10x quadrature bound {worst:.2e}")


def test_criterion_7_dead_beat():
    system = trivial_scalar_system()          # R1 != 0
    kernels = solve_kernels(system, KernelGrid(16))
    grid = SimGrid(64)
    x = grid.centers
    init = RiemannState(u=np.exp(-((x - 0.3) ** 2) / 0.01)[None, :],
                        v=np.sin(np.pi * x)[None, :], t=0.0, grid=grid)
    dt = grid.dx
    t_settle = 1.0 + 1.0 + 2 * dt
    cfg = SimConfig(grid=grid, T=t_settle + 0.05, cfl=1.0, output_every=1)
    on = run(system, kernels, cfg, initial=init)
    off = run(system, kernels, dataclasses.replace(cfg, controller_on=False),
              initial=init)
    k = int(np.searchsorted(on.times, t_settle - 1e-12))
    settled = float(np.max(on.total_norm[k:]))
    k_off = min(int(np.searchsorted(off.times, t_settle - 1e-12)), off.times.size - 1)
    residual_off = float(off.total_norm[k_off])
    ok = settled <= 1e-8 and residual_off > 1e-8
    _report(7, ok, f"norm at settle time {settled:.2e} (feedback), {residual_off:.2e} (open loop)")


def test_criterion_8_lyapunov_certificate(sec4_pipeline, sec4_trace):
    trace, _ = sec4_trace
    pipe = sec4_pipeline
    lyap = pipe.lyap
    rng = np.random.default_rng(5)
    grid = SimGrid(64)
    sandwich_ok = True
    for _ in range(1000):
        eps = rng.standard_normal((2, grid.Nx))
        beta = rng.standard_normal((2, grid.Nx))
        V = evaluate_V(lyap, (eps, beta), pipe.system, grid)
        z2 = grid.dx * (np.sum(eps ** 2) + np.sum(beta ** 2))
        sandwich_ok = sandwich_ok and (lyap.C1 * z2 <= V <= lyap.C2 * z2)
    report = certify_decay(lyap, trace, pipe.kernels, pipe.system, tol_cert=0.05)
    ok = (sandwich_ok and report.n_violations == 0 and report.passed
          and report.fitted_rate is not None and report.fitted_rate > 0)
    _report(8, ok, f"sandwich {sandwich_ok}, stepwise violations {report.n_violations}, "
                   f"fitted rate {report.fitted_rate:.2f} vs c {report.theoretical_c:.2e}")


def test_criterion_9_linearity_and_determinism(sec4_pipeline, tmp_path):
    pipe = sec4_pipeline
    small = dataclasses.replace(pipe.cfg, nx=100, t_final=1.0, output_every=10)
    cfg = sim_config(small)
    base = run(pipe.system, pipe.kernels, cfg,
               setpoint=small.setpoint(), basis=pipe.basis)
    state0 = init_state(cfg, small.setpoint(), pipe.basis)
    doubled = run(pipe.system, pipe.kernels, cfg,
                  initial=RiemannState(u=2 * state0.u, v=2 * state0.v,
                                       t=0.0, grid=cfg.grid))
    scale = max(np.max(np.abs(doubled.u)), np.max(np.abs(doubled.v)))
    lin_gap = max(np.max(np.abs(doubled.u - 2 * base.u)),
                  np.max(np.abs(doubled.v - 2 * base.v))) / scale

    blobs = []
    for tag in ("a", "b"):
        trace = run(pipe.system, pipe.kernels, cfg,
                    setpoint=small.setpoint(), basis=pipe.basis, lyap=pipe.lyap)
        p = tmp_path / f"trace_{tag}.csv"
        write_trace_csv(trace, p)
        blobs.append(p.read_bytes())
    identical = blobs[0] == blobs[1]
    ok = lin_gap <= 1e-12 and identical
    _report(9, ok, f"doubling gap {lin_gap:.2e}, identical CSV bytes {identical}")
