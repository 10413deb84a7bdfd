"""Cross-module invariant suite behind the CLI ``verify`` verb.

Runs quick, deterministic checks of the library invariants: eigen
residuals, characteristic round trips, kernel residual refinement on a
built-in coupled system, the weighted-energy sandwich, dead-beat settling
of the trivial loop, and linearity of the simulation.  ``inject_fault``
perturbs a solved kernel before the residual check and must make the suite
fail; it exists to prove the checks have teeth.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bilayer import characteristic_speeds, eigenbasis, from_riemann, linearize, to_riemann
from .config import ExperimentConfig
from .controller import RiemannState
from .errors import BilayerCtrlError
from .hetero import constant_system
from .kernels import KernelGrid, kernel_residuals, solve_C, solve_kernels
from .lyapunov import choose_params, evaluate_V
from .sim import SimConfig, SimGrid, run
from . import sim as sim_mod


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def synthetic_coupled_system():
    """Built-in 2+2 constant system with all coupling blocks nonzero.

    The slowest rightward speed is below the fastest leftward one, so one
    kernel component takes data on both edges (the general case).
    """
    return constant_system(
        lam_r=(1.0, 2.0), lam_l=(0.8, 1.6),
        Sr=[[0.2, -0.1], [0.05, 0.15]],
        Sl=[[0.1, 0.2], [-0.15, 0.1]],
        So=[[0.3, -0.2], [0.1, 0.25]],
        Q0=[[0.4, -0.3], [0.2, 0.5]],
        R1=[[0.3, 0.1], [-0.2, 0.4]],
    )


def smooth_coupled_system():
    """Coupled 2+2 system whose kernels are smooth on the whole triangle.

    Every rightward speed exceeds every leftward one, so each kernel
    component takes data on a single edge and no derivative kink forms
    along the characteristic through the corner; refinement studies of the
    interior residual are meaningful on this system.
    """
    return constant_system(
        lam_r=(2.0, 3.0), lam_l=(0.8, 1.6),
        Sr=[[0.2, -0.1], [0.05, 0.15]],
        Sl=[[0.1, 0.2], [-0.15, 0.1]],
        So=[[0.3, -0.2], [0.1, 0.25]],
        Q0=[[0.4, -0.3], [0.2, 0.5]],
        R1=[[0.3, 0.1], [-0.2, 0.4]],
    )


def trivial_scalar_system(q0: float = 0.7, r1: float = 0.5):
    """1+1 pure transport with unit speeds and boundary reflection only."""
    return constant_system(lam_r=(1.0,), lam_l=(1.0,), Q0=[[q0]], R1=[[r1]])


def _check(name, ok, detail) -> CheckResult:
    return CheckResult(name=name, ok=bool(ok), detail=detail)


def _eigen_checks(cfg: ExperimentConfig) -> list:
    model = linearize(cfg.setpoint(), cfg.physical_params())
    basis = eigenbasis(model)
    A = model.Astar
    scale = np.linalg.norm(A)
    res_r = max(np.linalg.norm(A @ basis.R[:, k] - basis.lambdas[k] * basis.R[:, k])
                for k in range(4)) / scale
    res_l = max(np.linalg.norm(basis.L[k] @ A - basis.lambdas[k] * basis.L[k])
                for k in range(4)) / scale
    res_bi = np.max(np.abs(basis.L @ basis.R - np.eye(4)))
    out = [_check("eigen_residuals", max(res_r, res_l) <= 1e-10 and res_bi <= 1e-10,
                  f"right {res_r:.2e}, left {res_l:.2e}, LR-I {res_bi:.2e}")]

    rng = np.random.default_rng(20240817)
    U = rng.standard_normal((4, 1000))
    back = from_riemann(to_riemann(U, basis), basis)
    rel = np.linalg.norm(back - U) / np.linalg.norm(U)
    out.append(_check("riemann_round_trip", rel <= 1e-10, f"relative error {rel:.2e}"))

    params0 = replace_r(cfg, 0.0)
    sp = cfg.setpoint()
    closed = characteristic_speeds(sp, params0, mode="closed_form_r0")
    numeric0 = characteristic_speeds(sp, params0, mode="numeric_quartic")
    gap0 = np.max(np.abs(closed - numeric0))
    numeric = characteristic_speeds(sp, cfg.physical_params(), mode="numeric_quartic")
    res_poly = _quartic_residual(numeric, sp, cfg.physical_params())
    out.append(_check("characteristic_speeds",
                      gap0 <= 1e-12 and res_poly <= 1e-9,
                      f"closed-form gap {gap0:.2e}, quartic residual {res_poly:.2e}"))
    return out


def replace_r(cfg: ExperimentConfig, r: float):
    from .bilayer import PhysicalParams
    return PhysicalParams(g=cfg.g, r=r, Cf=cfg.cf)


def _quartic_residual(roots, sp, params) -> float:
    g, r = params.g, params.r
    lhs = ((roots - sp.U1) ** 2 - g * sp.H1) * ((roots - sp.U2) ** 2 - g * sp.H2)
    return float(np.max(np.abs(lhs - r * g * g * sp.H1 * sp.H2)))


def _kernel_checks(inject_fault: bool) -> list:
    out = []
    smooth = smooth_coupled_system()
    reports = {}
    for N in (48, 96):
        grid = KernelGrid(N)
        kern = solve_kernels(smooth, grid, tol=1e-8, max_iter=200)
        reports[N] = kernel_residuals(kern, smooth, grid)
    r48, r96 = reports[48], reports[96]
    factor = r48.interior_max / max(r96.interior_max, 1e-300)
    out.append(_check("kernel_refinement", factor >= 1.5,
                      f"interior residual {r48.interior_max:.3e} -> {r96.interior_max:.3e} "
                      f"(factor {factor:.2f})"))

    system = synthetic_coupled_system()
    grid = KernelGrid(96)
    kern = solve_kernels(system, grid, tol=1e-8, max_iter=200)
    rb = kernel_residuals(kern, system, grid)
    bc_ok = (rb.bc_sylvester_max <= 1e-12 and rb.bc_commutator_imposed_max <= 1e-12
             and rb.bc_bottom_max <= 1e-7 and rb.delta_upper_norm == 0.0)
    out.append(_check("kernel_boundary_data", bc_ok,
                      f"sylvester {rb.bc_sylvester_max:.2e}, commutator "
                      f"{rb.bc_commutator_imposed_max:.2e}, bottom {rb.bc_bottom_max:.2e}, "
                      f"delta upper {rb.delta_upper_norm:.2e}"))

    threshold = 3.0 * rb.interior_max
    if inject_fault:
        G21 = kern.G21.copy()
        G21[0, 0, 72, 24] += 0.1
        kern = replace(kern, G21=G21)
    rf = kernel_residuals(kern, system, grid)
    out.append(_check("kernel_fault_scan", rf.interior_max <= threshold,
                      f"interior residual {rf.interior_max:.3e} vs threshold {threshold:.3e}"
                      + (" (fault injected)" if inject_fault else "")))
    return out


def _lyapunov_checks() -> list:
    system = synthetic_coupled_system()
    grid = KernelGrid(48)
    kern = solve_kernels(system, grid, tol=1e-8, max_iter=200)
    Cr, Cl, ci = solve_C(kern, system, grid, tol=1e-8, max_iter=200)
    kern = kern.with_C(Cr, Cl, ci)
    params = choose_params(system, kern, grid)
    sgrid = SimGrid(64)
    rng = np.random.default_rng(7)
    worst_lo, worst_hi = np.inf, -np.inf
    for _ in range(1000):
        eps = rng.standard_normal((system.n, sgrid.Nx))
        beta = rng.standard_normal((system.m, sgrid.Nx))
        V = evaluate_V(params, (eps, beta), system, sgrid)
        z2 = sgrid.dx * (np.sum(eps ** 2) + np.sum(beta ** 2))
        worst_lo = min(worst_lo, V - params.C1 * z2)
        worst_hi = max(worst_hi, params.C2 * z2 - V)
    ok = worst_lo >= 0.0 and worst_hi >= 0.0
    return [_check("lyapunov_sandwich", ok,
                   f"min(V - C1|z|^2) {worst_lo:.3e}, min(C2|z|^2 - V) {worst_hi:.3e}")]


def _deadbeat_checks() -> list:
    system = trivial_scalar_system()
    sgrid = SimGrid(64)
    kern = solve_kernels(system, KernelGrid(16), tol=1e-10, max_iter=50)
    x = sgrid.centers
    u0 = np.exp(-((x - 0.3) ** 2) / 0.01)[None, :]
    v0 = np.sin(np.pi * x)[None, :]
    init = RiemannState(u=u0, v=v0, t=0.0, grid=sgrid)
    dt = sgrid.dx
    t_settle = 2.0 + 2.0 * dt
    cfgs = SimConfig(grid=sgrid, T=t_settle + 0.05, cfl=1.0, output_every=1)
    trace_on = run(system, kern, cfgs, initial=init)
    trace_off = run(system, kern,
                    SimConfig(grid=sgrid, T=t_settle + 0.05, cfl=1.0,
                              output_every=1, controller_on=False),
                    initial=init)
    k_on = int(np.searchsorted(trace_on.times, t_settle - 1e-12))
    norm_on = float(np.max(trace_on.total_norm[k_on:]))
    k_off = int(np.searchsorted(trace_off.times, t_settle - 1e-12))
    norm_off = float(trace_off.total_norm[min(k_off, trace_off.times.size - 1)])
    ok = norm_on <= 1e-8 and norm_off > 1e-8
    return [_check("dead_beat", ok,
                   f"settled norm {norm_on:.2e} (feedback on), {norm_off:.2e} (off)")]


def _linearity_checks(cfg: ExperimentConfig) -> list:
    from .pipeline import build_pipeline, run_closed_loop, sim_config

    small = replace(cfg, nx=64, t_final=0.5, kernel_n=32, output_every=5)
    pipe = build_pipeline(small, with_lyapunov=False)
    base = run_closed_loop(pipe)
    state0 = sim_mod.init_state(sim_config(small), small.setpoint(), pipe.basis)
    doubled = run_closed_loop(pipe, initial=RiemannState(
        u=2.0 * state0.u, v=2.0 * state0.v, t=0.0, grid=state0.grid))
    scale = max(np.max(np.abs(doubled.u)), np.max(np.abs(doubled.v)), 1e-300)
    gap = max(np.max(np.abs(doubled.u - 2.0 * base.u)),
              np.max(np.abs(doubled.v - 2.0 * base.v))) / scale
    return [_check("linearity", gap <= 1e-12, f"relative doubling gap {gap:.2e}")]


def run_verification(cfg: ExperimentConfig, inject_fault: bool = False) -> list:
    checks = []
    for block in (lambda: _eigen_checks(cfg),
                  lambda: _kernel_checks(inject_fault),
                  _lyapunov_checks,
                  _deadbeat_checks,
                  lambda: _linearity_checks(cfg)):
        try:
            checks.extend(block())
        except BilayerCtrlError as exc:
            checks.append(_check(block.__name__ if hasattr(block, "__name__") else "block",
                                 False, f"raised {exc}"))
    return checks


def verification_text(checks) -> str:
    lines = []
    for c in checks:
        lines.append(f"{'ok  ' if c.ok else 'FAIL'} {c.name}: {c.detail}")
    lines.append("all checks passed" if all(c.ok for c in checks) else "verification FAILED")
    return "\n".join(lines) + "\n"
