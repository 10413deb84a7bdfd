"""Closed-loop finite-volume simulation of the heterodirectional system.

First-order explicit upwind on a uniform cell-centered grid: rightward
components advect rightward, leftward components leftward, in-domain
coupling is applied by explicit Euler splitting within the step.  Boundary
ghost values come from the reflection relations, with the backstepping
feedback (or zero, controller off) injected at x = 1.  At unit Courant
number the scheme is the exact shift, which the dead-beat tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bilayer import EigenBasis, PhysicalState, SetPoint, from_riemann, to_riemann
from .controller import KernelQuadrature, RiemannState, control_input
from .errors import SolverError, ValidationError
from .hetero import HeteroSystem
from .kernels import KernelSet
from .lyapunov import LyapunovParams, evaluate_V
from . import controller

_CFL_SLACK = 1.0 + 1e-12


@dataclass(frozen=True)
class SimGrid:
    """Uniform cell-centered grid on [0, 1]."""

    Nx: int

    def __post_init__(self):
        if self.Nx < 16:
            raise ValidationError(f"simulation grid needs Nx >= 16, got {self.Nx}")

    @property
    def dx(self) -> float:
        return 1.0 / self.Nx

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.Nx) + 0.5) * self.dx


@dataclass
class SimConfig:
    grid: SimGrid
    T: float
    cfl: float = 0.9
    output_every: int = 25
    initial_profile: str = "section4_default"
    profile_params: dict = field(default_factory=dict)
    controller_on: bool = True

    def __post_init__(self):
        if not (0.0 < self.cfl <= 1.0):
            raise ValidationError(f"Courant number must be in (0, 1], got {self.cfl}")
        if self.T <= 0:
            raise ValidationError("final time must be positive")
        if self.output_every < 1:
            raise ValidationError("output_every must be >= 1")


@dataclass
class SimTrace:
    """Sampled closed-loop trajectory."""

    times: np.ndarray            # (K,)
    u: np.ndarray                # (K, n, Nx)
    v: np.ndarray                # (K, m, Nx)
    controls: np.ndarray         # (K, m)
    norms: np.ndarray            # (K, n + m) per-component L2 norms, u block first
    total_norm: np.ndarray       # (K,)
    grid: SimGrid
    V: Optional[np.ndarray] = None
    setpoint: Optional[SetPoint] = None
    basis: Optional[EigenBasis] = None

    @property
    def n(self) -> int:
        return self.u.shape[1]

    @property
    def m(self) -> int:
        return self.v.shape[1]

    def state_at(self, k: int) -> RiemannState:
        return RiemannState(u=self.u[k], v=self.v[k], t=float(self.times[k]), grid=self.grid)

    def physical_states(self) -> list:
        """Physical profiles recovered through the eigenbasis and set point."""
        if self.basis is None or self.setpoint is None:
            raise ValidationError("trace was recorded without a physical context")
        out = []
        n = self.n
        perm = self.basis.perm
        for k in range(self.times.size):
            xi = np.zeros((4, self.grid.Nx))
            xi[perm[:n]] = self.u[k]
            xi[perm[n:]] = self.v[k]
            dev = from_riemann(xi, self.basis)
            out.append(PhysicalState.from_deviation(dev, self.setpoint,
                                                    require_positive=False))
        return out


def l2_norms(fields, dx: float | None = None) -> np.ndarray:
    """Per-component L2 norms with uniform cell weights.

    Accepts either a (k, Nx) array together with the cell width, or a
    RiemannState (u components first, then v).
    """
    if hasattr(fields, "u"):
        state = fields
        stacked = np.concatenate([np.atleast_2d(state.u), np.atleast_2d(state.v)], axis=0)
        return l2_norms(stacked, state.grid.dx)
    if dx is None:
        raise ValidationError("l2_norms needs the cell width for raw arrays")
    fields = np.atleast_2d(np.asarray(fields, dtype=float))
    return np.sqrt(dx * np.sum(fields ** 2, axis=-1))


# ---------------------------------------------------------------------------
# initial profiles

def _profile_section4(x: np.ndarray) -> PhysicalState:
    H2 = 2.0 + 0.5 * np.exp(-((x - 0.5) ** 2) / 0.003)
    H1 = 6.0 - H2
    U1 = 10.0 / H1 + 3.0 * np.sin(2.0 * np.pi * x)
    U2 = -10.0 / H2 - 3.0 * np.sin(2.0 * np.pi * x)
    return PhysicalState(H1=H1, U1=U1, H2=H2, U2=U2)


def _profile_constant(x: np.ndarray, setpoint: SetPoint) -> PhysicalState:
    ones = np.ones_like(x)
    return PhysicalState(H1=setpoint.H1 * ones, U1=setpoint.U1 * ones,
                         H2=setpoint.H2 * ones, U2=setpoint.U2 * ones)


def _profile_csv(x: np.ndarray, path: str) -> PhysicalState:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[1] < 5:
        raise ValidationError("profile CSV needs columns x,H1,U1,H2,U2")
    cols = [np.interp(x, data[:, 0], data[:, 1 + k]) for k in range(4)]
    return PhysicalState(H1=cols[0], U1=cols[1], H2=cols[2], U2=cols[3])


def initial_physical_state(config: SimConfig, setpoint: SetPoint) -> PhysicalState:
    x = config.grid.centers
    name = config.initial_profile
    if name == "section4_default":
        return _profile_section4(x)
    if name == "constant_setpoint":
        return _profile_constant(x, setpoint)
    if name == "custom_csv":
        path = config.profile_params.get("path")
        if not path:
            raise ValidationError("custom_csv profile needs a 'path' parameter")
        return _profile_csv(x, path)
    raise ValidationError(f"unknown initial profile {name!r}")


def init_state(config: SimConfig, setpoint: SetPoint, basis: EigenBasis) -> RiemannState:
    """Sample the named physical profile and map it to characteristic coordinates."""
    phys = initial_physical_state(config, setpoint)
    xi = to_riemann(phys.deviation(setpoint), basis)
    n = basis.n_right
    return RiemannState(u=xi[basis.perm[:n]], v=xi[basis.perm[n:]],
                        t=0.0, grid=config.grid)


# ---------------------------------------------------------------------------
# time stepping

class _StepWorkspace:
    """Per-run samples of speeds and coupling coefficients on the grid."""

    def __init__(self, system: HeteroSystem, grid: SimGrid):
        x = grid.centers
        self.lam_r = system.speeds_right(x).T.copy()   # (n, Nx)
        self.lam_l = system.speeds_left(x).T.copy()    # (m, Nx)
        self.const = system.Sr.is_constant and system.Sl.is_constant and system.So.is_constant
        if self.const:
            self.Sr = system.Sr(np.array(0.5))
            self.Sl = system.Sl(np.array(0.5))
            self.So = system.So(np.array(0.5))
        else:
            self.Sr_x = system.Sr(x)    # (Nx, n, n)
            self.Sl_x = system.Sl(x)
            self.So_x = system.So(x)
        self.Q0 = np.asarray(system.Q0, dtype=float)
        self.R1 = np.asarray(system.R1, dtype=float)

    def sources(self, u: np.ndarray, v: np.ndarray):
        if self.const:
            su = self.Sr @ u
            if v.size:
                su = su + self.Sl @ v
            sv = self.So @ u if v.size else np.zeros_like(v)
            return su, sv
        su = np.einsum("jpq,qj->pj", self.Sr_x, u)
        if v.size:
            su = su + np.einsum("jpq,qj->pj", self.Sl_x, v)
        sv = np.einsum("jpq,qj->pj", self.So_x, u) if v.size else np.zeros_like(v)
        return su, sv


def _advance(state: RiemannState, ws: _StepWorkspace, dt: float,
             control: np.ndarray) -> RiemannState:
    dx = state.grid.dx
    u, v = state.u, state.v
    su, sv = ws.sources(u, v)

    # convex upwind form: exact shift at unit Courant number
    ghost_u = ws.Q0 @ v[:, 0] if v.size else np.zeros(u.shape[0])
    shifted_u = np.concatenate([ghost_u[:, None], u[:, :-1]], axis=1)
    nu_r = ws.lam_r * (dt / dx)
    u_new = (1.0 - nu_r) * u + nu_r * shifted_u + dt * su

    if v.size:
        ghost_v = ws.R1 @ u[:, -1] + control
        shifted_v = np.concatenate([v[:, 1:], ghost_v[:, None]], axis=1)
        nu_l = ws.lam_l * (dt / dx)
        v_new = (1.0 - nu_l) * v + nu_l * shifted_v + dt * sv
    else:
        v_new = v.copy()
    return RiemannState(u=u_new, v=v_new, t=state.t + dt, grid=state.grid)


def step(state: RiemannState, system: HeteroSystem, dt: float,
         kernels: Optional[KernelSet] = None, controller_on: bool = True,
         quad: Optional[KernelQuadrature] = None,
         workspace: Optional[_StepWorkspace] = None) -> RiemannState:
    """One explicit upwind step with boundary feedback.

    Enforces the hard stability bound dt <= dx / max speed.
    """
    ws = workspace if workspace is not None else _StepWorkspace(system, state.grid)
    lam_max = max(ws.lam_r.max() if ws.lam_r.size else 0.0,
                  ws.lam_l.max() if ws.lam_l.size else 0.0)
    if dt > state.grid.dx / lam_max * _CFL_SLACK:
        raise SolverError(f"CFL violation: dt={dt:.3e} exceeds dx/max-speed="
                          f"{state.grid.dx / lam_max:.3e}")
    if controller_on:
        if kernels is None:
            raise ValidationError("controller needs a solved kernel set")
        control = control_input(kernels, state, ws.R1, quad=quad)
    else:
        control = np.zeros(state.m)
    return _advance(state, ws, dt, control)


def run(system: HeteroSystem, kernels: Optional[KernelSet], config: SimConfig,
        setpoint: Optional[SetPoint] = None, basis: Optional[EigenBasis] = None,
        lyap: Optional[LyapunovParams] = None,
        initial: Optional[RiemannState] = None) -> SimTrace:
    """Integrate the closed loop to the final time and sample the trace.

    The initial state comes from the configured physical profile when a set
    point and eigenbasis are supplied, otherwise from ``initial``.
    """
    grid = config.grid
    if initial is not None:
        state = RiemannState(u=initial.u.copy(), v=initial.v.copy(), t=0.0, grid=grid)
    elif setpoint is not None and basis is not None:
        state = init_state(config, setpoint, basis)
    else:
        raise ValidationError("run needs either an initial state or a set point with basis")
    if state.n != system.n or state.m != system.m:
        raise ValidationError("initial state does not match the system dimensions")

    ws = _StepWorkspace(system, grid)
    lam_max = max(ws.lam_r.max() if ws.lam_r.size else 0.0,
                  ws.lam_l.max() if ws.lam_l.size else 0.0)
    if lam_max <= 0:
        raise ValidationError("system has no positive transport speeds")
    dt = config.cfl * grid.dx / lam_max
    if config.controller_on and kernels is None:
        raise ValidationError("controller needs a solved kernel set")
    if lyap is not None and kernels is None:
        raise ValidationError("Lyapunov evaluation along the run needs the kernel set")
    quad = KernelQuadrature(kernels, grid) if kernels is not None else None

    times, us, vs, ctrls, vlyap = [], [], [], [], []

    def controls_now(st: RiemannState) -> np.ndarray:
        if config.controller_on:
            return control_input(kernels, st, ws.R1, quad=quad)
        return np.zeros(st.m)

    def record(st: RiemannState, ctrl: np.ndarray):
        times.append(st.t)
        us.append(st.u.copy())
        vs.append(st.v.copy())
        ctrls.append(ctrl.copy())
        if lyap is not None:
            eps, beta = controller.to_target(kernels, st, quad=quad)
            vlyap.append(evaluate_V(lyap, (eps, beta), system, grid))

    record(state, controls_now(state))
    t_end = float(config.T)
    step_count = 0
    while state.t < t_end - 1e-12:
        dt_k = min(dt, t_end - state.t)
        control = controls_now(state)
        state = _advance(state, ws, dt_k, control)
        step_count += 1
        if not np.isfinite(np.sum(state.u) + np.sum(state.v)):
            raise SolverError(f"simulation blew up at t = {state.t:.6f}")
        if step_count % config.output_every == 0 or state.t >= t_end - 1e-12:
            record(state, controls_now(state))

    times = np.asarray(times)
    us = np.asarray(us)
    vs = np.asarray(vs)
    total = np.sqrt(np.sum(np.concatenate([us, vs], axis=1) ** 2, axis=(1, 2)) * grid.dx)
    comp_norms = np.concatenate([
        l2_norms_batch(us, grid.dx), l2_norms_batch(vs, grid.dx)], axis=1)
    return SimTrace(
        times=times, u=us, v=vs,
        controls=np.asarray(ctrls),
        norms=comp_norms,
        total_norm=total,
        grid=grid,
        V=np.asarray(vlyap) if lyap is not None else None,
        setpoint=setpoint, basis=basis,
    )


def l2_norms_batch(fields: np.ndarray, dx: float) -> np.ndarray:
    """L2 norms over the last axis for a (K, p, Nx) stack, returns (K, p)."""
    return np.sqrt(dx * np.sum(np.asarray(fields) ** 2, axis=-1))


def write_trace_csv(trace: SimTrace, path, norm_labels=None, control_labels=None,
                    norm_order=None, control_order=None) -> None:
    """Trace CSV with one row per sample time.

    Column order and labels default to the internal component ordering;
    the two-layer pipeline passes the published labeling instead.
    """
    n, m = trace.n, trace.m
    norm_order = list(range(n + m)) if norm_order is None else list(norm_order)
    control_order = list(range(m)) if control_order is None else list(control_order)
    if norm_labels is None:
        norm_labels = [f"u{i + 1}_norm" for i in range(n)] + [f"v{i + 1}_norm" for i in range(m)]
    if control_labels is None:
        control_labels = [f"u{i + 1}_ctrl" for i in range(m)]
    header = ["t"] + [norm_labels[k] for k in range(len(norm_order))] + ["total_norm"]
    header += [control_labels[k] for k in range(len(control_order))]
    header.append("V")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(trace.times.size):
            row = [repr(float(trace.times[k]))]
            row += [repr(float(trace.norms[k, idx])) for idx in norm_order]
            row.append(repr(float(trace.total_norm[k])))
            row += [repr(float(trace.controls[k, idx])) for idx in control_order]
            row.append(repr(float(trace.V[k])) if trace.V is not None else "")
            fh.write(",".join(row) + "\n")


def write_snapshot_csv(trace: SimTrace, k: int, path) -> None:
    """Full-field snapshot at sample k: x, characteristic and physical profiles."""
    x = trace.grid.centers
    cols = [("x", x)]
    for i in range(trace.n):
        cols.append((f"u{i + 1}", trace.u[k, i]))
    for i in range(trace.m):
        cols.append((f"v{i + 1}", trace.v[k, i]))
    if trace.basis is not None and trace.setpoint is not None:
        phys = trace.physical_states()[k]
        cols += [("H1", phys.H1), ("U1", phys.U1), ("H2", phys.H2), ("U2", phys.U2)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(name for name, _ in cols) + "\n")
        for j in range(x.size):
            fh.write(",".join(repr(float(arr[j])) for _, arr in cols) + "\n")
