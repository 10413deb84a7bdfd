"""Numerical solve of the backstepping kernel equations on the triangle.

The transformation kernels G21 (m x n) and G22 (m x m) live on
T = {0 <= xi <= x <= 1} and satisfy first-order transport equations coupled
through the in-domain coefficients, with data assigned edge-wise:

* every G21 component carries a Sylvester-type datum on the diagonal
  xi = x (its characteristics always reach the diagonal),
* G22 components receive data on the edge their backward characteristic
  exits through: zero on the diagonal for off-diagonal components entering
  from it, and on xi = 0 either the value that cancels the upper triangle
  of the residual boundary coupling (i <= j) or zero (i > j).

The strictly lower-triangular residual coupling Delta(x) is then read off
the xi = 0 trace.  Each component is solved as an integral equation along
its characteristic curve; curves are integrated with the midpoint rule and
off-node values taken by bilinear interpolation.  A Picard (fixed-point)
iteration over the coupling terms runs until the sup-norm change drops
below the tolerance.  Overall accuracy is first order in the lattice
spacing, which grid-refinement tests verify.

Coupled in-domain terms of one sweep read only the previous iterate, so
components are independent within a sweep.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import SolverError, ValidationError
from .hetero import HeteroSystem, validate

log = logging.getLogger(__name__)

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(f):
            return f
        return deco


@dataclass(frozen=True)
class KernelGrid:
    """Uniform lattice on the triangle, nodes (a*h, b*h) with b <= a, h = 1/N."""

    N: int

    def __post_init__(self):
        if self.N < 8:
            raise ValidationError(f"kernel grid needs N >= 8, got {self.N}")

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.N + 1)


@dataclass(frozen=True)
class KernelSet:
    """Solved transformation kernels sampled on a KernelGrid.

    Arrays are indexed [i, j, a, b] for component (i, j) at node
    (x, xi) = (a*h, b*h); entries with b > a mirror the diagonal value so
    bilinear interpolation stays well defined near xi = x.  ``Delta`` holds
    the strictly lower-triangular boundary coupling sampled along x, with
    upper-triangle entries constructed as exact zeros.  ``Cr``/``Cl`` are
    filled by :func:`solve_C`.
    """

    grid: KernelGrid
    G21: np.ndarray
    G22: np.ndarray
    Delta: np.ndarray
    iterations: int
    changes: tuple
    Cr: Optional[np.ndarray] = None
    Cl: Optional[np.ndarray] = None
    c_iterations: int = 0

    @property
    def m(self) -> int:
        return self.G21.shape[0]

    @property
    def n(self) -> int:
        return self.G21.shape[1]

    def full_kernel_at(self, x: float, xi: float) -> np.ndarray:
        """Full (n+m) x (n+m) transform kernel at one point (zero top blocks)."""
        n, m = self.n, self.m
        out = np.zeros((n + m, n + m))
        h, N = self.grid.h, self.grid.N
        for i in range(m):
            for j in range(n):
                out[n + i, j] = _bilerp(self.G21[i, j], x, xi, h, N)
            for j in range(m):
                out[n + i, n + j] = _bilerp(self.G22[i, j], x, xi, h, N)
        return out

    def with_C(self, Cr: np.ndarray, Cl: np.ndarray, c_iterations: int) -> "KernelSet":
        return replace(self, Cr=Cr, Cl=Cl, c_iterations=c_iterations)

    def is_zero(self, tol: float = 0.0) -> bool:
        return (np.max(np.abs(self.G21)) <= tol and np.max(np.abs(self.G22)) <= tol)


def _sample_fields(system: HeteroSystem, axis: np.ndarray):
    """Sample speeds and coupling coefficients on the lattice axis."""
    n, m = system.n, system.m
    N1 = axis.size
    lam_r = np.zeros((max(n, 1), N1))
    for j, f in enumerate(system.Lambda_r):
        lam_r[j] = f(axis)
    lam_l = np.zeros((max(m, 1), N1))
    for i, f in enumerate(system.Lambda_l):
        lam_l[i] = f(axis)
    Sr_t = np.transpose(system.Sr(axis), (1, 2, 0)) if n else np.zeros((0, 0, N1))
    Sl_t = np.transpose(system.Sl(axis), (1, 2, 0)) if n and m else np.zeros((n, m, N1))
    So_t = np.transpose(system.So(axis), (1, 2, 0)) if n and m else np.zeros((m, n, N1))
    return lam_r, lam_l, Sr_t, Sl_t, So_t


def _axis_derivative(tab: np.ndarray, h: float, constant: bool) -> np.ndarray:
    """Derivative of sampled speed rows; exact zero for constants."""
    if constant:
        return np.zeros_like(tab)
    d = np.gradient(tab, h, axis=-1)
    return d


@njit(cache=True)
def _bilerp(F, x, xi, h, N):
    a = int(x / h)
    b = int(xi / h)
    if a > N - 1:
        a = N - 1
    if a < 0:
        a = 0
    if b > N - 1:
        b = N - 1
    if b < 0:
        b = 0
    tx = x / h - a
    ty = xi / h - b
    if tx < 0.0:
        tx = 0.0
    if tx > 1.0:
        tx = 1.0
    if ty < 0.0:
        ty = 0.0
    if ty > 1.0:
        ty = 1.0
    return ((1.0 - tx) * (1.0 - ty) * F[a, b] + tx * (1.0 - ty) * F[a + 1, b]
            + (1.0 - tx) * ty * F[a, b + 1] + tx * ty * F[a + 1, b + 1])


@njit(cache=True)
def _interp_axis(tab, z, h, N):
    a = int(z / h)
    if a > N - 1:
        a = N - 1
    if a < 0:
        a = 0
    t = z / h - a
    if t < 0.0:
        t = 0.0
    if t > 1.0:
        t = 1.0
    return (1.0 - t) * tab[a] + t * tab[a + 1]


@njit(cache=True)
def _rhs_g21(G21o, G22o, i, j, x, xi, lam_dxi_row, Sr_t, So_t, h, N):
    n = G21o.shape[1]
    m = G22o.shape[1]
    s = _bilerp(G21o[i, j], x, xi, h, N) * _interp_axis(lam_dxi_row, xi, h, N)
    for k in range(n):
        s += _bilerp(G21o[i, k], x, xi, h, N) * _interp_axis(Sr_t[k, j], xi, h, N)
    for k in range(m):
        s += _bilerp(G22o[i, k], x, xi, h, N) * _interp_axis(So_t[k, j], xi, h, N)
    return -s


@njit(cache=True)
def _rhs_g22(G21o, G22o, i, j, x, xi, dmu_row, Sl_t, h, N):
    n = G21o.shape[1]
    s = -_bilerp(G22o[i, j], x, xi, h, N) * _interp_axis(dmu_row, xi, h, N)
    for k in range(n):
        s += _bilerp(G21o[i, k], x, xi, h, N) * _interp_axis(Sl_t[k, j], xi, h, N)
    return s


@njit(cache=True)
def _sweep_g21(G21o, G22o, lam_r, lam_l, dlam_r, Sr_t, So_t, h, N):
    m, n = G21o.shape[0], G21o.shape[1]
    out = np.zeros_like(G21o)
    max_steps = 8 * (N + 2)
    for i in range(m):
        for j in range(n):
            for a in range(N + 1):
                for b in range(a + 1):
                    if b == a:
                        # Sylvester datum, imposed exactly at diagonal nodes
                        out[i, j, a, b] = -_interp_axis(So_t[i, j], a * h, h, N) / (
                            lam_l[i, a] + lam_r[j, a])
                        continue
                    x = a * h
                    xi = b * h
                    acc = 0.0
                    ok = False
                    for _ in range(max_steps):
                        sx = _interp_axis(lam_l[i], x, h, N)
                        sxi = _interp_axis(lam_r[j], xi, h, N)
                        smax = sx if sx > sxi else sxi
                        ds = h / smax
                        xm = x - 0.5 * ds * sx
                        xim = xi + 0.5 * ds * sxi
                        dx = -ds * _interp_axis(lam_l[i], xm, h, N)
                        dxi = ds * _interp_axis(lam_r[j], xim, h, N)
                        gap = x - xi
                        gap_new = gap + dx - dxi
                        if gap_new <= 0.0:
                            theta = gap / (gap - gap_new)
                            acc += theta * ds * _rhs_g21(
                                G21o, G22o, i, j,
                                x + 0.5 * theta * dx, xi + 0.5 * theta * dxi,
                                dlam_r[j], Sr_t, So_t, h, N)
                            foot = 0.5 * (x + theta * dx + xi + theta * dxi)
                            datum = -_interp_axis(So_t[i, j], foot, h, N) / (
                                _interp_axis(lam_l[i], foot, h, N)
                                + _interp_axis(lam_r[j], foot, h, N))
                            out[i, j, a, b] = datum - acc
                            ok = True
                            break
                        acc += ds * _rhs_g21(G21o, G22o, i, j,
                                             x + 0.5 * dx, xi + 0.5 * dxi,
                                             dlam_r[j], Sr_t, So_t, h, N)
                        x += dx
                        xi += dxi
                    if not ok:
                        out[i, j, a, b] = np.nan
    return out


@njit(cache=True)
def _g22_bottom_datum(G21o, i, j, x_e, Q0, lamr0, laml0, h, N):
    if i > j:
        return 0.0
    n = G21o.shape[1]
    s = 0.0
    for k in range(n):
        s += _bilerp(G21o[i, k], x_e, 0.0, h, N) * lamr0[k] * Q0[k, j]
    return s / laml0[j]


@njit(cache=True)
def _sweep_g22(G21o, G22o, lam_l, mu, dmu, Sl_t, Q0, lamr0, laml0, h, N):
    m = G22o.shape[0]
    out = np.zeros_like(G22o)
    max_steps = 8 * (N + 2)
    for i in range(m):
        for j in range(m):
            for a in range(N + 1):
                for b in range(a + 1):
                    x = a * h
                    xi = b * h
                    if b == a:
                        # inflow from the diagonal edge when the local slope is < 1
                        if mu[j, a] < lam_l[i, a]:
                            if i == j:
                                out[i, j, a, b] = np.nan  # no datum assigned here
                            else:
                                out[i, j, a, b] = 0.0
                            continue
                    if b == 0:
                        out[i, j, a, b] = _g22_bottom_datum(
                            G21o, i, j, x, Q0, lamr0, laml0, h, N)
                        continue
                    acc = 0.0
                    ok = False
                    for _ in range(max_steps):
                        sx = _interp_axis(lam_l[i], x, h, N)
                        sxi = _interp_axis(mu[j], xi, h, N)
                        smax = sx if sx > sxi else sxi
                        ds = h / smax
                        xm = x - 0.5 * ds * sx
                        xim = xi - 0.5 * ds * sxi
                        dx = -ds * _interp_axis(lam_l[i], xm, h, N)
                        dxi = -ds * _interp_axis(mu[j], xim, h, N)
                        xi_new = xi + dxi
                        gap = x - xi
                        gap_new = gap + dx - dxi
                        theta_b = 2.0
                        theta_d = 2.0
                        if xi_new <= 0.0:
                            theta_b = xi / (xi - xi_new)
                        if gap_new < 0.0:
                            theta_d = gap / (gap - gap_new)
                        if theta_b <= 1.0 or theta_d <= 1.0:
                            if theta_d < theta_b:
                                # exits through the diagonal
                                if i == j:
                                    out[i, j, a, b] = np.nan
                                    ok = True
                                    break
                                theta = theta_d
                                datum = 0.0
                            else:
                                theta = theta_b
                                x_e = x + theta * dx
                                if x_e < 0.0:
                                    x_e = 0.0
                                datum = _g22_bottom_datum(
                                    G21o, i, j, x_e, Q0, lamr0, laml0, h, N)
                            acc += theta * ds * _rhs_g22(
                                G21o, G22o, i, j,
                                x + 0.5 * theta * dx, xi + 0.5 * theta * dxi,
                                dmu[j], Sl_t, h, N)
                            out[i, j, a, b] = datum + acc
                            ok = True
                            break
                        acc += ds * _rhs_g22(G21o, G22o, i, j,
                                             x + 0.5 * dx, xi + 0.5 * dxi,
                                             dmu[j], Sl_t, h, N)
                        x += dx
                        xi += dxi
                    if not ok:
                        out[i, j, a, b] = np.nan
    return out


def _fill_upper(arr: np.ndarray, N: int) -> None:
    """Mirror the diagonal value into the (unused) b > a region."""
    for a in range(N + 1):
        if a < N:
            arr[..., a, a + 1:] = arr[..., a, a:a + 1]


def _extract_delta(G21: np.ndarray, G22: np.ndarray, Q0, lamr0, laml0,
                   axis: np.ndarray) -> np.ndarray:
    """Strictly lower-triangular residual boundary coupling Delta(x)."""
    m, n = G21.shape[0], G21.shape[1]
    N1 = axis.size
    delta = np.zeros((m, m, N1))
    for i in range(m):
        for j in range(m):
            if i <= j:
                continue  # upper triangle (incl. diagonal) is exactly zero
            g22_term = G22[i, j, :, 0] * laml0[j]
            g21_term = np.zeros(N1)
            for k in range(n):
                g21_term += G21[i, k, :, 0] * lamr0[k] * Q0[k, j]
            delta[i, j] = g22_term - g21_term
    return delta


def solve_kernels(system: HeteroSystem, grid: KernelGrid,
                  tol: float = 1e-8, max_iter: int = 200) -> KernelSet:
    """Fixed-point solve of the kernel transport equations.

    Raises SolverError on non-convergence and ValidationError when a
    diagonal G22 component has characteristics entering from the diagonal
    edge, where no datum is assigned.
    """
    report = validate(system)
    if not report.ok:
        raise ValidationError(f"kernel solve needs a valid system: {report.failure}")
    if tol <= 0:
        raise ValidationError("tolerance must be positive")
    n, m = system.n, system.m
    axis = grid.axis
    h, N = grid.h, grid.N
    lam_r, lam_l, Sr_t, Sl_t, So_t = _sample_fields(system, axis)

    if m and n and m != n:
        log.warning("n != m: using the leftward speeds for the xi-transport of G22")
        mu = lam_l.copy()
        mu_const = all(f.is_constant for f in system.Lambda_l)
    else:
        mu = lam_r.copy()
        mu_const = all(f.is_constant for f in system.Lambda_r)
    dmu = _axis_derivative(mu, h, mu_const)
    dlam_r = _axis_derivative(lam_r, h, all(f.is_constant for f in system.Lambda_r))

    # constant-speed configuration check for diagonal G22 components
    for i in range(m):
        if np.any(mu[i] < lam_l[i] - 1e-14):
            raise ValidationError(
                f"kernel component G22[{i + 1},{i + 1}]: characteristics leave the "
                "triangle through the diagonal edge where no datum is assigned")

    lamr0 = lam_r[:, 0].copy() if n else np.zeros(0)
    laml0 = lam_l[:, 0].copy() if m else np.zeros(0)
    Q0 = np.asarray(system.Q0, dtype=float).reshape(n, m) if n and m else np.zeros((n, m))

    G21 = np.zeros((m, n, N + 1, N + 1))
    G22 = np.zeros((m, m, N + 1, N + 1))
    changes = []
    iterations = 0
    for it in range(1, max_iter + 1):
        iterations = it
        G21n = _sweep_g21(G21, G22, lam_r, lam_l, dlam_r, Sr_t, So_t, h, N) \
            if (m and n) else np.zeros_like(G21)
        G22n = _sweep_g22(G21, G22, lam_l, mu, dmu, Sl_t, Q0, lamr0, laml0, h, N) \
            if m else np.zeros_like(G22)
        if np.any(np.isnan(G21n)) or np.any(np.isnan(G22n)):
            raise SolverError("kernel characteristic tracing failed "
                              "(no datum on exit edge or step cap exceeded)")
        _fill_upper(G21n, N)
        _fill_upper(G22n, N)
        change = 0.0
        if G21n.size:
            change = max(change, float(np.max(np.abs(G21n - G21))))
        if G22n.size:
            change = max(change, float(np.max(np.abs(G22n - G22))))
        G21, G22 = G21n, G22n
        changes.append(change)
        if change < tol:
            break
    else:
        raise SolverError(f"kernel fixed point did not converge in {max_iter} "
                          f"iterations, last change {changes[-1]:.3e}")

    delta = _extract_delta(G21, G22, Q0, lamr0, laml0, axis)
    return KernelSet(grid=grid, G21=G21, G22=G22, Delta=delta,
                     iterations=iterations, changes=tuple(changes))


@dataclass(frozen=True)
class ResidualReport:
    """Discrete residuals of the kernel equations and boundary data."""

    interior_max: float
    interior_argmax: tuple        # (component, x, xi)
    bc_sylvester_max: float       # diagonal datum of G21
    bc_commutator_imposed_max: float  # diagonal zeros of G22 where imposed
    bc_commutator_free_max: float     # same quantity on outflow diagonal nodes
    bc_bottom_max: float          # xi = 0 data of G22
    delta_upper_norm: float       # upper triangle of Delta, zero by construction


def kernel_residuals(kernels: KernelSet, system: HeteroSystem,
                     grid: KernelGrid) -> ResidualReport:
    """Central-difference residuals of the solved kernels.

    The interior residual of an O(h)-accurate solve decreases roughly like
    h under refinement; boundary data are imposed and report (near) zero.
    """
    n, m = system.n, system.m
    axis = grid.axis
    h, N = grid.h, grid.N
    lam_r, lam_l, Sr_t, Sl_t, So_t = _sample_fields(system, axis)
    if m and n and m != n:
        mu = lam_l
        mu_const = all(f.is_constant for f in system.Lambda_l)
    else:
        mu = lam_r
        mu_const = all(f.is_constant for f in system.Lambda_r)
    dmu = _axis_derivative(mu, h, mu_const)
    dlam_r = _axis_derivative(lam_r, h, all(f.is_constant for f in system.Lambda_r))
    G21, G22 = kernels.G21, kernels.G22

    interior_max = 0.0
    argmax = ("", 0.0, 0.0)
    for a in range(1, N):
        bs = np.arange(1, a)
        if bs.size == 0:
            continue
        for i in range(m):
            for j in range(n):
                dxi = (G21[i, j, a, bs + 1] - G21[i, j, a, bs - 1]) / (2 * h)
                dx = (G21[i, j, a + 1, bs] - G21[i, j, a - 1, bs]) / (2 * h)
                rhs = -G21[i, j, a, bs] * dlam_r[j, bs]
                for k in range(n):
                    rhs -= G21[i, k, a, bs] * Sr_t[k, j, bs]
                for k in range(m):
                    rhs -= G22[i, k, a, bs] * So_t[k, j, bs]
                res = lam_r[j, bs] * dxi - lam_l[i, a] * dx - rhs
                worst = int(np.argmax(np.abs(res)))
                if abs(res[worst]) > interior_max:
                    interior_max = abs(res[worst])
                    argmax = (f"G21[{i + 1},{j + 1}]", axis[a], axis[bs[worst]])
            for j in range(m):
                dxi = (G22[i, j, a, bs + 1] - G22[i, j, a, bs - 1]) / (2 * h)
                dx = (G22[i, j, a + 1, bs] - G22[i, j, a - 1, bs]) / (2 * h)
                rhs = -G22[i, j, a, bs] * dmu[j, bs]
                for k in range(n):
                    rhs += G21[i, k, a, bs] * Sl_t[k, j, bs]
                res = mu[j, bs] * dxi + lam_l[i, a] * dx - rhs
                worst = int(np.argmax(np.abs(res)))
                if abs(res[worst]) > interior_max:
                    interior_max = abs(res[worst])
                    argmax = (f"G22[{i + 1},{j + 1}]", axis[a], axis[bs[worst]])

    bc54 = 0.0
    for i in range(m):
        for j in range(n):
            diag_vals = np.array([G21[i, j, a, a] for a in range(N + 1)])
            res = diag_vals * (lam_r[j] + lam_l[i]) + So_t[i, j]
            bc54 = max(bc54, float(np.max(np.abs(res))))

    bc55_imposed = 0.0
    bc55_free = 0.0
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            diag_vals = np.array([G22[i, j, a, a] for a in range(N + 1)])
            res = np.abs(diag_vals * (lam_l[j] - lam_l[i]))
            inflow = mu[j] < lam_l[i]
            if np.any(inflow):
                bc55_imposed = max(bc55_imposed, float(np.max(res[inflow])))
            if np.any(~inflow):
                bc55_free = max(bc55_free, float(np.max(res[~inflow])))

    lamr0 = lam_r[:, 0]
    laml0 = lam_l[:, 0]
    bc56 = 0.0
    for i in range(m):
        for j in range(m):
            if i > j:
                continue
            lhs = G22[i, j, :, 0] * laml0[j]
            rhs = np.zeros(N + 1)
            for k in range(n):
                rhs += G21[i, k, :, 0] * lamr0[k] * system.Q0[k, j]
            bc56 = max(bc56, float(np.max(np.abs(lhs - rhs))))

    upper = 0.0
    for i in range(m):
        for j in range(m):
            if i <= j:
                upper = max(upper, float(np.max(np.abs(kernels.Delta[i, j]))))

    return ResidualReport(
        interior_max=float(interior_max),
        interior_argmax=argmax,
        bc_sylvester_max=bc54,
        bc_commutator_imposed_max=bc55_imposed,
        bc_commutator_free_max=bc55_free,
        bc_bottom_max=bc56,
        delta_upper_norm=upper,
    )


def solve_C(kernels: KernelSet, system: HeteroSystem, grid: KernelGrid,
            tol: float = 1e-8, max_iter: int = 200):
    """Volterra solve for the target-system convolution coefficients.

    Cl satisfies a fixed-point equation driven by G22 and is solved first
    by Picard iteration (a contraction on the triangle); Cr then follows by
    direct evaluation.  Kernel factors inside the integrals are evaluated
    at (eta, xi), which stays inside the triangle for eta in (xi, x).
    """
    n, m = system.n, system.m
    N = grid.N
    axis = grid.axis
    h = grid.h
    Sl_x = system.Sl(axis) if n and m else np.zeros((N + 1, n, m))
    G21, G22 = kernels.G21, kernels.G22

    def weights(a: int) -> np.ndarray:
        """Trapezoid weights W[k, b] for integration over eta in [xi_b, x_a]."""
        W = np.zeros((a + 1, a + 1))
        for b in range(a + 1):
            if a == b:
                continue
            W[b:a + 1, b] = h
            W[b, b] = 0.5 * h
            W[a, b] = 0.5 * h
        return W

    Cl = np.zeros((n, m, N + 1, N + 1))
    c_iters = 0
    if n and m:
        for it in range(1, max_iter + 1):
            c_iters = it
            Cl_new = np.zeros_like(Cl)
            for a in range(N + 1):
                K = a + 1
                base = np.einsum("pm,mqb->pqb", Sl_x[a], G22[:, :, a, :K])
                P = np.einsum("pmk,mqkb->pqkb", Cl[:, :, a, :K], G22[:, :, :K, :K])
                Cl_new[:, :, a, :K] = base + np.einsum("pqkb,kb->pqb", P, weights(a))
            change = float(np.max(np.abs(Cl_new - Cl)))
            Cl = Cl_new
            if change < tol:
                break
        else:
            raise SolverError(f"Volterra fixed point did not converge in {max_iter} "
                              f"iterations, last change {change:.3e}")

    Cr = np.zeros((n, n, N + 1, N + 1))
    if n and m:
        for a in range(N + 1):
            K = a + 1
            base = np.einsum("pm,mqb->pqb", Sl_x[a], G21[:, :, a, :K])
            P = np.einsum("pmk,mqkb->pqkb", Cl[:, :, a, :K], G21[:, :, :K, :K])
            Cr[:, :, a, :K] = base + np.einsum("pqkb,kb->pqb", P, weights(a))
    _fill_upper(Cr, N)
    _fill_upper(Cl, N)
    return Cr, Cl, c_iters


def export_kernels_csv(kernels: KernelSet, path) -> None:
    """Write kernel samples as rows (x, xi, component, value)."""
    axis = kernels.grid.axis
    N = kernels.grid.N
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,xi,component,value\n")
        for name, arr in (("G21", kernels.G21), ("G22", kernels.G22)):
            p, q = arr.shape[0], arr.shape[1]
            for i in range(p):
                for j in range(q):
                    for a in range(N + 1):
                        for b in range(a + 1):
                            fh.write(f"{float(axis[a])!r},{float(axis[b])!r},"
                                     f"{name}_{i + 1}{j + 1},{float(arr[i, j, a, b])!r}\n")
