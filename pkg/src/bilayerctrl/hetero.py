"""General heterodirectional first-order hyperbolic system on [0, 1].

n rightward states u and m leftward states v with spatially varying,
strictly ordered positive speeds:

    du/dt + Lambda_r(x) du/dx = Sr(x) u + Sl(x) v
    dv/dt - Lambda_l(x) dv/dx = So(x) u
    u(t, 0) = Q0 v(t, 0),   v(t, 1) = R1 u(t, 1) + U(t)

Speeds are stored as positive magnitudes for both families.  The
construction from the two-layer model produces the constant-coefficient
2+2 instance; validation and the kernel solver accept general sampled or
callable coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bilayer import EigenBasis, LinearModel, coupling_matrices
from .errors import ValidationError
from .fields import CoefficientField, MatrixField, diag_fields

_ORDER_TOL = 1e-12


@dataclass(frozen=True)
class HeteroSystem:
    n: int
    m: int
    Lambda_r: tuple          # n CoefficientFields, positive
    Lambda_l: tuple          # m CoefficientFields, positive magnitudes
    Sr: MatrixField          # n x n
    Sl: MatrixField          # n x m
    So: MatrixField          # m x n
    Q0: np.ndarray           # n x m
    R1: np.ndarray           # m x n

    def speeds_right(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack([f(x) for f in self.Lambda_r], axis=-1) if self.n else np.zeros(x.shape + (0,))

    def speeds_left(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack([f(x) for f in self.Lambda_l], axis=-1) if self.m else np.zeros(x.shape + (0,))

    def speed_bounds(self, samples: int = 1001):
        """(min, max) of all transport speeds over a dense sample grid."""
        x = np.linspace(0.0, 1.0, samples)
        vals = np.concatenate([self.speeds_right(x).ravel(), self.speeds_left(x).ravel()])
        if vals.size == 0:
            raise ValidationError("system has no transport speeds")
        return float(np.min(vals)), float(np.max(vals))

    @property
    def constant_speeds(self) -> bool:
        return all(f.is_constant for f in self.Lambda_r + self.Lambda_l)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    failure: Optional[str] = None

    def __bool__(self) -> bool:
        return self.ok


def _fail(msg: str) -> ValidationReport:
    return ValidationReport(ok=False, failure=msg)


def validate(system: HeteroSystem, samples: int = 1001) -> ValidationReport:
    """Check dimensions, positivity, strict speed ordering, and boundedness.

    Never raises on bad input; the report carries the first violated
    constraint.
    """
    n, m = system.n, system.m
    if n < 1 or m < 0:
        return _fail(f"need n >= 1 rightward and m >= 0 leftward states, got n={n}, m={m}")
    if len(system.Lambda_r) != n:
        return _fail(f"expected {n} rightward speeds, got {len(system.Lambda_r)}")
    if len(system.Lambda_l) != m:
        return _fail(f"expected {m} leftward speeds, got {len(system.Lambda_l)}")
    def shape_ok(got, want):
        # degenerate (zero-sized) blocks match on emptiness alone
        if 0 in want:
            return 0 in got or got == want
        return got == want

    for name, fld, shape in (("Sr", system.Sr, (n, n)), ("Sl", system.Sl, (n, m)),
                             ("So", system.So, (m, n))):
        if not shape_ok(fld.shape, shape):
            return _fail(f"{name} must have shape {shape}, got {fld.shape}")
    for name, mat, shape in (("Q0", system.Q0, (n, m)), ("R1", system.R1, (m, n))):
        if not shape_ok(np.shape(mat), shape):
            return _fail(f"{name} must have shape {shape}, got {np.shape(mat)}")
        if not np.all(np.isfinite(mat)):
            return _fail(f"{name} has non-finite entries")

    x = np.linspace(0.0, 1.0, samples)
    for label, fields in (("rightward", system.Lambda_r), ("leftward", system.Lambda_l)):
        vals = np.stack([f(x) for f in fields], axis=-1) if fields else None
        if vals is None:
            continue
        if not np.all(np.isfinite(vals)):
            return _fail(f"{label} speeds not finite on [0, 1]")
        if np.any(vals <= 0):
            return _fail(f"{label} speeds must be strictly positive")
        for i in range(vals.shape[-1] - 1):
            if np.any(vals[:, i + 1] - vals[:, i] <= _ORDER_TOL):
                return _fail(f"{label} speeds must be strictly increasing "
                             f"(violated between components {i + 1} and {i + 2})")
    for name, fld in (("Sr", system.Sr), ("Sl", system.Sl), ("So", system.So)):
        if fld.shape[0] and fld.shape[1] and not np.all(np.isfinite(fld(x))):
            return _fail(f"{name} not bounded on [0, 1]")
    return ValidationReport(ok=True)


def layer_order_permutations(basis: EigenBasis):
    """Permutation matrices between layer ordering and internal speed ordering.

    Layer ordering lists the upper-layer mode before the lower-layer mode in
    each family; internal ordering sorts rightward components by speed and
    leftward components by speed magnitude.  Returns (Pu, Pv) with
    u_internal = Pu @ u_layer and v_internal = Pv @ v_layer.
    """
    n = basis.n_right
    m = basis.n_left
    if n != 2 or m != 2:
        raise ValidationError("layer ordering requires the 2+2 split")
    Pu = np.zeros((n, n))
    Pv = np.zeros((m, m))
    for a in range(n):
        layer = basis.layers[basis.perm[a]]
        Pu[a, layer - 1] = 1.0
    for a in range(m):
        layer = basis.layers[basis.perm[n + a]]
        Pv[a, layer - 1] = 1.0
    return Pu, Pv


def from_bilayer(model: LinearModel, basis: EigenBasis, Q0, R1) -> HeteroSystem:
    """Constant-coefficient 2+2 system of the linearized two-layer model.

    ``Q0`` and ``R1`` are given in layer ordering (upper-layer component
    first in each family) and are permuted into the internal speed ordering
    together with the coupling blocks.  The leftward equations carry no
    in-domain source, so ``So`` is identically zero.
    """
    Q0 = np.asarray(Q0, dtype=float)
    R1 = np.asarray(R1, dtype=float)
    if Q0.shape != (2, 2) or R1.shape != (2, 2):
        raise ValidationError("bilayer boundary matrices must be 2x2")
    n, m = basis.n_right, basis.n_left
    if n != 2 or m != 2:
        raise ValidationError("set point does not produce a 2+2 heterodirectional split")

    cm = coupling_matrices(model, basis)
    lam_u = basis.lambdas[basis.perm[:n]]
    lam_v = np.abs(basis.lambdas[basis.perm[n:]])
    Pu, Pv = layer_order_permutations(basis)

    system = HeteroSystem(
        n=n,
        m=m,
        Lambda_r=diag_fields(lam_u),
        Lambda_l=diag_fields(lam_v),
        Sr=MatrixField.constant(cm.Sr),
        Sl=MatrixField.constant(cm.Sl),
        So=MatrixField.zeros(m, n),
        Q0=Pu @ Q0 @ Pv.T,
        R1=Pv @ R1 @ Pu.T,
    )
    report = validate(system)
    if not report.ok:
        raise ValidationError(f"bilayer system failed validation: {report.failure}")
    return system


def constant_system(lam_r, lam_l, Sr=None, Sl=None, So=None, Q0=None, R1=None) -> HeteroSystem:
    """Convenience constructor for constant-coefficient systems (tests, presets)."""
    lam_r = np.atleast_1d(np.asarray(lam_r, dtype=float))
    lam_l = np.atleast_1d(np.asarray(lam_l, dtype=float))
    n, m = lam_r.size, lam_l.size
    return HeteroSystem(
        n=n, m=m,
        Lambda_r=diag_fields(lam_r),
        Lambda_l=diag_fields(lam_l),
        Sr=MatrixField.constant(Sr) if Sr is not None else MatrixField.zeros(n, n),
        Sl=MatrixField.constant(Sl) if Sl is not None else MatrixField.zeros(n, m),
        So=MatrixField.constant(So) if So is not None else MatrixField.zeros(m, n),
        Q0=np.zeros((n, m)) if Q0 is None else np.asarray(Q0, dtype=float),
        R1=np.zeros((m, n)) if R1 is None else np.asarray(R1, dtype=float),
    )
