"""Two-layer shallow-water physics, linearization, and characteristic coordinates.

The model stacks two immiscible fluid layers over a flat bottom. State
W = (H1, U1, H2, U2) holds layer thicknesses and velocities; the layers
couple through interface pressure (density ratio r = rho1/rho2 < 1) and a
quadratic interlayer friction law. Everything here is built around a
constant operating point: the quasilinear system is linearized there, the
4x4 transport matrix is diagonalized numerically, and deviation states are
mapped to and from characteristic (Riemann) coordinates.

Conventions used throughout:

* eigenvalues are kept sorted ascending; ``EigenBasis.perm`` lists the
  rightward components (positive speeds, ascending) followed by the
  leftward components (negative speeds, ascending magnitude),
* right eigenvectors are normalized to unit first component whenever that
  component is not degenerate,
* the left-eigenvector matrix is the exact inverse of the right one, so
  the bi-orthogonality L @ R = I holds to machine precision.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import SolverError, ValidationError

log = logging.getLogger(__name__)

# default gravitational acceleration (m/s^2)
G_DEFAULT = 9.81

_EIG_GAP_TOL = 1e-9      # below this the transport matrix is treated as degenerate
_EIG_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class PhysicalParams:
    """Physical constants of the two-layer model."""

    g: float = G_DEFAULT
    r: float = 0.0          # density ratio rho1/rho2
    Cf: float = 0.0         # interlayer friction coefficient
    flat_bathymetry: bool = True

    def __post_init__(self):
        if not self.g > 0:
            raise ValidationError(f"g must be positive, got {self.g}")
        if not (0.0 <= self.r < 1.0):
            raise ValidationError(f"density ratio r must satisfy 0 <= r < 1, got {self.r}")
        if self.Cf < 0:
            raise ValidationError(f"friction coefficient Cf must be >= 0, got {self.Cf}")
        if not self.flat_bathymetry:
            raise ValidationError("linearization requires a flat bottom")


@dataclass(frozen=True)
class SetPoint:
    """Constant operating profile (H1, U1, H2, U2)."""

    H1: float
    U1: float
    H2: float
    U2: float

    def __post_init__(self):
        if self.H1 <= 0 or self.H2 <= 0:
            raise ValidationError("set-point thicknesses must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.H1, self.U1, self.H2, self.U2], dtype=float)

    def is_subcritical(self, params: PhysicalParams) -> bool:
        return (abs(self.U1) < np.sqrt(params.g * self.H1)
                and abs(self.U2) < np.sqrt(params.g * self.H2))


@dataclass
class PhysicalState:
    """Layer thicknesses and velocities sampled on a 1-d grid over [0, 1].

    Positivity of the thicknesses is enforced by default; trace diagnostics
    opt out because the linear model can transiently reconstruct profiles
    outside the physical region.
    """

    H1: np.ndarray
    U1: np.ndarray
    H2: np.ndarray
    U2: np.ndarray
    require_positive: bool = True

    def __post_init__(self):
        shapes = {np.shape(a) for a in (self.H1, self.U1, self.H2, self.U2)}
        if len(shapes) != 1:
            raise ValidationError("physical state components must share one grid")
        if self.require_positive and (np.any(np.asarray(self.H1) <= 0)
                                      or np.any(np.asarray(self.H2) <= 0)):
            raise ValidationError("layer thicknesses must stay positive")

    def deviation(self, setpoint: SetPoint) -> np.ndarray:
        """Stacked deviation (h1, u1, h2, u2) from the set point, shape (4, nx)."""
        return np.vstack([
            np.asarray(self.H1) - setpoint.H1,
            np.asarray(self.U1) - setpoint.U1,
            np.asarray(self.H2) - setpoint.H2,
            np.asarray(self.U2) - setpoint.U2,
        ])

    @staticmethod
    def from_deviation(dev: np.ndarray, setpoint: SetPoint,
                       require_positive: bool = True) -> "PhysicalState":
        dev = np.asarray(dev, dtype=float)
        return PhysicalState(
            H1=dev[0] + setpoint.H1,
            U1=dev[1] + setpoint.U1,
            H2=dev[2] + setpoint.H2,
            U2=dev[3] + setpoint.U2,
            require_positive=require_positive,
        )


def flux(W, params: PhysicalParams) -> np.ndarray:
    """Flux map of the conservative form.

    Returns (H1*U1, U1^2/2 + g*(H1 + H2), H2*U2, U2^2/2 + g*(H2 + r*H1)).
    """
    H1, U1, H2, U2 = np.asarray(W, dtype=float)
    if H1 <= 0 or H2 <= 0:
        raise ValidationError("flux undefined for non-positive layer thickness")
    g, r = params.g, params.r
    return np.array([
        H1 * U1,
        0.5 * U1 ** 2 + g * (H1 + H2),
        H2 * U2,
        0.5 * U2 ** 2 + g * (H2 + r * H1),
    ])


def jacobian(W, params: PhysicalParams) -> np.ndarray:
    """Exact derivative of :func:`flux` with respect to W."""
    H1, U1, H2, U2 = np.asarray(W, dtype=float)
    if H1 <= 0 or H2 <= 0:
        raise ValidationError("jacobian undefined for non-positive layer thickness")
    g, r = params.g, params.r
    return np.array([
        [U1, H1, 0.0, 0.0],
        [g, U1, g, 0.0],
        [0.0, 0.0, U2, H2],
        [r * g, 0.0, g, U2],
    ])


def friction_sources(U1: float, U2: float, Cf: float, r: float):
    """Quadratic interlayer friction acting on the two momentum equations."""
    drag = Cf * abs(U1 - U2) * (U1 - U2)
    return -drag, r * drag


@dataclass(frozen=True)
class LinearModel:
    """Linearization of the quasilinear system at a set point.

    The deviation state U = (h1, u1, h2, u2) evolves as
    dU/dt + Astar dU/dx = source_matrix @ U.
    """

    Astar: np.ndarray
    alpha_sf: float
    source_matrix: np.ndarray
    setpoint: SetPoint
    params: PhysicalParams


def linearize(setpoint: SetPoint, params: PhysicalParams) -> LinearModel:
    """Linearize around a subcritical set point.

    The friction term linearizes to a constant matrix acting on the
    deviation with coefficient alpha_sf = 2*Cf*|U1 - U2| at the set point.
    """
    if not setpoint.is_subcritical(params):
        raise ValidationError("set point must be subcritical in both layers")
    alpha_sf = 2.0 * params.Cf * abs(setpoint.U1 - setpoint.U2)
    S = np.zeros((4, 4))
    S[1, 1], S[1, 3] = -alpha_sf, alpha_sf
    S[3, 1], S[3, 3] = params.r * alpha_sf, -params.r * alpha_sf
    return LinearModel(
        Astar=jacobian(setpoint.as_array(), params),
        alpha_sf=alpha_sf,
        source_matrix=S,
        setpoint=setpoint,
        params=params,
    )


def _closed_form_r0(setpoint: SetPoint, params: PhysicalParams) -> np.ndarray:
    g = params.g
    c1 = np.sqrt(g * setpoint.H1)
    c2 = np.sqrt(g * setpoint.H2)
    return np.sort(np.array([
        setpoint.U1 - c1, setpoint.U1 + c1,
        setpoint.U2 - c2, setpoint.U2 + c2,
    ]))


def _check_distinct_real(roots: np.ndarray, context: str) -> np.ndarray:
    if np.max(np.abs(roots.imag)) > _EIG_GAP_TOL:
        raise SolverError(f"{context}: complex characteristic speeds, system not hyperbolic")
    vals = np.sort(roots.real)
    if np.min(np.diff(vals)) < _EIG_GAP_TOL:
        raise SolverError(f"{context}: repeated characteristic speeds within {_EIG_GAP_TOL}")
    return vals


def characteristic_speeds(setpoint: SetPoint, params: PhysicalParams,
                          mode: str = "numeric_quartic") -> np.ndarray:
    """Transport speeds of the linearized system, sorted ascending.

    ``closed_form_r0`` returns the decoupled-layer speeds U_i +- sqrt(g*H_i),
    valid as the r -> 0 limit.  ``numeric_quartic`` finds the four real roots
    of the exact characteristic quartic
    ((s - U1)^2 - g*H1) ((s - U2)^2 - g*H2) = r g^2 H1 H2
    via the companion matrix of the expanded polynomial.
    """
    if not setpoint.is_subcritical(params):
        raise ValidationError("set point must be subcritical in both layers")
    if mode == "closed_form_r0":
        vals = _closed_form_r0(setpoint, params)
        return _check_distinct_real(vals.astype(complex), "closed_form_r0")
    if mode != "numeric_quartic":
        raise ValidationError(f"unknown characteristic-speed mode {mode!r}")
    g, r = params.g, params.r
    p1 = np.array([1.0, -2.0 * setpoint.U1, setpoint.U1 ** 2 - g * setpoint.H1])
    p2 = np.array([1.0, -2.0 * setpoint.U2, setpoint.U2 ** 2 - g * setpoint.H2])
    poly = np.polymul(p1, p2)
    poly[-1] -= r * g * g * setpoint.H1 * setpoint.H2
    roots = np.roots(poly)
    return _check_distinct_real(roots, "numeric_quartic")


@dataclass(frozen=True)
class EigenBasis:
    """Numerically diagonalized transport matrix.

    ``lambdas`` ascending; columns of ``R`` are right eigenvectors, rows of
    ``L = R^-1`` are the matching left eigenvectors.  ``perm`` maps the
    ascending ordering into (rightward ascending, leftward ascending-|speed|)
    blocks, and ``layers`` tags each eigenvalue with the layer (1 or 2)
    whose decoupled speed it continues from.
    """

    lambdas: np.ndarray
    R: np.ndarray
    L: np.ndarray
    perm: np.ndarray
    layers: np.ndarray

    @property
    def n_right(self) -> int:
        return int(np.sum(self.lambdas > 0))

    @property
    def n_left(self) -> int:
        return int(np.sum(self.lambdas < 0))


def eigenbasis(model: LinearModel) -> EigenBasis:
    """Diagonalize the linearized transport matrix.

    The numeric eigensolve is authoritative.  Closed-form expressions for the
    eigenvectors are evaluated only as a logged cross-check, see
    :func:`closed_form_diagnostics`.
    """
    A = model.Astar
    w, V = np.linalg.eig(A)
    if np.max(np.abs(w.imag)) > _EIG_GAP_TOL:
        raise SolverError("transport matrix has complex eigenvalues")
    order = np.argsort(w.real)
    lambdas = w.real[order]
    if np.min(np.diff(lambdas)) < _EIG_GAP_TOL:
        raise SolverError("eigenvalue clustering below 1e-9, basis degenerate")
    R = np.real(V[:, order])
    for k in range(4):
        col = R[:, k]
        lead = col[0]
        if abs(lead) > 1e-8 * np.linalg.norm(col):
            R[:, k] = col / lead
        else:
            pivot = col[np.argmax(np.abs(col))]
            R[:, k] = col / pivot
    L = np.linalg.inv(R)

    scale = np.linalg.norm(A)
    res_right = max(np.linalg.norm(A @ R[:, k] - lambdas[k] * R[:, k]) for k in range(4))
    res_left = max(np.linalg.norm(L[k] @ A - lambdas[k] * L[k]) for k in range(4))
    res_bi = np.max(np.abs(L @ R - np.eye(4)))
    if res_right > _EIG_RESIDUAL_TOL * scale or res_left > _EIG_RESIDUAL_TOL * scale:
        raise SolverError("eigenvector residual exceeds 1e-10 of the matrix norm")
    if res_bi > _EIG_RESIDUAL_TOL:
        raise SolverError("bi-orthogonality L R = I violated beyond 1e-10")

    pos = np.where(lambdas > 0)[0]
    neg = np.where(lambdas < 0)[0]
    if pos.size + neg.size != 4:
        raise SolverError("zero characteristic speed, system is not strictly heterodirectional")
    neg_sorted = neg[np.argsort(np.abs(lambdas[neg]))]
    perm = np.concatenate([pos, neg_sorted])

    basis = EigenBasis(lambdas=lambdas, R=R, L=L, perm=perm,
                       layers=_layer_tags_sorted(model))
    _log_closed_form_gaps(model, basis)
    return basis


def _layer_tags_sorted(model: LinearModel) -> np.ndarray:
    """Layer tag (1 or 2) per ascending eigenvalue, by rank pairing with r=0 speeds."""
    sp, g = model.setpoint, model.params.g
    speeds = np.array([
        sp.U1 - np.sqrt(g * sp.H1), sp.U1 + np.sqrt(g * sp.H1),
        sp.U2 - np.sqrt(g * sp.H2), sp.U2 + np.sqrt(g * sp.H2),
    ])
    tags = np.array([1, 1, 2, 2])
    order = np.argsort(speeds)
    return tags[order]


def to_riemann(U_phys: np.ndarray, basis: EigenBasis) -> np.ndarray:
    """Deviation state to characteristic coordinates, xi = L @ U."""
    return basis.L @ np.asarray(U_phys, dtype=float)


def from_riemann(xi: np.ndarray, basis: EigenBasis) -> np.ndarray:
    """Characteristic coordinates back to the deviation state, U = R @ xi."""
    return basis.R @ np.asarray(xi, dtype=float)


@dataclass(frozen=True)
class CouplingMatrices:
    """In-domain coupling of the diagonalized system.

    ``M`` is the full 4x4 coupling in ascending eigen order; ``Sr`` (u <- u)
    and ``Sl`` (u <- v) are its blocks after permuting into (rightward,
    leftward) components.  The leftward equations carry no in-domain source:
    the linearized friction forces only the rightward characteristics, so M
    is the rank-<=1 outer product of the friction column with the velocity
    reconstruction row and its leftward rows vanish identically.
    ``projection_gap`` records how far the exact eigenprojection of the
    friction matrix deviates from this structure (logged, diagnostic only).
    """

    M: np.ndarray
    Sr: np.ndarray
    Sl: np.ndarray
    perm: np.ndarray
    projection_gap: float


def coupling_matrices(model: LinearModel, basis: EigenBasis) -> CouplingMatrices:
    """Coupling matrices of the characteristic form.

    Rightward row k carries weight -alpha_sf (upper layer) or +r*alpha_sf
    (lower layer); columns carry the difference of the velocity
    reconstruction coefficients of the two layers.
    """
    alpha = model.alpha_sf
    r = model.params.r
    gamma_minus_alpha = basis.R[1, :] - basis.R[3, :]

    weights = np.zeros(4)
    for k in range(4):
        if basis.lambdas[k] > 0:
            weights[k] = -alpha if basis.layers[k] == 1 else r * alpha
    M = np.outer(weights, gamma_minus_alpha)

    exact = basis.L @ model.source_matrix @ basis.R
    projection_gap = float(np.max(np.abs(exact - M)))
    if projection_gap > 10.0 * abs(alpha) * max(1.0, np.max(np.abs(gamma_minus_alpha))):
        log.warning("coupling projection gap unexpectedly large: %.3e", projection_gap)
    elif projection_gap > 0:
        log.debug("coupling outer-product vs exact projection gap: %.3e", projection_gap)

    n = basis.n_right
    Mp = M[np.ix_(basis.perm, basis.perm)]
    v_block = Mp[n:, :]
    if np.max(np.abs(v_block)) > 1e-12:
        raise SolverError("internal consistency: leftward coupling rows must vanish")
    return CouplingMatrices(
        M=M,
        Sr=Mp[:n, :n].copy(),
        Sl=Mp[:n, n:].copy(),
        perm=basis.perm.copy(),
        projection_gap=projection_gap,
    )


def closed_form_diagnostics(model: LinearModel, basis: EigenBasis) -> dict:
    """Compare the numeric basis against analytic eigenvector expressions.

    The right-eigenvector closed form follows directly from the matrix
    structure and should agree to roundoff.  The remaining closed forms
    (left eigenvectors and reconstruction coefficients) are retained purely
    as diagnostics; several of their terms disagree with the numeric basis
    and they are never used in computations.
    """
    sp, g = model.setpoint, model.params.g
    lam = basis.lambdas
    out = {}

    V = np.ones((4, 4))
    V[1, :] = (lam - sp.U1) / sp.H1
    V[2, :] = ((lam - sp.U1) ** 2 - g * sp.H1) / (g * sp.H1)
    V[3, :] = (lam - sp.U2) * ((lam - sp.U1) ** 2 - g * sp.H1) / (g * sp.H1 * sp.H2)
    out["right_eigenvector_gap"] = float(np.max(np.abs(V - basis.R)) / np.max(np.abs(basis.R)))

    trA = np.trace(model.Astar)
    detA = np.linalg.det(model.Astar)
    f = np.array([
        (lam[2] + lam[1]) * lam[3] + lam[1] * lam[2],
        (lam[2] + lam[0]) * lam[3] + lam[0] * lam[2],
        (lam[1] + lam[0]) * lam[3] + lam[0] * lam[1],
        (lam[0] + lam[1]) * lam[2] + lam[0] * lam[1],
    ])
    Lcf = np.zeros((4, 4))
    for k in range(4):
        others = [i for i in range(4) if i != k]
        denom = np.prod([lam[i] - lam[k] for i in others])
        l1 = (sp.U1 ** 3 - (trA - lam[k]) * (sp.U1 ** 2 + g * sp.H1) + f[k]
              + 3 * g * sp.H1 - detA / lam[k])
        l2 = (3 * sp.H1 * sp.U1 ** 2 - 2 * sp.H1 * sp.U1 * (trA - lam[k])
              + sp.H1 * (f[k] + g * sp.H1))
        l3 = g * sp.H1 * (7 * sp.U1 - lam[k])
        l4 = g * sp.H1 * sp.H2
        Lcf[k] = -np.array([l1, l2, l3, l4]) / denom
    out["left_eigenvector_gap"] = float(np.max(np.abs(Lcf - basis.L)) / max(np.max(np.abs(basis.L)), 1e-300))

    gamma = (lam - 1.0) / sp.H1
    out["velocity_coeff_gap"] = float(np.max(np.abs(gamma - basis.R[1, :])))
    return out


def _log_closed_form_gaps(model: LinearModel, basis: EigenBasis) -> None:
    try:
        diag = closed_form_diagnostics(model, basis)
    except (FloatingPointError, ZeroDivisionError):  # lam == 0 cannot occur past the perm check
        return
    for name, gap in diag.items():
        if gap > 1e-6:
            log.debug("eigenbasis closed-form cross-check %s = %.3e (numeric basis kept)", name, gap)
