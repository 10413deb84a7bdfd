"""Spatially varying coefficients on [0, 1].

A CoefficientField wraps a constant, a callable, or sampled data with
linear interpolation, and evaluates vectorized over query points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class CoefficientField:
    """Scalar coefficient defined on all of [0, 1]."""

    constant: Optional[float] = None
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    xs: Optional[np.ndarray] = None
    ys: Optional[np.ndarray] = None

    def __post_init__(self):
        kinds = sum(v is not None for v in (self.constant, self.func, self.xs))
        if kinds != 1:
            raise ValidationError("field needs exactly one of constant, func, xs/ys")
        if self.xs is not None:
            xs = np.asarray(self.xs, dtype=float)
            ys = np.asarray(self.ys, dtype=float)
            if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
                raise ValidationError("sampled field needs matching 1-d xs, ys")
            if np.any(np.diff(xs) <= 0):
                raise ValidationError("sampled field xs must be strictly increasing")
            if xs[0] > 0.0 or xs[-1] < 1.0:
                raise ValidationError("sampled field must cover [0, 1]")
            object.__setattr__(self, "xs", xs)
            object.__setattr__(self, "ys", ys)

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.constant is not None:
            return np.full_like(x, self.constant, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(x), dtype=float)
        return np.interp(x, self.xs, self.ys)


def const(value: float) -> CoefficientField:
    return CoefficientField(constant=float(value))


@dataclass(frozen=True)
class MatrixField:
    """Matrix of CoefficientFields, evaluated as (p, q) at scalar x or (nx, p, q) at arrays."""

    entries: tuple  # tuple of tuples of CoefficientField
    shape: tuple = field(init=False)

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.entries)
        if len(rows) == 0:
            object.__setattr__(self, "entries", rows)
            object.__setattr__(self, "shape", (0, 0))
            return
        q = len(rows[0])
        if any(len(r) != q for r in rows):
            raise ValidationError("ragged matrix field")
        object.__setattr__(self, "entries", rows)
        object.__setattr__(self, "shape", (len(rows), q))

    @property
    def is_constant(self) -> bool:
        return all(e.is_constant for r in self.entries for e in r)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        p, q = self.shape
        out = np.zeros(x.shape + (p, q))
        for i in range(p):
            for j in range(q):
                out[..., i, j] = self.entries[i][j](x)
        return out

    @staticmethod
    def constant(mat) -> "MatrixField":
        mat = np.atleast_2d(np.asarray(mat, dtype=float))
        return MatrixField(tuple(tuple(const(v) for v in row) for row in mat))

    @staticmethod
    def zeros(p: int, q: int) -> "MatrixField":
        return MatrixField(tuple(tuple(const(0.0) for _ in range(q)) for _ in range(p)))


def diag_fields(values) -> tuple:
    """Constant diagonal speeds as a tuple of CoefficientFields."""
    return tuple(const(v) for v in np.asarray(values, dtype=float))
