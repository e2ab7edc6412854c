"""Sampled fuzzy-valued functions of one real variable.

Differentiation follows the endpoint characterization of the generalized
Hukuhara derivative: differentiate both endpoint families and classify,
per sample, which ordering of the endpoint derivatives forms a valid
level family.  Integration is endpoint-wise composite trapezoid, which
keeps arbitrary strictly increasing sample grids admissible.
"""

from __future__ import annotations

from enum import Enum
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sparse
from scipy.integrate import trapezoid

from . import _accel
from .levels import TOL_MONO, FuzzyNumber, LevelGrid, validate


class GHKind(Enum):
    """Per-sample differentiability case of the gH-derivative."""

    KIND1 = "kind1"  # levels [d lower, d upper]
    KIND2 = "kind2"  # levels [d upper, d lower]
    BOTH = "both"  # endpoint derivatives coincide across levels
    NONE = "none"  # neither ordering is a valid level family


class FuzzyTrajectory:
    """Fuzzy values sampled on a strictly increasing x-grid (one shared LevelGrid).

    Stored level-major: ``lower`` and ``upper`` have shape (levels, samples).
    """

    __slots__ = ("grid", "xs", "lower", "upper")

    def __init__(self, grid: LevelGrid, xs, lower, upper, validated: bool = True):
        xs = np.asarray(xs, dtype=np.float64).copy()
        lo = np.asarray(lower, dtype=np.float64).copy()
        up = np.asarray(upper, dtype=np.float64).copy()
        if xs.ndim != 1 or xs.size < 3:
            raise ValueError("a trajectory needs at least 3 sample points")
        if not np.all(np.diff(xs) > 0.0):
            raise ValueError("sample points must be strictly increasing")
        shape = (len(grid), xs.size)
        if lo.shape != shape or up.shape != shape:
            raise ValueError(f"endpoint arrays must have shape {shape}")
        if validated:
            for j in range(xs.size):
                result = validate(lo[:, j], up[:, j], grid)
                if not result:
                    raise ValueError(
                        f"invalid fuzzy value at sample {j} (x={xs[j]:g}): "
                        f"{result.condition}"
                    )
        for arr in (xs, lo, up):
            arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    def __setattr__(self, name, value):
        raise AttributeError("FuzzyTrajectory is immutable")

    @property
    def n_samples(self) -> int:
        return self.xs.size

    def value(self, j: int) -> FuzzyNumber:
        return FuzzyNumber(self.grid, self.lower[:, j], self.upper[:, j])

    @classmethod
    def from_values(cls, xs, values: Sequence[FuzzyNumber]) -> "FuzzyTrajectory":
        if len(values) == 0:
            raise ValueError("no values given")
        grid = values[0].grid
        for v in values[1:]:
            if v.grid != grid:
                raise ValueError("all values must share one level grid")
        lower = np.stack([v.lower for v in values], axis=1)
        upper = np.stack([v.upper for v in values], axis=1)
        return cls(grid, xs, lower, upper)

    @classmethod
    def from_endpoint_functions(
        cls,
        grid: LevelGrid,
        xs,
        lower_fn: Callable[[float, np.ndarray], np.ndarray],
        upper_fn: Callable[[float, np.ndarray], np.ndarray],
    ) -> "FuzzyTrajectory":
        """Sample lower_fn(r, xs) and upper_fn(r, xs) on every grid level."""
        xs = np.asarray(xs, dtype=np.float64)
        lower = np.stack([np.broadcast_to(lower_fn(r, xs), xs.shape) for r in grid.levels])
        upper = np.stack([np.broadcast_to(upper_fn(r, xs), xs.shape) for r in grid.levels])
        return cls(grid, xs, lower, upper)


def derivative_matrix(xs: np.ndarray) -> sparse.csr_matrix:
    """The sampling derivative as a sparse linear operator.

    Row i holds the same three-point stencil the array path uses, so
    ``derivative_matrix(xs) @ f`` equals the kernel gradient of f up to
    rounding.  Needed wherever the derivative enters a Jacobian.
    """
    xs = np.asarray(xs, dtype=np.float64)
    n = xs.size
    if n < 3:
        raise ValueError("need at least 3 sample points")
    rows, cols, vals = [], [], []
    hd = xs[1:-1] - xs[:-2]
    hs = xs[2:] - xs[1:-1]
    denom = hs * hd * (hd + hs)
    for i in range(1, n - 1):
        rows += [i, i, i]
        cols += [i - 1, i, i + 1]
        vals += [
            -hs[i - 1] ** 2 / denom[i - 1],
            (hs[i - 1] ** 2 - hd[i - 1] ** 2) / denom[i - 1],
            hd[i - 1] ** 2 / denom[i - 1],
        ]
    h0 = xs[1] - xs[0]
    h1 = xs[2] - xs[1]
    rows += [0, 0, 0]
    cols += [0, 1, 2]
    vals += [
        -(2.0 * h0 + h1) / (h0 * (h0 + h1)),
        (h0 + h1) / (h0 * h1),
        -h0 / (h1 * (h0 + h1)),
    ]
    hm = xs[-2] - xs[-3]
    hn = xs[-1] - xs[-2]
    rows += [n - 1, n - 1, n - 1]
    cols += [n - 3, n - 2, n - 1]
    vals += [
        hn / (hm * (hm + hn)),
        -(hm + hn) / (hm * hn),
        (2.0 * hn + hm) / (hn * (hm + hn)),
    ]
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def gh_derivative(traj: FuzzyTrajectory) -> tuple[FuzzyTrajectory, list[GHKind]]:
    """Differentiate a fuzzy trajectory and classify each sample.

    Endpoint families are differentiated with the shared second-order
    stencils; per sample the orderings [dl, du] and [du, dl] are validated.
    The returned trajectory carries the valid ordering (KIND1 preferred on
    ties); at NONE samples it carries the raw pair (dl, du), which is not a
    valid fuzzy value, and trajectory-level validation is skipped.
    """
    dl = _accel.gradient(traj.lower, traj.xs)
    du = _accel.gradient(traj.upper, traj.xs)
    n = traj.n_samples
    kinds: list[GHKind] = []
    out_lower = np.empty_like(dl)
    out_upper = np.empty_like(du)
    any_none = False
    for j in range(n):
        ok1 = bool(validate(dl[:, j], du[:, j], traj.grid, tol=TOL_MONO))
        ok2 = bool(validate(du[:, j], dl[:, j], traj.grid, tol=TOL_MONO))
        if ok1 and ok2:
            kinds.append(GHKind.BOTH)
        elif ok1:
            kinds.append(GHKind.KIND1)
        elif ok2:
            kinds.append(GHKind.KIND2)
        else:
            kinds.append(GHKind.NONE)
            any_none = True
        if ok2 and not ok1:
            out_lower[:, j] = du[:, j]
            out_upper[:, j] = dl[:, j]
        else:
            out_lower[:, j] = dl[:, j]
            out_upper[:, j] = du[:, j]
    derived = FuzzyTrajectory(
        traj.grid, traj.xs, out_lower, out_upper, validated=not any_none
    )
    return derived, kinds


def fuzzy_integral(traj: FuzzyTrajectory) -> FuzzyNumber:
    """Endpoint-wise composite trapezoid integral over the whole sample grid."""
    lower = trapezoid(traj.lower, traj.xs, axis=1)
    upper = trapezoid(traj.upper, traj.xs, axis=1)
    result = validate(lower, upper, traj.grid)
    assert result, f"integral of a valid trajectory must be valid: {result.condition}"
    return FuzzyNumber(traj.grid, lower, upper)
