"""Fuzzy numbers as discretized level-set families.

A fuzzy number is stored by its endpoint families on a shared grid of
membership levels r in [0, 1]: a closed interval [lower(r), upper(r)] per
level, with lower non-decreasing and upper non-increasing in r.  All
suprema over r are taken as maxima over the grid.  Values are immutable
and every operation is a pure function.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

# Absolute slack absorbing float noise in monotonicity checks, and the
# equality tolerance of the order relation.
TOL_MONO = 1e-10
TOL_EQ = 1e-10

DEFAULT_LEVEL_COUNT = 11


class GridMismatchError(ValueError):
    """Operands live on different level grids."""


class InvalidFuzzyNumberError(ValueError):
    """Endpoint families violate the level-family conditions."""


class LevelGrid:
    """Strictly increasing membership levels from 0 to 1 (M+1 >= 2 entries)."""

    __slots__ = ("levels",)

    def __init__(self, levels):
        arr = np.asarray(levels, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("a level grid needs at least the two levels 0 and 1")
        if arr[0] != 0.0 or arr[-1] != 1.0:
            raise ValueError("level grid must start at 0 and end at 1")
        if not np.all(np.diff(arr) > 0.0):
            raise ValueError("levels must be strictly increasing")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "levels", arr)

    @classmethod
    def uniform(cls, count: int = DEFAULT_LEVEL_COUNT) -> "LevelGrid":
        return cls(np.linspace(0.0, 1.0, count))

    def __len__(self) -> int:
        return self.levels.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, LevelGrid):
            return NotImplemented
        return self.levels is other.levels or np.array_equal(self.levels, other.levels)

    def __hash__(self) -> int:
        return hash(self.levels.tobytes())

    def __repr__(self) -> str:
        return f"LevelGrid({self.levels.tolist()})"

    def __setattr__(self, name, value):
        raise AttributeError("LevelGrid is immutable")


def _require_same_grid(a: "FuzzyNumber", b: "FuzzyNumber") -> None:
    if a.grid != b.grid:
        raise GridMismatchError("operands must share one level grid")


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    condition: Optional[str] = None  # which family condition failed
    index: Optional[int] = None  # grid index of the first violation

    def __bool__(self) -> bool:
        return self.ok


def validate(lower, upper, grid: LevelGrid, tol: float = TOL_MONO) -> ValidationResult:
    """Check the discretized level-family conditions.

    (i) lower non-decreasing in r, (ii) upper non-increasing in r,
    (iii) lower <= upper at the top level r = 1; each within ``tol``.
    Reports the first violated condition and its grid index.
    """
    lo = np.asarray(lower, dtype=np.float64)
    up = np.asarray(upper, dtype=np.float64)
    m = len(grid)
    if lo.shape != (m,) or up.shape != (m,):
        raise ValueError(f"endpoint arrays must have shape ({m},)")
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(up))):
        return ValidationResult(False, "non-finite entries", None)
    bad = np.nonzero(np.diff(lo) < -tol)[0]
    if bad.size:
        return ValidationResult(False, "lower endpoints not non-decreasing", int(bad[0]) + 1)
    bad = np.nonzero(np.diff(up) > tol)[0]
    if bad.size:
        return ValidationResult(False, "upper endpoints not non-increasing", int(bad[0]) + 1)
    if lo[-1] > up[-1] + tol:
        return ValidationResult(False, "lower exceeds upper at level 1", m - 1)
    return ValidationResult(True)


class FuzzyNumber:
    """Immutable level-set family [lower(r), upper(r)] on a shared grid."""

    __slots__ = ("grid", "lower", "upper")

    def __init__(self, grid: LevelGrid, lower, upper):
        lo = np.asarray(lower, dtype=np.float64).copy()
        up = np.asarray(upper, dtype=np.float64).copy()
        result = validate(lo, up, grid)
        if not result:
            raise InvalidFuzzyNumberError(
                f"{result.condition} (level index {result.index})"
            )
        lo.setflags(write=False)
        up.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    def __setattr__(self, name, value):
        raise AttributeError("FuzzyNumber is immutable")

    def level(self, i: int) -> tuple[float, float]:
        return float(self.lower[i]), float(self.upper[i])

    def is_crisp(self, tol: float = TOL_EQ) -> bool:
        return bool(np.max(self.upper - self.lower) <= tol)

    def __add__(self, other):
        if isinstance(other, FuzzyNumber):
            return add(self, other)
        return NotImplemented

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float)):
            return scalar_mul(float(scalar), self)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return scalar_mul(-1.0, self)

    def product(self, other: "FuzzyNumber") -> "FuzzyNumber":
        return multiply(self, other)

    def __repr__(self) -> str:
        lo, up = self.level(len(self.grid) - 1)
        return f"FuzzyNumber(core=[{lo:g}, {up:g}], support=[{self.lower[0]:g}, {self.upper[0]:g}])"


def triangular(x: float, y: float, z: float, grid: LevelGrid) -> FuzzyNumber:
    """Triangular number (x, y, z): level endpoints y*r + x*(1-r), y*r + z*(1-r)."""
    if not (x <= y <= z):
        raise ValueError(f"triangular parameters must satisfy x <= y <= z, got ({x}, {y}, {z})")
    r = grid.levels
    return FuzzyNumber(grid, y * r + x * (1.0 - r), y * r + z * (1.0 - r))


def crisp(k: float, grid: LevelGrid) -> FuzzyNumber:
    return triangular(k, k, k, grid)


def fuzzy_zero(grid: LevelGrid) -> FuzzyNumber:
    return crisp(0.0, grid)


def add(a: FuzzyNumber, b: FuzzyNumber) -> FuzzyNumber:
    """Levelwise interval addition."""
    _require_same_grid(a, b)
    return FuzzyNumber(a.grid, a.lower + b.lower, a.upper + b.upper)


def scalar_mul(lam: float, a: FuzzyNumber) -> FuzzyNumber:
    """Levelwise scalar product; negative factors swap the endpoints."""
    if lam >= 0.0:
        return FuzzyNumber(a.grid, lam * a.lower, lam * a.upper)
    return FuzzyNumber(a.grid, lam * a.upper, lam * a.lower)


def multiply(a: FuzzyNumber, b: FuzzyNumber) -> FuzzyNumber:
    """Levelwise interval product: min/max over the four endpoint products."""
    _require_same_grid(a, b)
    products = np.stack(
        [a.lower * b.lower, a.lower * b.upper, a.upper * b.lower, a.upper * b.upper]
    )
    return FuzzyNumber(a.grid, products.min(axis=0), products.max(axis=0))


@dataclass(frozen=True)
class NonexistenceReport:
    """Outcome when a gH-difference candidate is not a valid level family."""

    lower: np.ndarray
    upper: np.ndarray
    condition: str
    index: Optional[int]


def gh_difference(a: FuzzyNumber, b: FuzzyNumber) -> Union[FuzzyNumber, NonexistenceReport]:
    """Generalized Hukuhara difference.

    Candidate levels are min/max of the endpoint differences; returned as a
    FuzzyNumber when they form a valid family, otherwise as a
    NonexistenceReport carrying the candidate arrays.
    """
    _require_same_grid(a, b)
    d_lower = a.lower - b.lower
    d_upper = a.upper - b.upper
    c_lower = np.minimum(d_lower, d_upper)
    c_upper = np.maximum(d_lower, d_upper)
    result = validate(c_lower, c_upper, a.grid)
    if result:
        return FuzzyNumber(a.grid, c_lower, c_upper)
    return NonexistenceReport(c_lower, c_upper, result.condition, result.index)


def hausdorff(a: FuzzyNumber, b: FuzzyNumber) -> float:
    """Hausdorff distance: max over levels of the larger endpoint gap."""
    _require_same_grid(a, b)
    return float(
        np.max(np.maximum(np.abs(a.lower - b.lower), np.abs(a.upper - b.upper)))
    )


class OrderRelation(Enum):
    EQUIVALENT = "equivalent"
    PRECEDES = "precedes"
    STRICTLY_PRECEDES = "strictly_precedes"
    SUCCEEDS = "succeeds"
    STRICTLY_SUCCEEDS = "strictly_succeeds"
    NONCOMPARABLE = "noncomparable"


def compare(a: FuzzyNumber, b: FuzzyNumber, tol: float = TOL_EQ) -> OrderRelation:
    """Partial order on levelwise endpoints.

    a precedes b when both endpoints are <= at every level; strictly when
    additionally both are strict at some common level.  Equivalence is
    levelwise equality within ``tol``.
    """
    _require_same_grid(a, b)
    if np.max(np.abs(a.lower - b.lower)) <= tol and np.max(np.abs(a.upper - b.upper)) <= tol:
        return OrderRelation.EQUIVALENT
    if np.all(a.lower <= b.lower) and np.all(a.upper <= b.upper):
        if np.any((a.lower < b.lower) & (a.upper < b.upper)):
            return OrderRelation.STRICTLY_PRECEDES
        return OrderRelation.PRECEDES
    if np.all(b.lower <= a.lower) and np.all(b.upper <= a.upper):
        if np.any((b.lower < a.lower) & (b.upper < a.upper)):
            return OrderRelation.STRICTLY_SUCCEEDS
        return OrderRelation.SUCCEEDS
    return OrderRelation.NONCOMPARABLE
