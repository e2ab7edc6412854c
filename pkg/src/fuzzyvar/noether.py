"""Symmetry generators, invariance verification, and conserved quantities.

A generator is a triple (tau, zeta_lower, zeta_upper) of expressions in
(x, ql, qu): tau transforms the independent variable, the zeta pair
transforms the state endpoints.  Invariance of the cost functional is
detected numerically: the transformed cost is computed for a decreasing
sequence of group parameters and the defect must shrink quadratically
(the transformations are exact at first order, so a genuine symmetry
leaves an O(eps^2) defect).

Conserved quantities follow the first-integral formulas of the
stationarity system: momentum-like terms d4L*zeta_l + d5L*zeta_u, an
energy-like correction (L - d4L*vl - d5L*vu)*tau when time transforms,
and advanced-slot terms on the early region of delayed problems.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from . import _accel
from . import expressions as ex
from .engine import (
    DomainEvaluationError,
    Extremal,
    UnsupportedProblemError,
    VariationalProblem,
    _eval_levelwise,
    _flat_bindings,
    _is_zero,
)

DEFAULT_EPSILONS = (1e-2, 5e-3, 2.5e-3, 1.25e-3)
SLOPE_THRESHOLD = 2.0
SLOPE_TOL = 0.2
DELTA_FLOOR = 1e-13
TOL_CONS = 1e-5
TOL_SPAN = 1e-4

_GENERATOR_VARS = {"x", "ql", "qu"}


class GeneratorError(ValueError):
    """Symmetry generator violates a structural requirement."""


@lru_cache(maxsize=None)
def _dprog(expr: ex.Expression, var: str):
    d = ex.fold(ex.differentiate(expr, var))
    return None if _is_zero(d) else ex.compile_program(d)


def _values(expr: ex.Expression, flat: np.ndarray, nlev: int, n: int) -> np.ndarray:
    return ex.compile_program(expr)(flat).reshape(nlev, n)


def _total_derivative(expr: ex.Expression, flat, nlev, n, v_lower, v_upper) -> np.ndarray:
    """d/dx of expr(x, ql(x), qu(x)) along a trajectory, by the chain rule."""
    out = np.zeros((nlev, n))
    p = _dprog(expr, "x")
    if p is not None:
        out += p(flat).reshape(nlev, n)
    p = _dprog(expr, "ql")
    if p is not None:
        out += p(flat).reshape(nlev, n) * v_lower
    p = _dprog(expr, "qu")
    if p is not None:
        out += p(flat).reshape(nlev, n) * v_upper
    return out


@dataclass(frozen=True)
class SymmetryGenerator:
    """Infinitesimal transformation direction (tau optional)."""

    zeta_lower: ex.Expression
    zeta_upper: ex.Expression
    tau: Optional[ex.Expression] = None

    def __post_init__(self):
        for name, e in (("zeta_lower", self.zeta_lower), ("zeta_upper", self.zeta_upper), ("tau", self.tau)):
            if e is None:
                continue
            extra = ex.variables_of(e) - _GENERATOR_VARS
            if extra:
                raise GeneratorError(
                    f"{name} may only depend on (x, ql, qu), got {sorted(extra)}"
                )


def _check_history_vanishing(problem: VariationalProblem, generator: SymmetryGenerator, samples: int = 33):
    """On delayed problems the generator must vanish along the history region."""
    delay = problem.delay
    xs = np.linspace(problem.a - delay.lag, problem.a, samples)
    for x in xs:
        lo, up = delay.history_at(float(x))
        env = {"x": float(x), "ql": lo, "qu": up}
        for name, e in (("zeta_lower", generator.zeta_lower), ("zeta_upper", generator.zeta_upper)):
            if abs(ex.evaluate(e, env)) > 1e-9:
                raise GeneratorError(
                    f"{name} must vanish on the history region [a-lag, a]; "
                    f"nonzero at x={x:.6g}"
                )


# ---------------------------------------------------------------------------
# invariance
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class InvarianceReport:
    """Defect scaling of the transformed cost over levels and subintervals.

    deltas has shape (levels, subintervals, epsilons, 2) with the last axis
    (lower, upper); slopes (levels, subintervals, 2) holds the fitted
    log-log slope, nan where every defect sat below the absolute floor
    (exact invariance).
    """

    epsilons: np.ndarray
    subintervals: list[tuple[float, float]]
    levels: np.ndarray
    deltas: np.ndarray
    slopes: np.ndarray
    exact: np.ndarray  # bool, defects below floor everywhere
    invariant: bool
    failures: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    slope_threshold: float = SLOPE_THRESHOLD - SLOPE_TOL
    floor: float = DELTA_FLOOR

    def min_slope(self) -> float:
        finite = self.slopes[np.isfinite(self.slopes)]
        return float(finite.min()) if finite.size else float("inf")


def check_invariance(
    problem: VariationalProblem,
    generator: SymmetryGenerator,
    trajectory: Extremal,
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    subintervals: Optional[Sequence[tuple[float, float]]] = None,
    slope_tol: float = SLOPE_TOL,
    floor: float = DELTA_FLOOR,
) -> InvarianceReport:
    """Compare the cost along a trajectory with its transformed value.

    For each group parameter eps the transformed cost is integrated by
    substitution over the original nodes (integrand times dxhat/dx, with
    velocities rescaled by 1/(dxhat/dx)); the defect of a symmetry decays
    like eps^2, so the fitted log-log slope must reach 2 - slope_tol unless
    every defect already sits below the absolute floor.
    """
    eps = np.asarray(list(epsilons), dtype=np.float64)
    if eps.size < 2 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("epsilons must be at least two positive, strictly decreasing values")
    if problem.is_delayed:
        if generator.tau is not None:
            raise UnsupportedProblemError(
                "no invariance notion combines a delay with a time transformation"
            )
        _check_history_vanishing(problem, generator)

    xs = problem.xs
    nlev = len(problem.grid)
    n = xs.size
    if subintervals is None:
        mid = 0.5 * (problem.a + problem.b)
        subintervals = [(problem.a, problem.b), (problem.a, mid), (mid, problem.b)]
    spans = []
    for ta, tb in subintervals:
        i0 = int(np.argmin(np.abs(xs - ta)))
        i1 = int(np.argmin(np.abs(xs - tb)))
        if i1 - i0 < 2:
            raise ValueError(f"subinterval [{ta}, {tb}] covers fewer than 3 nodes")
        spans.append((i0, i1))

    flat = _flat_bindings(xs, trajectory)
    lg = problem.lagrangian
    base = [
        _eval_levelwise(lg.lower, flat, nlev, n, "L_lower", xs),
        _eval_levelwise(lg.upper, flat, nlev, n, "L_upper", xs),
    ]
    zl = _values(generator.zeta_lower, flat, nlev, n)
    zu = _values(generator.zeta_upper, flat, nlev, n)
    zl_dot = _total_derivative(generator.zeta_lower, flat, nlev, n, trajectory.v_lower, trajectory.v_upper)
    zu_dot = _total_derivative(generator.zeta_upper, flat, nlev, n, trajectory.v_lower, trajectory.v_upper)
    if generator.tau is not None:
        tau_vals = _values(generator.tau, flat, nlev, n)
        tau_dot = _total_derivative(generator.tau, flat, nlev, n, trajectory.v_lower, trajectory.v_upper)
    else:
        tau_vals = tau_dot = None
    if problem.is_delayed:
        k = problem.delay_steps
        zl_dot_shift = np.zeros_like(zl_dot)
        zu_dot_shift = np.zeros_like(zu_dot)
        zl_dot_shift[:, k:] = zl_dot[:, : n - k]
        zu_dot_shift[:, k:] = zu_dot[:, : n - k]

    deltas = np.full((nlev, len(spans), eps.size, 2), np.nan)
    skipped: list[str] = []
    monotone_ok = np.ones((nlev, eps.size), dtype=bool)

    for ei, e in enumerate(eps):
        if tau_vals is not None:
            xhat = xs[None, :] + e * tau_vals
            dxhat = 1.0 + e * tau_dot
            bad_levels = np.nonzero(np.any(dxhat <= 0.0, axis=1))[0]
            for li in bad_levels:
                monotone_ok[li, ei] = False
                skipped.append(
                    f"eps={e:g} level r={problem.grid.levels[li]:g}: "
                    "transformation not monotone (dxhat/dx <= 0)"
                )
        else:
            xhat = np.broadcast_to(xs, (nlev, n))
            dxhat = np.ones((nlev, n))
        qhat_l = trajectory.q_lower + e * zl
        qhat_u = trajectory.q_upper + e * zu
        vhat_l = (trajectory.v_lower + e * zl_dot) / dxhat
        vhat_u = (trajectory.v_upper + e * zu_dot) / dxhat
        flat_hat = np.zeros((len(ex.VARIABLES), nlev * n))
        flat_hat[0] = xhat.ravel()
        flat_hat[1] = qhat_l.ravel()
        flat_hat[2] = qhat_u.ravel()
        flat_hat[3] = vhat_l.ravel()
        flat_hat[4] = vhat_u.ravel()
        if problem.is_delayed:
            flat_hat[5] = (trajectory.w_lower + e * zl_dot_shift).ravel()
            flat_hat[6] = (trajectory.w_upper + e * zu_dot_shift).ravel()
        for side, expr in ((0, lg.lower), (1, lg.upper)):
            integrand = _values(expr, flat_hat, nlev, n) * dxhat
            for si, (i0, i1) in enumerate(spans):
                sl = slice(i0, i1 + 1)
                lhs = trapezoid(base[side][:, sl], xs[sl], axis=1)
                rhs = trapezoid(integrand[:, sl], xs[sl], axis=1)
                deltas[:, si, ei, side] = np.abs(lhs - rhs)

    slopes = np.full((nlev, len(spans), 2), np.nan)
    exact = np.zeros((nlev, len(spans), 2), dtype=bool)
    failures: list[str] = []
    threshold = SLOPE_THRESHOLD - slope_tol
    log_eps = np.log(eps)
    for li in range(nlev):
        usable = monotone_ok[li]
        for si, (i0, i1) in enumerate(spans):
            for side, side_name in ((0, "lower"), (1, "upper")):
                d = deltas[li, si, :, side]
                mask = usable & (d > floor)
                if not np.any(mask):
                    exact[li, si, side] = True
                    continue
                if np.count_nonzero(mask) < 2:
                    failures.append(
                        f"level r={problem.grid.levels[li]:g} "
                        f"interval [{xs[i0]:g}, {xs[i1]:g}] {side_name}: "
                        "too few usable defects for a slope fit"
                    )
                    continue
                slope = float(np.polyfit(log_eps[mask], np.log(d[mask]), 1)[0])
                slopes[li, si, side] = slope
                if slope < threshold:
                    failures.append(
                        f"level r={problem.grid.levels[li]:g} "
                        f"interval [{xs[i0]:g}, {xs[i1]:g}] {side_name}: "
                        f"defect slope {slope:.3f} below {threshold:.2f}"
                    )
    return InvarianceReport(
        epsilons=eps,
        subintervals=[(float(xs[i0]), float(xs[i1])) for i0, i1 in spans],
        levels=problem.grid.levels,
        deltas=deltas,
        slopes=slopes,
        exact=exact,
        invariant=not failures,
        failures=failures,
        skipped=skipped,
        slope_threshold=threshold,
        floor=floor,
    )


# ---------------------------------------------------------------------------
# necessary condition of invariance (no time transformation)
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InvarianceResidualReport:
    """Pointwise residual pair of the invariance identity along a trajectory."""

    xs: np.ndarray
    levels: np.ndarray
    lower: np.ndarray  # (levels, nodes)
    upper: np.ndarray

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.lower)), np.max(np.abs(self.upper))))


@dataclass(frozen=True, eq=False)
class DelayedInvarianceResidualReport:
    split_index: int
    early: InvarianceResidualReport
    late: InvarianceResidualReport


def invariance_residual(
    problem: VariationalProblem,
    trajectory: Extremal,
    generator: SymmetryGenerator,
):
    """Evaluate the first-order invariance identity nodewise.

    Requires a generator without time transformation.  The zeta rates are
    total derivatives along the trajectory.  Delayed problems gain the
    advanced slot-6/7 terms on the early region.
    """
    if generator.tau is not None:
        raise GeneratorError(
            "the pointwise identity applies to generators without a time "
            "transformation; use check_invariance for the general case"
        )
    if problem.is_delayed:
        _check_history_vanishing(problem, generator)
    lg = problem.lagrangian
    xs = problem.xs
    nlev = len(problem.grid)
    n = xs.size
    flat = _flat_bindings(xs, trajectory)

    zl = _values(generator.zeta_lower, flat, nlev, n)
    zu = _values(generator.zeta_upper, flat, nlev, n)
    zl_dot = _total_derivative(generator.zeta_lower, flat, nlev, n, trajectory.v_lower, trajectory.v_upper)
    zu_dot = _total_derivative(generator.zeta_upper, flat, nlev, n, trajectory.v_lower, trajectory.v_upper)

    def side_residual(which: str) -> np.ndarray:
        total = np.zeros((nlev, n))
        for slot, factor in ((2, zl), (3, zu), (4, zl_dot), (5, zu_dot)):
            e = lg.partial(which, slot)
            if not _is_zero(e):
                total += _eval_levelwise(e, flat, nlev, n, f"d{slot} L_{which}", xs) * factor
        return total

    lower = side_residual("lower")
    upper = side_residual("upper")
    levels = problem.grid.levels
    if not problem.is_delayed:
        return InvarianceResidualReport(xs, levels, lower, upper)

    s = problem.split_index
    k = problem.delay_steps
    early_lower = lower[:, : s + 1].copy()
    early_upper = upper[:, : s + 1].copy()
    for which, target in (("lower", early_lower), ("upper", early_upper)):
        for slot, factor in ((6, zl_dot), (7, zu_dot)):
            e = lg.partial(which, slot)
            if not _is_zero(e):
                adv = _eval_levelwise(e, flat, nlev, n, f"d{slot} L_{which}", xs)[:, k:]
                target += adv * factor[:, : s + 1]
    return DelayedInvarianceResidualReport(
        split_index=s,
        early=InvarianceResidualReport(xs[: s + 1], levels, early_lower, early_upper),
        late=InvarianceResidualReport(xs[s:], levels, lower[:, s:], upper[:, s:]),
    )


# ---------------------------------------------------------------------------
# conserved quantities
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ConservedSegment:
    """One contiguous node range with its conserved-quantity samples."""

    label: str
    xs: np.ndarray
    c_lower: np.ndarray  # (levels, nodes)
    c_upper: np.ndarray
    drift_lower: np.ndarray  # per level: max |dC/dx|
    drift_upper: np.ndarray
    dev_lower: np.ndarray  # per level: max |C - mean C|
    dev_upper: np.ndarray
    mean_lower: np.ndarray
    mean_upper: np.ndarray


@dataclass(eq=False)
class ConservationReport:
    """Conserved-quantity samples and their deviation statistics.

    verdict is true when, on every segment, level, and side, the drift
    max |dC/dx| stays within tol_cons and the deviation from the mean stays
    within tol_span relative to max(1, |mean|).
    """

    levels: np.ndarray
    segments: list[ConservedSegment]
    tol_cons: float
    tol_span: float
    max_drift: float
    max_rel_span: float
    verdict: bool
    worst: tuple[int, int, int, str, float]  # (segment, level, node, side, |dC/dx|)

    def nodewise(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Single per-node arrays; at a regime split the late segment wins."""
        if len(self.segments) == 1:
            seg = self.segments[0]
            return seg.xs, seg.c_lower, seg.c_upper
        early, late = self.segments
        xs = np.concatenate([early.xs[:-1], late.xs])
        c_lower = np.concatenate([early.c_lower[:, :-1], late.c_lower], axis=1)
        c_upper = np.concatenate([early.c_upper[:, :-1], late.c_upper], axis=1)
        return xs, c_lower, c_upper


@dataclass(frozen=True)
class ConservationVerdict:
    ok: bool
    segment: str
    level: float
    level_index: int
    node_index: int
    x: float
    side: str
    drift: float


def _segment(label, xs, c_lower, c_upper) -> ConservedSegment:
    d_lower = _accel.gradient(c_lower, xs)
    d_upper = _accel.gradient(c_upper, xs)
    return ConservedSegment(
        label=label,
        xs=xs,
        c_lower=c_lower,
        c_upper=c_upper,
        drift_lower=np.max(np.abs(d_lower), axis=1),
        drift_upper=np.max(np.abs(d_upper), axis=1),
        dev_lower=np.max(np.abs(c_lower - c_lower.mean(axis=1, keepdims=True)), axis=1),
        dev_upper=np.max(np.abs(c_upper - c_upper.mean(axis=1, keepdims=True)), axis=1),
        mean_lower=c_lower.mean(axis=1),
        mean_upper=c_upper.mean(axis=1),
    )


def _analyze(levels, segments, tol_cons, tol_span) -> ConservationReport:
    max_drift = 0.0
    max_rel_span = 0.0
    worst = (0, 0, 0, "lower", 0.0)
    for si, seg in enumerate(segments):
        for side in ("lower", "upper"):
            c = getattr(seg, f"c_{side}")
            drift = np.abs(_accel.gradient(c, seg.xs))
            li, node = np.unravel_index(int(np.argmax(drift)), drift.shape)
            if drift[li, node] >= max_drift:
                max_drift = float(drift[li, node])
                worst = (si, int(li), int(node), side, max_drift)
            dev = getattr(seg, f"dev_{side}")
            mean = getattr(seg, f"mean_{side}")
            rel = dev / np.maximum(1.0, np.abs(mean))
            max_rel_span = max(max_rel_span, float(np.max(rel)))
    return ConservationReport(
        levels=levels,
        segments=segments,
        tol_cons=tol_cons,
        tol_span=tol_span,
        max_drift=max_drift,
        max_rel_span=max_rel_span,
        verdict=(max_drift <= tol_cons) and (max_rel_span <= tol_span),
        worst=worst,
    )


def conserved_quantity(
    problem: VariationalProblem,
    generator: SymmetryGenerator,
    extremal: Extremal,
    delayed_upper: str = "symmetric",
    tol_cons: float = TOL_CONS,
    tol_span: float = TOL_SPAN,
) -> ConservationReport:
    """Evaluate the first integral matching the problem/generator class.

    Without a time transformation: C = d4L*zeta_l + d5L*zeta_u per side.
    With tau: adds (L - d4L*vl - d5L*vu)*tau.  Delayed problems (tau must
    be absent) add the advanced slot terms on the early region; the upper
    bound's advanced pairing follows ``delayed_upper``: "symmetric"
    multiplies d6 L_upper by zeta_lower like the lower bound does,
    "literal" multiplies it by zeta_upper.
    """
    if problem.is_delayed and generator.tau is not None:
        raise UnsupportedProblemError(
            "no conserved-quantity formula combines a delay with a time transformation"
        )
    if delayed_upper not in ("symmetric", "literal"):
        raise ValueError("delayed_upper must be 'symmetric' or 'literal'")
    if problem.is_delayed:
        _check_history_vanishing(problem, generator)

    lg = problem.lagrangian
    xs = problem.xs
    nlev = len(problem.grid)
    n = xs.size
    flat = _flat_bindings(xs, extremal)
    zl = _values(generator.zeta_lower, flat, nlev, n)
    zu = _values(generator.zeta_upper, flat, nlev, n)

    partials = {}
    for which in ("lower", "upper"):
        for slot in (4, 5, 6, 7):
            e = lg.partial(which, slot)
            partials[(which, slot)] = (
                None
                if _is_zero(e)
                else _eval_levelwise(e, flat, nlev, n, f"d{slot} L_{which}", xs)
            )

    def momentum_terms(which: str) -> np.ndarray:
        total = np.zeros((nlev, n))
        for slot, factor in ((4, zl), (5, zu)):
            p = partials[(which, slot)]
            if p is not None:
                total += p * factor
        return total

    c_lower = momentum_terms("lower")
    c_upper = momentum_terms("upper")

    if generator.tau is not None:
        tau_vals = _values(generator.tau, flat, nlev, n)
        for which, c in (("lower", c_lower), ("upper", c_upper)):
            lval = _eval_levelwise(lg.side(which), flat, nlev, n, f"L_{which}", xs)
            energy = lval.copy()
            p4 = partials[(which, 4)]
            p5 = partials[(which, 5)]
            if p4 is not None:
                energy -= p4 * extremal.v_lower
            if p5 is not None:
                energy -= p5 * extremal.v_upper
            c += energy * tau_vals

    levels = problem.grid.levels
    if not problem.is_delayed:
        segments = [_segment("", xs, c_lower, c_upper)]
        return _analyze(levels, segments, tol_cons, tol_span)

    s = problem.split_index
    k = problem.delay_steps
    early_lower = c_lower[:, : s + 1].copy()
    early_upper = c_upper[:, : s + 1].copy()
    head = slice(None, s + 1)
    # lower bound advanced pairing: d6 with zeta_lower, d7 with zeta_upper
    for slot, factor in ((6, zl), (7, zu)):
        p = partials[("lower", slot)]
        if p is not None:
            early_lower += p[:, k:] * factor[:, head]
    upper_pair_6 = zl if delayed_upper == "symmetric" else zu
    for slot, factor in ((6, upper_pair_6), (7, zu)):
        p = partials[("upper", slot)]
        if p is not None:
            early_upper += p[:, k:] * factor[:, head]
    segments = [
        _segment("pre-split", xs[: s + 1], early_lower, early_upper),
        _segment("post-split", xs[s:], c_lower[:, s:], c_upper[:, s:]),
    ]
    return _analyze(levels, segments, tol_cons, tol_span)


def conservation_check(report: ConservationReport) -> ConservationVerdict:
    """Summarize a report into a verdict plus the worst-offender location."""
    si, li, node, side, drift = report.worst
    seg = report.segments[si]
    return ConservationVerdict(
        ok=report.verdict,
        segment=seg.label,
        level=float(report.levels[li]),
        level_index=li,
        node_index=node,
        x=float(seg.xs[node]),
        side=side,
        drift=drift,
    )
