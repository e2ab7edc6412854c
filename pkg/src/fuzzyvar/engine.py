"""Fuzzy variational problems, Euler-Lagrange residuals, and extremal solving.

The integrand of a problem is a pair of endpoint functions
L_lower, L_upper of the arguments (x, ql, qu, vl, vu[, wl, wu]); argument
slots are numbered 1..7 in that order, and partial derivatives with
respect to slots 2..7 are generated symbolically.  The stationarity
system couples four residual equations

    R1 = d2 L_lower - d/dx d4 L_lower      R2 = d3 L_lower - d/dx d5 L_lower
    R3 = d2 L_upper - d/dx d4 L_upper      R4 = d3 L_upper - d/dx d5 L_upper

per membership level - four equations for the two unknown endpoint
functions, generally overdetermined - so extremals are computed in
least-squares collocation form by damped Gauss-Newton, and diagnostics
report whether the four families are simultaneously consistent.

Delayed problems add advanced terms d/dx d6L[x+lag], d/dx d7L[x+lag] on
the early region [a, b-lag]; only residual evaluation is supported there,
not solving.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.linalg import spsolve

from . import _accel
from . import expressions as ex
from .calculus import derivative_matrix
from .levels import TOL_EQ, FuzzyNumber, LevelGrid, validate

# argument slot number -> variable name of the expression alphabet
ARG_NAMES = {2: "ql", 3: "qu", 4: "vl", 5: "vu", 6: "wl", 7: "wu"}

MAX_ITER = 100
CONSISTENCY_REL_TOL = 1e-6  # tol_consistent = 1e-6 * (1 + integrand scale)


class UnsupportedProblemError(ValueError):
    """Requested operation is outside the supported problem class."""


class DomainEvaluationError(ValueError):
    """An integrand or partial hit an invalid operand at some node."""


@lru_cache(maxsize=None)
def _partial(expr: ex.Expression, slot: int) -> ex.Expression:
    return ex.fold(ex.differentiate(expr, ARG_NAMES[slot]))


@lru_cache(maxsize=None)
def _second_partial(expr: ex.Expression, slot: int, by: str) -> ex.Expression:
    return ex.fold(ex.differentiate(_partial(expr, slot), by))


def _is_zero(e: ex.Expression) -> bool:
    return isinstance(e, ex.Const) and e.value == 0.0


@dataclass(frozen=True, eq=False)
class LagrangianSpec:
    """Endpoint integrand pair with symbolically generated slot partials."""

    lower: ex.Expression
    upper: ex.Expression
    delayed: bool

    @classmethod
    def from_expressions(
        cls,
        lower: ex.Expression,
        upper: ex.Expression,
        delayed: Optional[bool] = None,
    ) -> "LagrangianSpec":
        used = ex.variables_of(lower) | ex.variables_of(upper)
        has_delay_vars = bool(used & {"wl", "wu"})
        if delayed is None:
            delayed = has_delay_vars
        elif not delayed and has_delay_vars:
            raise ValueError("delayed velocities wl/wu appear in a non-delayed integrand")
        return cls(ex.fold(lower), ex.fold(upper), delayed)

    def side(self, which: str) -> ex.Expression:
        return self.lower if which == "lower" else self.upper

    def partial(self, which: str, slot: int) -> ex.Expression:
        """Partial derivative with respect to argument slot 2..7."""
        return _partial(self.side(which), slot)

    def second_partial(self, which: str, slot: int, by: str) -> ex.Expression:
        return _second_partial(self.side(which), slot, by)


@dataclass(frozen=True)
class DelaySpec:
    """Constant lag with interval-valued history on [a - lag, a]."""

    lag: float
    history_lower: ex.Expression  # functions of x only
    history_upper: ex.Expression

    def __post_init__(self):
        for e in (self.history_lower, self.history_upper):
            extra = ex.variables_of(e) - {"x"}
            if extra:
                raise ValueError(f"history expressions may only use x, got {sorted(extra)}")

    def history_at(self, x: float) -> tuple[float, float]:
        return (
            ex.evaluate(self.history_lower, {"x": x}),
            ex.evaluate(self.history_upper, {"x": x}),
        )


class VariationalProblem:
    """Boundary-value problem for the fuzzy stationarity system."""

    __slots__ = ("a", "b", "grid", "xs", "lagrangian", "bc_a", "bc_b", "delay", "delay_steps")

    def __init__(
        self,
        a: float,
        b: float,
        grid: LevelGrid,
        xs,
        lagrangian: LagrangianSpec,
        bc_a: FuzzyNumber,
        bc_b: FuzzyNumber,
        delay: Optional[DelaySpec] = None,
    ):
        if not a < b:
            raise ValueError("need a < b")
        xs = np.asarray(xs, dtype=np.float64).copy()
        if xs.ndim != 1 or xs.size < 3 or not np.all(np.diff(xs) > 0):
            raise ValueError("collocation nodes must be strictly increasing, >= 3")
        scale = 1.0 + max(abs(a), abs(b))
        if abs(xs[0] - a) > 1e-12 * scale or abs(xs[-1] - b) > 1e-12 * scale:
            raise ValueError("nodes must span exactly [a, b]")
        if bc_a.grid != grid or bc_b.grid != grid:
            raise ValueError("boundary values must live on the problem grid")
        if lagrangian.delayed and delay is None:
            raise ValueError("integrand uses delayed velocities but no delay block given")

        delay_steps = 0
        if delay is not None:
            if not 0.0 < delay.lag < b - a:
                raise ValueError("delay lag must lie strictly inside (0, b - a)")
            h = (b - a) / (xs.size - 1)
            if np.max(np.abs(np.diff(xs) - h)) > 1e-9 * h:
                raise ValueError("delayed problems need uniform collocation nodes")
            k = delay.lag / h
            delay_steps = int(round(k))
            if abs(k - delay_steps) > 1e-6 or not 2 <= delay_steps <= xs.size - 3:
                raise ValueError(
                    "delay lag must be an integer number of steps, at least 2 "
                    "nodes from either end"
                )
            psi_l, psi_u = delay.history_at(a)
            if (
                np.max(np.abs(bc_a.lower - psi_l)) > TOL_EQ
                or np.max(np.abs(bc_a.upper - psi_u)) > TOL_EQ
            ):
                raise ValueError("history must match the left boundary value at x = a")

        object.__setattr__(self, "a", float(a))
        object.__setattr__(self, "b", float(b))
        object.__setattr__(self, "grid", grid)
        xs.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "lagrangian", lagrangian)
        object.__setattr__(self, "bc_a", bc_a)
        object.__setattr__(self, "bc_b", bc_b)
        object.__setattr__(self, "delay", delay)
        object.__setattr__(self, "delay_steps", delay_steps)

    def __setattr__(self, name, value):
        raise AttributeError("VariationalProblem is immutable")

    @property
    def is_delayed(self) -> bool:
        return self.delay is not None

    @property
    def split_index(self) -> int:
        """Node index of x = b - lag, the boundary between the two regimes."""
        if self.delay is None:
            raise UnsupportedProblemError("problem has no delay")
        return self.xs.size - 1 - self.delay_steps


def uniform_nodes(a: float, b: float, intervals: int) -> np.ndarray:
    """The default collocation grid: intervals+1 equispaced nodes on [a, b]."""
    if intervals < 2:
        raise ValueError("need at least 2 intervals")
    return np.linspace(a, b, intervals + 1)


class Extremal:
    """Per-level endpoint trajectories with derived velocities.

    Arrays are level-major with shape (levels, nodes).  For delayed
    problems, w holds the velocity at x - lag: taken from the trajectory
    where x - lag >= a and from the differentiated history before that.
    """

    __slots__ = ("grid", "xs", "q_lower", "q_upper", "v_lower", "v_upper", "w_lower", "w_upper")

    def __init__(self, grid, xs, q_lower, q_upper, v_lower, v_upper, w_lower=None, w_upper=None):
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "xs", np.asarray(xs, dtype=np.float64))
        object.__setattr__(self, "q_lower", np.asarray(q_lower, dtype=np.float64))
        object.__setattr__(self, "q_upper", np.asarray(q_upper, dtype=np.float64))
        object.__setattr__(self, "v_lower", np.asarray(v_lower, dtype=np.float64))
        object.__setattr__(self, "v_upper", np.asarray(v_upper, dtype=np.float64))
        object.__setattr__(self, "w_lower", w_lower)
        object.__setattr__(self, "w_upper", w_upper)

    def __setattr__(self, name, value):
        raise AttributeError("Extremal is immutable")

    @classmethod
    def build(cls, problem: VariationalProblem, q_lower, q_upper) -> "Extremal":
        """Derive velocities (and delayed velocities) from node values."""
        xs = problem.xs
        q_lower = np.asarray(q_lower, dtype=np.float64)
        q_upper = np.asarray(q_upper, dtype=np.float64)
        v_lower = _accel.gradient(q_lower, xs)
        v_upper = _accel.gradient(q_upper, xs)
        w_lower = w_upper = None
        if problem.is_delayed:
            k = problem.delay_steps
            lag = problem.delay.lag
            w_lower = np.empty_like(v_lower)
            w_upper = np.empty_like(v_upper)
            w_lower[:, k:] = v_lower[:, : xs.size - k]
            w_upper[:, k:] = v_upper[:, : xs.size - k]
            dpsi_l = ex.fold(ex.differentiate(problem.delay.history_lower, "x"))
            dpsi_u = ex.fold(ex.differentiate(problem.delay.history_upper, "x"))
            for i in range(k):
                x_shift = xs[i] - lag
                w_lower[:, i] = ex.evaluate(dpsi_l, {"x": x_shift})
                w_upper[:, i] = ex.evaluate(dpsi_u, {"x": x_shift})
        return cls(problem.grid, xs, q_lower, q_upper, v_lower, v_upper, w_lower, w_upper)

    @classmethod
    def from_level_functions(cls, problem: VariationalProblem, lower_fn, upper_fn) -> "Extremal":
        """Sample lower_fn(r, xs) / upper_fn(r, xs) per level, then derive velocities."""
        xs = problem.xs
        q_lower = np.stack(
            [np.broadcast_to(lower_fn(r, xs), xs.shape) for r in problem.grid.levels]
        )
        q_upper = np.stack(
            [np.broadcast_to(upper_fn(r, xs), xs.shape) for r in problem.grid.levels]
        )
        return cls.build(problem, q_lower, q_upper)

    def validity(self) -> tuple[bool, Optional[str]]:
        """Do the node values form valid level families at every node?"""
        for j in range(self.xs.size):
            result = validate(self.q_lower[:, j], self.q_upper[:, j], self.grid)
            if not result:
                return False, f"node {j} (x={self.xs[j]:.6g}): {result.condition}"
        return True, None


# ---------------------------------------------------------------------------
# nodewise evaluation
# ---------------------------------------------------------------------------


def _flat_bindings(xs, extremal: Extremal) -> np.ndarray:
    """(7, levels*nodes) binding matrix for level-batched program evaluation."""
    nlev = extremal.q_lower.shape[0]
    n = xs.size
    out = np.zeros((len(ex.VARIABLES), nlev * n))
    out[0] = np.tile(xs, nlev)
    out[1] = extremal.q_lower.ravel()
    out[2] = extremal.q_upper.ravel()
    out[3] = extremal.v_lower.ravel()
    out[4] = extremal.v_upper.ravel()
    if extremal.w_lower is not None:
        out[5] = extremal.w_lower.ravel()
        out[6] = extremal.w_upper.ravel()
    return out


def _eval_levelwise(expr: ex.Expression, flat: np.ndarray, nlev: int, n: int, what: str, xs) -> np.ndarray:
    values = ex.compile_program(expr)(flat).reshape(nlev, n)
    if not np.all(np.isfinite(values)):
        li, j = np.argwhere(~np.isfinite(values))[0]
        raise DomainEvaluationError(
            f"{what} is not finite at node {j} (x={xs[j]:.6g}, level index {li}): "
            f"{ex.to_text(expr)}"
        )
    return values


@dataclass(frozen=True, eq=False)
class ResidualReport:
    """The four stationarity residual families on a node range."""

    xs: np.ndarray
    levels: np.ndarray
    r1: np.ndarray  # (levels, nodes) each
    r2: np.ndarray
    r3: np.ndarray
    r4: np.ndarray

    def max_abs(self, margin: int = 1) -> dict[str, float]:
        """Per-family max |residual| over nodes [margin, n - margin).

        margin=1 is the collocation interior.  Pointwise consistency
        statements on sampled trajectories want margin=2: at the node next
        to each boundary the d/dx stencil consumes the boundary's one-sided
        velocity, which degrades the local truncation order there.
        """
        sl = slice(margin, -margin) if margin else slice(None)
        return {
            name: float(np.max(np.abs(arr[:, sl])))
            for name, arr in (("r1", self.r1), ("r2", self.r2), ("r3", self.r3), ("r4", self.r4))
        }

    def max_residual(self, margin: int = 1) -> float:
        return max(self.max_abs(margin).values())


@dataclass(frozen=True, eq=False)
class DelayedResidualReport:
    """Residuals of the two delay regimes, split at node x = b - lag."""

    split_index: int
    early: ResidualReport  # nodes [a, b - lag]
    late: ResidualReport  # nodes [b - lag, b]


def _plain_residual_arrays(problem: VariationalProblem, extremal: Extremal):
    lg = problem.lagrangian
    xs = problem.xs
    nlev = len(problem.grid)
    n = xs.size
    flat = _flat_bindings(xs, extremal)

    def part(which, slot):
        return _eval_levelwise(
            lg.partial(which, slot), flat, nlev, n, f"d{slot} L_{which}", xs
        )

    residuals = []
    for which, state_slot, vel_slot in (
        ("lower", 2, 4),
        ("lower", 3, 5),
        ("upper", 2, 4),
        ("upper", 3, 5),
    ):
        p_state = part(which, state_slot)
        p_vel = part(which, vel_slot)
        residuals.append(p_state - _accel.gradient(p_vel, xs))
    return residuals, flat


def el_residual(problem: VariationalProblem, extremal: Extremal) -> ResidualReport:
    """Stationarity residuals of a non-delayed problem at every node.

    The d/dx terms use the shared difference stencils (one-sided at the
    interval ends); the interior nodes are the collocation residuals.
    """
    if problem.is_delayed:
        raise UnsupportedProblemError("problem is delayed; use delayed_el_residual")
    residuals, _ = _plain_residual_arrays(problem, extremal)
    return ResidualReport(problem.xs, problem.grid.levels, *residuals)


def delayed_el_residual(problem: VariationalProblem, extremal: Extremal) -> DelayedResidualReport:
    """Two-regime stationarity residuals of a delayed problem.

    On [a, b-lag] the velocity partials gain advanced companions: the slot-6
    and slot-7 partials evaluated at x + lag with that point's own state,
    differentiated along the early region.  On [b-lag, b] the residuals
    coincide with the plain ones.
    """
    if not problem.is_delayed:
        raise UnsupportedProblemError("problem has no delay; use el_residual")
    if extremal.w_lower is None:
        raise ValueError("extremal carries no delayed velocities; build it from the problem")
    lg = problem.lagrangian
    xs = problem.xs
    nlev = len(problem.grid)
    n = xs.size
    s = problem.split_index
    k = problem.delay_steps

    plain, flat = _plain_residual_arrays(problem, extremal)
    xs_early = xs[: s + 1]
    xs_late = xs[s:]
    early = []
    late = []
    for fam, (which, adv_slot) in enumerate(
        (("lower", 6), ("lower", 7), ("upper", 6), ("upper", 7))
    ):
        adv_expr = lg.partial(which, adv_slot)
        r_early = plain[fam][:, : s + 1].copy()
        if not _is_zero(adv_expr):
            p_adv = _eval_levelwise(adv_expr, flat, nlev, n, f"d{adv_slot} L_{which}", xs)
            advanced = p_adv[:, k:]  # value at x + lag, aligned to nodes 0..s
            r_early -= _accel.gradient(advanced, xs_early)
        early.append(r_early)
        late.append(plain[fam][:, s:])
    levels = problem.grid.levels
    return DelayedResidualReport(
        split_index=s,
        early=ResidualReport(xs_early, levels, *early),
        late=ResidualReport(xs_late, levels, *late),
    )


# ---------------------------------------------------------------------------
# extremal solving (least-squares collocation, damped Gauss-Newton)
# ---------------------------------------------------------------------------


@dataclass
class LevelSolveInfo:
    level: float
    iterations: int
    converged: bool
    residual_norms: dict[str, float]
    max_residual: float
    tol_consistent: float
    consistent: bool
    message: str = ""


@dataclass
class SolveDiagnostics:
    levels: list[LevelSolveInfo]
    converged: bool
    consistent: bool
    fuzzy_valid: bool
    fuzzy_violation: Optional[str]

    def summary(self) -> str:
        worst = max(info.max_residual for info in self.levels)
        return (
            f"converged={self.converged} consistent={self.consistent} "
            f"fuzzy_valid={self.fuzzy_valid} max_residual={worst:.3e}"
        )


_FAMILIES = (
    ("lower", 2, 4),
    ("lower", 3, 5),
    ("upper", 2, 4),
    ("upper", 3, 5),
)
# unknown blocks: (state variable, velocity variable) per endpoint family
_BLOCKS = (("ql", "vl"), ("qu", "vu"))


class _LevelSolver:
    """Gauss-Newton least squares for one membership level."""

    def __init__(self, problem: VariationalProblem, level_index: int):
        self.problem = problem
        self.xs = problem.xs
        self.n = problem.xs.size
        self.li = level_index
        self.qa = (problem.bc_a.lower[level_index], problem.bc_a.upper[level_index])
        self.qb = (problem.bc_b.lower[level_index], problem.bc_b.upper[level_index])
        self.G = derivative_matrix(problem.xs)
        lg = problem.lagrangian
        self.programs = {}
        for which, state_slot, vel_slot in _FAMILIES:
            for slot in (state_slot, vel_slot):
                e = lg.partial(which, slot)
                self.programs[(which, slot)] = None if _is_zero(e) else ex.compile_program(e)
        self.jac_programs = {}
        for which, state_slot, vel_slot in _FAMILIES:
            for slot in (state_slot, vel_slot):
                for by in ("ql", "qu", "vl", "vu"):
                    e = lg.second_partial(which, slot, by)
                    self.jac_programs[(which, slot, by)] = (
                        None if _is_zero(e) else ex.compile_program(e)
                    )
        self.l_programs = (ex.compile_program(lg.lower), ex.compile_program(lg.upper))

    def full_state(self, u: np.ndarray):
        n = self.n
        q_l = np.empty(n)
        q_u = np.empty(n)
        q_l[0], q_u[0] = self.qa
        q_l[-1], q_u[-1] = self.qb
        q_l[1:-1] = u[: n - 2]
        q_u[1:-1] = u[n - 2 :]
        v_l = _accel.gradient(q_l, self.xs)
        v_u = _accel.gradient(q_u, self.xs)
        B = np.zeros((len(ex.VARIABLES), n))
        B[0] = self.xs
        B[1] = q_l
        B[2] = q_u
        B[3] = v_l
        B[4] = v_u
        return B

    def residual(self, B: np.ndarray) -> Optional[np.ndarray]:
        """Stacked interior residuals; None when evaluation left the domain."""
        parts = []
        for which, state_slot, vel_slot in _FAMILIES:
            ps = self.programs[(which, state_slot)]
            pv = self.programs[(which, vel_slot)]
            p_state = ps(B) if ps is not None else np.zeros(self.n)
            dp_vel = (
                _accel.gradient(pv(B), self.xs) if pv is not None else np.zeros(self.n)
            )
            parts.append((p_state - dp_vel)[1:-1])
        r = np.concatenate(parts)
        return r if np.all(np.isfinite(r)) else None

    def jacobian(self, B: np.ndarray) -> sparse.csr_matrix:
        G = self.G
        m = self.n - 2
        blocks = []
        for which, state_slot, vel_slot in _FAMILIES:
            row = []
            for state_var, vel_var in _BLOCKS:
                terms = []
                pa_q = self.jac_programs[(which, state_slot, state_var)]
                pa_v = self.jac_programs[(which, state_slot, vel_var)]
                pb_q = self.jac_programs[(which, vel_slot, state_var)]
                pb_v = self.jac_programs[(which, vel_slot, vel_var)]
                if pa_q is not None:
                    terms.append(sparse.diags(pa_q(B)))
                if pa_v is not None:
                    terms.append(sparse.diags(pa_v(B)) @ G)
                if pb_q is not None:
                    terms.append(-(G @ sparse.diags(pb_q(B))))
                if pb_v is not None:
                    terms.append(-(G @ (sparse.diags(pb_v(B)) @ G)))
                if terms:
                    M = terms[0]
                    for t in terms[1:]:
                        M = M + t
                    row.append(M.tocsr()[1:-1, 1:-1])
                else:
                    row.append(sparse.csr_matrix((m, m)))
            blocks.append(row)
        return sparse.bmat(blocks, format="csr")

    def initial_guess(self) -> np.ndarray:
        t = (self.xs - self.xs[0]) / (self.xs[-1] - self.xs[0])
        q_l = self.qa[0] + (self.qb[0] - self.qa[0]) * t
        q_u = self.qa[1] + (self.qb[1] - self.qa[1]) * t
        return np.concatenate([q_l[1:-1], q_u[1:-1]])

    def solve(self, max_iter: int = MAX_ITER) -> tuple[np.ndarray, LevelSolveInfo]:
        u = self.initial_guess()
        B = self.full_state(u)
        r = self.residual(B)
        if r is None:
            raise DomainEvaluationError(
                f"integrand not evaluable on the initial guess at level index {self.li}"
            )
        norm2 = float(r @ r)
        converged = False
        message = ""
        iterations = 0
        for iterations in range(1, max_iter + 1):
            J = self.jacobian(B)
            JtJ = (J.T @ J).tocsc()
            rhs = -(J.T @ r)
            step = spsolve(JtJ, rhs)
            if not np.all(np.isfinite(step)):
                message = "singular normal equations"
                break
            # damping: halve the step while the residual norm would grow
            alpha = 1.0
            accepted = False
            while alpha >= 2.0 ** -40:
                u_new = u + alpha * step
                B_new = self.full_state(u_new)
                r_new = self.residual(B_new)
                if r_new is not None:
                    norm2_new = float(r_new @ r_new)
                    if norm2_new <= norm2 * (1.0 + 1e-14) or norm2_new < 1e-30:
                        accepted = True
                        break
                alpha *= 0.5
            if not accepted:
                message = "no residual decrease along the Gauss-Newton direction"
                break
            step_size = float(np.max(np.abs(alpha * step)))
            u, B, r, norm2 = u_new, B_new, r_new, norm2_new
            if step_size <= 1e-12 * (1.0 + float(np.max(np.abs(u)))):
                converged = True
                break
        if not converged and not message:
            message = f"no convergence within {max_iter} iterations"

        norms = {}
        m = self.n - 2
        for fam, name in enumerate(("r1", "r2", "r3", "r4")):
            norms[name] = float(np.max(np.abs(r[fam * m : (fam + 1) * m]))) if m else 0.0
        max_res = max(norms.values())
        l_scale = 0.0
        for prog in self.l_programs:
            vals = prog(B)
            if np.all(np.isfinite(vals)):
                l_scale = max(l_scale, float(np.max(np.abs(vals))))
        tol_cons = CONSISTENCY_REL_TOL * (1.0 + l_scale)
        info = LevelSolveInfo(
            level=float(self.problem.grid.levels[self.li]),
            iterations=iterations,
            converged=converged,
            residual_norms=norms,
            max_residual=max_res,
            tol_consistent=tol_cons,
            consistent=max_res <= tol_cons,
            message=message,
        )
        return u, info


def solve_extremal(
    problem: VariationalProblem, max_iter: int = MAX_ITER
) -> tuple[Extremal, SolveDiagnostics]:
    """Solve the stationarity system per level by damped Gauss-Newton.

    Each level is an independent least-squares collocation problem in the
    interior node values of (q_lower, q_upper), starting from the linear
    interpolant of the boundary data.  Boundary values are imposed exactly
    by construction.  Non-convergence is reported in the diagnostics, not
    raised; the last iterate is returned.
    """
    if problem.is_delayed:
        raise UnsupportedProblemError(
            "delayed problems support residual evaluation only, not solving"
        )
    nlev = len(problem.grid)
    n = problem.xs.size
    q_lower = np.empty((nlev, n))
    q_upper = np.empty((nlev, n))
    infos = []
    for li in range(nlev):
        solver = _LevelSolver(problem, li)
        u, info = solver.solve(max_iter=max_iter)
        q_lower[li, 0], q_upper[li, 0] = solver.qa
        q_lower[li, -1], q_upper[li, -1] = solver.qb
        q_lower[li, 1:-1] = u[: n - 2]
        q_upper[li, 1:-1] = u[n - 2 :]
        infos.append(info)
    extremal = Extremal.build(problem, q_lower, q_upper)
    ok, violation = extremal.validity()
    diagnostics = SolveDiagnostics(
        levels=infos,
        converged=all(i.converged for i in infos),
        consistent=all(i.consistent for i in infos),
        fuzzy_valid=ok,
        fuzzy_violation=violation,
    )
    return extremal, diagnostics
