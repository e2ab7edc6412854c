"""Level-set fuzzy arithmetic, fuzzy Euler-Lagrange solving, and
conserved-quantity verification."""

from ._accel import BACKEND
from .calculus import FuzzyTrajectory, GHKind, derivative_matrix, fuzzy_integral, gh_derivative
from .engine import (
    DelaySpec,
    Extremal,
    LagrangianSpec,
    ResidualReport,
    SolveDiagnostics,
    UnsupportedProblemError,
    VariationalProblem,
    delayed_el_residual,
    el_residual,
    solve_extremal,
    uniform_nodes,
)
from .expressions import Expression, evaluate, differentiate, parse, to_text
from .levels import (
    FuzzyNumber,
    LevelGrid,
    NonexistenceReport,
    OrderRelation,
    add,
    compare,
    crisp,
    fuzzy_zero,
    gh_difference,
    hausdorff,
    multiply,
    scalar_mul,
    triangular,
    validate,
)
from .noether import (
    ConservationReport,
    InvarianceReport,
    SymmetryGenerator,
    check_invariance,
    conservation_check,
    conserved_quantity,
    invariance_residual,
)

__version__ = "0.1.0"
