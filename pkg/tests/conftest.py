import numpy as np
import pytest

from fuzzyvar import LevelGrid, triangular
from fuzzyvar import expressions as ex
from fuzzyvar.engine import LagrangianSpec, VariationalProblem, uniform_nodes

E = float(np.e)


@pytest.fixture(scope="session")
def grid11():
    return LevelGrid.uniform(11)


@pytest.fixture(scope="session")
def log_lagrangian():
    """x-weighted squared velocity: extremals are A + B*ln(x)."""
    return LagrangianSpec.from_expressions(ex.parse("x*vl^2"), ex.parse("x*vu^2"))


def make_log_problem(grid, intervals, bc_a=None, bc_b=None):
    """The catalog problem on [1, e] at a chosen resolution."""
    lag = LagrangianSpec.from_expressions(ex.parse("x*vl^2"), ex.parse("x*vu^2"))
    if bc_a is None:
        bc_a = triangular(0.0, 1.0, 2.0, grid)
    if bc_b is None:
        bc_b = triangular(1.0, 2.0, 3.0, grid)
    xs = uniform_nodes(1.0, E, intervals)
    return VariationalProblem(1.0, E, grid, xs, lag, bc_a, bc_b)
