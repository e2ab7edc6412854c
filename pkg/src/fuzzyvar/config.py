"""Line-oriented problem configuration files.

Sections [problem], [lagrangian], [boundary], [generator] are required;
[delay] and [tolerances] are optional.  Entries are "key = value", comments
start with '#', expressions use the expression-language syntax, and
boundary triangulars are comma triples "x,y,z".
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional

from . import expressions as ex
from . import noether
from .engine import DelaySpec, LagrangianSpec, VariationalProblem, uniform_nodes
from .levels import DEFAULT_LEVEL_COUNT, LevelGrid, triangular
from .noether import SymmetryGenerator


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


_SECTION_KEYS = {
    "problem": {"a", "b", "nodes", "levels"},
    "lagrangian": {"L_lower", "L_upper"},
    "boundary": {"q_a", "q_b"},
    "delay": {"tau_d", "psi_lower", "psi_upper"},
    "generator": {"tau", "zeta_lower", "zeta_upper"},
    "tolerances": {"tol_cons", "tol_span", "slope_tol"},
}
_REQUIRED_SECTIONS = ("problem", "lagrangian", "boundary", "generator")


@dataclass
class ProblemConfig:
    a: float
    b: float
    nodes: int
    levels: int
    l_lower: ex.Expression
    l_upper: ex.Expression
    q_a: tuple[float, float, float]
    q_b: tuple[float, float, float]
    zeta_lower: ex.Expression
    zeta_upper: ex.Expression
    tau: Optional[ex.Expression] = None
    tau_d: Optional[float] = None
    psi_lower: Optional[ex.Expression] = None
    psi_upper: Optional[ex.Expression] = None
    tol_cons: float = noether.TOL_CONS
    tol_span: float = noether.TOL_SPAN
    slope_tol: float = noether.SLOPE_TOL

    @property
    def is_delayed(self) -> bool:
        return self.tau_d is not None

    def build(self) -> tuple[VariationalProblem, SymmetryGenerator]:
        grid = LevelGrid.uniform(self.levels)
        xs = uniform_nodes(self.a, self.b, self.nodes)
        lagrangian = LagrangianSpec.from_expressions(self.l_lower, self.l_upper)
        delay = None
        if self.is_delayed:
            delay = DelaySpec(self.tau_d, self.psi_lower, self.psi_upper)
        problem = VariationalProblem(
            a=self.a,
            b=self.b,
            grid=grid,
            xs=xs,
            lagrangian=lagrangian,
            bc_a=triangular(*self.q_a, grid),
            bc_b=triangular(*self.q_b, grid),
            delay=delay,
        )
        generator = SymmetryGenerator(
            zeta_lower=self.zeta_lower, zeta_upper=self.zeta_upper, tau=self.tau
        )
        return problem, generator


def _parse_sections(text: str) -> dict[str, dict[str, tuple[str, int]]]:
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("malformed section header", lineno)
            name = line[1:-1].strip()
            if name not in _SECTION_KEYS:
                raise ConfigError(f"unknown section [{name}]", lineno)
            if name in sections:
                raise ConfigError(f"duplicate section [{name}]", lineno)
            sections[name] = {}
            current = name
            continue
        if current is None:
            raise ConfigError("entry outside any section", lineno)
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SECTION_KEYS[current]:
            raise ConfigError(f"unknown key {key!r} in section [{current}]", lineno)
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        sections[current][key] = (value, lineno)
    for name in _REQUIRED_SECTIONS:
        if name not in sections:
            raise ConfigError(f"missing required section [{name}]")
    return sections


def _take(sections, section, key, convert, required=True, default=None):
    entry = sections.get(section, {}).get(key)
    if entry is None:
        if required:
            raise ConfigError(f"missing key {key!r} in section [{section}]")
        return default
    value, lineno = entry
    try:
        return convert(value)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None


def _as_triple(value: str) -> tuple[float, float, float]:
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != 3:
        raise ValueError("expected three comma-separated numbers x,y,z")
    x, y, z = (float(p) for p in parts)
    if not (x <= y <= z):
        raise ValueError(f"triangular triple must be ordered, got ({x}, {y}, {z})")
    return (x, y, z)


def _as_expression(value: str) -> ex.Expression:
    return ex.parse(value)


def parse_config(text: str) -> ProblemConfig:
    """Parse configuration text; errors carry the offending line number."""
    sections = _parse_sections(text)
    a = _take(sections, "problem", "a", float)
    b = _take(sections, "problem", "b", float)
    if not a < b:
        raise ConfigError(f"need a < b, got a={a}, b={b}")
    nodes = _take(sections, "problem", "nodes", int)
    if nodes < 2:
        raise ConfigError("nodes must be at least 2")
    levels = _take(
        sections, "problem", "levels", int, required=False, default=DEFAULT_LEVEL_COUNT
    )
    if levels < 2:
        raise ConfigError("levels must be at least 2")

    cfg = ProblemConfig(
        a=a,
        b=b,
        nodes=nodes,
        levels=levels,
        l_lower=_take(sections, "lagrangian", "L_lower", _as_expression),
        l_upper=_take(sections, "lagrangian", "L_upper", _as_expression),
        q_a=_take(sections, "boundary", "q_a", _as_triple),
        q_b=_take(sections, "boundary", "q_b", _as_triple),
        zeta_lower=_take(sections, "generator", "zeta_lower", _as_expression),
        zeta_upper=_take(sections, "generator", "zeta_upper", _as_expression),
        tau=_take(sections, "generator", "tau", _as_expression, required=False),
        tol_cons=_take(sections, "tolerances", "tol_cons", float, required=False, default=noether.TOL_CONS),
        tol_span=_take(sections, "tolerances", "tol_span", float, required=False, default=noether.TOL_SPAN),
        slope_tol=_take(sections, "tolerances", "slope_tol", float, required=False, default=noether.SLOPE_TOL),
    )
    if "delay" in sections:
        cfg.tau_d = _take(sections, "delay", "tau_d", float)
        cfg.psi_lower = _take(sections, "delay", "psi_lower", _as_expression)
        cfg.psi_upper = _take(sections, "delay", "psi_upper", _as_expression)
        if not 0.0 < cfg.tau_d < b - a:
            raise ConfigError("tau_d must lie strictly inside (0, b - a)")
    return cfg


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def dump_config(cfg: ProblemConfig) -> str:
    """Canonical text form; re-parses to an equal ProblemConfig."""
    lines = [
        "[problem]",
        f"a = {_fmt(cfg.a)}",
        f"b = {_fmt(cfg.b)}",
        f"nodes = {cfg.nodes}",
        f"levels = {cfg.levels}",
        "",
        "[lagrangian]",
        f"L_lower = {ex.to_text(cfg.l_lower)}",
        f"L_upper = {ex.to_text(cfg.l_upper)}",
        "",
        "[boundary]",
        f"q_a = {','.join(_fmt(v) for v in cfg.q_a)}",
        f"q_b = {','.join(_fmt(v) for v in cfg.q_b)}",
    ]
    if cfg.is_delayed:
        lines += [
            "",
            "[delay]",
            f"tau_d = {_fmt(cfg.tau_d)}",
            f"psi_lower = {ex.to_text(cfg.psi_lower)}",
            f"psi_upper = {ex.to_text(cfg.psi_upper)}",
        ]
    lines += ["", "[generator]"]
    if cfg.tau is not None:
        lines.append(f"tau = {ex.to_text(cfg.tau)}")
    lines += [
        f"zeta_lower = {ex.to_text(cfg.zeta_lower)}",
        f"zeta_upper = {ex.to_text(cfg.zeta_upper)}",
        "",
        "[tolerances]",
        f"tol_cons = {_fmt(cfg.tol_cons)}",
        f"tol_span = {_fmt(cfg.tol_span)}",
        f"slope_tol = {_fmt(cfg.slope_tol)}",
    ]
    return "\n".join(lines) + "\n"
