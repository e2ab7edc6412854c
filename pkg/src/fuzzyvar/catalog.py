"""Built-in problem catalog.

Each entry is a complete configuration text plus a one-line description
and optional notes that the run report reproduces.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import ProblemConfig, parse_config


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    config_text: str
    notes: str = ""


_PAPER_EXAMPLE = """\
[problem]
a = 1
b = 2.718281828459045
nodes = 2001
levels = 11

[lagrangian]
L_lower = x*vl^2
L_upper = x*vu^2

[boundary]
q_a = 0,1,2
q_b = 1,2,3

[generator]
tau = 2*x*ln(x)
zeta_lower = ql
zeta_upper = qu
"""

_FREE_PARTICLE = """\
[problem]
a = 0
b = 1
nodes = 400
levels = 11

[lagrangian]
L_lower = vl^2
L_upper = vu^2

[boundary]
q_a = -1,0,1
q_b = 0,1,2

[generator]
zeta_lower = 1
zeta_upper = 1
"""

_DELAYED_SMOKE = """\
[problem]
a = 0
b = 2
nodes = 400
levels = 11

[lagrangian]
L_lower = vl^2
L_upper = vu^2

[boundary]
q_a = 0,0,0
q_b = 1,1,1

[delay]
tau_d = 1
psi_lower = 0
psi_upper = 0

[generator]
zeta_lower = 0
zeta_upper = 0
"""

_ENTRIES = {
    "paper_example": CatalogEntry(
        name="paper_example",
        description=(
            "x-weighted squared-velocity cost on [1, e], invariant under the "
            "generator (2x ln x, q); conserves x*q*q' - (q')^2*x^2*ln(x) per "
            "endpoint and level"
        ),
        config_text=_PAPER_EXAMPLE,
        notes=(
            "Domain [1, e]: the extremal family A + B*ln(x) and the time "
            "generator 2x*ln(x) both degenerate at x = 0, so the catalog "
            "uses a right-shifted interval with the same cost and symmetry."
        ),
    ),
    "free_particle": CatalogEntry(
        name="free_particle",
        description=(
            "squared-velocity cost with state translation symmetry; conserves "
            "the momenta 2*v per endpoint and level"
        ),
        config_text=_FREE_PARTICLE,
    ),
    "delayed_smoke": CatalogEntry(
        name="delayed_smoke",
        description=(
            "delay-free integrand routed through the delayed two-regime path "
            "with the zero generator; conserved quantity is identically zero"
        ),
        config_text=_DELAYED_SMOKE,
    ),
}


def names() -> list[str]:
    return list(_ENTRIES)


def entry(name: str) -> CatalogEntry:
    try:
        return _ENTRIES[name]
    except KeyError:
        raise KeyError(f"unknown catalog entry {name!r}; known: {', '.join(_ENTRIES)}") from None


def load(name: str) -> ProblemConfig:
    return parse_config(entry(name).config_text)
