"""Loop classification, holonomy, cocycle trivialization and homotopy-class
propagators for flux configurations in the punctured plane."""
from ._core import BACKEND
from .freegroup import Letter, Word, abelianize, parse_word, reduce
from .geometry import PlanePath, Puncture, punctures_from_points, winding_numbers, word_of_loop
from .holonomy import FluxScenario, HolonomyMap, holonomy_map, holonomy_of_word, wilson_line
from .liegroups import AlgebraElement, GroupElement

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AlgebraElement",
    "FluxScenario",
    "GroupElement",
    "HolonomyMap",
    "Letter",
    "PlanePath",
    "Puncture",
    "Word",
    "abelianize",
    "holonomy_map",
    "holonomy_of_word",
    "parse_word",
    "punctures_from_points",
    "reduce",
    "wilson_line",
    "winding_numbers",
    "word_of_loop",
]
