"""Symmetric multipartite Bell inequalities: exact local bounds, quantum
values on W/GHZ/Dicke states, and projected local polytopes."""

__version__ = "0.1.0"

from .bellpoly import (  # noqa: E402
    SymmetricBellPolynomial,
    StrategyMultiset,
    format_bracket,
    frustration,
    known_inequality,
    local_bound,
    noise_resistance,
    parse_bracket,
)

__all__ = [
    "SymmetricBellPolynomial",
    "StrategyMultiset",
    "format_bracket",
    "frustration",
    "known_inequality",
    "local_bound",
    "noise_resistance",
    "parse_bracket",
]
