"""Symmetric two-setting, two-outcome Bell polynomials.

A permutation-symmetric polynomial on N parties is fixed by one coefficient
``alpha(k, m)`` per correlator order ``k`` (1..N) and number ``m`` of parties
using setting 1 (0..k).  Its value is ``sum alpha(k, m) * S(k, m)`` where
``S(k, m)`` sums the products over all k-subsets of parties with exactly m of
them measuring setting 1.

Bracket text lists the coefficients order by order::

    [a(1,0) a(1,1); a(2,0) a(2,1) a(2,2); ...]

Everything in this module is exact (``fractions.Fraction``).
"""
from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "SymmetricBellPolynomial",
    "StrategyMultiset",
    "LocalBoundResult",
    "FrustrationReport",
    "BracketParseError",
    "parse_bracket",
    "format_bracket",
    "mabk",
    "mabk_bound",
    "scbi_sum",
    "scbi_bound",
    "known_inequality",
    "correlator_sums",
    "evaluate_deterministic",
    "evaluate_assignment",
    "local_bound",
    "local_bound_exhaustive",
    "frustration",
    "noise_resistance",
    "poly_to_json",
    "poly_from_json",
]

# (a0, a1) outputs of the four single-party deterministic strategies, in the
# order used by StrategyMultiset.counts.
STRATEGIES = ((1, 1), (1, -1), (-1, 1), (-1, -1))

EXHAUSTIVE_MAX_PARTIES = 8


class BracketParseError(ValueError):
    pass


@dataclass(frozen=True)
class SymmetricBellPolynomial:
    n_parties: int
    terms: tuple[tuple[tuple[int, int], Fraction], ...] = ()

    def __post_init__(self):
        if self.n_parties < 2:
            raise ValueError(f"need at least 2 parties, got {self.n_parties}")
        clean = {}
        for (k, m), a in self.terms:
            k, m, a = int(k), int(m), Fraction(a)
            if not (1 <= k <= self.n_parties and 0 <= m <= k):
                raise ValueError(f"invalid key ({k}, {m}) for {self.n_parties} parties")
            if a != 0:
                clean[(k, m)] = clean.get((k, m), Fraction(0)) + a
        object.__setattr__(
            self, "terms", tuple(sorted((km, a) for km, a in clean.items() if a != 0))
        )

    @classmethod
    def from_coeffs(cls, n_parties: int, coeffs: Mapping[tuple[int, int], object]):
        return cls(n_parties, tuple((km, Fraction(a)) for km, a in coeffs.items()))

    @property
    def coeffs(self) -> dict[tuple[int, int], Fraction]:
        return dict(self.terms)

    def coeff(self, k: int, m: int) -> Fraction:
        return self.coeffs.get((k, m), Fraction(0))

    @property
    def orders(self) -> set[int]:
        return {k for (k, _), _ in self.terms}

    @property
    def max_order(self) -> int:
        return max(self.orders, default=0)

    def is_subcorrelation(self) -> bool:
        """True when no full N-party correlator appears."""
        return self.n_parties not in self.orders

    def __add__(self, other: SymmetricBellPolynomial) -> SymmetricBellPolynomial:
        if other.n_parties != self.n_parties:
            raise ValueError("party count mismatch")
        return SymmetricBellPolynomial(self.n_parties, self.terms + other.terms)

    def scaled(self, factor) -> SymmetricBellPolynomial:
        f = Fraction(factor)
        return SymmetricBellPolynomial(self.n_parties, tuple((km, a * f) for km, a in self.terms))

    def __str__(self):
        return format_bracket(self)


@dataclass(frozen=True)
class StrategyMultiset:
    """Counts of parties playing (+,+), (+,-), (-,+), (-,-)."""

    counts: tuple[int, int, int, int]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != 4 or min(counts) < 0:
            raise ValueError(f"need four non-negative counts, got {self.counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def n_parties(self) -> int:
        return sum(self.counts)

    def assignment(self) -> list[tuple[int, int]]:
        """One per-party (a0, a1) list realising the multiset."""
        return [s for s, c in zip(STRATEGIES, self.counts) for _ in range(c)]

    @classmethod
    def from_assignment(cls, assignment: Iterable[tuple[int, int]]) -> StrategyMultiset:
        assignment = list(assignment)
        return cls(tuple(assignment.count(s) for s in STRATEGIES))


@dataclass(frozen=True)
class LocalBoundResult:
    bound: Fraction
    witness: StrategyMultiset


@dataclass(frozen=True)
class FrustrationReport:
    F: Fraction
    sub_bound_l: Fraction
    total_bound_L: Fraction
    sub_polynomial: SymmetricBellPolynomial


# ---------------------------------------------------------------------------
# bracket text

_TOKEN = re.compile(r"^[+-]?\d+(/\d+)?$")


def parse_bracket(text: str, n_parties: int | None = None) -> SymmetricBellPolynomial:
    """Parse bracket text into a polynomial.

    Segment ``k`` (1-based) must hold ``k + 1`` rationals.  The number of
    parties equals the number of segments unless ``n_parties`` is given; in
    that case ``n_parties`` may exceed the segment count by one, the usual
    shorthand for a sub-correlation inequality whose full-correlator segment
    is omitted.
    """
    body = text.strip()
    if body.startswith("["):
        if not body.endswith("]"):
            raise BracketParseError("unbalanced bracket")
        body = body[1:-1]
    elif body.endswith("]"):
        raise BracketParseError("unbalanced bracket")
    if not body.strip():
        raise BracketParseError("empty bracket")
    segments = body.split(";")
    coeffs = {}
    for k, segment in enumerate(segments, start=1):
        tokens = segment.split()
        if len(tokens) != k + 1:
            raise BracketParseError(
                f"segment {k} has {len(tokens)} entries, expected {k + 1}"
            )
        for m, tok in enumerate(tokens):
            if not _TOKEN.match(tok):
                raise BracketParseError(f"malformed coefficient {tok!r}")
            try:
                coeffs[(k, m)] = Fraction(tok)
            except ZeroDivisionError:
                raise BracketParseError(f"zero denominator in {tok!r}") from None
    n_seg = len(segments)
    if n_parties is None:
        n_parties = n_seg
    elif n_parties not in (n_seg, n_seg + 1):
        raise BracketParseError(f"{n_seg} segments do not describe {n_parties} parties")
    if n_parties < 2:
        raise BracketParseError("a bracket needs at least 2 segments (2 parties)")
    return SymmetricBellPolynomial.from_coeffs(n_parties, coeffs)


def _fmt(a: Fraction) -> str:
    return str(a.numerator) if a.denominator == 1 else f"{a.numerator}/{a.denominator}"


def format_bracket(poly: SymmetricBellPolynomial, omit_full: bool = False) -> str:
    """Canonical single-space bracket text.

    With ``omit_full`` a sub-correlation polynomial is printed without its
    (all-zero) full-correlator segment.
    """
    top = poly.n_parties
    if omit_full and poly.is_subcorrelation():
        top -= 1
    c = poly.coeffs
    segs = (
        " ".join(_fmt(c.get((k, m), Fraction(0))) for m in range(k + 1))
        for k in range(1, top + 1)
    )
    return "[" + "; ".join(segs) + "]"


def poly_to_json(poly: SymmetricBellPolynomial, bound=None) -> dict:
    return {
        "n_parties": poly.n_parties,
        "coeffs": [[k, m, _fmt(a)] for (k, m), a in poly.terms],
        "bound": None if bound is None else _fmt(Fraction(bound)),
    }


def poly_from_json(obj: dict | str) -> tuple[SymmetricBellPolynomial, Fraction | None]:
    if isinstance(obj, str):
        obj = json.loads(obj)
    poly = SymmetricBellPolynomial(
        int(obj["n_parties"]),
        tuple(((int(k), int(m)), Fraction(a)) for k, m, a in obj["coeffs"]),
    )
    bound = obj.get("bound")
    return poly, (None if bound is None else Fraction(bound))


# ---------------------------------------------------------------------------
# families

def mabk(n: int) -> SymmetricBellPolynomial:
    """Full-correlation MABK polynomial in symmetric form."""
    if n < 2:
        raise ValueError("MABK needs N >= 2")
    if n % 2:
        pattern = [0 if m % 2 else (-1) ** (m // 2) for m in range(n + 1)]
    else:
        pattern = [(-1) ** (m // 2) for m in range(n + 1)]
    return SymmetricBellPolynomial.from_coeffs(n, {(n, m): a for m, a in enumerate(pattern)})


def mabk_bound(n: int) -> int:
    return 2 ** ((n - 1) // 2) if n % 2 else 2 ** (n // 2)


def scbi_sum(n: int) -> SymmetricBellPolynomial:
    """Sum of the MABK polynomials on every (N-1)-subset of N parties.

    Each (N-1)-party correlator belongs to exactly one subset, so the
    symmetric coefficients are just those of ``mabk(N - 1)``.
    """
    if n < 3:
        raise ValueError("B_N needs N >= 3")
    sub = mabk(n - 1)
    return SymmetricBellPolynomial(n, sub.terms)


def scbi_bound(n: int) -> int:
    return n * 2 ** math.ceil((n - 2) / 2)


_KNOWN = {
    "M3": ("[0 0; 0 0 0; 1 0 -1 0]", 3, 2),
    "S3": ("[0 0; 0 0 0; 1 1 -1 -1]", 3, 4),
    "B": ("[0 0; 0 1 0; 1 1 -1 -1]", 3, 6),
    "I4": ("[-1 -1; -2 0 -2; -2 1 1 -2]", 4, 8),
    "I5": ("[0 0; -2 0 -1; 0 0 0 0; -4 0 2 0 1]", 5, 15),
}


def known_inequality(name: str) -> tuple[SymmetricBellPolynomial, Fraction]:
    """Named inequality and its published local bound.

    Recognised: M3, S3, B, I4, I5, MABK_<N>, BN_<N>.
    """
    key = name.strip()
    if key in _KNOWN:
        text, n, bound = _KNOWN[key]
        return parse_bracket(text, n_parties=n), Fraction(bound)
    m = re.fullmatch(r"(MABK|BN)_(\d+)", key, flags=re.IGNORECASE)
    if m:
        family, n = m.group(1).upper(), int(m.group(2))
        if family == "MABK":
            return mabk(n), Fraction(mabk_bound(n))
        return scbi_sum(n), Fraction(scbi_bound(n))
    raise KeyError(f"unknown inequality {name!r}")


# ---------------------------------------------------------------------------
# deterministic evaluation

def correlator_sums(assignment: Iterable[tuple[int, int]]) -> np.ndarray:
    """S(k, m) for an explicit per-party assignment, by multiplying out
    prod_p (1 + a0_p x + a1_p y).  Entry [k, m] of the returned object array."""
    assignment = list(assignment)
    n = len(assignment)
    s = np.zeros((n + 1, n + 1), dtype=object)
    s[:, :] = 0
    s[0, 0] = 1
    for a0, a1 in assignment:
        new = s.copy()
        new[1:, :] += a0 * s[:-1, :]
        new[1:, 1:] += a1 * s[:-1, :-1]
        s = new
    return s


@lru_cache(maxsize=None)
def _kraw(n: int, s: int) -> tuple[int, ...]:
    """Coefficients of (1 + u)^(n - s) (1 - u)^s."""
    coeffs = [1]
    for sign in [1] * (n - s) + [-1] * s:
        nxt = coeffs + [0]
        for i in range(len(coeffs)):
            nxt[i + 1] += sign * coeffs[i]
        coeffs = nxt
    return tuple(coeffs)


@lru_cache(maxsize=None)
def _mix(i: int, j: int, m: int) -> int:
    """Coefficient of x^(i+j-m) y^m in (x + y)^i (x - y)^j."""
    return sum(
        math.comb(i, t) * math.comb(j, m - t) * (-1) ** (m - t)
        for t in range(max(0, m - j), min(i, m) + 1)
    )


def _scaled_weight_matrix(poly: SymmetricBellPolynomial) -> tuple[np.ndarray, int]:
    """W with value = P^T W Q / denom, integer entries.

    Writing u = x + y, v = x - y, the four strategy generators become
    1 + u, 1 + v, 1 - v, 1 - u, so the generating polynomial of a multiset
    factorises as P(u) Q(v).  W(i, j) collects the polynomial's coefficients
    seen through (x + y)^i (x - y)^j.
    """
    n = poly.n_parties
    denom = math.lcm(*(a.denominator for _, a in poly.terms)) if poly.terms else 1
    w = np.zeros((n + 1, n + 1), dtype=object)
    w[:, :] = 0
    for (k, m), a in poly.terms:
        a_int = int(a * denom)
        for i in range(k + 1):
            w[i, k - i] += a_int * _mix(i, k - i, m)
    return w, denom


def evaluate_deterministic(poly: SymmetricBellPolynomial, strategies: StrategyMultiset) -> Fraction:
    if strategies.n_parties != poly.n_parties:
        raise ValueError(
            f"multiset covers {strategies.n_parties} parties, polynomial has {poly.n_parties}"
        )
    n_pp, n_pm, n_mp, n_mm = strategies.counts
    w, denom = _scaled_weight_matrix(poly)
    p = np.array(_kraw(n_pp + n_mm, n_mm), dtype=object)
    q = np.array(_kraw(n_pm + n_mp, n_mp), dtype=object)
    val = p @ w[: len(p), : len(q)] @ q
    return Fraction(int(val), denom)


def evaluate_assignment(poly: SymmetricBellPolynomial, assignment) -> Fraction:
    """Value on an explicit per-party assignment (no symmetry used)."""
    assignment = list(assignment)
    if len(assignment) != poly.n_parties:
        raise ValueError("party-count mismatch")
    s = correlator_sums(assignment)
    return sum((a * s[k, m] for (k, m), a in poly.terms), Fraction(0))


def _multiset_values(poly: SymmetricBellPolynomial):
    """Yield (counts, scaled value) for every strategy multiset, plus denom."""
    n = poly.n_parties
    w, denom = _scaled_weight_matrix(poly)
    out = []
    for p in range(n + 1):
        q = n - p
        pmat = np.array([_kraw(p, d) for d in range(p + 1)], dtype=object)
        qmat = np.array([_kraw(q, c) for c in range(q + 1)], dtype=object)
        vals = pmat @ w[: p + 1, : q + 1] @ qmat.T
        for n_mm in range(p + 1):
            for n_mp in range(q + 1):
                counts = (p - n_mm, q - n_mp, n_mp, n_mm)
                out.append((counts, int(vals[n_mm, n_mp])))
    return out, denom


def local_bound(poly: SymmetricBellPolynomial) -> LocalBoundResult:
    """Exact local bound by enumerating the C(N+3, 3) strategy multisets."""
    values, denom = _multiset_values(poly)
    best = max(v for _, v in values)
    witness = min(c for c, v in values if v == best)
    return LocalBoundResult(Fraction(best, denom), StrategyMultiset(witness))


def local_bound_exhaustive(poly: SymmetricBellPolynomial) -> Fraction:
    """Maximum over all 4^N per-party assignments.  Oracle for ``local_bound``."""
    n = poly.n_parties
    if n > EXHAUSTIVE_MAX_PARTIES:
        raise ValueError(f"exhaustive search limited to {EXHAUSTIVE_MAX_PARTIES} parties")
    idx = np.array(list(itertools.product(range(4), repeat=n)), dtype=np.int64)
    table = np.array(STRATEGIES, dtype=np.int64)
    a0, a1 = table[idx, 0], table[idx, 1]
    # s[:, k, m] after processing parties one at a time
    s = np.zeros((len(idx), n + 1, n + 1), dtype=np.int64)
    s[:, 0, 0] = 1
    for p in range(n):
        new = s.copy()
        new[:, 1:, :] += a0[:, p, None, None] * s[:, :-1, :]
        new[:, 1:, 1:] += a1[:, p, None, None] * s[:, :-1, :-1]
        s = new
    denom = math.lcm(*(a.denominator for _, a in poly.terms)) if poly.terms else 1
    total = np.zeros(len(idx), dtype=object)
    for (k, m), a in poly.terms:
        total = total + int(a * denom) * s[:, k, m].astype(object)
    return Fraction(int(max(total)), denom) if len(total) else Fraction(0)


# ---------------------------------------------------------------------------
# frustration and noise

def frustration(poly: SymmetricBellPolynomial, bound) -> FrustrationReport:
    """F = N l / L for a symmetric sub-correlation inequality ``poly <= L``.

    The (N-1)-party inequality j is recovered by dividing each order-k
    coefficient by N - k, the number of (N-1)-subsets containing a given
    k-party correlator.
    """
    n = poly.n_parties
    total = Fraction(bound)
    if not poly.is_subcorrelation():
        raise ValueError("polynomial has full-correlation terms")
    if total == 0:
        raise ValueError("bound must be non-zero")
    sub = SymmetricBellPolynomial(n - 1, tuple(((k, m), a / (n - k)) for (k, m), a in poly.terms))
    l = local_bound(sub).bound
    return FrustrationReport(n * l / total, l, total, sub)


def noise_resistance(local: float, quantum: float) -> float:
    """Critical visibility L / Q.  Valid because every term has order >= 1,
    so white noise contributes nothing."""
    if quantum <= 0:
        raise ValueError("quantum value must be positive")
    return float(local) / float(quantum)
