"""Symmetric local polytope projected onto sub-correlation coordinates.

A point has one coordinate S(k, m) per order k = 1..N-1 and m = 0..k; the
full N-party correlators are dropped.  Vertices come from deterministic
strategy multisets.  All arithmetic is exact: vertices and facets are
integer vectors, ranks use ``Fraction`` elimination, and facets come from a
double-description run on integer rays.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numba as nb
import numpy as np

from .bellpoly import StrategyMultiset, SymmetricBellPolynomial, correlator_sums

VERTEX_N_RANGE = range(3, 8)
FACET_N_RANGE = range(3, 6)


def coordinate_keys(n: int) -> list[tuple[int, int]]:
    return [(k, m) for k in range(1, n) for m in range(k + 1)]


@dataclass(frozen=True)
class ProjectedVertex:
    coords: tuple[int, ...]
    source: StrategyMultiset


@dataclass(frozen=True)
class FacetCandidate:
    """Inequality sum coeffs[i] * x[i] <= bound over ``coordinate_keys(n)``."""

    n: int
    coeffs: tuple[int, ...]
    bound: int

    def as_polynomial(self) -> SymmetricBellPolynomial:
        keys = coordinate_keys(self.n)
        return SymmetricBellPolynomial(self.n, tuple(zip(keys, (Fraction(c) for c in self.coeffs))))

    @property
    def orbit_key(self) -> tuple[int, ...]:
        return canonical_form(self.n, self.coeffs, self.bound)


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    max_value: Fraction


@dataclass(frozen=True)
class FacetReport:
    is_facet: bool
    saturating: int
    affine_rank: int
    dimension: int


# ---------------------------------------------------------------------------
# vertices and ranks

def all_multisets(n: int):
    for a in range(n + 1):
        for b in range(n + 1 - a):
            for c in range(n + 1 - a - b):
                yield StrategyMultiset((a, b, c, n - a - b - c))


def project_vertices(n: int) -> list[ProjectedVertex]:
    """Distinct projected points over all C(N+3, 3) strategy multisets."""
    if n not in VERTEX_N_RANGE:
        raise ValueError(f"N={n} outside supported range 3..7")
    keys = coordinate_keys(n)
    seen = {}
    for ms in all_multisets(n):
        s = correlator_sums(ms.assignment())
        coords = tuple(int(s[k, m]) for k, m in keys)
        seen.setdefault(coords, ms)
    return [ProjectedVertex(c, ms) for c, ms in sorted(seen.items())]


def exact_rank(rows) -> int:
    mat = [[Fraction(x) for x in r] for r in rows]
    if not mat:
        return 0
    rank, ncols = 0, len(mat[0])
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(mat)) if mat[i][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        pr = mat[rank]
        for i in range(rank + 1, len(mat)):
            if mat[i][col] != 0:
                f = mat[i][col] / pr[col]
                mat[i] = [x - f * y for x, y in zip(mat[i], pr)]
        rank += 1
        if rank == len(mat):
            break
    return rank


def affine_rank(points) -> int:
    points = [tuple(p) for p in points]
    if len(points) <= 1:
        return 0
    base = points[0]
    return exact_rank([[x - y for x, y in zip(p, base)] for p in points[1:]])


def polytope_dimension(vertices) -> int:
    if not vertices:
        raise ValueError("empty vertex set")
    return affine_rank(_coords(vertices))


def _coords(vertices):
    return [v.coords if isinstance(v, ProjectedVertex) else tuple(v) for v in vertices]


# ---------------------------------------------------------------------------
# validity and facets

def _coeff_vector(poly: SymmetricBellPolynomial, n: int) -> list[Fraction]:
    keys = coordinate_keys(n)
    extra = set(poly.coeffs) - set(keys)
    if extra or poly.n_parties != n:
        raise ValueError(f"polynomial keys {sorted(extra)} are not sub-correlation coordinates for N={n}")
    c = poly.coeffs
    return [c.get(k, Fraction(0)) for k in keys]


def _vertex_n(vertices) -> int:
    dim = len(_coords(vertices)[0])
    # (N - 1)(N + 2) / 2 coordinates
    n = next(n for n in range(2, 64) if (n - 1) * (n + 2) // 2 == dim)
    return n


def verify_valid(poly: SymmetricBellPolynomial, bound, vertices) -> ValidityReport:
    """Valid and tight: the vertex maximum equals ``bound`` exactly."""
    alpha = _coeff_vector(poly, _vertex_n(vertices))
    best = max(sum((a * x for a, x in zip(alpha, v)), Fraction(0)) for v in _coords(vertices))
    return ValidityReport(best == Fraction(bound), best)


def verify_facet(poly: SymmetricBellPolynomial, bound, vertices) -> FacetReport:
    coords = _coords(vertices)
    alpha = _coeff_vector(poly, _vertex_n(vertices))
    values = [sum((a * x for a, x in zip(alpha, v)), Fraction(0)) for v in coords]
    if max(values) > Fraction(bound):
        raise ValueError("inequality is violated by a vertex")
    tight = [v for v, val in zip(coords, values) if val == Fraction(bound)]
    dim = affine_rank(coords)
    rank = affine_rank(tight) if tight else -1
    return FacetReport(rank == dim - 1, len(tight), rank, dim)


# ---------------------------------------------------------------------------
# symmetry

@functools.lru_cache(maxsize=None)
def _group_maps(n: int):
    """Signed coordinate permutations for setting swap and per-setting
    global outcome flips (order-8 group)."""
    keys = coordinate_keys(n)
    index = {k: i for i, k in enumerate(keys)}
    maps = []
    for swap, f0, f1 in itertools.product((False, True), (1, -1), (1, -1)):
        perm, sign = [], []
        for k, m in keys:
            perm.append(index[(k, k - m)] if swap else index[(k, m)])
            # flips act before the swap relabels settings
            m_src = k - m if swap else m
            sign.append(f0 ** (k - m_src) * f1**m_src)
        maps.append((perm, sign))
    return maps


def apply_symmetry(coeffs, perm, sign):
    out = [0] * len(coeffs)
    for i, (j, s) in enumerate(zip(perm, sign)):
        out[i] = s * coeffs[j]
    return out


def _primitive(vec):
    g = 0
    for x in vec:
        g = math.gcd(g, int(x))
    return tuple(int(x) // g for x in vec) if g > 1 else tuple(int(x) for x in vec)


def normalize_inequality(coeffs, bound) -> tuple[tuple[int, ...], int]:
    """Scale rational (coeffs, bound) to a primitive integer vector (positive factor only)."""
    fr = [Fraction(c) for c in coeffs] + [Fraction(bound)]
    den = math.lcm(*(f.denominator for f in fr))
    ints = _primitive([f * den for f in fr])
    return ints[:-1], ints[-1]


def canonical_form(n: int, coeffs, bound) -> tuple[int, ...]:
    coeffs, bound = normalize_inequality(coeffs, bound)
    return min(tuple(apply_symmetry(coeffs, p, s)) + (bound,) for p, s in _group_maps(n))


def canonical_forms(n: int, coeffs: np.ndarray, bound: np.ndarray) -> np.ndarray:
    """Row-wise ``canonical_form`` for primitive integer inequalities."""
    best = None
    for perm, sign in _group_maps(n):
        img = np.hstack([coeffs[:, perm] * np.array(sign), bound[:, None]])
        if best is None:
            best = img
            continue
        diff = img != best
        first = diff.argmax(axis=1)
        r = np.arange(len(img))
        less = diff.any(axis=1) & (img[r, first] < best[r, first])
        best[less] = img[less]
    return best


def orbit_key_of(poly: SymmetricBellPolynomial, bound) -> tuple[int, ...]:
    n = poly.n_parties
    return canonical_form(n, _coeff_vector(poly, n), bound)


# ---------------------------------------------------------------------------
# double description

def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _initial_cone(rows, dim):
    """Pick ``dim`` independent rows; the cone {h : A0 h >= 0} is simplicial
    and its rays are the columns of A0^-1."""
    chosen = []
    for i, r in enumerate(rows):
        if exact_rank([rows[j] for j in chosen] + [r]) == len(chosen) + 1:
            chosen.append(i)
            if len(chosen) == dim:
                break
    if len(chosen) < dim:
        raise ValueError("vertex set is not full-dimensional")
    a0 = [[Fraction(x) for x in rows[i]] for i in chosen]
    inv = _inverse(a0)
    rays = []
    for j in range(dim):
        col = [inv[i][j] for i in range(dim)]
        den = math.lcm(*(c.denominator for c in col))
        rays.append(_primitive([c * den for c in col]))
    return chosen, rays


def _inverse(mat):
    n = len(mat)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat)]
    for col in range(n):
        piv = next(i for i in range(col, n) if aug[i][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[col])]
    return [row[n:] for row in aug]


def facets_from_vertices_reference(points) -> list[tuple[tuple[int, ...], int]]:
    """All facets a.x <= b of conv(points), for a full-dimensional point set.

    Plain-Python double description, kept as an independent check on
    ``facets_from_vertices``.

    Homogenised points g = (1, v) define the cone {h : g.h >= 0}; its
    extreme rays h = (b, -a) are the facets.  Rays carry bitmasks of the
    constraints they make tight; two rays are adjacent when no third ray is
    tight on every constraint they share (combinatorial test).
    """
    rows = [(1,) + tuple(int(x) for x in p) for p in points]
    dim = len(rows[0])
    chosen, rays = _initial_cone(rows, dim)
    order = chosen + [i for i in range(len(rows)) if i not in set(chosen)]
    processed = []
    zmask = []
    for r in rays:
        mask = 0
        for bit, i in enumerate(chosen):
            if _dot(rows[i], r) == 0:
                mask |= 1 << bit
        zmask.append(mask)
    processed = list(chosen)
    for i in order[len(chosen):]:
        a = rows[i]
        bit = len(processed)
        vals = [_dot(a, r) for r in rays]
        pos = [j for j, v in enumerate(vals) if v > 0]
        neg = [j for j, v in enumerate(vals) if v < 0]
        zer = [j for j, v in enumerate(vals) if v == 0]
        new_rays = [rays[j] for j in pos] + [rays[j] for j in zer]
        new_masks = [zmask[j] for j in pos] + [zmask[j] | (1 << bit) for j in zer]
        need = dim - 2
        for p in pos:
            for q in neg:
                common = zmask[p] & zmask[q]
                if common.bit_count() < need:
                    continue
                if any(
                    (zmask[t] & common) == common for t in range(len(rays)) if t != p and t != q
                ):
                    continue
                r = [vals[p] * y - vals[q] * x for x, y in zip(rays[p], rays[q])]
                new_rays.append(_primitive(r))
                new_masks.append(common | (1 << bit))
        rays, zmask = new_rays, new_masks
        processed.append(i)
    out = sorted({(tuple(-x for x in r[1:]), r[0]) for r in rays})
    return out


# ---------------------------------------------------------------------------
# compiled double description
#
# Zero sets are uint64 bitmasks over the (at most 64) processed rows.  Two
# rays are adjacent when their common zero rows have rank dim - 2.  Ranks
# are taken modulo several primes whose product exceeds the Hadamard bound
# of the row matrix; a rank deficient modulo every prime would need a
# nonzero minor divisible by that product, so the largest modular rank is
# the rational rank.

# largest primes below 2**25 (products of two residues stay exact in float64)
PRIMES = (33554393, 33554383, 33554371, 33554347, 33554341, 33554317, 33554291, 33554273, 33554267, 33554249, 33554239, 33554221)
_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_S1, _S2, _S4, _S56 = np.uint64(1), np.uint64(2), np.uint64(4), np.uint64(56)
_ONE = np.uint64(1)
RAY_LIMIT = 1 << 26


@nb.njit(cache=True)
def _popcount(x):
    x = x - ((x >> _S1) & _M1)
    x = (x & _M2) + ((x >> _S2) & _M2)
    x = (x + (x >> _S4)) & _M4
    # int64 result keeps the comparison in integers so the loop vectorises
    return np.int64((x * _H01) >> _S56)


@nb.njit(cache=True)
def _candidate_pairs(zpos, zneg, need):
    """Index pairs whose masks share at least ``need`` bits.

    Counted first, then filled.  The popcount loops are branch-free and
    vectorise; hits are located by scanning the flag bytes 8 at a time.
    """
    words = (zneg.size + 7) // 8
    flag = np.zeros(8 * words, np.uint8)
    flag64 = flag.view(np.uint64)
    counts = np.zeros(zpos.size, np.int64)
    for i in range(zpos.size):
        a = zpos[i]
        c = 0
        for j in range(zneg.size):
            c += _popcount(a & zneg[j]) >= need
        counts[i] = c
    out_p = np.empty(counts.sum(), np.int64)
    out_q = np.empty(counts.sum(), np.int64)
    cnt = 0
    for i in range(zpos.size):
        if counts[i] == 0:
            continue
        a = zpos[i]
        for j in range(zneg.size):
            flag[j] = _popcount(a & zneg[j]) >= need
        for w in range(words):
            if flag64[w]:
                for j in range(8 * w, 8 * w + 8):
                    if flag[j]:
                        out_p[cnt] = i
                        out_q[cnt] = j
                        cnt += 1
    return out_p, out_q


@nb.njit(cache=True)
def _csr(keys, n):
    """Start offsets and a permutation grouping ``keys`` (values in 0..n-1)."""
    order = np.argsort(keys, kind="mergesort")
    start = np.zeros(n + 1, np.int64)
    for k in keys:
        start[k + 1] += 1
    for i in range(n):
        start[i + 1] += start[i]
    return start, order


@nb.njit(cache=True)
def _adjacent(zpos, zneg, zzer, ip, iq, need):
    """Combinatorial adjacency test for candidate pairs (pos[ip], neg[iq]).

    A pair is adjacent unless some third ray's zero set contains their
    common zero set c.  Such a ray shares at least ``need`` bits with both
    ends, so it is already a candidate partner of one end, or a zero-ray
    sharing ``need`` bits with the smaller side.
    """
    n_pos, n_neg = zpos.size, zneg.size
    p_start, p_order = _csr(ip, n_pos)
    q_start, q_order = _csr(iq, n_neg)
    use_pos = n_pos <= n_neg
    if use_pos:
        zi, zj = _candidate_pairs(zpos, zzer, need)
        z_start, z_order = _csr(zi, n_pos)
    else:
        zi, zj = _candidate_pairs(zneg, zzer, need)
        z_start, z_order = _csr(zi, n_neg)
    out = np.ones(ip.size, np.bool_)
    for e in range(ip.size):
        p, q = ip[e], iq[e]
        c = zpos[p] & zneg[q]
        ok = True
        for k in range(p_start[p], p_start[p + 1]):
            q2 = iq[p_order[k]]
            if q2 != q and (zneg[q2] & c) == c:
                ok = False
                break
        if ok:
            for k in range(q_start[q], q_start[q + 1]):
                p2 = ip[q_order[k]]
                if p2 != p and (zpos[p2] & c) == c:
                    ok = False
                    break
        if ok:
            side = p if use_pos else q
            for k in range(z_start[side], z_start[side + 1]):
                if (zzer[zj[z_order[k]]] & c) == c:
                    ok = False
                    break
        out[e] = ok
    return out


@nb.njit(cache=True)
def _mulmod(a, b, p, inv_p):
    # exact while a, b < p < 2**25: the product stays below 2**50
    t = a * b
    r = t - p * math.floor(t * inv_p)
    if r < 0.0:
        r += p
    elif r >= p:
        r -= p
    return r


@nb.njit(cache=True)
def _invmod(a, p, inv_p):
    out = 1.0
    e = int(p) - 2
    while e:
        if e & 1:
            out = _mulmod(out, a, p, inv_p)
        a = _mulmod(a, a, p, inv_p)
        e >>= 1
    return out


@nb.njit(cache=True)
def _rank_mod(mat, nrows, p):
    """Rank of mat[:nrows] over GF(p); entries are floats in [0, p)."""
    inv_p = 1.0 / p
    ncols = mat.shape[1]
    rank = 0
    for col in range(ncols):
        piv = -1
        for i in range(rank, nrows):
            if mat[i, col] != 0.0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != rank:
            for j in range(ncols):
                t = mat[rank, j]
                mat[rank, j] = mat[piv, j]
                mat[piv, j] = t
        inv = _invmod(mat[rank, col], p, inv_p)
        for j in range(col, ncols):
            mat[rank, j] = _mulmod(mat[rank, j], inv, p, inv_p)
        for i in range(rank + 1, nrows):
            f = mat[i, col]
            if f != 0.0:
                for j in range(col, ncols):
                    v = mat[i, j] - _mulmod(f, mat[rank, j], p, inv_p)
                    mat[i, j] = v + p if v < 0.0 else v
        rank += 1
        if rank == nrows:
            break
    return rank


@nb.njit(cache=True)
def _mask_ranks(rows, masks, target, primes):
    """Exact rank (capped at ``target``) of the rows selected by each mask."""
    nrows, ncols = rows.shape
    sel = np.empty((nrows, ncols), np.int64)
    work = np.empty((nrows, ncols), np.float64)
    out = np.empty(masks.size, np.int64)
    for t in range(masks.size):
        m = masks[t]
        r = 0
        for i in range(nrows):
            if (m >> np.uint64(i)) & _ONE:
                sel[r, :] = rows[i, :]
                r += 1
        best = 0
        for p in primes:
            for i in range(r):
                for j in range(ncols):
                    work[i, j] = sel[i, j] % p
            k = _rank_mod(work, r, float(p))
            if k > best:
                best = k
            if best >= target:
                break
        out[t] = best
    return out


def _primes_for(rows: np.ndarray) -> np.ndarray:
    """Enough primes for the product to exceed every minor of ``rows``."""
    norms = sorted((math.isqrt(int(r @ r)) + 1 for r in rows.astype(object)), reverse=True)
    bound = math.prod(norms[: rows.shape[1]])
    chosen, prod = [], 1
    for p in PRIMES:
        chosen.append(p)
        prod *= p
        if prod > bound:
            return np.array(chosen, dtype=np.int64)
    raise OverflowError("row entries too large for the modular rank test")


def _masks_of(rows: np.ndarray, rays: np.ndarray) -> np.ndarray:
    zero = (rows @ rays.T) == 0
    weights = _ONE << np.arange(rows.shape[0], dtype=np.uint64)
    return (zero * weights[:, None]).sum(axis=0, dtype=np.uint64)


def _facet_rays(points) -> np.ndarray:
    """Extreme rays (b, -a) of the cone of facets a.x <= b of conv(points).

    Full-dimensional hulls of at most 64 points.  Same cone formulation as
    ``facets_from_vertices_reference`` with the pair search and a
    combinatorial adjacency test compiled.  Rays stay exact int64 with a
    magnitude guard; overflow raises instead of rounding.
    """
    rows_list = [(1,) + tuple(int(x) for x in p) for p in points]
    if len(rows_list) > 64:
        raise ValueError("compiled double description supports at most 64 points")
    dim = len(rows_list[0])
    chosen, rays = _initial_cone(rows_list, dim)
    taken = set(chosen)
    order = chosen + [i for i in range(len(rows_list)) if i not in taken]
    rows = np.array([rows_list[i] for i in order], dtype=np.int64)
    ray_arr = np.array(rays, dtype=np.int64)
    if np.abs(ray_arr).max() >= RAY_LIMIT:
        raise OverflowError("initial rays exceed the int64 guard")
    masks = _masks_of(rows[:dim], ray_arr)
    row_abs = int(np.abs(rows).sum(axis=1).max())
    for bit in range(dim, len(rows)):
        vals = ray_arr @ rows[bit]
        pos, neg, zer = (np.flatnonzero(vals > 0), np.flatnonzero(vals < 0), np.flatnonzero(vals == 0))
        new_bit = _ONE << np.uint64(bit)
        parts = [ray_arr[pos], ray_arr[zer]]
        part_masks = [masks[pos], masks[zer] | new_bit]
        if pos.size and neg.size:
            ip, iq = _candidate_pairs(masks[pos], masks[neg], dim - 2)
            common = masks[pos][ip] & masks[neg][iq]
            ok = _adjacent(masks[pos], masks[neg], masks[zer], ip, iq, dim - 2)
            p, q = pos[ip[ok]], neg[iq[ok]]
            combo = vals[p, None] * ray_arr[q] - vals[q, None] * ray_arr[p]
            g = np.gcd.reduce(np.abs(combo), axis=1)
            parts.append(combo // g[:, None])
            part_masks.append(common[ok] | new_bit)
        ray_arr = np.concatenate(parts)
        masks = np.concatenate(part_masks)
        big = int(np.abs(ray_arr).max())
        if big >= RAY_LIMIT or big * big * row_abs >= 1 << 62:
            raise OverflowError("ray entries exceed the int64 guard")
    return ray_arr


def facets_from_vertices(points) -> list[tuple[tuple[int, ...], int]]:
    """Facets (a, b), meaning a.x <= b, of the hull of integer ``points``."""
    rays = _facet_rays(points)
    return sorted({(tuple(-int(x) for x in r[1:]), int(r[0])) for r in rays})


def certify_facets(facets, vertices) -> np.ndarray:
    """Exact batched facet test: valid on every vertex and tight on a set
    of affine rank dim - 1.  Returns a bool array."""
    coords = np.array(_coords(vertices), dtype=np.int64)
    rows = np.hstack([np.ones((len(coords), 1), dtype=np.int64), coords])
    if len(rows) > 64:
        raise ValueError("batched certificate supports at most 64 vertices")
    dim = affine_rank(coords.tolist())
    h = np.array([(b,) + tuple(-x for x in a) for a, b in facets], dtype=np.int64).reshape(-1, rows.shape[1])
    slack = rows @ h.T
    valid = (slack >= 0).all(axis=0)
    masks = _masks_of(rows, h)
    # the homogenised tight rows have rank (affine rank + 1)
    ranks = _mask_ranks(rows, masks, dim, _primes_for(rows))
    return valid & (ranks == dim)


def enumerate_facets(n: int) -> list[FacetCandidate]:
    """Complete facet list of the projected symmetric polytope, N in {3, 4, 5}."""
    return list(_enumerate_facets(n))


@functools.lru_cache(maxsize=None)
def _enumerate_facets(n: int) -> tuple[FacetCandidate, ...]:
    if n not in FACET_N_RANGE:
        raise ValueError(f"facet enumeration supports N in 3..5, got {n}")
    verts = project_vertices(n)
    rays = _facet_rays([v.coords for v in verts])
    coeffs, bound = -rays[:, 1:], rays[:, 0]
    order = np.lexsort((bound,) + tuple(coeffs.T[::-1]))
    return tuple(FacetCandidate(n, tuple(a), b) for a, b in zip(coeffs[order].tolist(), bound[order].tolist()))


def group_by_orbit(facets) -> dict[tuple[int, ...], list[FacetCandidate]]:
    groups: dict[tuple[int, ...], list[FacetCandidate]] = {}
    facets = list(facets)
    by_n: dict[int, list[int]] = {}
    for i, f in enumerate(facets):
        by_n.setdefault(f.n, []).append(i)
    for n, idx in by_n.items():
        coeffs = np.array([facets[i].coeffs for i in idx], dtype=np.int64)
        bound = np.array([facets[i].bound for i in idx], dtype=np.int64)
        keys = canonical_forms(n, coeffs, bound).tolist()
        for i, key in zip(idx, keys):
            groups.setdefault(tuple(key), []).append(facets[i])
    return dict(sorted(groups.items()))
