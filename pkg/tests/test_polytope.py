import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellstruct import polytope as pt
from bellstruct.bellpoly import SymmetricBellPolynomial, known_inequality, local_bound, scbi_bound, scbi_sum


@pytest.fixture(scope="module")
def facets4():
    return pt.enumerate_facets(4)


def is_prime(p):
    return p > 1 and all(p % d for d in range(2, math.isqrt(p) + 1))


def test_vertex_example_n3():
    verts = pt.project_vertices(3)
    keys = pt.coordinate_keys(3)
    plus = next(v for v in verts if v.source.counts == (3, 0, 0, 0))
    assert dict(zip(keys, plus.coords)) == {(1, 0): 3, (1, 1): 3, (2, 0): 3, (2, 1): 6, (2, 2): 3}


@pytest.mark.parametrize("n", range(3, 8))
def test_vertices_in_box_and_deduplicated(n):
    verts = pt.project_vertices(n)
    keys = pt.coordinate_keys(n)
    assert len(verts) <= math.comb(n + 3, 3)
    assert len({v.coords for v in verts}) == len(verts)
    for v in verts:
        assert len(v.coords) == (n - 1) * (n + 2) // 2
        for (k, m), x in zip(keys, v.coords):
            assert abs(x) <= math.comb(n, k) * math.comb(k, m)


def test_vertex_range():
    with pytest.raises(ValueError):
        pt.project_vertices(2)
    with pytest.raises(ValueError):
        pt.project_vertices(8)


@pytest.mark.parametrize("n,dim", [(3, 5), (4, 9), (5, 14)])
def test_full_dimensional(n, dim):
    assert pt.polytope_dimension(pt.project_vertices(n)) == dim


def test_single_vertex_dimension():
    assert pt.polytope_dimension([(1, 2, 3)]) == 0
    with pytest.raises(ValueError):
        pt.polytope_dimension([])


def test_exact_rank():
    assert pt.exact_rank([[1, 2], [2, 4]]) == 1
    assert pt.exact_rank([[Fraction(1, 3), 1], [1, 3], [0, 1]]) == 2


@pytest.mark.parametrize("name,n,bound,rank,dim", [("I4", 4, 8, 8, 9), ("I5", 5, 15, 13, 14)])
def test_named_facets(name, n, bound, rank, dim):
    poly, b = known_inequality(name)
    verts = pt.project_vertices(n)
    rep = pt.verify_valid(poly, b, verts)
    assert rep.valid and rep.max_value == bound
    f = pt.verify_facet(poly, b, verts)
    assert f.is_facet and (f.affine_rank, f.dimension) == (rank, dim)


def test_bn_valid_and_b4_rank_recorded():
    assert pt.verify_valid(scbi_sum(5), 20, pt.project_vertices(5)).valid
    rep = pt.verify_facet(scbi_sum(4), scbi_bound(4), pt.project_vertices(4))
    assert not rep.is_facet and rep.affine_rank == 4


def test_loose_bound_is_not_tight():
    poly, _ = known_inequality("I4")
    verts = pt.project_vertices(4)
    assert not pt.verify_valid(poly, 9, verts).valid
    with pytest.raises(ValueError):
        pt.verify_facet(poly, 7, verts)


def test_key_mismatch():
    with pytest.raises(ValueError):
        pt.verify_valid(known_inequality("B")[0], 6, pt.project_vertices(3))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_vertex_max_equals_local_bound(n):
    rng = np.random.default_rng(n)
    verts = pt.project_vertices(n)
    keys = pt.coordinate_keys(n)
    for _ in range(10):
        poly = SymmetricBellPolynomial.from_coeffs(n, {k: int(c) for k, c in zip(keys, rng.integers(-3, 4, len(keys)))})
        assert pt.verify_valid(poly, local_bound(poly).bound, verts).valid


# symmetry ----------------------------------------------------------------

def test_group_has_eight_distinct_elements():
    maps = pt._group_maps(4)
    assert len({(tuple(p), tuple(s)) for p, s in maps}) == 8


@given(st.lists(st.integers(-5, 5), min_size=9, max_size=9), st.integers(1, 9), st.integers(0, 7))
def test_canonical_form_invariant(coeffs, scale, g):
    perm, sign = pt._group_maps(4)[g]
    image = pt.apply_symmetry(coeffs, perm, sign)
    base = pt.canonical_form(4, coeffs, 3)
    assert pt.canonical_form(4, [scale * c for c in image], 3 * scale) == base
    assert pt.canonical_form(4, [Fraction(c, scale) for c in coeffs], Fraction(3, scale)) == base


def test_symmetry_maps_vertices_to_vertices():
    verts = {v.coords for v in pt.project_vertices(4)}
    for perm, sign in pt._group_maps(4):
        assert {tuple(pt.apply_symmetry(v, perm, sign)) for v in verts} == verts


# enumeration -------------------------------------------------------------

def test_primes():
    assert all(is_prime(p) for p in pt.PRIMES)


def test_enumeration_n3():
    facets = pt.enumerate_facets(3)
    verts = pt.project_vertices(3)
    assert len(facets) == 24
    assert all(pt.verify_facet(f.as_polynomial(), f.bound, verts).is_facet for f in facets)


def test_compiled_matches_reference_n4(facets4):
    verts = [v.coords for v in pt.project_vertices(4)]
    ref = pt.facets_from_vertices_reference(verts)
    assert [(f.coeffs, f.bound) for f in facets4] == ref


def test_n4_contains_i4(facets4):
    orbits = pt.group_by_orbit(facets4)
    assert pt.orbit_key_of(*known_inequality("I4")) in orbits
    assert sum(len(v) for v in orbits.values()) == len(facets4)


def test_n4_every_facet_certified(facets4):
    verts = pt.project_vertices(4)
    assert pt.certify_facets([(f.coeffs, f.bound) for f in facets4], verts).all()
    for f in facets4[::50]:
        assert pt.verify_facet(f.as_polynomial(), f.bound, verts).is_facet


def test_certificate_rejects_non_facets():
    verts = pt.project_vertices(4)
    keys = pt.coordinate_keys(4)
    b4 = [int(scbi_sum(4).coeffs.get(k, 0)) for k in keys]
    i4 = [int(known_inequality("I4")[0].coeffs.get(k, 0)) for k in keys]
    out = pt.certify_facets([(tuple(b4), 8), (tuple(i4), 8), (tuple(i4), 7)], verts)
    assert out.tolist() == [False, True, False]


def test_enumeration_range():
    with pytest.raises(ValueError):
        pt.enumerate_facets(6)


def test_facets_of_a_cube():
    cube = [(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)]
    assert len(pt.facets_from_vertices(cube)) == 6
    assert pt.facets_from_vertices(cube) == pt.facets_from_vertices_reference(cube)


def test_canonical_forms_match_scalar_route():
    facets = pt.enumerate_facets(4)
    coeffs = np.array([f.coeffs for f in facets])
    bound = np.array([f.bound for f in facets])
    fast = pt.canonical_forms(4, coeffs, bound)
    assert [tuple(r) for r in fast.tolist()] == [pt.canonical_form(4, f.coeffs, f.bound) for f in facets]


def test_enumeration_sorted_like_tuple_route():
    facets = pt.enumerate_facets(4)
    verts = [v.coords for v in pt.project_vertices(4)]
    assert [(f.coeffs, f.bound) for f in facets] == pt.facets_from_vertices(verts)
