import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellstruct import qstate as qs
from bellstruct.bellpoly import SymmetricBellPolynomial, known_inequality, scbi_sum

angles = st.floats(0, 2 * math.pi, allow_nan=False)


def random_scenario(rng, n):
    v = rng.normal(size=(n, 2, 3))
    return qs.MeasurementScenario.from_bloch_array(v / np.linalg.norm(v, axis=-1, keepdims=True))


def random_state(rng, n):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return qs.PureState(2, n, v / np.linalg.norm(v))


def brute_bell_operator(poly, scenario):
    """Sum over every party subset and setting choice, one Kronecker product each."""
    n = poly.n_parties
    out = np.zeros((2**n, 2**n), dtype=complex)
    for (k, m), a in poly.terms:
        for subset in itertools.combinations(range(n), k):
            for ones in itertools.combinations(subset, m):
                ops = [qs.I2] * n
                for p in subset:
                    ops[p] = scenario.parties[p][1 if p in ones else 0].matrix
                out += float(a) * qs.kron_all(ops)
    return out


# states ------------------------------------------------------------------

def test_w_and_dicke():
    w = qs.w_state(3)
    idx = np.flatnonzero(np.abs(w.amplitudes) > 0)
    assert list(idx) == [1, 2, 4]
    assert np.allclose(w.amplitudes[idx], 1 / math.sqrt(3))
    d = qs.dicke_state(4, 2)
    assert np.count_nonzero(d.amplitudes) == 6


def test_spin_flip_of_w_is_dicke():
    assert np.allclose(qs.spin_flip(qs.w_state(4)).amplitudes, qs.dicke_state(4, 3).amplitudes)


def test_ghz_qudit_support():
    g = qs.generalized_ghz([0.6, 0.0, 0.8j], 3)
    assert g.local_dim == 3 and g.amplitudes[0] == 0.6 and g.amplitudes[13] == 0 and g.amplitudes[26] == 0.8j


def test_state_validation():
    with pytest.raises(ValueError):
        qs.PureState(2, 2, np.ones(4))
    with pytest.raises(ValueError):
        qs.PureState(2, 2, np.ones(3) / math.sqrt(3))
    with pytest.raises(ValueError):
        qs.DensityOperator(2, 1, np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValueError):
        qs.DensityOperator(2, 1, np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        qs.Observable((1, 1, 0))
    with pytest.raises(ValueError):
        qs.dicke_state(3, 4)


def test_json_roundtrips():
    s = qs.superpose([1, 0.3j], [qs.w_state(3), qs.ghz_state(3)])
    assert np.allclose(qs.PureState.from_json(s.to_json()).amplitudes, s.amplitudes)
    scen = random_scenario(np.random.default_rng(1), 3)
    assert np.allclose(qs.MeasurementScenario.from_json(scen.to_json()).bloch_array(), scen.bloch_array())


def test_observables():
    assert np.allclose(qs.observable_xz(math.pi / 2).matrix, qs.X)
    assert np.allclose(qs.observable_xy_z(0, math.pi / 2).matrix, qs.Y)
    assert np.allclose(qs.observable_from_plane_angle(0.0).matrix, qs.Z)
    with pytest.raises(ValueError):
        qs.observable_from_plane_angle(0.0, "YQ")


# reductions ---------------------------------------------------------------

@pytest.mark.parametrize("n", range(3, 9))
def test_w_loss_identity(n):
    """Tracing one party of W_N leaves |0..0>/N + (1 - 1/N) W_{N-1}."""
    red = qs.partial_trace(qs.w_state(n), 1).entries
    zero = np.zeros(2 ** (n - 1))
    zero[0] = 1
    target = np.outer(zero, zero) / n + (1 - 1 / n) * qs.w_state(n - 1).density().entries
    assert np.max(np.abs(red - target)) < 1e-12


def test_partial_trace_routes_agree():
    rng = np.random.default_rng(3)
    psi = random_state(rng, 4)
    for p in range(4):
        a = qs.partial_trace(psi, p).entries
        b = qs.partial_trace(psi.density(), p).entries
        assert np.allclose(a, b, atol=1e-14)
    with pytest.raises(ValueError):
        qs.partial_trace(psi, 4)


@pytest.mark.parametrize("n", range(2, 9))
def test_pauli_reconstruction_of_w(n):
    rho = qs.pauli_reconstruct(qs.pauli_expansion_w(n), n)
    assert np.max(np.abs(rho - qs.w_state(n).density().entries)) < 1e-12


def test_pauli_coefficients_are_expectations():
    n = 4
    w = qs.w_state(n)
    for word, c in qs.pauli_expansion_w(n)[:10]:
        assert qs.expectation(w, qs.pauli_word(word)) / 2**n == pytest.approx(c, abs=1e-14)


# Bell operators ----------------------------------------------------------

@pytest.mark.parametrize("name", ["M3", "S3", "B", "I4"])
def test_bell_operator_matches_brute_force(name):
    poly = known_inequality(name)[0]
    scen = random_scenario(np.random.default_rng(7), poly.n_parties)
    assert np.allclose(qs.bell_operator(poly, scen), brute_bell_operator(poly, scen), atol=1e-12)


@given(st.integers(0, 10**6), st.integers(2, 6))
def test_evaluation_routes_agree(seed, n):
    rng = np.random.default_rng(seed)
    coeffs = {(k, m): float(rng.integers(-3, 4)) for k in range(1, n + 1) for m in range(k + 1)}
    poly = SymmetricBellPolynomial.from_coeffs(n, coeffs)
    scen = random_scenario(rng, n)
    psi = random_state(rng, n)
    dense = qs.expectation(psi, qs.bell_operator(poly, scen))
    free = qs.quantum_value(poly, psi, scen)
    tens = qs.tensor_values(poly, qs.correlation_tensor(psi), scen.bloch_array()[None])[0]
    rho = qs.quantum_value(poly, psi.density(), scen)
    assert free == pytest.approx(dense, abs=1e-10)
    assert tens == pytest.approx(dense, abs=1e-10)
    assert rho == pytest.approx(dense, abs=1e-10)


def test_correlation_tensor_of_density_matches_pure():
    psi = random_state(np.random.default_rng(11), 3)
    assert np.allclose(qs.correlation_tensor(psi), qs.correlation_tensor(psi.density()), atol=1e-14)
    t = qs.correlation_tensor(qs.ghz_state(3))
    assert t[0, 0, 0] == pytest.approx(1) and t[3, 3, 0] == pytest.approx(1) and t[1, 1, 1] == pytest.approx(1)


def test_quantum_value_checks():
    poly = known_inequality("B")[0]
    with pytest.raises(ValueError):
        qs.quantum_value(poly, qs.w_state(4), qs.MeasurementScenario.symmetric_xz(0, 1, 4))
    with pytest.raises(ValueError):
        qs.quantum_value(poly, qs.w_state(3), qs.MeasurementScenario.symmetric_xz(0, 1, 4))
    with pytest.raises(ValueError):
        qs.quantum_value(poly, qs.generalized_ghz([1, 0, 0], 3), qs.MeasurementScenario.symmetric_xz(0, 1, 3))


def test_known_values():
    x, y = qs.Observable((1, 0, 0)), qs.Observable((0, 1, 0))
    m3 = known_inequality("M3")[0]
    assert qs.quantum_value(m3, qs.ghz_state(3), qs.MeasurementScenario.symmetric_pair(x, y, 3)) == pytest.approx(4, abs=1e-12)
    i5 = known_inequality("I5")[0]
    assert qs.quantum_value(i5, qs.w_state(5), qs.MeasurementScenario.symmetric_xz(0, math.pi / 2, 5)) == pytest.approx(28, abs=1e-9)


# certificate ---------------------------------------------------------------

@given(st.integers(0, 10**6), st.integers(2, 4), st.integers(3, 5))
def test_ghz_family_certified(seed, d, n):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    rep = qs.scbi_certificate(qs.generalized_ghz(v / np.linalg.norm(v), n))
    assert rep.certified and rep.max_reduced_deviation < 1e-12


def test_w_state_not_certified():
    w = qs.w_state(3)
    with pytest.raises(ValueError):
        qs.scbi_certificate(w)
    diag = qs.DensityOperator(2, 3, np.diag(np.abs(w.amplitudes) ** 2))
    rep = qs.scbi_certificate(w, diag)
    assert not rep.certified and rep.max_reduced_deviation == pytest.approx(1 / 3)


def test_certificate_rejects_non_diagonal_candidate():
    with pytest.raises(ValueError):
        qs.scbi_certificate(qs.ghz_state(3), qs.ghz_state(3).density())


def test_certified_state_respects_scbi():
    rng = np.random.default_rng(5)
    poly = scbi_sum(4)
    t = qs.correlation_tensor(qs.generalized_ghz([0.8, 0.6], 4))
    pair = rng.normal(size=(500, 1, 2, 3))
    pair /= np.linalg.norm(pair, axis=-1, keepdims=True)
    assert qs.tensor_values(poly, t, np.repeat(pair, 4, axis=1)).max() <= 8 + 1e-9
