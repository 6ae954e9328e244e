import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellstruct import qstate as qs
from bellstruct.bellpoly import SymmetricBellPolynomial, known_inequality, scbi_sum
from bellstruct.wcorr import (
    SymmetricAngles,
    evaluate_w_symmetric,
    w_correlator,
    w_full_correlator,
    w_subcorrelator,
)

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


def dense_correlator(n, order, k, t0, t1):
    """Parties 0..order-1 measured, the first k of them with setting 1."""
    a0, a1 = qs.observable_xz(t0).matrix, qs.observable_xz(t1).matrix
    ops = [a1] * k + [a0] * (order - k) + [qs.I2] * (n - order)
    return qs.expectation(qs.w_state(n), qs.kron_all(ops))


@given(angles, angles, st.integers(2, 7), st.data())
def test_every_order_matches_dense(t0, t1, n, data):
    order = data.draw(st.integers(1, n))
    k = data.draw(st.integers(0, order))
    assert w_correlator(n, order, k, (t0, t1)) == pytest.approx(dense_correlator(n, order, k, t0, t1), abs=1e-10)


@given(angles, angles)
def test_subcorrelator_is_order_n_minus_one(t0, t1):
    for k in range(5):
        assert w_subcorrelator(5, k, (t0, t1)) == w_correlator(5, 4, k, (t0, t1))


def test_z_settings():
    # all-Z correlators on W_N: -1 for the full term, (N - 2 order) / N below
    for n in (3, 6):
        assert w_full_correlator(n, 0, SymmetricAngles(0.0, 0.0)) == pytest.approx(-1)
        for order in range(1, n):
            assert w_correlator(n, order, 0, (0.0, 0.0)) == pytest.approx((n - 2 * order) / n)


def test_ranges():
    with pytest.raises(ValueError):
        w_full_correlator(3, 4, (0, 0))
    with pytest.raises(ValueError):
        w_subcorrelator(3, 3, (0, 0))
    with pytest.raises(ValueError):
        SymmetricAngles(float("nan"), 0)


@pytest.mark.parametrize("name", ["M3", "B", "I4", "I5"])
def test_polynomial_matches_state_vector(name):
    poly = known_inequality(name)[0]
    n = poly.n_parties
    for t0, t1 in [(0.3, 2.1), (1.0, -0.4), (0.0, math.pi / 2)]:
        ref = qs.quantum_value(poly, qs.w_state(n), qs.MeasurementScenario.symmetric_xz(t0, t1, n))
        assert evaluate_w_symmetric(poly, n, (t0, t1)) == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("n", [8, 9, 10])
def test_large_n_against_state_vector(n):
    poly = scbi_sum(n)
    ref = qs.quantum_value(poly, qs.w_state(n), qs.MeasurementScenario.symmetric_xz(0.7, 2.5, n))
    assert evaluate_w_symmetric(poly, n, (0.7, 2.5)) == pytest.approx(ref, abs=1e-10)


def test_broadcasting():
    poly = known_inequality("B")[0]
    t = np.linspace(0, math.pi, 7)
    vals = evaluate_w_symmetric(poly, 3, (t, math.pi - t))
    assert vals.shape == (7,)
    assert vals[3] == pytest.approx(evaluate_w_symmetric(poly, 3, (t[3], math.pi - t[3])))


def test_party_count_mismatch():
    with pytest.raises(ValueError):
        evaluate_w_symmetric(SymmetricBellPolynomial.from_coeffs(3, {(1, 0): 1}), 4, (0, 0))
