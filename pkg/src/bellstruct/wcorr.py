"""Closed-form W-state correlators for symmetric XZ-plane measurements.

All parties measure ``A_j = cos(theta_j) Z + sin(theta_j) X``.  By
permutation symmetry of |W_N>, a correlator depends only on how many of its
factors use setting 1, so any symmetric polynomial can be evaluated for
large N without building a state.  Functions broadcast over numpy arrays of
angles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bellpoly import SymmetricBellPolynomial


@dataclass(frozen=True)
class SymmetricAngles:
    theta0: float
    theta1: float

    def __post_init__(self):
        if not (math.isfinite(self.theta0) and math.isfinite(self.theta1)):
            raise ValueError("angles must be finite")


def _unpack(angles):
    if isinstance(angles, SymmetricAngles):
        return angles.theta0, angles.theta1
    t0, t1 = angles
    return np.asarray(t0, dtype=float), np.asarray(t1, dtype=float)


def w_full_correlator(n: int, k: int, angles):
    """tr(rho_W_N T) for an N-party correlator with k factors at setting 1."""
    if n < 1 or not 0 <= k <= n:
        raise ValueError(f"k={k} out of range for N={n}")
    t0, t1 = _unpack(angles)
    c0, s0, c1, s1 = np.cos(t0), np.sin(t0), np.cos(t1), np.sin(t1)
    out = -(c0 ** (n - k)) * c1**k
    bracket = 0.0
    if k >= 2:
        bracket = bracket + math.comb(k, 2) * c0 ** (n - k) * s1**2 * c1 ** (k - 2)
    if 1 <= k <= n - 1:
        bracket = bracket + k * (n - k) * c0 ** (n - k - 1) * s0 * s1 * c1 ** (k - 1)
    if n - k >= 2:
        bracket = bracket + math.comb(n - k, 2) * c0 ** (n - k - 2) * s0**2 * c1**k
    return out + 2.0 / n * bracket


def _reduced_weights(n: int, order: int) -> tuple[float, float]:
    """Weights (w_zero, w_W) of tracing W_N down to ``order`` parties.

    Each single-party trace maps W_n to |0..0>/n + (1 - 1/n) W_{n-1}, and
    leaves |0..0> unchanged.
    """
    w_zero, w_w = 0.0, 1.0
    for size in range(n, order, -1):
        w_zero += w_w / size
        w_w *= 1.0 - 1.0 / size
    return w_zero, w_w


def w_correlator(n: int, order: int, k: int, angles):
    """Expectation on W_N of an ``order``-party correlator with k settings 1."""
    if not 1 <= order <= n or not 0 <= k <= order:
        raise ValueError(f"invalid correlator (order={order}, k={k}) for N={n}")
    if order == n:
        return w_full_correlator(n, k, angles)
    t0, t1 = _unpack(angles)
    w_zero, w_w = _reduced_weights(n, order)
    product = np.cos(t0) ** (order - k) * np.cos(t1) ** k
    return w_zero * product + w_w * w_full_correlator(order, k, angles)


def w_subcorrelator(n: int, k: int, angles):
    """(N-1)-party correlator on W_N: c0^(N-1-k) c1^k / N + (1 - 1/N) full(N-1, k)."""
    if not 0 <= k <= n - 1:
        raise ValueError(f"k={k} out of range for an (N-1)-party term, N={n}")
    return w_correlator(n, n - 1, k, angles)


def evaluate_w_symmetric(poly: SymmetricBellPolynomial, n: int, angles):
    """Value of a symmetric polynomial on |W_N> with shared XZ-plane settings."""
    if poly.n_parties != n:
        raise ValueError(f"polynomial has {poly.n_parties} parties, expected {n}")
    t0, t1 = _unpack(angles)
    total = np.zeros(np.broadcast(t0, t1).shape)
    for (k, m), a in poly.terms:
        mult = math.comb(n, k) * math.comb(k, m)
        total = total + float(a) * mult * w_correlator(n, k, m, (t0, t1))
    return total if total.shape else float(total)
