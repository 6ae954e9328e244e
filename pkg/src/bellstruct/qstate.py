"""Dense multipartite states, qubit observables and Bell operators.

Parties are indexed from 0; party 0 is the most significant tensor factor
(the leftmost ket label).  Bell operators are qubit-only.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bellpoly import SymmetricBellPolynomial

MAX_DENSE_QUBITS = 14
CERTIFICATE_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}
PAULI_STACK = np.stack([I2, X, Y, Z])


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    local_dim: int
    n_parties: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.size != self.local_dim**self.n_parties:
            raise ValueError("amplitude vector has the wrong length")
        if abs(np.vdot(amps, amps).real - 1) > 1e-12:
            raise ValueError("state is not normalised")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> DensityOperator:
        return DensityOperator(self.local_dim, self.n_parties, np.outer(self.amplitudes, self.amplitudes.conj()))

    def to_json(self) -> dict:
        return {
            "d": self.local_dim,
            "n": self.n_parties,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
        }

    @classmethod
    def from_json(cls, obj) -> PureState:
        if isinstance(obj, str):
            obj = json.loads(obj)
        amps = np.array([complex(re, im) for re, im in obj["amplitudes"]])
        return cls(int(obj["d"]), int(obj["n"]), amps)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    local_dim: int
    n_parties: int
    entries: np.ndarray

    def __post_init__(self):
        rho = _frozen(self.entries)
        dim = self.local_dim**self.n_parties
        if rho.shape != (dim, dim):
            raise ValueError("density matrix has the wrong shape")
        if np.max(np.abs(rho - rho.conj().T), initial=0) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > 1e-12:
            raise ValueError("density matrix does not have unit trace")
        if dim <= 4096 and np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("density matrix is not positive semidefinite")
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class Observable:
    """Binary qubit observable x X + y Y + z Z with a unit Bloch vector."""

    bloch: tuple[float, float, float]

    def __post_init__(self):
        v = tuple(float(c) for c in self.bloch)
        if len(v) != 3 or abs(math.fsum(c * c for c in v) - 1) > 1e-12:
            raise ValueError(f"Bloch vector {self.bloch} is not a unit 3-vector")
        object.__setattr__(self, "bloch", v)

    @property
    def matrix(self) -> np.ndarray:
        x, y, z = self.bloch
        return x * X + y * Y + z * Z

    @classmethod
    def normalized(cls, v) -> Observable:
        v = np.asarray(v, dtype=float)
        return cls(tuple(v / np.linalg.norm(v)))


def observable_xz(theta: float) -> Observable:
    """cos(theta) Z + sin(theta) X."""
    return Observable((math.sin(theta), 0.0, math.cos(theta)))


def observable_xy_z(t: float, phi: float) -> Observable:
    """cos(t) (cos(phi) X + sin(phi) Y) + sin(t) Z."""
    c = math.cos(t)
    return Observable((c * math.cos(phi), c * math.sin(phi), math.sin(t)))


def observable_from_plane_angle(theta: float, plane: str = "XZ", phi: float = 0.0) -> Observable:
    if plane.upper() == "XZ":
        return observable_xz(theta)
    if plane.upper() in ("XY", "XY_Z", "XYPLANE_WITH_Z"):
        return observable_xy_z(theta, phi)
    raise ValueError(f"unknown plane {plane!r}")


@dataclass(frozen=True)
class MeasurementScenario:
    parties: tuple[tuple[Observable, Observable], ...]
    symmetric: bool = False

    def __post_init__(self):
        parties = tuple(tuple(p) for p in self.parties)
        if self.symmetric and len(set(parties)) > 1:
            raise ValueError("symmetric scenario with differing parties")
        object.__setattr__(self, "parties", parties)

    @property
    def n_parties(self) -> int:
        return len(self.parties)

    @classmethod
    def symmetric_pair(cls, a0: Observable, a1: Observable, n: int) -> MeasurementScenario:
        return cls(((a0, a1),) * n, symmetric=True)

    @classmethod
    def symmetric_xz(cls, theta0: float, theta1: float, n: int) -> MeasurementScenario:
        return cls.symmetric_pair(observable_xz(theta0), observable_xz(theta1), n)

    def bloch_array(self) -> np.ndarray:
        """Shape (N, 2, 3)."""
        return np.array([[o.bloch for o in pair] for pair in self.parties])

    @classmethod
    def from_bloch_array(cls, arr, symmetric: bool = False) -> MeasurementScenario:
        arr = np.asarray(arr, dtype=float)
        return cls(
            tuple((Observable.normalized(p[0]), Observable.normalized(p[1])) for p in arr),
            symmetric=symmetric,
        )

    def to_json(self) -> dict:
        return {"symmetric": self.symmetric, "parties": self.bloch_array().tolist()}

    @classmethod
    def from_json(cls, obj) -> MeasurementScenario:
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls.from_bloch_array(obj["parties"], symmetric=bool(obj.get("symmetric", False)))


# ---------------------------------------------------------------------------
# states

def basis_index(digits: Sequence[int], d: int = 2) -> int:
    idx = 0
    for j in digits:
        idx = idx * d + j
    return idx


def dicke_state(n: int, k: int) -> PureState:
    if not 0 <= k <= n:
        raise ValueError(f"excitation number {k} out of range for {n} qubits")
    amps = np.zeros(2**n, dtype=complex)
    for ones in itertools.combinations(range(n), k):
        digits = [0] * n
        for p in ones:
            digits[p] = 1
        amps[basis_index(digits)] = 1
    return PureState(2, n, amps / math.sqrt(math.comb(n, k)))


def w_state(n: int) -> PureState:
    if n < 2:
        raise ValueError("W state needs N >= 2")
    return dicke_state(n, 1)


def generalized_ghz(amplitudes: Sequence[complex], n: int) -> PureState:
    """sum_j amplitudes[j] |j>^N with local dimension len(amplitudes)."""
    alpha = np.asarray(amplitudes, dtype=complex)
    d = alpha.size
    if abs(np.vdot(alpha, alpha).real - 1) > 1e-12:
        raise ValueError("amplitudes are not normalised")
    amps = np.zeros(d**n, dtype=complex)
    for j, a in enumerate(alpha):
        amps[basis_index([j] * n, d)] = a
    return PureState(d, n, amps)


def ghz_state(n: int) -> PureState:
    return generalized_ghz([1 / math.sqrt(2), 1 / math.sqrt(2)], n)


def spin_flip(state: PureState) -> PureState:
    if state.local_dim != 2:
        raise ValueError("spin flip is defined for qubits only")
    # X on every qubit reverses the computational basis order
    return PureState(2, state.n_parties, state.amplitudes[::-1].copy())


def superpose(coeffs: Sequence[complex], states: Sequence[PureState]) -> PureState:
    """Normalised linear combination of states with equal shapes."""
    vec = sum(c * s.amplitudes for c, s in zip(coeffs, states))
    s0 = states[0]
    return PureState(s0.local_dim, s0.n_parties, vec / np.linalg.norm(vec))


def separable_surrogate(amplitudes: Sequence[complex], n: int) -> DensityOperator:
    """sigma_N = sum_j |alpha_j|^2 |j...j><j...j|."""
    alpha = np.asarray(amplitudes, dtype=complex)
    if abs(np.vdot(alpha, alpha).real - 1) > 1e-12:
        raise ValueError("amplitudes are not normalised")
    d = alpha.size
    diag = np.zeros(d**n)
    for j, a in enumerate(alpha):
        diag[basis_index([j] * n, d)] = abs(a) ** 2
    return DensityOperator(d, n, np.diag(diag))


# ---------------------------------------------------------------------------
# reductions and expectations

def _as_density(obj) -> DensityOperator:
    if isinstance(obj, PureState):
        return obj.density()
    if isinstance(obj, DensityOperator):
        return obj
    raise TypeError(f"expected PureState or DensityOperator, got {type(obj).__name__}")


def partial_trace(obj, party: int) -> DensityOperator:
    """Trace out one party."""
    d, n = obj.local_dim, obj.n_parties
    if not 0 <= party < n:
        raise ValueError(f"party {party} out of range for {n} parties")
    if n < 2:
        raise ValueError("cannot trace out the only party")
    if isinstance(obj, PureState):
        psi = obj.amplitudes.reshape((d,) * n)
        psi = np.moveaxis(psi, party, 0).reshape(d, -1)
        red = psi.T @ psi.conj()
    else:
        rho = _as_density(obj).entries.reshape((d,) * (2 * n))
        red = np.trace(rho, axis1=party, axis2=n + party).reshape(d ** (n - 1), -1)
    red = (red + red.conj().T) / 2
    return DensityOperator(d, n - 1, red)


def expectation(obj, operator: np.ndarray, tol: float = 1e-10) -> float:
    """tr(rho Op) for a state or density operator; the result must be real."""
    op = np.asarray(operator)
    if isinstance(obj, PureState):
        if op.shape != (obj.dim, obj.dim):
            raise ValueError("operator and state dimensions differ")
        val = np.vdot(obj.amplitudes, op @ obj.amplitudes)
    else:
        rho = _as_density(obj).entries
        if op.shape != rho.shape:
            raise ValueError("operator and state dimensions differ")
        val = np.einsum("ij,ji->", rho, op)
    if abs(val.imag) > tol:
        raise ValueError(f"expectation has imaginary part {val.imag:.3g}")
    return float(val.real)


def kron_all(ops) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def pauli_word(word: str) -> np.ndarray:
    return kron_all(PAULIS[c] for c in word)


# ---------------------------------------------------------------------------
# Bell operators

def _check_scenario(poly: SymmetricBellPolynomial, scenario: MeasurementScenario):
    if scenario.n_parties != poly.n_parties:
        raise ValueError(
            f"scenario has {scenario.n_parties} parties, polynomial has {poly.n_parties}"
        )
    if poly.n_parties > MAX_DENSE_QUBITS:
        raise ValueError(f"dense Bell operators are limited to {MAX_DENSE_QUBITS} qubits")


def bell_operator(poly: SymmetricBellPolynomial, scenario: MeasurementScenario) -> np.ndarray:
    """Dense Bell operator sum alpha(k, m) S(k, m) with the scenario's observables.

    Built from the last party backwards: G[(k, m)] is the operator on the
    remaining parties that completes a partial term already holding k
    factors, m of them setting 1.
    """
    _check_scenario(poly, scenario)
    n = poly.n_parties
    coeffs = poly.coeffs
    g = {
        (k, m): np.array([[float(coeffs.get((k, m), 0))]], dtype=complex)
        for k in range(n + 1)
        for m in range(k + 1)
    }
    for p in range(n - 1, -1, -1):
        a0, a1 = (o.matrix for o in scenario.parties[p])
        nxt = {}
        for k in range(p + 1):
            for m in range(k + 1):
                nxt[(k, m)] = (
                    np.kron(I2, g[(k, m)])
                    + np.kron(a0, g[(k + 1, m)])
                    + np.kron(a1, g[(k + 1, m + 1)])
                )
        g = nxt
    return g[(0, 0)]


def apply_bell_operator(poly: SymmetricBellPolynomial, scenario: MeasurementScenario, vec: np.ndarray) -> np.ndarray:
    """Bell operator applied to a state vector without forming the matrix."""
    _check_scenario(poly, scenario)
    n = poly.n_parties
    psi = np.asarray(vec, dtype=complex).reshape((2,) * n)
    terms = {(0, 0): psi}
    for p in range(n):
        a0, a1 = (o.matrix for o in scenario.parties[p])
        act0 = lambda t, op=a0, ax=p: np.moveaxis(np.tensordot(op, t, axes=(1, ax)), 0, ax)
        act1 = lambda t, op=a1, ax=p: np.moveaxis(np.tensordot(op, t, axes=(1, ax)), 0, ax)
        nxt = dict(terms)
        for (k, m), t in terms.items():
            for key, val in (((k + 1, m), act0(t)), ((k + 1, m + 1), act1(t))):
                nxt[key] = nxt[key] + val if key in nxt else val
        terms = nxt
    out = np.zeros_like(psi)
    for (k, m), a in poly.terms:
        out = out + float(a) * terms[(k, m)]
    return out.reshape(-1)


def quantum_value(poly: SymmetricBellPolynomial, obj, scenario: MeasurementScenario) -> float:
    if obj.local_dim != 2:
        raise ValueError("Bell operators are defined for qubits only")
    if obj.n_parties != poly.n_parties:
        raise ValueError("state and polynomial party counts differ")
    if isinstance(obj, PureState):
        out = apply_bell_operator(poly, scenario, obj.amplitudes)
        val = np.vdot(obj.amplitudes, out)
        if abs(val.imag) > 1e-10:
            raise ValueError(f"expectation has imaginary part {val.imag:.3g}")
        return float(val.real)
    return expectation(obj, bell_operator(poly, scenario))


# ---------------------------------------------------------------------------
# correlation tensor route (batched, used by the optimisers)

def correlation_tensor(obj) -> np.ndarray:
    """T[mu_1..mu_N] = tr(rho sigma_mu_1 x ... x sigma_mu_N), real, shape (4,)*N."""
    if obj.local_dim != 2:
        raise ValueError("correlation tensors are defined for qubits only")
    n = obj.n_parties
    # cur[b..., k...] holds rho[k, b]; tr(rho S) = sum rho[k, b] S[b, k]
    if isinstance(obj, PureState):
        psi = obj.amplitudes.reshape((2,) * n)
        cur = np.multiply.outer(psi.conj(), psi)
    else:
        rho = obj.entries.reshape((2,) * (2 * n))
        cur = np.transpose(rho, list(range(n, 2 * n)) + list(range(n)))
    for p in range(n):
        # axes: (mu_0..mu_{p-1}, b_p..b_{n-1}, k_p..k_{n-1})
        cur = np.tensordot(cur, PAULI_STACK, axes=([p, n], [1, 2]))
        cur = np.moveaxis(cur, -1, p)
    return np.ascontiguousarray(cur.real)


def tensor_values(poly: SymmetricBellPolynomial, tensor: np.ndarray, bloch: np.ndarray) -> np.ndarray:
    """Polynomial values for a batch of scenarios.

    ``bloch`` has shape (batch, N, 2, 3).  The generating function
    prod_p (e_0 + x b0_p + y b1_p) is contracted against the correlation
    tensor one party at a time, keeping the (x, y) degrees as array axes.
    """
    n = poly.n_parties
    bloch = np.asarray(bloch, dtype=float)
    chunk = max(1, int(4e6 // 4**n))
    if bloch.shape[0] > chunk:
        return np.concatenate(
            [tensor_values(poly, tensor, bloch[i : i + chunk]) for i in range(0, bloch.shape[0], chunk)]
        )
    batch = bloch.shape[0]
    # cur[batch, j, m, rest] with j factors placed so far, m of them setting 1
    cur = np.broadcast_to(tensor.reshape(1, 1, 1, -1), (batch, 1, 1, tensor.size))
    for p in range(n):
        j, m = cur.shape[1:3]
        split = cur.reshape(batch, j, m, 4, -1)
        vec = split[:, :, :, 1:]
        new = np.zeros((batch, j + 1, m + 1, split.shape[-1]))
        new[:, :j, :m] += split[:, :, :, 0]
        new[:, 1:, :m] += np.einsum("bjmir,bi->bjmr", vec, bloch[:, p, 0])
        new[:, 1:, 1:] += np.einsum("bjmir,bi->bjmr", vec, bloch[:, p, 1])
        cur = new
    cur = cur[..., 0]
    out = np.zeros(batch)
    for (k, m), a in poly.terms:
        out += float(a) * cur[:, k, m]
    return out


# ---------------------------------------------------------------------------
# Pauli expansion of the W state

def pauli_expansion_w(n: int) -> list[tuple[str, float]]:
    """rho_W as explicit Pauli words, with every symmetric placement listed.

    Diagonal part: (N - 2k) on each word with k Z's and identities elsewhere.
    Coherences: 2 on XX and YY at every pair, with each remaining party
    carrying I or Z.  Everything is scaled by 1 / (N 2^N).
    """
    if n < 2:
        raise ValueError("W state needs N >= 2")
    scale = 1.0 / (n * 2**n)
    terms = []
    for k in range(n + 1):
        if n - 2 * k == 0:
            continue
        for zs in itertools.combinations(range(n), k):
            word = ["I"] * n
            for p in zs:
                word[p] = "Z"
            terms.append(("".join(word), (n - 2 * k) * scale))
    for i, j in itertools.combinations(range(n), 2):
        rest = [p for p in range(n) if p not in (i, j)]
        for fill in itertools.product("IZ", repeat=n - 2):
            for pair in "XY":
                word = [pair] * n
                for p, c in zip(rest, fill):
                    word[p] = c
                terms.append(("".join(word), 2 * scale))
    return terms


def pauli_reconstruct(terms, n: int) -> np.ndarray:
    out = np.zeros((2**n, 2**n), dtype=complex)
    for word, c in terms:
        out += c * pauli_word(word)
    return out


# ---------------------------------------------------------------------------
# separable surrogate certificate

@dataclass(frozen=True)
class CertificateReport:
    certified: bool
    max_reduced_deviation: float


def ghz_amplitudes(state: PureState, tol: float = 1e-12) -> np.ndarray | None:
    """alpha_j when ``state`` is sum_j alpha_j |j>^N, else None."""
    d, n = state.local_dim, state.n_parties
    support = {basis_index([j] * n, d): j for j in range(d)}
    amps = state.amplitudes
    mask = np.ones(amps.size, dtype=bool)
    mask[list(support)] = False
    if np.max(np.abs(amps[mask]), initial=0) > tol:
        return None
    return np.array([amps[i] for i in support])


def scbi_certificate(state, candidate: DensityOperator | None = None, tol: float = CERTIFICATE_TOL) -> CertificateReport:
    """Check tr_k(rho) == tr_k(sigma) for every party k.

    ``sigma`` must be diagonal in the product basis, hence separable; it then
    provides a local model for every sub-correlation polynomial.  Without a
    candidate, the surrogate is derived for generalized GHZ states.
    """
    if candidate is None:
        if not isinstance(state, PureState):
            raise ValueError("a candidate separable state is required")
        alpha = ghz_amplitudes(state)
        if alpha is None:
            raise ValueError("state is not of generalized GHZ form; supply a candidate")
        candidate = separable_surrogate(alpha, state.n_parties)
    if (candidate.local_dim, candidate.n_parties) != (state.local_dim, state.n_parties):
        raise ValueError("candidate and state dimensions differ")
    off = candidate.entries - np.diag(np.diag(candidate.entries))
    if np.max(np.abs(off), initial=0) > tol:
        raise ValueError("candidate is not diagonal in the product basis")
    dev = max(
        float(np.max(np.abs(partial_trace(state, k).entries - partial_trace(candidate, k).entries)))
        for k in range(state.n_parties)
    )
    return CertificateReport(dev <= tol, dev)
