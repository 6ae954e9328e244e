"""Numerical maximisation of quantum values.

* ``optimize_angles_symmetric``: two shared XZ-plane angles, coarse grid then
  Nelder-Mead polish.
* ``seesaw_max``: alternating state / measurement optimisation over all
  qubit states and per-party Bloch vectors.
* ``block_ascent``: batched coordinate ascent over per-party Bloch vectors
  for a fixed state (the polynomial is affine in each Bloch vector, so each
  block update is the normalised conditional correlation vector).
* ``ghz_bound_probe``: the same ascent over generalized GHZ qubit states,
  with the Schmidt angle updated in closed form.

Everything is reproducible from ``OptimizationConfig.rng_seed``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import qstate as qs
from .bellpoly import SymmetricBellPolynomial, known_inequality, noise_resistance, scbi_bound, scbi_sum
from .wcorr import evaluate_w_symmetric

FAMILIES = ("W", "GHZ", "fixed")


@dataclass(frozen=True)
class OptimizationConfig:
    restarts: int = 8
    grid_resolution: int = 180
    convergence_tol: float = 1e-12
    max_iterations: int = 2000
    rng_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be positive")
        if self.grid_resolution < 2:
            raise ValueError("grid_resolution must be >= 2")

    @classmethod
    def from_env(cls, **kw) -> OptimizationConfig:
        threads = os.environ.get("BELLSTRUCT_THREADS")
        if threads and "workers" not in kw:
            kw["workers"] = max(1, int(threads))
        return cls(**kw)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class OptimumReport:
    value: float
    theta0: float | None = None
    theta1: float | None = None
    scenario: qs.MeasurementScenario | None = None
    state: qs.PureState | None = None
    history: list[float] = field(default_factory=list)
    config: OptimizationConfig | None = None

    def to_json(self) -> dict:
        out = {"value": self.value, "history_length": len(self.history)}
        if self.theta0 is not None:
            out.update(theta0=self.theta0, theta1=self.theta1,
                       theta0_over_pi=self.theta0 / math.pi, theta1_over_pi=self.theta1 / math.pi)
        if self.scenario is not None:
            out["scenario"] = self.scenario.to_json()
        if self.state is not None:
            out["state"] = self.state.to_json()
        if self.config is not None:
            out["config"] = self.config.to_json()
        return out


def _pmap(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _child_rngs(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def xz_bloch(theta0, theta1, n: int) -> np.ndarray:
    """Batch of symmetric XZ scenarios as a (batch, N, 2, 3) Bloch array."""
    t0, t1 = np.broadcast_arrays(np.atleast_1d(theta0), np.atleast_1d(theta1))
    b = np.zeros((t0.size, n, 2, 3))
    b[:, :, 0, 0] = np.sin(t0.ravel())[:, None]
    b[:, :, 0, 2] = np.cos(t0.ravel())[:, None]
    b[:, :, 1, 0] = np.sin(t1.ravel())[:, None]
    b[:, :, 1, 2] = np.cos(t1.ravel())[:, None]
    return b


# ---------------------------------------------------------------------------
# symmetric angle search

def _angle_objective(poly: SymmetricBellPolynomial, family: str, n: int, state: qs.PureState | None):
    if family == "W":
        return lambda t0, t1: np.atleast_1d(evaluate_w_symmetric(poly, n, (t0, t1))).ravel()
    if family == "GHZ":
        state = qs.ghz_state(n)
    elif family != "fixed" or state is None:
        raise ValueError(f"unknown family {family!r} (or missing state)")
    tensor = qs.correlation_tensor(state)
    return lambda t0, t1: qs.tensor_values(poly, tensor, xz_bloch(t0, t1, n))


def _canonical_angles(poly: SymmetricBellPolynomial, family: str, t0: float, t1: float):
    """Pick one representative among value-preserving angle symmetries."""
    two_pi = 2 * math.pi
    # A_s -> -A_s (theta_s + pi) is harmless when every term has an even
    # number of setting-s factors
    even0 = all((k - m) % 2 == 0 for (k, m), _ in poly.terms)
    even1 = all(m % 2 == 0 for (k, m), _ in poly.terms)

    def reduce(a, b):
        a, b = a % two_pi, b % two_pi
        return (a % math.pi if even0 else a), (b % math.pi if even1 else b)

    t0, t1 = reduce(float(t0), float(t1))
    if family == "W" and t0 > math.pi:
        # Z^N conjugation fixes Dicke states and maps X -> -X, i.e. theta -> -theta
        t0, t1 = reduce(-t0, -t1)
    return t0, t1


def optimize_angles_symmetric(
    poly: SymmetricBellPolynomial,
    family: str = "W",
    config: OptimizationConfig = OptimizationConfig(),
    state: qs.PureState | None = None,
) -> OptimumReport:
    """Maximise over shared XZ-plane angles (theta0, theta1).

    The result is a lower bound on the optimum: a grid of
    ``grid_resolution``^2 points over [0, 2pi)^2, then Nelder-Mead from the
    ``restarts`` best grid cells.
    """
    n = poly.n_parties
    if family == "fixed" and state is not None and state.n_parties != n:
        raise ValueError("state and polynomial party counts differ")
    f = _angle_objective(poly, family, n, state)
    grid = np.arange(config.grid_resolution) * (2 * math.pi / config.grid_resolution)
    g0, g1 = np.meshgrid(grid, grid, indexing="ij")
    vals = f(g0.ravel(), g1.ravel())
    order = np.argsort(-vals, kind="stable")[: config.restarts]
    starts = [(g0.ravel()[i], g1.ravel()[i]) for i in order]

    def polish(x0):
        res = minimize(
            lambda x: -f(x[0], x[1])[0],
            np.array(x0),
            method="Nelder-Mead",
            options={"xatol": 1e-11, "fatol": 1e-14, "maxiter": config.max_iterations},
        )
        return res.x, -res.fun

    results = _pmap(polish, starts, config.workers)
    best = max(range(len(results)), key=lambda i: (results[i][1], -i))
    t0, t1 = _canonical_angles(poly, family, *results[best][0])
    value = float(f(t0, t1)[0])
    return OptimumReport(
        value,
        t0,
        t1,
        scenario=qs.MeasurementScenario.symmetric_xz(t0, t1, n),
        state=state if family == "fixed" else None,
        history=[float(r[1]) for r in results],
        config=config,
    )


@dataclass(frozen=True)
class Table1Row:
    n: int
    bound: int
    q: float
    w: float
    theta0: float
    theta1: float


def table1(ns=(4, 5, 6, 7, 8, 10, 12, 15, 20, 40), config: OptimizationConfig = OptimizationConfig()) -> list[Table1Row]:
    """Noise resistance of B_N on W_N.  Rows without violation report w = 1."""
    rows = []
    for n in ns:
        if n < 3:
            raise ValueError("B_N needs N >= 3")
        rep = optimize_angles_symmetric(scbi_sum(n), "W", config)
        bound = scbi_bound(n)
        w = min(1.0, noise_resistance(bound, rep.value)) if rep.value > 0 else 1.0
        rows.append(Table1Row(n, bound, rep.value, w, rep.theta0, rep.theta1))
    return rows


# ---------------------------------------------------------------------------
# block coordinate ascent over Bloch vectors

def random_bloch(rng: np.random.Generator, shape) -> np.ndarray:
    v = rng.normal(size=tuple(shape) + (3,))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _objective(poly, parts, bloch):
    """sum_i weight_i * value(tensor_i); weights are per batch element."""
    return sum(w * qs.tensor_values(poly, t, bloch) for w, t in parts)


def _block_update(poly, parts, bloch, p, s):
    """Replace Bloch vector (p, s) by its optimum with all else fixed."""
    batch = bloch.shape[0]
    probes = np.repeat(bloch[None], 4, axis=0)
    probes[0, :, p, s] = 0.0
    for i in range(3):
        probes[i + 1, :, p, s] = np.eye(3)[i]
    rep_parts = [(np.tile(w, 4), t) for w, t in parts]
    vals = _objective(poly, rep_parts, probes.reshape((4 * batch,) + bloch.shape[1:])).reshape(4, batch)
    grad = vals[1:] - vals[0]
    norm = np.linalg.norm(grad, axis=0)
    ok = norm > 1e-14
    bloch[ok, p, s] = (grad[:, ok] / norm[ok]).T
    return bloch


def block_ascent(
    poly: SymmetricBellPolynomial,
    state,
    restarts: int = 1000,
    config: OptimizationConfig = OptimizationConfig(),
    start: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Batched ascent over general per-party Bloch vectors for a fixed state.

    Returns (final values per restart, Bloch array (restarts, N, 2, 3)).
    """
    n = poly.n_parties
    tensor = qs.correlation_tensor(state)
    rng = np.random.default_rng(config.rng_seed)
    bloch = random_bloch(rng, (restarts, n, 2)) if start is None else np.array(start, dtype=float)
    values = _objective(poly, [(np.ones(bloch.shape[0]), tensor)], bloch)
    active = np.arange(bloch.shape[0])
    for _ in range(config.max_iterations):
        if active.size == 0:
            break
        sub = bloch[active]
        parts = [(np.ones(active.size), tensor)]
        for p in range(n):
            for s in range(2):
                sub = _block_update(poly, parts, sub, p, s)
        cur = _objective(poly, parts, sub)
        bloch[active] = sub
        moving = cur - values[active] >= config.convergence_tol
        values[active] = cur
        active = active[moving]
    return values, bloch


# ---------------------------------------------------------------------------
# see-saw

def _top_eigvec(op: np.ndarray) -> tuple[float, np.ndarray]:
    vals, vecs = np.linalg.eigh(op)
    return float(vals[-1]), vecs[:, -1]


def _seesaw_single(poly, bloch, config):
    n = poly.n_parties
    history = []
    value = -np.inf
    psi = None
    for _ in range(config.max_iterations):
        scen = qs.MeasurementScenario.from_bloch_array(bloch[0])
        top, vec = _top_eigvec(qs.bell_operator(poly, scen))
        psi = qs.PureState(2, n, vec / np.linalg.norm(vec))
        parts = [(np.ones(1), qs.correlation_tensor(psi))]
        for p in range(n):
            for s in range(2):
                bloch = _block_update(poly, parts, bloch, p, s)
        new = float(_objective(poly, parts, bloch)[0])
        history.append(new)
        if new - value < config.convergence_tol:
            value = max(value, new)
            break
        value = new
    return value, bloch, psi, history


def seesaw_max(poly: SymmetricBellPolynomial, config: OptimizationConfig = OptimizationConfig()) -> OptimumReport:
    """Maximum quantum value over N-qubit states and per-party measurements
    by see-saw: state <- top eigenvector, then each Bloch vector <- its
    normalised conditional correlation vector.  Multistart from random
    scenarios; the best restart wins (lowest index on ties)."""
    n = poly.n_parties
    if n > 12:
        raise ValueError("see-saw is limited to 12 qubits")
    rngs = _child_rngs(config.rng_seed, config.restarts)
    starts = [random_bloch(r, (1, n, 2)) for r in rngs]
    results = _pmap(lambda b: _seesaw_single(poly, b, config), starts, config.workers)
    best = max(range(len(results)), key=lambda i: (results[i][0], -i))
    value, bloch, psi, history = results[best]
    scen = qs.MeasurementScenario.from_bloch_array(bloch[0])
    top, vec = _top_eigvec(qs.bell_operator(poly, scen))
    psi = qs.PureState(2, n, vec / np.linalg.norm(vec))
    return OptimumReport(top, scenario=scen, state=psi, history=history, config=config)


# ---------------------------------------------------------------------------
# generalized GHZ qubit states and B = S3 + R2

def ghz_theta_state(theta: float, n: int = 3) -> qs.PureState:
    """cos(theta)|0..0> + sin(theta)|1..1>."""
    return qs.generalized_ghz([math.cos(theta), math.sin(theta)], n)


def _ghz_theta_parts(n: int):
    """Tensors (A, C, S) with rho(theta) = A + cos(2 theta) C + sin(2 theta) S."""
    zero = qs.correlation_tensor(ghz_theta_state(0.0, n))
    one = qs.correlation_tensor(ghz_theta_state(math.pi / 2, n))
    ghz = qs.correlation_tensor(ghz_theta_state(math.pi / 4, n))
    a = (zero + one) / 2
    return a, (zero - one) / 2, ghz - a


@dataclass
class ProbeReport:
    max_value: float
    theta: float
    bloch: np.ndarray
    values: np.ndarray

    def to_json(self) -> dict:
        return {
            "max_value": self.max_value,
            "theta": self.theta,
            "restarts": int(self.values.size),
            "scenario": {"symmetric": False, "parties": self.bloch.tolist()},
        }


def ghz_bound_probe(
    poly: SymmetricBellPolynomial | None = None,
    restarts: int = 10_000,
    config: OptimizationConfig = OptimizationConfig(),
) -> ProbeReport:
    """Largest tr(rho(theta) B) found over Schmidt angle theta and arbitrary
    per-party Bloch vectors, from ``restarts`` random starts.

    Complex amplitude phases are local Z rotations, absorbed by the
    measurement directions, so real theta over the full circle suffices.
    """
    if poly is None:
        poly = known_inequality("B")[0]
    n = poly.n_parties
    a, c, s = _ghz_theta_parts(n)
    rng = np.random.default_rng(config.rng_seed)
    bloch = random_bloch(rng, (restarts, n, 2))
    theta = rng.uniform(0, 2 * math.pi, restarts)

    def parts_for(th):
        return [(np.ones(th.size), a), (np.cos(2 * th), c), (np.sin(2 * th), s)]

    values = _objective(poly, parts_for(theta), bloch)
    active = np.arange(restarts)
    for _ in range(config.max_iterations):
        if active.size == 0:
            break
        sub, th = bloch[active], theta[active]
        for p in range(n):
            for st in range(2):
                sub = _block_update(poly, parts_for(th), sub, p, st)
        vc = qs.tensor_values(poly, c, sub)
        vs = qs.tensor_values(poly, s, sub)
        th = 0.5 * np.arctan2(vs, vc)
        cur = _objective(poly, parts_for(th), sub)
        bloch[active], theta[active] = sub, th
        moving = cur - values[active] >= config.convergence_tol
        values[active] = cur
        active = active[moving]
    prev = values
    i = int(np.argmax(prev))
    return ProbeReport(float(prev[i]), float(theta[i] % math.pi), bloch[i], prev)


def appendix_c_quantities(t2_0, t2_1, t3_0, t3_1):
    """(a, b, c, d) left after maximising tr(rho_GHZ B) over party 1.

    Inputs are the angles t_j^m of M_j^m = cos(t) XY + sin(t) Z for parties
    2 and 3.  a and c carry the sines of parties 2 and 3.
    """
    c20, c21, c30, c31 = np.cos(t2_0), np.cos(t2_1), np.cos(t3_0), np.cos(t3_1)
    s20, s21, s30, s31 = np.sin(t2_0), np.sin(t2_1), np.sin(t3_0), np.sin(t3_1)
    a = s21 + s31
    b = c20 * c30 + c20 * c31 + c21 * c30 - c21 * c31
    c = s20 + s30
    d = c20 * c30 - c20 * c31 - c21 * c30 - c21 * c31
    return a, b, c, d


def split_s3_r2(theta: float, scenario: qs.MeasurementScenario) -> tuple[float, float]:
    """(S3 part, R2 part) of tr(rho(theta) B) for a given scenario."""
    b_poly = known_inequality("B")[0]
    s3 = SymmetricBellPolynomial(3, tuple(t for t in b_poly.terms if t[0][0] == 3))
    r2 = SymmetricBellPolynomial(3, tuple(t for t in b_poly.terms if t[0][0] == 2))
    state = ghz_theta_state(theta)
    return qs.quantum_value(s3, state, scenario), qs.quantum_value(r2, state, scenario)
