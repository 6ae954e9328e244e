"""``bellstruct`` command line.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error.
Every JSON document carries a ``manifest`` block; CSV output starts with
the manifest as a ``#`` comment line.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
import time
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from . import __version__
from . import polytope as pt
from . import qstate as qs
from .bellpoly import (
    BracketParseError,
    format_bracket,
    known_inequality,
    local_bound,
    noise_resistance,
    parse_bracket,
)
from .optim import OptimizationConfig, ghz_bound_probe, optimize_angles_symmetric, seesaw_max, table1
from .verify import TARGETS
from .wcorr import evaluate_w_symmetric

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    flags: dict
    seed: int | None
    version: str
    wall_time_s: float = 0.0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


_ANGLE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*(pi)?\s*$")


def parse_angle(text: str) -> float:
    """Radians; a trailing ``pi`` multiplies, e.g. ``0.2677pi`` or ``pi``."""
    m = _ANGLE.match(text)
    if not m or (m.group(1) is None and m.group(2) is None):
        raise argparse.ArgumentTypeError(f"bad angle {text!r}")
    x = float(m.group(1)) if m.group(1) is not None else 1.0
    return x * math.pi if m.group(2) else x


def load_inequality(text: str, n: int | None = None):
    """(polynomial, bound or None) from a known name or a bracket string."""
    try:
        poly, bound = known_inequality(text.strip())
        if n is not None and poly.n_parties != n:
            raise UsageError(f"{text} has {poly.n_parties} parties, --n is {n}")
        return poly, bound
    except KeyError:
        pass
    try:
        return parse_bracket(text, n), None
    except BracketParseError as exc:
        raise UsageError(f"cannot parse inequality {text!r}: {exc}") from exc


def build_state(args, n: int):
    kind = args.state
    if kind == "w":
        return qs.w_state(n)
    if kind == "ghz":
        return qs.ghz_state(n)
    if kind == "gghz":
        if args.amplitudes:
            amps = [complex(a.replace(" ", "")) for a in args.amplitudes.split(",")]
        else:
            amps = [1.0] * args.d
        if len(amps) != args.d:
            raise UsageError(f"--amplitudes has {len(amps)} entries, --d is {args.d}")
        amps = np.asarray(amps) / np.linalg.norm(amps)
        return qs.generalized_ghz(amps, n)
    if kind == "dicke":
        if not 0 <= args.k <= n:
            raise UsageError(f"Dicke excitation k={args.k} out of range for N={n}")
        return qs.dicke_state(n, args.k)
    raise UsageError(f"unknown state {kind}")


def _scenario(args, n: int) -> qs.MeasurementScenario:
    if args.scenario:
        with open(args.scenario) as fh:
            scen = qs.MeasurementScenario.from_json(json.load(fh))
        if scen.n_parties != n:
            raise UsageError(f"scenario has {scen.n_parties} parties, inequality has {n}")
        return scen
    if args.plane == "xy":
        a0 = qs.observable_xy_z(0.0, args.theta0)
        a1 = qs.observable_xy_z(0.0, args.theta1)
        return qs.MeasurementScenario.symmetric_pair(a0, a1, n)
    return qs.MeasurementScenario.symmetric_xz(args.theta0, args.theta1, n)


def _config(args, **kw) -> OptimizationConfig:
    if getattr(args, "restarts", None) is not None:
        kw.setdefault("restarts", args.restarts)
    if getattr(args, "tol", None) is not None:
        kw.setdefault("convergence_tol", args.tol)
    return OptimizationConfig.from_env(rng_seed=args.seed, **kw)


def _bound_str(b) -> str:
    return str(Fraction(b))


# ---------------------------------------------------------------------------
# commands; each returns (exit code, payload)

def cmd_bound(args):
    poly, _ = load_inequality(args.ineq, args.n)
    res = local_bound(poly)
    return EXIT_OK, {
        "inequality": format_bracket(poly),
        "n_parties": poly.n_parties,
        "bound": _bound_str(res.bound),
        "witness": {"counts": list(res.witness.counts), "order": ["++", "+-", "-+", "--"]},
    }


def cmd_eval(args):
    poly, bound = load_inequality(args.ineq, args.n)
    n = poly.n_parties
    if args.n is not None and args.n != n:
        raise UsageError(f"--n {args.n} does not match the {n}-party inequality")
    if bound is None:
        bound = local_bound(poly).bound
    if args.closed_form:
        if args.state != "w" or args.scenario or args.plane != "xz":
            raise UsageError("--closed-form needs --state w with XZ-plane angles")
        value = float(evaluate_w_symmetric(poly, n, (args.theta0, args.theta1)))
        route = "closed-form"
    else:
        state = build_state(args, n)
        if state.local_dim != 2:
            raise UsageError("measurements are qubit observables; --d must be 2 for evaluation")
        value = qs.quantum_value(poly, state, _scenario(args, n))
        route = "state-vector"
    w = noise_resistance(float(bound), value) if value > 0 else None
    return EXIT_OK, {
        "inequality": format_bracket(poly),
        "state": args.state,
        "n_parties": n,
        "theta0": args.theta0,
        "theta1": args.theta1,
        "route": route,
        "value": value,
        "bound": _bound_str(bound),
        "violation": value > float(bound),
        "w": w,
    }


def cmd_table1(args):
    ns = [int(x) for x in args.n_list.split(",")] if args.n_list else [4, 5, 6, 7, 8, 10, 12, 15, 20, 40]
    if any(n < 3 for n in ns):
        raise UsageError("Table 1 rows need N >= 3")
    rows = table1(tuple(ns), _config(args))
    return EXIT_OK, [asdict(r) for r in rows]


def cmd_verify(args):
    kw = {}
    if args.target in ("appendixA", "appendixC") and args.restarts is not None:
        kw["restarts"] = args.restarts
    if args.target == "appendixC":
        kw["seed"] = args.seed
    checks = TARGETS[args.target](**kw)
    failed = [c.name for c in checks if not c.passed]
    payload = {"target": args.target, "passed": not failed, "failed": failed, "checks": [c.to_json() for c in checks]}
    for name in failed:
        print(f"FAILED: {name}", file=sys.stderr)
    return (EXIT_FAIL if failed else EXIT_OK), payload


def cmd_facets(args):
    if args.n not in pt.FACET_N_RANGE:
        raise UsageError(f"--n must be in 3..5, got {args.n}")
    facets = pt.enumerate_facets(args.n)
    orbits = pt.group_by_orbit(facets)
    found = {}
    for name, n in (("I4", 4), ("I5", 5)):
        if n == args.n:
            found[name] = pt.orbit_key_of(*known_inequality(name)) in orbits
    return EXIT_OK, {
        "n": args.n,
        "facet_count": len(facets),
        "orbit_count": len(orbits),
        "found": found,
        "orbits": [
            {
                "representative": {"bracket": format_bracket(fs[0].as_polynomial()), "bound": fs[0].bound},
                "members": [{"bracket": format_bracket(f.as_polynomial()), "bound": f.bound} for f in fs],
            }
            for fs in orbits.values()
        ],
    }


def cmd_optimize(args):
    poly, bound = load_inequality(args.ineq, args.n)
    family = {"w": "W", "ghz": "GHZ"}.get(args.state, "fixed")
    state = build_state(args, poly.n_parties) if family == "fixed" else None
    rep = optimize_angles_symmetric(poly, family, _config(args), state)
    if bound is None:
        bound = local_bound(poly).bound
    out = rep.to_json()
    out.update(bound=_bound_str(bound), w=noise_resistance(float(bound), rep.value) if rep.value > 0 else None)
    return EXIT_OK, out


def cmd_seesaw(args):
    poly, bound = load_inequality(args.ineq, args.n)
    rep = seesaw_max(poly, _config(args))
    if bound is None:
        bound = local_bound(poly).bound
    out = rep.to_json()
    out.update(bound=_bound_str(bound), w=noise_resistance(float(bound), rep.value))
    return EXIT_OK, out


def cmd_probe(args):
    poly, _ = load_inequality(args.ineq, args.n)
    restarts = args.restarts if args.restarts is not None else 10_000
    cfg = _config(args, restarts=1, max_iterations=500)
    rep = ghz_bound_probe(poly, restarts, cfg)
    return EXIT_OK, rep.to_json()


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bellstruct", description="Symmetric multipartite Bell inequalities.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, ineq=True):
        if ineq:
            sp.add_argument("--ineq", required=True, help="name (M3, S3, B, I4, I5, MABK_N, BN_N) or bracket string")
        sp.add_argument("--n", type=int, help="number of parties")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="also write the output to this file")

    def state_flags(sp, default="w"):
        sp.add_argument("--state", choices=["w", "ghz", "gghz", "dicke"], default=default)
        sp.add_argument("--d", type=int, default=2, help="local dimension of gghz")
        sp.add_argument("--amplitudes", help="comma separated gghz amplitudes (Python complex syntax)")
        sp.add_argument("--k", type=int, default=1, help="Dicke excitation number")

    sp = sub.add_parser("bound", help="exact local bound")
    common(sp)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("eval", help="quantum value at given settings")
    common(sp)
    state_flags(sp)
    sp.add_argument("--theta0", type=parse_angle, default=0.0)
    sp.add_argument("--theta1", type=parse_angle, default=0.0)
    sp.add_argument("--plane", choices=["xz", "xy"], default="xz")
    sp.add_argument("--scenario", help="JSON scenario file")
    sp.add_argument("--closed-form", action="store_true")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("table1", help="B_N on W_N noise resistance (CSV)")
    common(sp, ineq=False)
    sp.add_argument("--n-list", help="comma separated N values")
    sp.add_argument("--restarts", type=int)
    sp.add_argument("--tol", type=float)
    sp.set_defaults(func=cmd_table1)

    sp = sub.add_parser("verify", help="run a named group of reproduction checks")
    sp.add_argument("target", choices=sorted(TARGETS))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--restarts", type=int)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("facets", help="facets of the projected symmetric local polytope")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_facets)

    for name, func, help_ in [
        ("optimize", cmd_optimize, "maximise over shared XZ-plane angles"),
        ("seesaw", cmd_seesaw, "see-saw maximum over states and measurements"),
        ("probe", cmd_probe, "largest value over generalized GHZ qubit states"),
    ]:
        sp = sub.add_parser(name, help=help_)
        common(sp)
        if name == "optimize":
            state_flags(sp)
        sp.add_argument("--restarts", type=int)
        sp.add_argument("--tol", type=float)
        sp.set_defaults(func=func)
    return p


def _render(args, manifest: RunManifest, payload) -> str:
    if args.command == "table1":
        buf = io.StringIO()
        buf.write("# manifest: " + json.dumps(asdict(manifest), sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "bound", "Q", "w", "theta0", "theta1"])
        for r in payload:
            w.writerow([r["n"], r["bound"], f"{r['q']:.6f}", f"{r['w']:.4f}", f"{r['theta0']:.6f}", f"{r['theta1']:.6f}"])
        return buf.getvalue()
    return json.dumps({"manifest": asdict(manifest), "result": payload}, indent=2, sort_keys=True) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    flags = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    manifest = RunManifest(args.command, flags, getattr(args, "seed", None), __version__)
    start = time.perf_counter()
    try:
        code, payload = args.func(args)
    except UsageError as exc:
        print(f"bellstruct: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"bellstruct: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest.wall_time_s = round(time.perf_counter() - start, 6)
    text = _render(args, manifest, payload)
    sys.stdout.write(text)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
