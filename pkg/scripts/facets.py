"""Facet enumeration of the projected symmetric local polytope for N = 3..5.

Prints facet and orbit counts, whether I4/I5 are recovered, and timings.
N=5 takes several minutes on one core.
"""
import argparse
import json
import time

from bellstruct import polytope as pt
from bellstruct.bellpoly import format_bracket, known_inequality

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--n", type=int, nargs="+", default=[3, 4, 5])
ap.add_argument("--out", help="write orbit representatives as JSON")
args = ap.parse_args()

known = {4: "I4", 5: "I5"}
dump = {}
for n in args.n:
    t0 = time.perf_counter()
    facets = pt.enumerate_facets(n)
    t1 = time.perf_counter()
    orbits = pt.group_by_orbit(facets)
    verts = pt.project_vertices(n)
    certified = pt.certify_facets([(f.coeffs, f.bound) for f in facets], verts).all()
    t2 = time.perf_counter()
    msg = f"N={n}: {len(verts)} vertices, {len(facets)} facets, {len(orbits)} orbits, certified={certified}"
    if n in known:
        poly, bound = known_inequality(known[n])
        msg += f", {known[n]} found={pt.orbit_key_of(poly, bound) in orbits}"
    print(msg + f" (enumerate {t1 - t0:.1f}s, check {t2 - t1:.1f}s)", flush=True)
    dump[n] = [{"poly": format_bracket(g[0].as_polynomial()), "bound": g[0].bound, "size": len(g)} for g in orbits.values()]

if args.out:
    with open(args.out, "w") as fh:
        json.dump(dump, fh)
