"""Compare the pure-Python and compiled kernels on real lifted edges.

    python benchmarks/bench_kernels.py [curve ...] [--order N] [--edges K]

Curves are names of files in data/ (without the suffix).  For each curve the
lifts are computed once; then both backends integrate the differentials over
the first K edges at a fixed Gauss-Legendre order, and re-run the Newton step
between every pair of consecutive continuation nodes.  Timings are the best
of --repeat runs; the largest disagreement between backends is reported too.
"""
import argparse
import os
import sys
import time

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, os.pardir, "data")

from periodica import kernels  # noqa: E402
from periodica.numerics import legendre_rule  # noqa: E402
from periodica.pipeline import RiemannSurface  # noqa: E402


def load(name):
    with open(os.path.join(DATA, name + ".curve"), encoding="utf-8") as fh:
        src = fh.read()
    diffs = None
    path = os.path.join(DATA, name + ".diffs")
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            diffs = [ln.split("#", 1)[0].strip() for ln in fh]
        diffs = [d for d in diffs if d]
    return src, diffs


def best_of(fn, repeat):
    best, out = None, None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        dt = time.perf_counter() - t
        best = dt if best is None else min(best, dt)
    return best, out


def bench_curve(name, order, n_edges, repeat, impls):
    src, diffs = load(name)
    S = RiemannSurface(src, 100, diffs)
    ctx = S.ctx
    lifts = list(S.lifts.items())[:n_edges]
    skel = S.skeleton
    ycoeffs = S.curve.numeric(ctx)["y_coeffs"]
    hs = S.differentials.numeric(ctx)
    nodes, weights = legendre_rule(order, ctx)
    steps = sum(lift.steps for _, lift in lifts)

    def quad(mod):
        res = []
        for e, lift in lifts:
            v0, v1 = skel.vertex_value(e[0], ctx), skel.vertex_value(e[1], ctx)
            res.append(mod.edge_quadrature(ycoeffs, hs, v0, v1, lift.ts, lift.fibers, lift.radii,
                                           nodes, weights, ctx.prec))
        return res

    def newton(mod):
        res = []
        for e, lift in lifts:
            v0, v1 = skel.vertex_value(e[0], ctx), skel.vertex_value(e[1], ctx)
            with ctx.mp():
                xs = [v0 + (v1 - v0) * float(t) for t in lift.ts]
            for m in range(lift.steps):
                res.append(mod.advance(ycoeffs, xs[m + 1], lift.fibers[m], lift.radii[m], ctx.prec))
        return res

    rows = {}
    outs = {}
    for label, mod in impls.items():
        tq, q = best_of(lambda: quad(mod), repeat)
        tn, a = best_of(lambda: newton(mod), repeat)
        rows[label] = (tq, tn)
        outs[label] = (q, a)
    diff = 0.0
    if len(outs) == 2:
        (q1, a1), (q2, a2) = outs.values()
        for m1, m2 in zip(q1, q2):
            for r1, r2 in zip(m1, m2):
                diff = max(diff, max(float(abs(x - y)) for x, y in zip(r1, r2)))
        for f1, f2 in zip(a1, a2):
            diff = max(diff, max(float(abs(x - y)) for x, y in zip(f1, f2)))
    return {"curve": name, "genus": S.genus, "sheets": S.curve.n, "edges": len(lifts),
            "steps": steps, "times": rows, "max_diff": diff}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("curves", nargs="*", default=["fig1", "genus6", "macbeath"])
    ap.add_argument("--order", type=int, default=64)
    ap.add_argument("--edges", type=int, default=40)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    impls = kernels.backends()
    if "compiled" not in impls:
        print("compiled extension not built; timing the Python kernels only", file=sys.stderr)
    head = f"{'curve':10} {'g':>2} {'n':>2} {'edges':>5} {'steps':>5}"
    for label in impls:
        head += f" {label + ' quad':>14} {label + ' newton':>16}"
    head += f" {'speedup':>8} {'max diff':>9}"
    print(head)
    for name in args.curves:
        r = bench_curve(name, args.order, args.edges, args.repeat, impls)
        line = f"{r['curve']:10} {r['genus']:>2} {r['sheets']:>2} {r['edges']:>5} {r['steps']:>5}"
        for label in impls:
            tq, tn = r["times"][label]
            line += f" {tq:>13.3f}s {tn:>15.3f}s"
        if len(impls) == 2:
            (pq, pn), (cq, cn) = r["times"]["python"], r["times"]["compiled"]
            line += f" {(pq + pn) / (cq + cn):>7.1f}x {r['max_diff']:>9.1e}"
        print(line)


if __name__ == "__main__":
    main()
