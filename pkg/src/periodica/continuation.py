"""Certified continuation of fibers along skeleton edges, and monodromy."""
from __future__ import annotations

import json
import math
import os
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2

from . import kernels
from .curve import PlaneCurve
from .errors import (DiskEscape, MonodromyRelationFailed, NearCriticalFiber, NotIrreducible,
                     PathTooClose, SlowConvergence)
from .numerics import PrecisionContext, mpc, mpfr, roots, to_mpfr
from .skeleton import INF, VoronoiSkeleton, loop_path

MAX_HALVINGS = 60


def fiber(curve: PlaneCurve, x0, ctx: PrecisionContext) -> list:
    """The n roots of f(x0, y), canonically sorted."""
    p = curve.fiber_poly(x0, ctx)
    ys = roots(p, ctx)
    if len(ys) > 1 and min_distance(ys, ctx) < ctx.eps(ctx.working_bits // 2):
        raise NearCriticalFiber("fiber points nearly coincide")
    return ys


def min_distance(ys, ctx) -> mpfr:
    with ctx.mp():
        best = None
        for a in range(len(ys)):
            for b in range(a + 1, len(ys)):
                d = abs(ys[a] - ys[b])
                if best is None or d < best:
                    best = d
        return best


def _radius(ys, ctx):
    if len(ys) == 1:
        with ctx.mp():
            return mpfr(1) + abs(ys[0])
    with ctx.mp():
        return min_distance(ys, ctx) / 3


# ---------------------------------------------------------------------------
# permutations (tuples, 0-based, acting on the right)

def perm_compose(p, q):
    """First p, then q."""
    return tuple(q[i] for i in p)


def perm_inverse(p):
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


def perm_cycles(p) -> list[list[int]]:
    seen = set()
    out = []
    for i in range(len(p)):
        if i in seen:
            continue
        cyc = [i]
        seen.add(i)
        j = p[i]
        while j != i:
            cyc.append(j)
            seen.add(j)
            j = p[j]
        out.append(cyc)
    return out


def cycle_type(p) -> list[int]:
    return sorted((len(c) for c in perm_cycles(p)), reverse=True)


# ---------------------------------------------------------------------------

@dataclass
class EdgeLift:
    edge: tuple
    ts: list            # Fractions, 0 = t_0 < ... < t_m = 1
    radii: list         # mpfr, one per node
    fibers: list        # fibers[m][k]
    permutation: tuple
    prec: int

    @property
    def steps(self) -> int:
        return len(self.ts) - 1

    def to_json(self):
        return {
            "edge": list(self.edge),
            "prec": self.prec,
            "t": [f"{t.numerator}/{t.denominator}" for t in self.ts],
            "radii": [hexfloat(r) for r in self.radii],
            "fibers": [[[hexfloat(y.real), hexfloat(y.imag)] for y in fb] for fb in self.fibers],
            "permutation": list(self.permutation),
        }

    @classmethod
    def from_json(cls, d):
        prec = d["prec"]
        with gmpy2.context(precision=prec):
            ts = [Fraction(s) for s in d["t"]]
            radii = [parse_hexfloat(s) for s in d["radii"]]
            fibers = [[mpc(parse_hexfloat(a), parse_hexfloat(b)) for a, b in fb] for fb in d["fibers"]]
        return cls(tuple(d["edge"]), ts, radii, fibers, tuple(d["permutation"]), prec)


def hexfloat(x) -> str:
    m, e = mpfr(x).as_mantissa_exp()
    m, e = int(m), int(e)
    sign = "-" if m < 0 else ""
    return f"{sign}0x{abs(m):x}p{e}"


_HEX = re.compile(r"(-?)0x([0-9a-f]+)p(-?\d+)")


def parse_hexfloat(s: str):
    mt = _HEX.fullmatch(s)
    if not mt:
        raise ValueError(f"bad hex float {s!r}")
    m = int(mt.group(2), 16)
    if mt.group(1):
        m = -m
    e = int(mt.group(3))
    with gmpy2.context(precision=max(64, m.bit_length() + 2)):
        v = gmpy2.mul_2exp(mpfr(m), e) if hasattr(gmpy2, "mul_2exp") else mpfr(m) * gmpy2.exp2(e)
    return mpfr(v)


class FiberCache:
    """Canonical fibers at skeleton vertices."""

    def __init__(self, curve, skel, ctx):
        self.curve, self.skel, self.ctx = curve, skel, ctx
        self._data: dict = {}
        self._lock = threading.Lock()

    def __getitem__(self, v):
        with self._lock:
            got = self._data.get(v)
        if got is None:
            got = fiber(self.curve, self.skel.vertex_value(v, self.ctx), self.ctx)
            with self._lock:
                self._data[v] = got
        return got


def lift_edge(curve: PlaneCurve, skel: VoronoiSkeleton, edge, ctx: PrecisionContext,
              fibers: FiberCache | None = None) -> EdgeLift:
    """Track the n fiber points along the edge i -> j."""
    if fibers is None:
        fibers = FiberCache(curve, skel, ctx)
    i, j = edge
    start, end = fibers[i], fibers[j]
    ycoeffs = curve.numeric(ctx)["y_coeffs"]
    with ctx.mp():
        v0 = skel.vertex_value(i, ctx)
        v1 = skel.vertex_value(j, ctx)
        dv = v1 - v0
        length = float(abs(dv))
        clear = skel.clearance[(min(i, j), max(i, j))]
        d0 = Fraction(min(0.25, clear / length)).limit_denominator(1 << 20)
        if d0 <= 0:
            d0 = Fraction(1, 1 << 20)
        ts = [Fraction(0)]
        fibs = [list(start)]
        radii = [_radius(start, ctx)]
        delta = d0
        floor = d0 / (1 << MAX_HALVINGS)
        streak = 0
        while ts[-1] < 1:
            t_new = min(Fraction(1), ts[-1] + delta)
            x = v0 + to_mpfr(t_new) * dv
            try:
                new = kernels.advance(ycoeffs, x, fibs[-1], radii[-1], ctx.prec)
            except (DiskEscape, SlowConvergence):
                delta /= 2
                streak = 0
                if delta < floor:
                    raise PathTooClose(f"edge {edge}: step below 2^-{MAX_HALVINGS} of the initial step")
                continue
            r = _radius(new, ctx)
            ts.append(t_new)
            fibs.append(new)
            radii.append(r)
            streak += 1
            if streak >= 3:
                delta = min(Fraction(1, 4), delta * Fraction(3, 2))
                streak = 0
        # match the tracked fiber at t = 1 with the canonical labels at v_j
        tol = ctx.eps(ctx.working_bits // 2) * (1 + max(abs(y) for y in end))
        perm = []
        for y in fibs[-1]:
            dists = [abs(y - z) for z in end]
            k = min(range(len(end)), key=lambda q: dists[q])
            if dists[k] > tol:
                raise PathTooClose(f"edge {edge}: endpoint fiber does not match")
            perm.append(k)
        if sorted(perm) != list(range(len(end))):
            raise PathTooClose(f"edge {edge}: endpoint matching is not a bijection")
        fibs[-1] = [end[k] for k in perm]
    return EdgeLift((i, j), ts, radii, fibs, tuple(perm), ctx.prec)


def lift_all(curve, skel, ctx, threads: int = 1, cache_dir: str | None = None) -> dict:
    """Lift every skeleton edge (deterministic results for any thread count)."""
    fibers = FiberCache(curve, skel, ctx)
    for v in range(len(skel.vertices)):
        fibers[v]
    lifts = {}
    todo = []
    for e in skel.edges:
        got = _load_cached(cache_dir, curve, skel, e, ctx)
        if got is not None:
            lifts[e] = got
        else:
            todo.append(e)
    if threads > 1 and len(todo) > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda e: lift_edge(curve, skel, e, ctx, fibers), todo))
    else:
        results = [lift_edge(curve, skel, e, ctx, fibers) for e in todo]
    for e, lift in zip(todo, results):
        lifts[e] = lift
        _store_cached(cache_dir, curve, skel, e, ctx, lift)
    return {e: lifts[e] for e in skel.edges}


def _cache_path(cache_dir, curve, skel, edge, ctx):
    import hashlib
    h = hashlib.sha256(repr((skel.vertices[edge[0]], skel.vertices[edge[1]])).encode()).hexdigest()[:12]
    return os.path.join(cache_dir, f"{curve.key}-{h}-{ctx.prec}.json")


def _load_cached(cache_dir, curve, skel, edge, ctx):
    if not cache_dir:
        return None
    path = _cache_path(cache_dir, curve, skel, edge, ctx)
    if not os.path.exists(path):
        return None
    try:
        with open(path) as fh:
            lift = EdgeLift.from_json(json.load(fh))
    except (OSError, ValueError, KeyError):
        return None
    lift.edge = tuple(edge)
    return lift


def _store_cached(cache_dir, curve, skel, edge, ctx, lift):
    if not cache_dir:
        return
    os.makedirs(cache_dir, exist_ok=True)
    path = _cache_path(cache_dir, curve, skel, edge, ctx)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(lift.to_json(), fh)
    os.replace(tmp, path)


def evaluate_on_edge(lift: EdgeLift, curve: PlaneCurve, skel: VoronoiSkeleton, t, ctx: PrecisionContext):
    """Fiber values at parameter t, labelled by the sheets at the start vertex."""
    t = Fraction(t)
    if t in lift.ts:
        return list(lift.fibers[lift.ts.index(t)])
    m = max(k for k in range(len(lift.ts) - 1) if lift.ts[k] <= t)
    ycoeffs = curve.numeric(ctx)["y_coeffs"]
    with ctx.mp():
        v0 = skel.vertex_value(lift.edge[0], ctx)
        v1 = skel.vertex_value(lift.edge[1], ctx)
        x = v0 + to_mpfr(t) * (v1 - v0)
        return kernels.advance(ycoeffs, x, lift.fibers[m], lift.radii[m], ctx.prec)


# ---------------------------------------------------------------------------
# monodromy

def walk_permutation(walk, lifts: dict, n: int):
    acc = tuple(range(n))
    for a, b in zip(walk, walk[1:]):
        if (a, b) in lifts:
            acc = perm_compose(acc, lifts[(a, b)].permutation)
        else:
            acc = perm_compose(acc, perm_inverse(lifts[(b, a)].permutation))
    return acc


def local_monodromy(curve, skel, lifts, s):
    return walk_permutation(loop_path(skel, s), lifts, curve.n)


@dataclass
class MonodromyRep:
    base_vertex: int
    generators: dict          # key (site index or INF) -> permutation
    relation_order: list      # keys in the order whose product is trivial
    infinity_inverted: bool
    n: int

    def cycle_types(self) -> dict:
        return {k: cycle_type(p) for k, p in self.generators.items()}

    @property
    def ramification(self) -> int:
        return sum(sum(c - 1 for c in cycle_type(p)) for p in self.generators.values())

    @property
    def genus(self) -> int:
        twice = self.ramification - 2 * self.n + 2
        return twice // 2

    def to_json(self):
        return {
            "base_vertex": self.base_vertex,
            "sheets": self.n,
            "generators": {str(k): [c for c in cycle_type(p)] for k, p in self.generators.items()},
            "cycles": {str(k): [[i + 1 for i in c] for c in perm_cycles(p) if len(c) > 1]
                       for k, p in self.generators.items()},
            "relation_order": [str(k) for k in self.relation_order],
            "infinity_inverted": self.infinity_inverted,
            "genus": self.genus,
        }


def monodromy(curve, skel, lifts, ctx=None) -> MonodromyRep:
    n = curve.n
    gens = {k: local_monodromy(curve, skel, lifts, k) for k in skel.keys}
    # transitivity
    orbit = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for p in gens.values():
            j = p[i]
            if j not in orbit:
                orbit.add(j)
                frontier.append(j)
    if len(orbit) != n:
        raise NotIrreducible("monodromy group is not transitive; the curve is reducible")
    center = skel.center

    def ang(k):
        s = skel.sites[k]
        return math.atan2(float(s[1] - center[1]), float(s[0] - center[0])) % (2 * math.pi)

    identity = tuple(range(n))
    contour = list(skel.contour)
    orders = [sorted(range(skel.n_finite), key=ang), contour, contour[::-1]]
    for order in orders:
        acc = identity
        for k in order:
            acc = perm_compose(acc, gens[k])
        for inverted in (False, True):
            g = gens[INF] if inverted else perm_inverse(gens[INF])
            if perm_compose(acc, g) == identity:
                return MonodromyRep(skel.base_vertex, gens, list(order), inverted, n)
    raise MonodromyRelationFailed("no tested ordering of the local monodromies multiplies to the identity")
