"""Voronoi skeleton of the punctured plane.

Sites are snapped to a dyadic grid and the Delaunay triangulation is built
with exact rational predicates, so the combinatorics do not depend on the
working precision.  Only the boundaries of the finite cells are kept; they
form the graph H whose cycles generate the fundamental group of C - S.
"""
from __future__ import annotations

import functools
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import gmpy2

from .errors import DegenerateDiagram
from .numerics import PrecisionContext, mpc, to_mpfr

INF = "inf"
SNAP_BITS = 40


# ---------------------------------------------------------------------------
# exact predicates

def orient(a, b, c) -> Fraction:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def incircle(a, b, c, d) -> Fraction:
    """Positive when d lies strictly inside the circle through the
    counterclockwise triangle a, b, c."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    ad = adx * adx + ady * ady
    bd = bdx * bdx + bdy * bdy
    cd = cdx * cdx + cdy * cdy
    return (adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx))


def circumcenter(a, b, c):
    d = 2 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    a2 = a[0] * a[0] + a[1] * a[1]
    b2 = b[0] * b[0] + b[1] * b[1]
    c2 = c[0] * c[0] + c[1] * c[1]
    ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d
    uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d
    return (ux, uy)


def _half(v):
    # 0 for angles in [0, pi), 1 for [pi, 2 pi)
    return 0 if (v[1] > 0 or (v[1] == 0 and v[0] > 0)) else 1


def angle_cmp(u, v) -> int:
    """Exact comparison of the polar angles of two nonzero vectors."""
    hu, hv = _half(u), _half(v)
    if hu != hv:
        return -1 if hu < hv else 1
    cr = u[0] * v[1] - u[1] * v[0]
    return -1 if cr > 0 else (1 if cr < 0 else 0)


def ccw_between(a, b, c) -> bool:
    """True when direction c lies strictly inside the counterclockwise sector
    from direction a to direction b (all nonzero vectors)."""
    kc = _rel_order(a, c)
    if kc[0] == 0 and kc[1].v[1] == 0:
        return False
    return kc < _rel_order(a, b)


def _rel_order(a, v):
    """A sortable key for the ccw angle from a to v, in [0, 2 pi)."""
    # rotate v by -angle(a): use complex-like multiplication by conj(a)
    x = v[0] * a[0] + v[1] * a[1]
    y = v[1] * a[0] - v[0] * a[1]
    h = _half((x, y))
    return (h, _Slope((x, y)))


class _Slope:
    """Orders vectors within one half plane by angle."""
    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v

    def __lt__(self, other):
        return self.v[0] * other.v[1] - self.v[1] * other.v[0] > 0

    def __eq__(self, other):
        return self.v[0] * other.v[1] - self.v[1] * other.v[0] == 0


# ---------------------------------------------------------------------------
# Delaunay (Bowyer-Watson)

def delaunay(points: list[tuple[Fraction, Fraction]]) -> list[tuple[int, int, int]]:
    """Counterclockwise triangles (index triples) of a Delaunay triangulation."""
    n = len(points)
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    cx = (max(xs) + min(xs)) / 2
    cy = (max(ys) + min(ys)) / 2
    span = max(max(xs) - min(xs), max(ys) - min(ys), Fraction(1))
    big = span * (1 << 24)
    pts = list(points) + [(cx - 2 * big, cy - big), (cx + 2 * big, cy - big), (cx, cy + 2 * big)]
    tris = {(n, n + 1, n + 2)}
    order = sorted(range(n), key=lambda i: points[i])
    for idx in order:
        p = pts[idx]
        bad = [t for t in tris if incircle(pts[t[0]], pts[t[1]], pts[t[2]], p) > 0]
        if not bad:
            raise DegenerateDiagram("point outside every circumcircle")
        count: dict = {}
        for t in bad:
            for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                k = (min(e), max(e))
                count[k] = count.get(k, 0) + 1
        for t in bad:
            tris.discard(t)
        for t in bad:
            for e in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
                if count[(min(e), max(e))] == 1:
                    a, b = e
                    o = orient(pts[a], pts[b], p)
                    if o == 0:
                        raise DegenerateDiagram("collinear insertion")
                    tris.add((a, b, idx) if o > 0 else (b, a, idx))
    return sorted(t for t in tris if max(t) < n)


# ---------------------------------------------------------------------------
# skeleton

@dataclass
class VoronoiSkeleton:
    sites: list            # exact (re, im) Fractions; finite sites first, then hexagon
    n_finite: int
    center: tuple
    radius: Fraction
    vertices: list         # exact (re, im) Fractions, sorted
    edges: list            # sorted (i, j) with i < j
    cell_loops: dict       # site index or INF -> list of vertex indices (ccw, not closed)
    base_vertex: int
    parent: dict           # spanning tree
    depth: dict
    clearance: dict        # edge -> distance to nearest finite site (float)
    contour: list = None   # finite sites in tree-contour order
    entry: dict = None     # site -> loop vertex where the contour first meets its cell

    @property
    def separation(self) -> float:
        return min(self.clearance.values()) if self.clearance else math.inf

    @property
    def keys(self):
        return list(range(self.n_finite)) + [INF]

    def vertex_value(self, i, ctx: PrecisionContext):
        v = self.vertices[i]
        with ctx.mp():
            return mpc(to_mpfr(v[0]), to_mpfr(v[1]))

    def site_value(self, k, ctx: PrecisionContext):
        v = self.sites[k]
        with ctx.mp():
            return mpc(to_mpfr(v[0]), to_mpfr(v[1]))

    def neighbors(self, i):
        return self._adj[i]

    def __post_init__(self):
        adj: dict = {i: [] for i in range(len(self.vertices))}
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        self._adj = {i: sorted(v) for i, v in adj.items()}
        if self.contour is None:
            self.contour, self.entry = _contour(self)

    def tree_path(self, v) -> list:
        """Vertex walk from base_vertex to v along the spanning tree."""
        path = [v]
        while path[-1] != self.base_vertex:
            path.append(self.parent[path[-1]])
        return path[::-1]

    def to_json(self):
        f = lambda p: [float(p[0]), float(p[1])]
        return {
            "sites": [f(s) for s in self.sites],
            "finite_sites": self.n_finite,
            "center": f(self.center),
            "radius": float(self.radius),
            "vertices": [f(v) for v in self.vertices],
            "edges": [list(e) for e in self.edges],
            "loops": {str(k): v for k, v in self.cell_loops.items()},
            "base_vertex": self.base_vertex,
            "separation": self.separation,
        }


def snap_scale(points) -> int:
    """Exponent k such that coordinates are rounded to multiples of 2^-k."""
    m = max([1.0] + [abs(complex(p)) for p in points])
    return SNAP_BITS - math.ceil(math.log2(m))


def _snap(z, k: int):
    with gmpy2.context(precision=256):
        z = gmpy2.mpc(z)
        re = int(gmpy2.rint(z.real * gmpy2.exp2(k)))
        im = int(gmpy2.rint(z.imag * gmpy2.exp2(k)))
    return (Fraction(re, 1 << k) if k >= 0 else Fraction(re * (1 << -k)),
            Fraction(im, 1 << k) if k >= 0 else Fraction(im * (1 << -k)))


def enclosing_hexagon(S, ctx: PrecisionContext | None = None):
    """Center, radius and the six hexagon points (complex numbers)."""
    S = [complex(s) for s in S]
    if not S:
        raise ValueError("S must be nonempty")
    c0 = sum(S) / len(S)
    r = max(abs(s - c0) for s in S)
    rho = max(1.0, 2 * r)
    pts = [c0 + rho * complex(math.cos(2 * math.pi * k / 6 + math.pi / 6),
                              math.sin(2 * math.pi * k / 6 + math.pi / 6)) for k in range(6)]
    return c0, rho, pts


def _seg_dist(p, a, b) -> float:
    p, a, b = complex(*map(float, p)), complex(*map(float, a)), complex(*map(float, b))
    d = b - a
    L = abs(d) ** 2
    if L == 0:
        return abs(p - a)
    t = max(0.0, min(1.0, ((p - a) * d.conjugate()).real / L))
    return abs(p - (a + t * d))


def voronoi_skeleton(S, ctx: PrecisionContext) -> VoronoiSkeleton:
    S = list(S)
    if not S:
        raise ValueError("need at least one site")
    c0, rho, hexagon = enclosing_hexagon(S)
    k = snap_scale([c0 + rho])
    fin = [_snap(s, k) for s in S]
    if len(set(fin)) != len(fin):
        raise DegenerateDiagram("two sites coincide on the snapping grid")
    hex_exact = [_snap(complex(h), k) for h in hexagon]
    sites = fin + hex_exact
    nf = len(fin)
    tris = delaunay(sites)

    centers = {t: circumcenter(*(sites[i] for i in t)) for t in tris}
    vlist = sorted(set(centers.values()))
    vindex = {v: i for i, v in enumerate(vlist)}

    incident: dict = {i: [] for i in range(nf)}
    for t in tris:
        for i in t:
            if i < nf:
                incident[i].append(t)

    loops: dict = {}
    inf_edges: list = []
    for s in range(nf):
        ts = incident[s]
        sp = sites[s]

        def cen(t):
            pts = [sites[i] for i in t]
            return ((pts[0][0] + pts[1][0] + pts[2][0]) / 3 - sp[0], (pts[0][1] + pts[1][1] + pts[2][1]) / 3 - sp[1])

        ts = sorted(ts, key=functools.cmp_to_key(lambda a, b: angle_cmp(cen(a), cen(b))))
        loop: list = []
        nbrs: list = []
        for a, b in zip(ts, ts[1:] + ts[:1]):
            common = (set(a) & set(b)) - {s}
            if len(common) != 1:
                raise DegenerateDiagram("triangle fan around a site is not closed")
            nb = common.pop()
            u, w = vindex[centers[a]], vindex[centers[b]]
            if not loop or loop[-1] != u:
                loop.append(u)
            if u != w and nb >= nf:
                inf_edges.append((u, w))
        if len(loop) > 1 and loop[0] == loop[-1]:
            loop.pop()
        if len(loop) < 3:
            raise DegenerateDiagram("finite cell with fewer than three vertices")
        loops[s] = loop

    # the outer boundary of the union of finite cells, traversed ccw
    succ: dict = {}
    for u, w in inf_edges:
        if u in succ:
            raise DegenerateDiagram("outer boundary is pinched")
        succ[u] = w
    start = min(succ)
    outer = [start]
    while True:
        nxt = succ[outer[-1]]
        if nxt == start:
            break
        if nxt in outer or nxt not in succ:
            raise DegenerateDiagram("outer boundary is not a single cycle")
        outer.append(nxt)
    if len(outer) != len(succ):
        raise DegenerateDiagram("outer boundary is not a single cycle")
    loops[INF] = outer

    edge_set = set()
    for loop in loops.values():
        for a, b in zip(loop, loop[1:] + loop[:1]):
            if a != b:
                edge_set.add((min(a, b), max(a, b)))
    used = sorted({v for e in edge_set for v in e})
    # renumber the used vertices
    renum = {v: i for i, v in enumerate(used)}
    vertices = [vlist[v] for v in used]
    edges = sorted((renum[a], renum[b]) for a, b in edge_set)
    loops = {key: [renum[v] for v in loop] for key, loop in loops.items()}

    def nearest_sq(v):
        return min((v[0] - s[0]) ** 2 + (v[1] - s[1]) ** 2 for s in sites)

    base = min(range(len(vertices)), key=lambda i: (-nearest_sq(vertices[i]), vertices[i]))

    adj: dict = {i: [] for i in range(len(vertices))}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    parent = {base: None}
    depth = {base: 0}
    queue = deque([base])
    while queue:
        u = queue.popleft()
        for w in sorted(adj[u]):
            if w not in depth:
                depth[w] = depth[u] + 1
                parent[w] = u
                queue.append(w)
    if len(depth) != len(vertices):
        raise DegenerateDiagram("skeleton graph is disconnected")

    clearance = {}
    for a, b in edges:
        clearance[(a, b)] = min(_seg_dist(s, vertices[a], vertices[b]) for s in fin)
    skel = VoronoiSkeleton(sites, nf, _snap(complex(c0), k), Fraction(rho), vertices, edges,
                           loops, base, parent, depth, clearance)
    if skel.separation <= 2.0 ** (-ctx.working_bits / 8):
        raise DegenerateDiagram(f"skeleton separation {skel.separation:.3g} too small")
    return skel


def _contour(skel):
    """Walk counterclockwise around the spanning tree (keeping it on the
    left) and record the order in which cells are first met, together with
    the vertex at which each is met."""
    V = skel.vertices

    def direction(v, w):
        return (V[w][0] - V[v][0], V[w][1] - V[v][1])

    rot = {v: sorted(skel._adj[v], key=functools.cmp_to_key(
        lambda a, b, v=v: angle_cmp(direction(v, a), direction(v, b)))) for v in range(len(V))}
    corner = {}
    for key, loop in skel.cell_loops.items():
        L = len(loop)
        for idx in range(L):
            a, v, c = loop[idx - 1], loop[idx], loop[(idx + 1) % L]
            # a ccw face loop a -> v -> c owns the wedge from c ccw to a;
            # the outer face lies to the right of the ccw outer loop
            corner[(v, a, c) if key == INF else (v, c, a)] = key
    tree = {(v, p) for v, p in skel.parent.items() if p is not None}
    tree |= {(p, v) for v, p in tree}
    order, entry = [], {}
    b = skel.base_vertex
    r = rot[b]
    first = next(w for w in r if (b, w) in tree)
    v, u = b, r[r.index(first) - 1]
    start = None
    for _ in range(4 * len(skel.edges) + 8):
        r = rot[v]
        idx = r.index(u)
        while True:
            nxt = r[(idx + 1) % len(r)]
            face = corner.get((v, r[idx], nxt))
            if face is not None and face not in entry:
                entry[face] = v
                if face != INF:
                    order.append(face)
            idx = (idx + 1) % len(r)
            if (v, nxt) in tree:
                break
        if start is None:
            start = (v, nxt)
        elif (v, nxt) == start:
            break
        u, v = v, nxt
    return order, entry


def loop_path(skel: VoronoiSkeleton, s) -> list:
    """Closed vertex walk from the base vertex around site s (or INF)."""
    loop = skel.cell_loops[s]
    if skel.entry and s in skel.entry:
        entry = loop.index(skel.entry[s])
    else:
        entry = min(range(len(loop)), key=lambda i: (skel.depth[loop[i]], loop[i]))
    rot = loop[entry:] + loop[:entry]
    tp = skel.tree_path(rot[0])
    return tp + rot[1:] + [rot[0]] + tp[::-1][1:]


def winding_number(walk_points, p) -> float:
    """Numeric winding number of a closed polygon about p."""
    total = 0.0
    pts = [complex(float(a), float(b)) - complex(float(p[0]), float(p[1])) for a, b in walk_points]
    for z1, z2 in zip(pts, pts[1:] + pts[:1]):
        total += math.atan2((z2 / z1).imag, (z2 / z1).real)
    return total / (2 * math.pi)
