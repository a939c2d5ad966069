"""Lifted graph, cycle basis, intersection pairing and symplectic reduction."""
from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import GenusMismatch, NonIntegerPairing, NonUnitDivisor, NotIrreducible
from .skeleton import VoronoiSkeleton, ccw_between


@dataclass
class LiftedGraph:
    """Graph on (base vertex, sheet) pairs.

    Lifted edge ``i`` is ``(base_edge, sheet)``; it runs from
    ``(a, sheet)`` to ``(b, perm[sheet])`` where ``base_edge = (a, b)``.
    """
    n: int
    vertices: list              # (base vertex, sheet)
    edges: list                 # (base edge, sheet)
    ends: list                  # (tail index, head index)
    adjacency: list             # per vertex: [(neighbour, edge index, sign, direction)]
    base_points: list           # exact base-plane coordinates per base vertex
    root: int = 0
    _index: dict = field(default=None, repr=False)

    def __post_init__(self):
        if self._index is None:
            self._index = {v: i for i, v in enumerate(self.vertices)}

    def index(self, v) -> int:
        return self._index[v]

    def edge_between(self, u: int, w: int):
        for nb, e, s, _ in self.adjacency[u]:
            if nb == w:
                return e, s
        raise KeyError((u, w))

    def direction(self, u: int, w: int):
        """Base-plane vector from u toward its neighbour w."""
        a = self.base_points[self.vertices[u][0]]
        b = self.base_points[self.vertices[w][0]]
        return (b[0] - a[0], b[1] - a[1])

    @property
    def cycle_rank(self) -> int:
        return len(self.edges) - len(self.vertices) + 1


@dataclass
class Chain:
    """Integer multiplicities over lifted edges, oriented tail to head.
    ``walk`` holds the closed vertex walk when the chain is a simple cycle."""
    coeffs: dict
    walk: list | None = None

    def __add__(self, other: "Chain") -> "Chain":
        out = dict(self.coeffs)
        for e, m in other.coeffs.items():
            out[e] = out.get(e, 0) + m
        return Chain({e: m for e, m in out.items() if m})

    def scale(self, k: int) -> "Chain":
        return Chain({e: k * m for e, m in self.coeffs.items() if k * m})

    def __neg__(self) -> "Chain":
        return self.scale(-1)

    def boundary(self, G: LiftedGraph) -> dict:
        out: dict = {}
        for e, m in self.coeffs.items():
            a, b = G.ends[e]
            out[a] = out.get(a, 0) - m
            out[b] = out.get(b, 0) + m
        return {v: m for v, m in out.items() if m}

    def is_cycle(self, G: LiftedGraph) -> bool:
        return not self.boundary(G)

    def to_json(self, G: LiftedGraph):
        return [[list(G.edges[e][0]), G.edges[e][1], m] for e, m in sorted(self.coeffs.items())]


def combine(chains, coefficients) -> Chain:
    out = Chain({})
    for c, k in zip(chains, coefficients):
        if k:
            out = out + c.scale(int(k))
    return out


@dataclass
class SymplecticBasis:
    alpha: list
    beta: list
    genus: int
    change_of_basis: list        # rows: integer combinations of the fundamental cycles
    divisors: list

    @property
    def cycles(self) -> list:
        return self.alpha + self.beta


def lifted_graph(curve, skel: VoronoiSkeleton, lifts: dict) -> LiftedGraph:
    n = curve.n
    used = sorted({v for e in skel.edges for v in e})
    vertices = [(v, k) for v in used for k in range(n)]
    index = {v: i for i, v in enumerate(vertices)}
    edges, ends = [], []
    adjacency: list = [[] for _ in vertices]
    for e in skel.edges:
        perm = lifts[e].permutation
        a, b = e
        for k in range(n):
            u, w = index[(a, k)], index[(b, perm[k])]
            idx = len(edges)
            edges.append((e, k))
            ends.append((u, w))
            adjacency[u].append((w, idx, 1))
            adjacency[w].append((u, idx, -1))
    pts = skel.vertices
    adj = []
    for u, lst in enumerate(adjacency):
        a = pts[vertices[u][0]]
        rows = []
        for w, idx, s in sorted(lst, key=lambda r: (vertices[r[0]][0], r[1])):
            b = pts[vertices[w][0]]
            rows.append((w, idx, s, (b[0] - a[0], b[1] - a[1])))
        adj.append(rows)
    G = LiftedGraph(n, vertices, edges, ends, adj, pts, index[(skel.base_vertex, 0)], index)
    if len(_bfs_tree(G)[0]) != len(vertices):
        raise NotIrreducible("lifted graph is disconnected; the curve is reducible")
    return G


def _bfs_tree(G: LiftedGraph):
    parent = {G.root: None}
    depth = {G.root: 0}
    tree_edges = set()
    queue = deque([G.root])
    while queue:
        u = queue.popleft()
        for w, e, _, _ in G.adjacency[u]:
            if w not in parent:
                parent[w] = u
                depth[w] = depth[u] + 1
                tree_edges.add(e)
                queue.append(w)
    return parent, depth, tree_edges


def fundamental_cycles(G: LiftedGraph) -> list[Chain]:
    """One cycle per non-tree edge of the breadth-first spanning tree.
    The cycle traverses its non-tree edge forwards, so it is the only basis
    cycle with a nonzero coefficient on that edge."""
    parent, depth, tree_edges = _bfs_tree(G)
    out = []
    for e in range(len(G.edges)):
        if e in tree_edges:
            continue
        a, b = G.ends[e]
        # walk a -> b along e, then back to a through the tree
        up_b, up_a = [b], [a]
        while up_b[-1] != up_a[-1]:
            if depth[up_b[-1]] >= depth[up_a[-1]]:
                up_b.append(parent[up_b[-1]])
            else:
                up_a.append(parent[up_a[-1]])
        walk = [a] + up_b + up_a[-2::-1]
        coeffs: dict = {}
        for u, w in zip(walk, walk[1:]):
            idx, s = G.edge_between(u, w)
            coeffs[idx] = coeffs.get(idx, 0) + s
        out.append(Chain({k: m for k, m in coeffs.items() if m}, walk))
    return out


def cycle_coordinates(chain: Chain, G: LiftedGraph, cycles: list[Chain]) -> list[int]:
    """Coordinates of a cycle in the fundamental basis."""
    if not chain.is_cycle(G):
        raise ValueError("chain has nonzero boundary")
    coords = []
    for c in cycles:
        a, b = c.walk[0], c.walk[1]
        e, s = next((e, s) for e, s in c.coeffs.items() if G.ends[e] == (a, b) and s == 1)
        coords.append(chain.coeffs.get(e, 0))
    return coords


# ---------------------------------------------------------------------------
# intersection pairing

def _local(G: LiftedGraph, v0: int, a_in: int, a_out: int, b_in: int, b_out: int) -> Fraction:
    """Half-integer contribution at v0 for a: a_in -> v0 -> a_out and
    b: b_in -> v0 -> b_out."""
    d1, d2 = G.direction(v0, a_in), G.direction(v0, a_out)
    d3, d4 = G.direction(v0, b_in), G.direction(v0, b_out)
    half = Fraction(1, 2)
    total = Fraction(0)
    if b_in != a_in and b_in != a_out:
        total += half if ccw_between(d1, d2, d3) else -half
    if b_out != a_in and b_out != a_out:
        total += half if ccw_between(d2, d1, d4) else -half
    return total


def _visits(walk: list) -> dict:
    """vertex -> list of (previous, next) for a closed walk."""
    closed = walk if walk[0] == walk[-1] else walk + walk[:1]
    out: dict = {}
    m = len(closed) - 1
    for i in range(m):
        v = closed[i]
        prev = closed[i - 1] if i > 0 else closed[m - 1]
        out.setdefault(v, []).append((prev, closed[i + 1]))
    return out


def walk_pairing(wa: list, wb: list, G: LiftedGraph) -> int:
    va, vb = _visits(wa), _visits(wb)
    total = Fraction(0)
    for v in va.keys() & vb.keys():
        for p1, p2 in va[v]:
            for p3, p4 in vb[v]:
                total += _local(G, v, p1, p2, p3, p4)
    if total.denominator != 1:
        raise NonIntegerPairing(f"pairing evaluated to {total}")
    return int(total)


def gram_matrix(cycles: list[Chain], G: LiftedGraph, threads: int = 1) -> list[list[int]]:
    """Intersection matrix of closed walks, assembled vertex by vertex."""
    r = len(cycles)
    visits = [_visits(c.walk) for c in cycles]
    through: dict = {}
    for i, vis in enumerate(visits):
        for v in vis:
            through.setdefault(v, []).append(i)

    def at_vertex(v):
        ids = through[v]
        part = {}
        for x in ids:
            for y in ids:
                if x >= y:
                    continue
                s = Fraction(0)
                for p1, p2 in visits[x][v]:
                    for p3, p4 in visits[y][v]:
                        s += _local(G, v, p1, p2, p3, p4)
                if s:
                    part[(x, y)] = s
        return part

    verts = sorted(through)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(at_vertex, verts))
    else:
        parts = [at_vertex(v) for v in verts]
    acc: dict = {}
    for part in parts:
        for k, s in part.items():
            acc[k] = acc.get(k, 0) + s
    gram = [[0] * r for _ in range(r)]
    for (x, y), s in acc.items():
        if s.denominator != 1:
            raise NonIntegerPairing(f"pairing of cycles {x}, {y} evaluated to {s}")
        gram[x][y] = int(s)
        gram[y][x] = -int(s)
    return gram


def intersection_number(a: Chain, b: Chain, G: LiftedGraph, cycles: list[Chain] | None = None,
                        gram: list | None = None) -> int:
    """Intersection number of two cycles.

    Simple cycles carrying a walk are paired directly by the local rule.
    Other cycles are expanded in the fundamental basis, which must then be
    supplied (with its Gram matrix, computed if absent)."""
    if a.walk is not None and b.walk is not None:
        return walk_pairing(a.walk, b.walk, G)
    if cycles is None:
        cycles = fundamental_cycles(G)
    if gram is None:
        gram = gram_matrix(cycles, G)
    x = cycle_coordinates(a, G, cycles)
    y = cycle_coordinates(b, G, cycles)
    return sum(x[i] * gram[i][j] * y[j] for i in range(len(x)) if x[i] for j in range(len(y)) if y[j])


# ---------------------------------------------------------------------------
# Frobenius normal form

def _pair(rows, G, i, j):
    """<row i, row j> under G."""
    ri, rj = rows[i], rows[j]
    s = 0
    for p, x in ri.items():
        gp = G[p]
        for q, y in rj.items():
            if gp[q]:
                s += x * gp[q] * y
    return s


def frobenius_reduce(G: list[list[int]]):
    """Unimodular B and divisors d with B G B^T in symplectic normal form.

    Rows of B are ordered e_1, f_1, e_2, f_2, ..., followed by the radical;
    <e_i, f_i> = d_i > 0 and d_1 | d_2 | ...
    """
    r = len(G)
    for i in range(r):
        for j in range(r):
            if G[i][j] != -G[j][i]:
                raise ValueError("matrix is not antisymmetric")
    # work in the current basis: M = B G B^T, updated by row/column operations
    B = [[int(i == j) for j in range(r)] for i in range(r)]
    M = [list(map(int, row)) for row in G]

    def add_row(k, src, c):
        # basis vector k += c * basis vector src
        if not c:
            return
        Bk, Bs = B[k], B[src]
        for t in range(r):
            Bk[t] += c * Bs[t]
        Mk, Ms = M[k], M[src]
        for t in range(r):
            Mk[t] += c * Ms[t]
        for t in range(r):
            M[t][k] += c * M[t][src]

    def swap(i, j):
        B[i], B[j] = B[j], B[i]
        M[i], M[j] = M[j], M[i]
        for row in M:
            row[i], row[j] = row[j], row[i]

    def negate(i):
        B[i] = [-x for x in B[i]]
        M[i] = [-x for x in M[i]]
        for row in M:
            row[i] = -row[i]

    start = 0
    while True:
        # reduce the block starting at `start` until a hyperbolic pair splits off
        while True:
            best = None
            for i in range(start, r):
                Mi = M[i]
                for j in range(i + 1, r):
                    v = Mi[j]
                    if v and (best is None or abs(v) < best[0]):
                        best = (abs(v), i, j)
            if best is None:
                break
            _, i, j = best
            swap(start, i)
            if j == start:
                j = i
            swap(start + 1, j)
            if M[start][start + 1] < 0:
                negate(start + 1)
            d = M[start][start + 1]
            e, f = start, start + 1
            clean = True
            for k in range(start + 2, r):
                a = M[e][k]
                b = M[f][k]
                # <e, k + q f> = a + q d; <f, k + q e> = b - q d
                add_row(k, f, -(a // d))
                add_row(k, e, b // d)
                if M[e][k] or M[f][k]:
                    clean = False
            if clean:
                break
        if best is None:
            break
        start += 2
        if start >= r - 1:
            break
    g = 0
    while 2 * g + 1 < r and M[2 * g][2 * g + 1] != 0:
        g += 1
    divisors = [M[2 * i][2 * i + 1] for i in range(g)]
    # enforce the divisor chain: e_i += e_j merges two blocks, then re-reduce
    for i in range(g):
        for j in range(i + 1, g):
            if divisors[j] % divisors[i]:
                add_row(2 * i, 2 * j, 1)
                B2, d2 = frobenius_reduce([row[:] for row in M])
                B = _mat_mul(B2, B)
                return B, d2
    order = sorted(range(g), key=lambda i: divisors[i])
    perm = [x for i in order for x in (2 * i, 2 * i + 1)] + list(range(2 * g, r))
    return [B[p] for p in perm], [divisors[i] for i in order]


def _mat_mul(A, B):
    m = len(B[0]) if B else 0
    return [[sum(A[i][k] * B[k][j] for k in range(len(B)) if A[i][k]) for j in range(m)]
            for i in range(len(A))]


def symplectic_basis(cycles: list[Chain], gram: list[list[int]], expected_genus: int | None = None,
                     user_basis: bool = False) -> SymplecticBasis:
    """Reduce the fundamental cycles to a symplectic basis alpha, beta."""
    B, divisors = frobenius_reduce(gram)
    if any(d != 1 for d in divisors):
        raise NonUnitDivisor(f"elementary divisors {divisors}; expected all 1")
    g = len(divisors)
    if expected_genus is not None and g != expected_genus and not user_basis:
        raise GenusMismatch(f"homology has genus {g} but the differential basis has {expected_genus} elements")
    rows = [B[2 * i] for i in range(g)] + [B[2 * i + 1] for i in range(g)]
    chains = [combine(cycles, row) for row in rows]
    return SymplecticBasis(chains[:g], chains[g:], g, rows, divisors)


def transform_gram(B, G):
    """B G B^T."""
    BG = _mat_mul(B, G)
    Bt = [list(col) for col in zip(*B)]
    return _mat_mul(BG, Bt)
