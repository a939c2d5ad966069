import json
import random
from fractions import Fraction

import pytest

from periodica.numerics import PrecisionContext, mpc
from periodica.skeleton import (INF, delaunay, enclosing_hexagon, incircle, loop_path, orient, voronoi_skeleton,
                                winding_number)

CTX = PrecisionContext(100)


def _points(rng, k):
    with CTX.mp():
        return [mpc(rng.uniform(-3, 3), rng.uniform(-3, 3)) for _ in range(k)]


def test_predicates_exact():
    F = Fraction
    a, b, c = (F(0), F(0)), (F(1), F(1)), (F(3), F(3))
    assert orient(a, b, c) == 0
    assert orient(a, (F(1), F(0)), (F(0), F(1))) > 0
    sq = [(F(0), F(0)), (F(1), F(0)), (F(1), F(1))]
    assert incircle(*sq, (F(0), F(1))) == 0
    assert incircle(*sq, (F(1, 2), F(1, 2))) > 0
    assert incircle(*sq, (F(5), F(5))) < 0


def test_delaunay_empty_circles():
    rng = random.Random(11)
    F = Fraction
    for _ in range(10):
        pts = list({(F(rng.randint(-50, 50)), F(rng.randint(-50, 50))) for _ in range(25)})
        tris = delaunay(pts)
        assert tris
        for i, j, k in tris:
            a, b, c = pts[i], pts[j], pts[k]
            assert orient(a, b, c) > 0
            for m, d in enumerate(pts):
                if m not in (i, j, k):
                    assert incircle(a, b, c, d) <= 0


def test_hexagon_radius():
    c, rho, pts = enclosing_hexagon([0, 1j, 0.5])
    assert rho >= 1
    c, rho, pts = enclosing_hexagon([10, -10])
    assert rho == pytest.approx(20)
    assert len(pts) == 6


@pytest.mark.parametrize("seed,k", [(1, 1), (2, 2), (3, 5), (4, 12), (5, 30)])
def test_cell_loops_wind_once(seed, k):
    rng = random.Random(seed)
    S = _points(rng, k)
    sk = voronoi_skeleton(S, CTX)
    assert sk.n_finite == k
    for s in range(k):
        loop = [sk.vertices[v] for v in sk.cell_loops[s]]
        for t in range(k):
            w = winding_number(loop, sk.sites[t])
            assert round(w) == (1 if s == t else 0)
            assert abs(w - round(w)) < 1e-9


@pytest.mark.parametrize("seed,k", [(6, 3), (7, 9)])
def test_loop_paths_start_at_base(seed, k):
    sk = voronoi_skeleton(_points(random.Random(seed), k), CTX)
    edges = set(sk.edges)
    for key in sk.keys:
        walk = loop_path(sk, key)
        assert walk[0] == walk[-1] == sk.base_vertex
        for u, v in zip(walk, walk[1:]):
            assert (min(u, v), max(u, v)) in edges
    assert INF in sk.cell_loops


def test_vertices_exact_and_clear():
    sk = voronoi_skeleton(_points(random.Random(8), 8), CTX)
    assert all(isinstance(v[0], Fraction) for v in sk.vertices)
    assert sk.separation > 0


def test_to_json_roundtrip():
    sk = voronoi_skeleton(_points(random.Random(9), 4), CTX)
    doc = json.loads(json.dumps(sk.to_json()))
    assert set(doc) >= {"vertices", "edges", "loops", "sites", "base_vertex"}
    assert len(doc["vertices"]) == len(sk.vertices)


def test_deterministic():
    pts = _points(random.Random(10), 7)
    a = voronoi_skeleton(pts, CTX)
    b = voronoi_skeleton(list(reversed(pts)), CTX)
    assert a.vertices == b.vertices and a.edges == b.edges
