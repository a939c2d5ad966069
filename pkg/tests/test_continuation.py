import os

import gmpy2
import pytest

from periodica.continuation import (EdgeLift, cycle_type, fiber, hexfloat, lift_all, monodromy, parse_hexfloat,
                                    perm_compose, perm_cycles, perm_inverse)
from periodica.curve import critical_locus, parse_curve
from periodica.errors import NotIrreducible
from periodica.numerics import PrecisionContext, mpc
from periodica.skeleton import voronoi_skeleton

CTX = PrecisionContext(100)


def _setup(src):
    c = parse_curve(src)
    sk = voronoi_skeleton(critical_locus(c, CTX).finite_points, CTX)
    return c, sk


def test_permutation_helpers():
    p = (1, 2, 0, 4, 3)
    assert perm_compose(p, perm_inverse(p)) == tuple(range(5))
    assert sorted(cycle_type(p)) == [2, 3]
    assert sorted(len(c) for c in perm_cycles(p)) == [2, 3]


def test_hexfloat_roundtrip():
    with gmpy2.context(precision=120):
        x = gmpy2.mpfr(1) / 3
        assert parse_hexfloat(hexfloat(x)) == x
        assert parse_hexfloat(hexfloat(-x * 2 ** 70)) == -x * 2 ** 70


def test_fiber_roots():
    c = parse_curve("y^3 - x*y + 1")
    with CTX.mp():
        ys = fiber(c, mpc(2, 1), CTX)
        assert len(ys) == 3
        for y in ys:
            assert abs(y ** 3 - mpc(2, 1) * y + 1) < 2.0 ** -100


def test_hyperelliptic_monodromy():
    c, sk = _setup("y^2 - x^3 + x + 1")
    lifts = lift_all(c, sk, CTX)
    M = monodromy(c, sk, lifts, CTX)
    assert all(ct == [2] for ct in M.cycle_types().values())
    assert M.genus == 1


def test_superelliptic_monodromy():
    c, sk = _setup("y^3 - x^4 + 1")
    lifts = lift_all(c, sk, CTX)
    M = monodromy(c, sk, lifts, CTX)
    types = M.cycle_types()
    # four finite branch points plus infinity, where 3 does not divide 4
    assert sum(1 for t in types.values() if t == [3]) == 5
    assert M.genus == 3


def test_lift_endpoints_are_fibers():
    c, sk = _setup("y^3 - x*y + 1")
    lifts = lift_all(c, sk, CTX)
    for e, lift in lifts.items():
        assert lift.ts[0] == 0 and lift.ts[-1] == 1
        end = fiber(c, sk.vertex_value(e[1], CTX), CTX)
        with CTX.mp():
            for k, y in enumerate(lift.fibers[-1]):
                assert abs(y - end[lift.permutation[k]]) < 2.0 ** -80


def test_threads_deterministic():
    c, sk = _setup("y^3 - x^4 + 1")
    a = lift_all(c, sk, CTX, threads=1)
    b = lift_all(c, sk, CTX, threads=4)
    assert all(a[e].to_json() == b[e].to_json() for e in a)


def test_cache_roundtrip(tmp_path):
    c, sk = _setup("y^2 - x^5 + 1")
    first = lift_all(c, sk, CTX, cache_dir=str(tmp_path))
    assert os.listdir(tmp_path)
    second = lift_all(c, sk, CTX, cache_dir=str(tmp_path))
    for e in first:
        assert first[e].to_json() == second[e].to_json()
        assert EdgeLift.from_json(first[e].to_json()).to_json() == first[e].to_json()


def test_reducible_curve_detected():
    c, sk = _setup("y^2 - x^2 - 1 + 0*x")
    lifts = lift_all(c, sk, CTX)
    assert monodromy(c, sk, lifts, CTX).genus == 0
    c, sk = _setup("(y - x)*(y + x - 1)")
    lifts = lift_all(c, sk, CTX)
    with pytest.raises(NotIrreducible):
        monodromy(c, sk, lifts, CTX)
