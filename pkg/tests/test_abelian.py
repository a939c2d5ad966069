import numpy as np
import pytest

from conftest import surface
from periodica.abelian import (automorphism_group, compose, decompose, dihedral_histogram, element_order,
                               endomorphism_structure, fixed_degree_maps, group_report, hnf_equivalent,
                               homomorphisms, is_dihedral, rosati, rosati_R, saturation, std_form,
                               symplectic_isomorphisms)
from periodica.errors import ClosureFailure
from periodica.pipeline import RiemannSurface


@pytest.fixture(scope="module")
def gaussian():
    return RiemannSurface("y^2 - x^3 + x", 100)


@pytest.fixture(scope="module")
def bielliptic():
    return surface("bielliptic2")


def test_std_form():
    assert std_form(1) == [[0, 1], [-1, 0]]


def test_rosati_is_involution():
    R = [[1, 2, 0, 1], [3, 4, 1, 0], [0, 1, 2, 2], [5, 0, 1, 3]]
    assert rosati_R(rosati_R(R)) == R


def test_gaussian_endomorphisms(gaussian):
    P, ctx = gaussian.period_matrix, gaussian.ctx
    st = endomorphism_structure(P, ctx)
    assert st.rank == 2
    assert st.center_dim == 2
    assert st.rosati_fixed_dim == 1
    assert st.idempotent_ranks() == [2]
    # a unit of order 4 squares to -1 on homology and on the tangent space
    A = automorphism_group(P, ctx, hom=st.hom)
    h = next(e for e in A.maps if element_order(np.array(e.R)) == 4)
    sq = compose(h, h, ctx)
    assert sq.R == [[-1, 0], [0, -1]]
    assert abs(complex(sq.T[0][0]) + 1) < 1e-25
    r = rosati(h, P, ctx)
    assert r.residual < 1e-20
    assert compose(r, h, ctx).R == [[1, 0], [0, 1]]


def test_gaussian_automorphisms(gaussian):
    A = automorphism_group(gaussian.period_matrix, gaussian.ctx)
    assert A.group_order == 4 and A.quotient_by_minus_one_order == 2
    assert A.element_order_histogram == {1: 1, 2: 1, 4: 2}


def test_identity_in_self_isomorphisms(bielliptic):
    P = bielliptic.period_matrix
    S = symplectic_isomorphisms(P, P, bielliptic.ctx)
    assert [[int(i == j) for j in range(4)] for i in range(4)] in [h.R for h in S.maps]


def test_bielliptic_decomposition(bielliptic):
    P, ctx = bielliptic.period_matrix, bielliptic.ctx
    st = endomorphism_structure(P, ctx)
    assert st.idempotent_ranks() == [2, 2]
    factors = decompose(P, st, ctx)
    assert [f.dimension for f in factors] == [1, 1]
    for f in factors:
        assert len(f.periods) == 1 and len(f.periods[0]) == 2


def test_degree_two_maps(bielliptic):
    E = RiemannSurface("x^3 + y^3 + 1", 100)
    ctx = bielliptic.ctx
    maps = fixed_degree_maps(bielliptic.period_matrix, E.period_matrix, 2, ctx, direction="pushforward")
    assert len(maps) > 0
    assert all(h.residual < 1e-25 for h in maps.maps)
    with pytest.raises(ValueError):
        fixed_degree_maps(bielliptic.period_matrix, E.period_matrix, 2, ctx, direction="sideways")


def test_hom_between_unrelated_curves(gaussian):
    E = RiemannSurface("x^3 + y^3 + 1", 100)
    H = homomorphisms(gaussian.period_matrix, E.period_matrix, gaussian.ctx)
    assert H.rank == 0


def test_group_helpers():
    r = np.array([[0, -1], [1, 0]], dtype=np.int64)
    assert element_order(r) == 4
    cyc = [np.linalg.matrix_power(r, k).tolist() for k in range(4)]
    rep = group_report(cyc)
    assert rep["order"] == 4 and rep["abelian"] and rep["has_minus_one"]
    assert not is_dihedral(rep)
    with pytest.raises(ClosureFailure):
        group_report(cyc[:3])
    assert dihedral_histogram(6) == {1: 1, 2: 7, 3: 2, 6: 2}
    refl = [[1, 0], [0, -1]]
    d4 = cyc + [(np.array(refl) @ np.array(c)).tolist() for c in cyc]
    assert is_dihedral(group_report(d4))


def test_hnf_equivalence_and_saturation():
    a = [[[1, 0], [0, 1]], [[0, 1], [1, 0]]]
    b = [[[1, 1], [1, 1]], [[0, 1], [1, 0]]]
    assert hnf_equivalent(a, b)
    assert not hnf_equivalent(a, [[[2, 0], [0, 2]], [[0, 1], [1, 0]]])
    cols = saturation([[2, 0], [0, 0]])
    assert cols == [[1], [0]]
