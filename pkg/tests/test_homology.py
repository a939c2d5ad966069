import pytest

from conftest import surface
from periodica.errors import GenusMismatch, NonUnitDivisor
from periodica.homology import (combine, cycle_coordinates, frobenius_reduce, intersection_number, symplectic_basis,
                                transform_gram)


def test_frobenius_small():
    G = [[0, 2, 0, 0], [-2, 0, 0, 0], [0, 0, 0, 3], [0, 0, -3, 0]]
    B, d = frobenius_reduce(G)
    assert d == [1, 6]
    N = transform_gram(B, G)
    assert N[0][1] == 1 and N[2][3] == 6


def test_frobenius_radical():
    G = [[0, 1, 1], [-1, 0, 1], [-1, -1, 0]]
    B, d = frobenius_reduce(G)
    assert d == [1]
    N = transform_gram(B, G)
    assert all(N[2][j] == 0 for j in range(3))


def test_frobenius_rejects_non_antisymmetric():
    with pytest.raises(ValueError):
        frobenius_reduce([[0, 1], [1, 0]])


def test_non_unit_divisor():
    with pytest.raises(NonUnitDivisor):
        symplectic_basis([], [[0, 2], [-2, 0]])


@pytest.mark.parametrize("name,genus", [("fig1", 1), ("sym3_D1", 2), ("fermat3", 1)])
def test_symplectic_basis_on_curves(name, genus):
    S = surface(name)
    G = S.lifted_graph
    assert all(c.is_cycle(G) for c in S.cycles)
    assert len(S.cycles) == G.cycle_rank
    sym = S.symplectic
    assert sym.genus == genus
    N = transform_gram(sym.change_of_basis, S.gram)
    g = genus
    for i in range(2 * g):
        for j in range(2 * g):
            want = 1 if j == i + g else -1 if i == j + g else 0
            assert N[i][j] == want


def test_intersection_number_on_combinations():
    S = surface("sym3_D1")
    G, cycles, gram = S.lifted_graph, S.cycles, S.gram
    sym = S.symplectic
    a1, b1 = sym.alpha[0], sym.beta[0]
    assert intersection_number(a1, b1, G, cycles, gram) == 1
    assert intersection_number(b1, a1, G, cycles, gram) == -1
    assert intersection_number(a1, a1, G, cycles, gram) == 0
    twice = combine([a1, sym.alpha[1]], [2, 1])
    assert intersection_number(twice, b1, G, cycles, gram) == 2
    assert cycle_coordinates(cycles[3], G, cycles) == [int(i == 3) for i in range(len(cycles))]


def test_baker_genus_mismatch():
    # Baker's count overshoots for a singular model without supplied differentials
    S = surface("macbeath")
    from periodica.pipeline import RiemannSurface
    R = RiemannSurface(S.curve, 100, None, skeleton=S.skeleton)
    R.__dict__["lifts"] = S.lifts
    with pytest.raises(GenusMismatch) as info:
        R.symplectic
    assert "--differentials" in info.value.hint
