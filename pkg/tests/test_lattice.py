from fractions import Fraction

import gmpy2
import pytest

from periodica.errors import NotFound, NotPositiveDefinite
from periodica.lattice import (algebraize, approximate_kernel, cholesky_exact, fincke_pohst, hnf, integer_kernel,
                               is_lll_reduced, lll_pure, lll_reduce, same_lattice)
from periodica.numerics import PrecisionContext, mpc, mpfr

CTX = PrecisionContext(100)


def test_lll_textbook():
    rows = [[1, 1, 1], [-1, 0, 2], [3, 5, 6]]
    red, U = lll_pure(rows)
    assert is_lll_reduced(red)
    assert same_lattice(red, rows)
    assert sorted(sum(x * x for x in r) for r in red) == [1, 2, 5]


def test_lll_backends_agree_on_lattice():
    rows = [[105, 821, 404, 328], [881, 667, 644, 927], [181, 483, 87, 500], [893, 834, 732, 441]]
    a, _ = lll_reduce(rows, backend="pure")
    b, _ = lll_reduce(rows, backend="flint")
    assert same_lattice(a, b)


def test_hnf_and_kernel():
    assert hnf([[2, 4], [1, 3]]) == [[1, 1], [0, 2]]
    assert hnf([[0, 0]]) == []
    K = integer_kernel([[1, 2, 3], [4, 5, 6]])
    assert K == [[1, -2, 1]]
    assert integer_kernel([[Fraction(1, 2), Fraction(1, 3)]]) == [[2, -3]]
    assert integer_kernel([[1, 0], [0, 1]]) == []
    assert integer_kernel([], ncols=2) == [[1, 0], [0, 1]]


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        cholesky_exact([[1, 2], [2, 1]])
    with pytest.raises(NotPositiveDefinite):
        cholesky_exact([[1, 0], [1, 1]])
    Q, d = cholesky_exact([[2, 1], [1, 2]])
    assert d == [2, Fraction(3, 2)] and Q[0][1] == Fraction(1, 2)


def test_fincke_pohst_small():
    sols = fincke_pohst([[1, 0], [0, 1]], 1)
    assert [v for v, _ in sols] == [[0, 0], [-1, 0], [0, -1], [0, 1], [1, 0]]
    assert fincke_pohst([[2, 1], [1, 2]], 1) == [([0, 0], 0)]


def test_approximate_kernel_recovers_relation():
    with gmpy2.context(precision=CTX.prec):
        s2, s3 = gmpy2.sqrt(mpfr(2)), gmpy2.sqrt(mpfr(3))
        M = [[1 + s2, s2, mpfr(1), s3], [s3, s3, mpfr(0), mpfr(0)]]
    K = approximate_kernel(M, CTX)
    assert K == hnf([[1, -1, -1, 0]])


def test_approximate_kernel_none():
    with gmpy2.context(precision=CTX.prec):
        M = [[mpfr(1), gmpy2.const_pi(), gmpy2.exp(mpfr(1))]]
    assert approximate_kernel(M, CTX) == []


@pytest.mark.parametrize("expr,poly", [
    (lambda: gmpy2.sqrt(mpfr(2)), [-2, 0, 1]),
    (lambda: (1 + gmpy2.sqrt(mpfr(5))) / 2, [-1, -1, 1]),
    (lambda: mpc(-1, gmpy2.sqrt(mpfr(3))) / 2, [1, 1, 1]),
    (lambda: gmpy2.exp(mpc(0, 2) * gmpy2.const_pi() / 7), [1, 1, 1, 1, 1, 1, 1]),
    (lambda: mpfr(3) / 7, [-3, 7]),
])
def test_algebraize(expr, poly):
    with CTX.mp():
        z = expr()
    cand = algebraize(z, 6, CTX)
    assert cand.min_poly == poly


def test_algebraize_transcendental():
    with CTX.mp():
        z = gmpy2.const_pi()
    with pytest.raises(NotFound):
        algebraize(z, 4, CTX)
