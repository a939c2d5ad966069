import gmpy2
import mpmath
import pytest

from periodica.errors import RiemannCheckFailed
from periodica.numerics import PrecisionContext, mpc
from periodica.periods import ORDER_CAP, START_ORDER, RiemannMatrix, predicted_order, riemann_matrix, validate
from periodica.pipeline import RiemannSurface


@pytest.fixture(scope="module")
def lemniscatic():
    return RiemannSurface("y^2 - x^3 + x", 100)


def test_lemniscate_period(lemniscatic):
    S = lemniscatic
    with mpmath.workprec(140):
        w = mpmath.gamma(mpmath.mpf(1) / 4) ** 2 / (2 * mpmath.sqrt(2 * mpmath.pi))
        w = gmpy2.mpfr(mpmath.nstr(w, 42), 140)
    with S.ctx.mp():
        for z in S.period_matrix.omega[0]:
            # dx/(2y) over the two generators of the square lattice
            assert min(abs(z - u * w) for u in (1, -1, 1j, -1j)) < 2.0 ** -95


def test_json_keeps_all_digits(lemniscatic):
    P = lemniscatic.period_matrix
    doc = P.to_json()
    re, im = doc["omega"][0][0]
    with lemniscatic.ctx.mp():
        back = mpc(gmpy2.mpfr(re), gmpy2.mpfr(im))
        assert abs(back - P.omega[0][0]) < 2.0 ** -95


def test_tau_is_i(lemniscatic):
    R = lemniscatic.riemann_matrix
    t = complex(R.tau[0][0])
    assert abs(abs(t) - 1) < 1e-25 and abs(t.real) < 1e-25
    assert R.min_imag_eigenvalue > 0


def test_predicted_order():
    assert predicted_order(0, 1, [], 100) == START_ORDER
    near = predicted_order(0, 1, [0.5 + 1e-3j], 100)
    far = predicted_order(0, 1, [0.5 + 10j], 100)
    assert near > far >= START_ORDER
    assert predicted_order(0, 1, [0.5], 100) == ORDER_CAP


def test_validate_rejects_asymmetric():
    ctx = PrecisionContext(100)
    with ctx.mp():
        R = RiemannMatrix([[mpc(0, 1), mpc(0.1)], [mpc(0), mpc(0, 1)]], 0.1, 1.0)
    with pytest.raises(RiemannCheckFailed) as info:
        validate(R, ctx)
    assert "--differentials" in info.value.hint
    with ctx.mp():
        R = RiemannMatrix([[mpc(0, -1)]], 0.0, -1.0)
    with pytest.raises(RiemannCheckFailed):
        validate(R, ctx)


def test_genus_two_riemann_matrix():
    S = RiemannSurface("y^2 - (x^6 - x^5 + 1)", 100)
    R = riemann_matrix(S.period_matrix)
    assert R.symmetry_defect < 2.0 ** -80
    assert len(R.imag_eigenvalues) == 2 and R.imag_eigenvalues[0] > 0


def test_threads_same_periods():
    a = RiemannSurface("y^3 - x^4 + 1", 100, threads=1).period_matrix
    b = RiemannSurface("y^3 - x^4 + 1", 100, threads=4).period_matrix
    assert a.to_json() == b.to_json()
