import pytest

from periodica.curve import parse_curve
from periodica.differentials import differential_basis, integrand_at
from periodica.errors import DependentNumerators, ParseError
from periodica.numerics import PrecisionContext, mpc


def test_baker_default():
    c = parse_curve("y^2 - (x^6 - x^5 + 1)")
    B = differential_basis(c)
    assert B.source == "baker"
    assert B.strings() == ["1", "x"]


def test_user_numerators():
    c = parse_curve("x^4 + y^4 + 1")
    B = differential_basis(c, ["1", "x", "y"])
    assert B.source == "user" and len(B) == 3


def test_user_numerators_custom_variables():
    c = parse_curve("vars u, v; v^2 - u^5 - 1")
    B = differential_basis(c, ["1", "u"])
    assert B.strings(c.variables) == ["1", "u"]


def test_dependent_numerators():
    c = parse_curve("x^4 + y^4 + 1")
    with pytest.raises(DependentNumerators):
        differential_basis(c, ["x + y", "2*x + 2*y"])
    with pytest.raises(DependentNumerators):
        differential_basis(c, ["x - x", "y"])


def test_bad_numerator_syntax():
    c = parse_curve("x^4 + y^4 + 1")
    with pytest.raises(ParseError):
        differential_basis(c, ["x + "])


def test_integrand_values():
    c = parse_curve("y^2 - x^3 + x")
    B = differential_basis(c)
    ctx = PrecisionContext(100)
    with ctx.mp():
        x = mpc(2)
        y = mpc(6) ** 0.5
        (v,) = integrand_at(c, B, x, y, ctx)
        assert abs(v - 1 / (2 * y)) < 2.0 ** -100
