from fractions import Fraction

import flint
import pytest

from periodica.curve import (QQ, NumberField, baker_numerators, critical_locus, newton_polygon, parse_curve,
                             parse_polynomial, y_discriminant)
from periodica.errors import NotIrreducible, NotSquarefree, ParseError, ZeroLeadingForm
from periodica.numerics import PrecisionContext


def test_parse_basic():
    c = parse_curve("y^2 - x^3 + x + 1")
    assert c.n == 2
    assert c.y_coeffs[2] == [QQ.one]
    assert [int(a) for a in c.y_coeffs[0]] == [1, 1, 0, -1]


def test_parse_implicit_and_rational():
    p = parse_polynomial("2x y^2 - 3/4*x**2 + (x+1)(y-1)")
    assert p[(1, 2)] == 2
    assert p[(2, 0)] == flint.fmpq(-3, 4)
    assert p[(1, 1)] == 1 and p[(0, 1)] == 1 and p[(1, 0)] == -1 and p[(0, 0)] == -1


def test_parse_multiline_and_comments():
    c = parse_curve("# a comment\n y^2\n  - x^5 # trailing\n + 1\n")
    assert c.n == 2
    assert len(c.y_coeffs[0]) == 6


@pytest.mark.parametrize("text", ["y^2 - y^2", "y^2 +* x", "y^(1/2) - x", "y^-1 - x", "import os", "z + y"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_curve(text)


def test_not_squarefree():
    with pytest.raises(NotSquarefree):
        parse_curve("(y - x)^2")


def test_zero_leading_form():
    with pytest.raises(ZeroLeadingForm):
        parse_curve("x^3 - 1")


def test_x_only_factor():
    with pytest.raises(NotIrreducible):
        parse_curve("(x - 1)*(y^2 - x)")


def test_variables_header():
    c = parse_curve("vars u, v; v^2 - u^3 + 1")
    assert c.variables == ("u", "v")
    assert c.n == 2


def test_number_field_header():
    c = parse_curve("field i: i^2 + 1; embedding 0+1i; y^2 - x^3 - i*x")
    K = c.field
    assert isinstance(K, NumberField)
    assert K.degree == 2
    ctx = PrecisionContext(100)
    t = K.generator_value(ctx)
    assert abs(t - 1j) < 2.0 ** -100


def test_number_field_reducible_rejected():
    with pytest.raises(ParseError):
        parse_curve("field t: t^2 - 1; embedding 1; y^2 - x^3 - t")


def test_discriminant_elliptic():
    c = parse_curve("y^2 - x^3 + x + 1")
    # disc_y(y^2 - g) = 4 g up to the sign convention; roots are those of g
    d = [flint.fmpq(a) for a in y_discriminant(c)]
    g = [flint.fmpq(a) for a in (-1, -1, 0, 1)]
    ratio = d[3] / g[3]
    assert all(a == ratio * b for a, b in zip(d, g))


def test_critical_locus():
    c = parse_curve("y^2 - x^3 + x + 1")
    ctx = PrecisionContext(100)
    S = critical_locus(c, ctx)
    assert len(S.finite_points) == 3
    with ctx.mp():
        for s in S.finite_points:
            assert abs(s ** 3 - s - 1) < 2.0 ** -90


@pytest.mark.parametrize("src,count", [
    ("y^2 - x^3 + x + 1", 1),
    ("y^2 - (x^6 - x^5 + 1)", 2),
    ("x^3 + y^3 + 1", 1),
    ("x^4 + y^4 + 1", 3),
    ("1 + 7*x*y + 21*x^2*y^2 + 35*x^3*y^3 + 28*x^4*y^4 + 2*x^7 + 2*y^7", 21),
])
def test_baker_counts(src, count):
    assert len(baker_numerators(parse_curve(src))) == count


def test_baker_numerator_shift():
    # interior point (i, j) gives x^(i-1) y^(j-1)
    c = parse_curve("y^2 - (x^6 - x^5 + 1)")
    nums = baker_numerators(c)
    assert [list(h) for h in nums] == [[(0, 0)], [(1, 0)]]


def test_newton_polygon_interior_strict():
    c = parse_curve("x^3 + y^3 + 1")
    npd = newton_polygon(c)
    assert set(npd.hull) == {(0, 0), (3, 0), (0, 3)}
    assert npd.interior_points == ((1, 1),)


def test_curve_key_stable():
    a = parse_curve("y^2 - x^3 + x + 1")
    b = parse_curve("y**2 + 1 + x - x**3")
    assert a.key == b.key
    assert a.key != parse_curve("y^2 - x^3 + x - 1").key


def test_fraction_coefficients():
    c = parse_curve("y^2 - x^3 - 1/2")
    assert c.y_coeffs[0][0] == flint.fmpq(-1, 2)
    assert Fraction(1, 2) == Fraction(int(-c.y_coeffs[0][0].p), int(c.y_coeffs[0][0].q))
