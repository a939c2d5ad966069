"""Exact plane curves over Q or a number field.

Field elements are ``flint.fmpq`` for Q and ``flint.fmpq_poly`` reduced
modulo the minimal polynomial for a number field.  Bivariate polynomials
are dicts ``{(i, j): coeff}`` for the monomial x^i y^j; univariate ones are
coefficient lists (index = degree).
"""
from __future__ import annotations

import ast
import hashlib
import re
import threading
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Sequence

import flint
import gmpy2

from .errors import NotIrreducible, NotSquarefree, ParseError, ZeroLeadingForm
from .numerics import PrecisionContext, mpc, newton_refine, roots, to_mpc


# ---------------------------------------------------------------------------
# fields

class RationalField:
    """The field Q."""

    name = None
    degree = 1

    def __init__(self):
        self.zero = flint.fmpq(0)
        self.one = flint.fmpq(1)

    def __eq__(self, other):
        return isinstance(other, RationalField)

    def __hash__(self):
        return hash("Q")

    def coerce(self, a):
        if isinstance(a, flint.fmpq):
            return a
        if isinstance(a, Fraction):
            return flint.fmpq(a.numerator, a.denominator)
        return flint.fmpq(a)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def neg(self, a):
        return -a

    def inv(self, a):
        return 1 / a

    def is_zero(self, a):
        return a == 0

    def key(self, a) -> str:
        return str(a)

    def embed(self, a, ctx):
        with ctx.mp():
            return mpc(gmpy2.mpq(int(a.p), int(a.q)))

    def rational(self, a):
        """Return a as fmpq if it lies in Q, else None."""
        return a

    def describe(self):
        return {"type": "rationals"}


class NumberField:
    """Q(t) = Q[t]/(m(t)) with a chosen complex embedding t -> root."""

    def __init__(self, name: str, min_poly: Sequence, embedding: complex):
        self.name = name
        self.min_poly = flint.fmpq_poly([flint.fmpq(c) if not isinstance(c, Fraction)
                                          else flint.fmpq(c.numerator, c.denominator) for c in min_poly])
        self.degree = self.min_poly.degree()
        if self.degree < 1:
            raise ParseError("minimal polynomial must have positive degree")
        facs = self.min_poly.factor()[1]
        if len(facs) != 1 or facs[0][1] != 1:
            raise ParseError(f"minimal polynomial {self.min_poly} is not irreducible over Q")
        self.embedding_guess = complex(embedding)
        self.zero = flint.fmpq_poly([])
        self.one = flint.fmpq_poly([1])
        self._gen_cache: dict[int, object] = {}
        self._lock = threading.Lock()

    def __eq__(self, other):
        return (isinstance(other, NumberField) and self.min_poly == other.min_poly
                and abs(self.embedding_guess - other.embedding_guess) < 1e-8)

    def __hash__(self):
        return hash((str(self.min_poly), round(self.embedding_guess.real, 8), round(self.embedding_guess.imag, 8)))

    def coerce(self, a):
        if isinstance(a, flint.fmpq_poly):
            return a % self.min_poly
        if isinstance(a, Fraction):
            a = flint.fmpq(a.numerator, a.denominator)
        return flint.fmpq_poly([a])

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return (a * b) % self.min_poly

    def neg(self, a):
        return -a

    def inv(self, a):
        g, s, _ = a.xgcd(self.min_poly)
        return (s / g[0]) % self.min_poly

    def is_zero(self, a):
        return a.is_zero()

    def key(self, a) -> str:
        return str(a)

    def generator_value(self, ctx: PrecisionContext):
        """The embedding of t refined to the working precision."""
        with self._lock:
            if ctx.prec not in self._gen_cache:
                with ctx.mp():
                    p = [mpc(gmpy2.mpq(int(c.p), int(c.q))) for c in self.min_poly.coeffs()]
                    r = newton_refine(p, mpc(self.embedding_guess), 1e-3 * max(1.0, abs(self.embedding_guess)), ctx)
                self._gen_cache[ctx.prec] = r
            return self._gen_cache[ctx.prec]

    def embed(self, a, ctx):
        t = self.generator_value(ctx)
        with ctx.mp():
            acc = mpc(0)
            for c in reversed(a.coeffs()):
                acc = acc * t + mpc(gmpy2.mpq(int(c.p), int(c.q)))
            return acc

    def rational(self, a):
        if a.degree() <= 0:
            return a[0]
        return None

    def describe(self):
        return {"type": "number_field", "generator": self.name,
                "min_poly": [str(c) for c in self.min_poly.coeffs()],
                "embedding": [self.embedding_guess.real, self.embedding_guess.imag]}


QQ = RationalField()


# ---------------------------------------------------------------------------
# bivariate polynomial helpers (dict form)

def bipoly_add(K, a, b, sign=1):
    out = dict(a)
    for m, c in b.items():
        c = c if sign == 1 else K.neg(c)
        if m in out:
            s = K.add(out[m], c)
            if K.is_zero(s):
                del out[m]
            else:
                out[m] = s
        else:
            out[m] = c
    return out


def bipoly_mul(K, a, b):
    out: dict = {}
    for (i1, j1), c1 in a.items():
        for (i2, j2), c2 in b.items():
            m = (i1 + i2, j1 + j2)
            c = K.mul(c1, c2)
            out[m] = K.add(out[m], c) if m in out else c
    return {m: c for m, c in out.items() if not K.is_zero(c)}


def bipoly_str(K, p, names=("x", "y")) -> str:
    if not p:
        return "0"
    terms = []
    for (i, j) in sorted(p, key=lambda m: (-(m[0] + m[1]), -m[0])):
        c = p[(i, j)]
        mono = "*".join(([f"{names[0]}^{i}" if i > 1 else names[0]] if i else [])
                        + ([f"{names[1]}^{j}" if j > 1 else names[1]] if j else []))
        cs = K.key(c)
        if K.name and not re.fullmatch(r"-?[0-9/]+", cs):
            cs = f"({cs.replace('x', K.name)})"
        if mono:
            terms.append(mono if cs == "1" else f"-{mono}" if cs == "-1" else f"{cs}*{mono}")
        else:
            terms.append(cs)
    return " + ".join(terms).replace("+ -", "- ")


# ---------------------------------------------------------------------------
# parsing

_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)


class _PolyEvaluator:
    """Walks a restricted Python AST and builds a polynomial dict."""

    def __init__(self, K, variables: tuple[str, str]):
        self.K = K
        self.vars = variables

    def const(self, c):
        return {(0, 0): c} if not self.K.is_zero(c) else {}

    def eval(self, node):
        K = self.K
        if isinstance(node, ast.Expression):
            return self.eval(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, int):
                raise ParseError(f"unsupported literal {node.value!r}")
            return self.const(K.coerce(node.value))
        if isinstance(node, ast.Name):
            if node.id == self.vars[0]:
                return {(1, 0): K.one}
            if node.id == self.vars[1]:
                return {(0, 1): K.one}
            if K.name is not None and node.id == K.name:
                return self.const(flint.fmpq_poly([0, 1]) % K.min_poly)
            raise ParseError(f"unknown symbol {node.id!r}")
        if isinstance(node, ast.UnaryOp):
            v = self.eval(node.operand)
            if isinstance(node.op, ast.USub):
                return {m: K.neg(c) for m, c in v.items()}
            if isinstance(node.op, ast.UAdd):
                return v
            raise ParseError("unsupported unary operator")
        if isinstance(node, ast.BinOp) and isinstance(node.op, _ALLOWED_BINOPS):
            a = self.eval(node.left)
            if isinstance(node.op, ast.Pow):
                e = node.right
                if not (isinstance(e, ast.Constant) and isinstance(e.value, int) and e.value >= 0):
                    raise ParseError("exponents must be non-negative integer literals")
                out = {(0, 0): K.one}
                for _ in range(e.value):
                    out = bipoly_mul(K, out, a)
                return out
            b = self.eval(node.right)
            if isinstance(node.op, ast.Add):
                return bipoly_add(K, a, b)
            if isinstance(node.op, ast.Sub):
                return bipoly_add(K, a, b, sign=-1)
            if isinstance(node.op, ast.Mult):
                return bipoly_mul(K, a, b)
            # division by a nonzero constant only
            if set(b) != {(0, 0)}:
                raise ParseError("division by a non-constant expression")
            inv = K.inv(b[(0, 0)])
            return {m: K.mul(c, inv) for m, c in a.items()}
        raise ParseError(f"unsupported syntax: {ast.dump(node)[:60]}")


def _normalise_expression(text: str) -> str:
    text = text.replace("^", "**").replace("−", "-").replace("·", "*")
    # implicit multiplication: 2x, 3(x+1), )(, x y
    text = re.sub(r"(\d)\s*([A-Za-z_(])", r"\1*\2", text)
    text = re.sub(r"\)\s*([A-Za-z_0-9(])", r")*\1", text)
    text = re.sub(r"([A-Za-z_]\w*)\s+([A-Za-z_(])", r"\1*\2", text)
    return text


def parse_polynomial(text: str, K=QQ, variables=("x", "y")) -> dict:
    """Parse a polynomial expression in the two variables (and the field
    generator, if any).  An equation ``lhs = rhs`` is read as lhs - rhs."""
    if text.count("=") > 1:
        raise ParseError("at most one '=' allowed")
    if "=" in text:
        lhs, rhs = text.split("=")
        text = f"({lhs}) - ({rhs})"
    src = _normalise_expression(" ".join(text.split()))
    if not src:
        raise ParseError("empty polynomial")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {text!r}: {exc.msg}") from None
    return _PolyEvaluator(K, variables).eval(tree)


_FIELD_RE = re.compile(r"field\s+([A-Za-z_]\w*)\s*:\s*([^;]+);\s*embedding\s+([^;]+);?", re.S)
_VARS_RE = re.compile(r"vars\s+([A-Za-z_]\w*)\s*,\s*([A-Za-z_]\w*)\s*;", re.S)


def _parse_complex(text: str) -> complex:
    s = text.strip().replace(" ", "").replace("i", "j").replace("I", "j")
    try:
        return complex(s)
    except ValueError:
        raise ParseError(f"bad embedding {text!r}") from None


def parse_header(text: str):
    """Strip comments and the optional ``field`` / ``vars`` declarations.

    Returns (field, variables, remaining polynomial text)."""
    body = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
    K = QQ
    variables = ("x", "y")
    m = _FIELD_RE.search(body)
    if m:
        name, poly_text, emb = m.group(1), m.group(2), m.group(3)
        mp = parse_polynomial(poly_text, QQ, (name, "_unused_"))
        if any(j for (_, j) in mp):
            raise ParseError("bad minimal polynomial")
        deg = max(i for (i, _) in mp)
        coeffs = [mp.get((i, 0), flint.fmpq(0)) for i in range(deg + 1)]
        K = NumberField(name, coeffs, _parse_complex(emb))
        body = body[: m.start()] + body[m.end():]
    m = _VARS_RE.search(body)
    if m:
        variables = (m.group(1), m.group(2))
        body = body[: m.start()] + body[m.end():]
    return K, variables, body.strip().rstrip(";")


# ---------------------------------------------------------------------------
# univariate polynomials over K

def upoly_trim(K, p):
    p = list(p)
    while p and K.is_zero(p[-1]):
        p.pop()
    return p


def upoly_derivative(K, p):
    return upoly_trim(K, [K.mul(K.coerce(i), p[i]) for i in range(1, len(p))])


def upoly_mul(K, a, b):
    if not a or not b:
        return []
    out = [K.zero] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if K.is_zero(x):
            continue
        for j, y in enumerate(b):
            out[i + j] = K.add(out[i + j], K.mul(x, y))
    return upoly_trim(K, out)


def upoly_divmod(K, a, b):
    a = upoly_trim(K, a)
    b = upoly_trim(K, b)
    if not b:
        raise ZeroDivisionError
    inv = K.inv(b[-1])
    q = [K.zero] * max(0, len(a) - len(b) + 1)
    r = list(a)
    while len(r) >= len(b) and r:
        c = K.mul(r[-1], inv)
        k = len(r) - len(b)
        q[k] = c
        for i, bc in enumerate(b):
            r[i + k] = K.sub(r[i + k], K.mul(c, bc))
        r = upoly_trim(K, r[:-1] if K.is_zero(r[-1]) else r)
    return upoly_trim(K, q), r


def upoly_gcd(K, a, b):
    a, b = upoly_trim(K, a), upoly_trim(K, b)
    while b:
        _, r = upoly_divmod(K, a, b)
        a, b = b, r
    if not a:
        return a
    inv = K.inv(a[-1])
    return [K.mul(c, inv) for c in a]


def upoly_squarefree_part(K, p):
    g = upoly_gcd(K, p, upoly_derivative(K, p))
    q, r = upoly_divmod(K, p, g)
    assert not r
    return q


# ---------------------------------------------------------------------------
# curve

@dataclass(frozen=True)
class NewtonPolygonData:
    support: frozenset
    hull: tuple
    interior_points: tuple


@dataclass(frozen=True)
class CriticalLocus:
    finite_points: tuple
    includes_infinity: bool = True
    squarefree_degree: int = 0


class PlaneCurve:
    """f(x, y) = sum_j f_j(x) y^j with exact coefficients."""

    def __init__(self, f: dict, K=QQ, variables=("x", "y"), source: str | None = None):
        self.field = K
        self.f = {m: K.coerce(c) for m, c in f.items() if not K.is_zero(K.coerce(c))}
        self.variables = tuple(variables)
        if not self.f:
            raise ParseError("zero polynomial")
        self.n = max(j for (_, j) in self.f)
        if self.n == 0:
            raise ZeroLeadingForm("f has y-degree 0")
        self.y_coeffs = []
        for j in range(self.n + 1):
            deg = max([i for (i, jj) in self.f if jj == j], default=-1)
            self.y_coeffs.append([self.f.get((i, j), K.zero) for i in range(deg + 1)])
        self.source = source if source is not None else bipoly_str(K, self.f, self.variables)
        self._numeric: dict = {}
        self._lock = threading.Lock()
        self._disc = None
        self._check_squarefree()

    # -- identity
    def canonical_string(self) -> str:
        parts = [f"{i},{j}:{self.field.key(c)}" for (i, j), c in sorted(self.f.items())]
        head = "Q" if self.field.name is None else f"{self.field.min_poly}|{self.field.embedding_guess}"
        return head + ";" + ";".join(parts)

    @property
    def key(self) -> str:
        return hashlib.sha256(self.canonical_string().encode()).hexdigest()[:16]

    def __repr__(self):
        return f"PlaneCurve({bipoly_str(self.field, self.f, self.variables)})"

    # -- exact layer
    def _mpoly_ctx(self):
        names = ("x", "y") if self.field.name is None else ("x", "y", "t_")
        return flint.fmpq_mpoly_ctx.get(names, "lex")

    def to_mpoly(self):
        ctx = self._mpoly_ctx()
        d = {}
        for (i, j), c in self.f.items():
            if self.field.name is None:
                d[(i, j)] = c
            else:
                for k, ck in enumerate(c.coeffs()):
                    if ck != 0:
                        d[(i, j, k)] = ck
        return ctx.from_dict(d)

    def _from_mpoly_x(self, p) -> list:
        """Convert an mpoly in x (and t_) to a univariate list over K."""
        K = self.field
        deg = 0
        terms = p.to_dict()
        if terms:
            deg = max(m[0] for m in terms)
        out = [K.zero] * (deg + 1)
        for m, c in terms.items():
            if m[1] != 0:
                raise ValueError("unexpected y in univariate polynomial")
            if K.name is None:
                out[m[0]] = out[m[0]] + c
            else:
                out[m[0]] = K.add(out[m[0]], K.coerce(flint.fmpq_poly([0] * m[2] + [c])))
        return upoly_trim(K, out)

    def y_discriminant(self) -> list:
        """Res_y(f, df/dy) / f_n as a univariate polynomial over the field."""
        if self._disc is None:
            F = self.to_mpoly()
            res = F.resultant(F.derivative("y"), "y")
            ctx = F.context()
            lead = ctx.from_dict({(m[0], 0) + tuple(m[2:]): c
                                  for m, c in F.to_dict().items() if m[1] == self.n})
            q = res / lead
            self._disc = self._from_mpoly_x(q)
        return self._disc

    def _check_squarefree(self):
        if not self.y_discriminant():
            raise NotSquarefree("f is not squarefree as a polynomial in y")
        content = self.y_coeffs[0]
        for c in self.y_coeffs[1:]:
            content = upoly_gcd(self.field, content, c)
        if len(content) > 1:
            raise NotIrreducible("f has a factor depending only on x")

    def critical_polynomial(self) -> list:
        """Squarefree part of f_n * disc_y(f)."""
        K = self.field
        p = upoly_mul(K, self.y_coeffs[self.n], self.y_discriminant())
        return upoly_squarefree_part(K, p)

    def embed_upoly(self, p, ctx) -> list:
        return [self.field.embed(c, ctx) for c in p]

    # -- numeric layer
    def numeric(self, ctx: PrecisionContext):
        """Embedded coefficient data, cached per precision."""
        with self._lock:
            data = self._numeric.get(ctx.prec)
            if data is None:
                K = self.field
                ycoeffs = [[K.embed(c, ctx) for c in fj] for fj in self.y_coeffs]
                data = {"y_coeffs": ycoeffs}
                self._numeric[ctx.prec] = data
            return data

    def fiber_poly(self, x0, ctx) -> list:
        """Coefficients of f(x0, y) in y."""
        ycs = self.numeric(ctx)["y_coeffs"]
        with ctx.mp():
            out = []
            for fj in ycs:
                acc = mpc(0)
                for c in reversed(fj):
                    acc = acc * x0 + c
                out.append(acc)
            return out

    def evaluate(self, x0, y0, ctx):
        p = self.fiber_poly(x0, ctx)
        with ctx.mp():
            acc = mpc(0)
            for c in reversed(p):
                acc = acc * y0 + c
            return acc


def parse_curve(source: str) -> PlaneCurve:
    """Parse a curve document (see the README for the grammar)."""
    K, variables, body = parse_header(source)
    f = parse_polynomial(body, K, variables)
    if not f:
        raise ParseError("zero polynomial")
    return PlaneCurve(f, K, variables, source=source.strip())


def y_discriminant(curve: PlaneCurve) -> list:
    return curve.y_discriminant()


def critical_locus(curve: PlaneCurve, ctx: PrecisionContext) -> CriticalLocus:
    """Numeric roots of the squarefree part of f_n * disc_y(f)."""
    p = curve.critical_polynomial()
    if len(p) <= 1:
        return CriticalLocus((), True, 0)
    coeffs = curve.embed_upoly(p, ctx)
    rts = roots(coeffs, ctx)
    tol = ctx.eps(ctx.working_bits // 4)
    merged: list[list] = []
    with ctx.mp():
        for r in rts:
            for cl in merged:
                if abs(cl[0] - r) < tol:
                    cl.append(r)
                    break
            else:
                merged.append([r])
        pts = tuple(sum(cl[1:], cl[0]) / len(cl) for cl in merged)
    return CriticalLocus(pts, True, len(p) - 1)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def newton_polygon(curve: PlaneCurve) -> NewtonPolygonData:
    pts = sorted(set(curve.f))
    if len(pts) <= 2:
        return NewtonPolygonData(frozenset(pts), tuple(pts), ())
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = tuple(lower[:-1] + upper[:-1])
    interior = []
    if len(hull) >= 3:
        xs = [p[0] for p in hull]
        ys = [p[1] for p in hull]
        for i in range(min(xs), max(xs) + 1):
            for j in range(min(ys), max(ys) + 1):
                if all(_cross(hull[k], hull[(k + 1) % len(hull)], (i, j)) > 0 for k in range(len(hull))):
                    interior.append((i, j))
    return NewtonPolygonData(frozenset(pts), hull, tuple(interior))


def baker_numerators(curve: PlaneCurve) -> list[dict]:
    """Monomials x^(i-1) y^(j-1) for interior points (i, j), ordered by total
    degree, then by the exponent of x."""
    K = curve.field
    pts = sorted(newton_polygon(curve).interior_points, key=lambda p: (p[0] + p[1], p[0]))
    return [{(i - 1, j - 1): K.one} for (i, j) in pts]
