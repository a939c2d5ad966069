"""Bases of holomorphic differentials h dx / f_y."""
from __future__ import annotations

from dataclasses import dataclass

from .continuation import EdgeLift, evaluate_on_edge
from .curve import PlaneCurve, baker_numerators, bipoly_str, parse_polynomial
from .errors import DependentNumerators, SmallDenominator
from .numerics import PrecisionContext, mpc, to_mpfr


@dataclass
class DifferentialBasis:
    numerators: list        # exact bivariate polynomials {(i, j): coeff}
    source: str             # "baker" or "user"
    field: object

    def __len__(self):
        return len(self.numerators)

    def strings(self, names=("x", "y")) -> list[str]:
        return [bipoly_str(self.field, h, names) for h in self.numerators]

    def numeric(self, ctx: PrecisionContext) -> list:
        """Numerators as lists of (x exponent, y exponent, complex coefficient)."""
        K = self.field
        with ctx.mp():
            return [[(a, b, K.embed(c, ctx)) for (a, b), c in sorted(h.items())]
                    for h in self.numerators]


def _rank(K, rows: list[list]) -> int:
    rows = [list(r) for r in rows]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if not K.is_zero(rows[i][col])), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = K.inv(rows[rank][col])
        for i in range(rank + 1, len(rows)):
            if not K.is_zero(rows[i][col]):
                c = K.mul(rows[i][col], inv)
                rows[i] = [K.sub(x, K.mul(c, y)) for x, y in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def differential_basis(curve: PlaneCurve, user_numerators=None) -> DifferentialBasis:
    """Baker numerators, or the given ones after an independence check."""
    K = curve.field
    if user_numerators is None:
        return DifferentialBasis(baker_numerators(curve), "baker", K)
    hs = []
    for h in user_numerators:
        if isinstance(h, str):
            h = parse_polynomial(h, K, curve.variables)
        else:
            h = {k: K.coerce(v) for k, v in h.items()}
        hs.append({k: v for k, v in h.items() if not K.is_zero(v)})
    monos = sorted({m for h in hs for m in h})
    if any(not h for h in hs):
        raise DependentNumerators("zero numerator in the differential basis")
    rows = [[h.get(m, K.zero) for m in monos] for h in hs]
    if _rank(K, rows) < len(hs):
        raise DependentNumerators("numerators are linearly dependent")
    return DifferentialBasis(hs, "user", K)


def dfdy(ycoeffs, x, y):
    """d f / d y at (x, y) from embedded coefficients indexed by y-degree."""
    acc = mpc(0)
    for j in range(len(ycoeffs) - 1, 0, -1):
        fj = ycoeffs[j]
        v = mpc(0)
        for c in reversed(fj):
            v = v * x + c
        acc = acc * y + j * v
    return acc


def eval_numerator(h, x, y):
    acc = mpc(0)
    for a, b, c in h:
        acc += c * x ** a * y ** b
    return acc


def integrand_at(curve: PlaneCurve, basis: DifferentialBasis, x, y, ctx: PrecisionContext) -> list:
    """h_i(x, y) / f_y(x, y) for every basis element."""
    ycoeffs = curve.numeric(ctx)["y_coeffs"]
    hs = basis.numeric(ctx)
    with ctx.mp():
        d = dfdy(ycoeffs, x, y)
        if abs(d) < ctx.eps(ctx.working_bits // 2):
            raise SmallDenominator("f_y nearly vanishes on the integration path")
        return [eval_numerator(h, x, y) / d for h in hs]


def integrand(curve: PlaneCurve, basis: DifferentialBasis, lift: EdgeLift, t, ctx: PrecisionContext,
              skel, sheet: int | None = None) -> list:
    """Integrand values at parameter t of a lifted edge.  Returns one list
    of g values per sheet, or a single list when ``sheet`` is given."""
    ys = evaluate_on_edge(lift, curve, skel, t, ctx)
    with ctx.mp():
        v0 = skel.vertex_value(lift.edge[0], ctx)
        v1 = skel.vertex_value(lift.edge[1], ctx)
        x = v0 + to_mpfr(t) * (v1 - v0)
    if sheet is not None:
        return integrand_at(curve, basis, x, ys[sheet], ctx)
    return [integrand_at(curve, basis, x, y, ctx) for y in ys]
