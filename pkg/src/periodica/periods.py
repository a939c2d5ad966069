"""Period matrices by Gauss-Legendre quadrature along lifted edges."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import gmpy2
import mpmath

from . import kernels
from .differentials import DifferentialBasis
from .errors import OrderCapExceeded, RiemannCheckFailed, SingularAlphaBlock
from .homology import LiftedGraph, SymplecticBasis
from .numerics import PrecisionContext, legendre_rule, mat_solve, mpc, mpfr

log = logging.getLogger(__name__)

START_ORDER = 32
ORDER_CAP = 2 ** 14


def _bernstein_rho(v0: complex, v1: complex, sites) -> float:
    """Parameter of the largest Bernstein ellipse around [v0, v1] avoiding sites."""
    best = math.inf
    h = (v1 - v0) / 2
    m = (v0 + v1) / 2
    for s in sites:
        u = (s - m) / h
        w = (u * u - 1) ** 0.5
        best = min(best, max(abs(u + w), abs(u - w)))
    return best


def predicted_order(v0: complex, v1: complex, sites, bits: int) -> int:
    """Starting order from the geometric convergence rate rho^(-2L)."""
    rho = _bernstein_rho(v0, v1, sites)
    if not sites or rho == math.inf:
        return START_ORDER
    if rho <= 1.0 + 1e-12:
        return ORDER_CAP
    need = bits * math.log(2) / (2 * math.log(rho))
    order = START_ORDER
    while 2 * order <= need / 2 and order < ORDER_CAP:
        order *= 2
    return order


def edge_periods(curve, basis: DifferentialBasis, lift, skel, ctx: PrecisionContext,
                 start_order: int | None = None):
    """g x n integrals of the basis over the lifts of one edge, one column per
    starting sheet.  Returns (matrix, accepted order, error estimate)."""
    ycoeffs = curve.numeric(ctx)["y_coeffs"]
    hs = basis.numeric(ctx)
    v0 = skel.vertex_value(lift.edge[0], ctx)
    v1 = skel.vertex_value(lift.edge[1], ctx)
    if start_order is None:
        sites = [complex(float(s[0]), float(s[1])) for s in skel.sites[: skel.n_finite]]
        start_order = predicted_order(complex(v0), complex(v1), sites, ctx.prec)
    order = start_order
    prev = None
    prev_err = None
    tol = ctx.target_tolerance
    while order <= ORDER_CAP:
        nodes, weights = legendre_rule(order, ctx)
        sums = kernels.edge_quadrature(ycoeffs, hs, v0, v1, lift.ts, lift.fibers, lift.radii,
                                       nodes, weights, ctx.prec)
        with ctx.mp():
            half = (v1 - v0) / 2
            cur = [[s * half for s in row] for row in sums]
            if prev is not None:
                err = max((abs(a - b) for ra, rb in zip(cur, prev) for a, b in zip(ra, rb)), default=mpfr(0))
                scale = max([mpfr(1)] + [abs(a) for row in cur for a in row])
                if err < tol * scale:
                    return cur, order, err
                if prev_err is not None and err > prev_err:
                    log.debug("edge %s: quadrature error grew from %s to %s at order %d",
                              lift.edge, float(prev_err), float(err), order)
                prev_err = err
        prev = cur
        order *= 2
    raise OrderCapExceeded(f"quadrature on edge {lift.edge} did not converge by order {ORDER_CAP}")


@dataclass
class PeriodMatrix:
    omega: list                 # g x 2g
    genus: int
    precision_bits: int
    basis_ref: dict
    edge_integrals: dict = field(default_factory=dict, repr=False)
    orders: dict = field(default_factory=dict, repr=False)
    orientation_fixed: bool = False

    @property
    def alpha_block(self):
        return [row[: self.genus] for row in self.omega]

    @property
    def beta_block(self):
        return [row[self.genus:] for row in self.omega]

    def to_json(self, digits: int | None = None):
        digits = digits or max(10, int(self.precision_bits * 0.30103))
        fmt = lambda z: [decimal_str(z.real, digits), decimal_str(z.imag, digits)]
        return {"precision_bits": self.precision_bits, "genus": self.genus,
                "omega": [[fmt(z) for z in row] for row in self.omega],
                "basis": self.basis_ref, "orientation_fixed": self.orientation_fixed}


def decimal_str(x, digits: int) -> str:
    """Decimal string of x without first rounding it to the default context."""
    if not isinstance(x, type(gmpy2.mpfr(0))):
        x = gmpy2.mpfr(x, max(53, 4 * digits))
    return format(x, f".{digits}g")


@dataclass
class RiemannMatrix:
    tau: list
    symmetry_defect: float
    min_imag_eigenvalue: float
    imag_eigenvalues: list = field(default_factory=list)

    def to_json(self, digits: int = 30):
        fmt = lambda z: [decimal_str(z.real, digits), decimal_str(z.imag, digits)]
        return {"tau": [[fmt(z) for z in row] for row in self.tau],
                "symmetry_defect": self.symmetry_defect,
                "min_imag_eigenvalue": self.min_imag_eigenvalue}


def all_edge_periods(curve, basis, lifts: dict, skel, ctx, threads: int = 1, edges=None):
    edges = sorted(lifts) if edges is None else sorted(edges)
    job = lambda e: edge_periods(curve, basis, lifts[e], skel, ctx)
    if threads > 1 and len(edges) > 1:
        with ThreadPoolExecutor(threads) as pool:
            res = list(pool.map(job, edges))
    else:
        res = [job(e) for e in edges]
    return {e: r[0] for e, r in zip(edges, res)}, {e: r[1] for e, r in zip(edges, res)}


def chain_integral(chain, G: LiftedGraph, integrals: dict, g: int, ctx):
    with ctx.mp():
        out = [mpc(0)] * g
        for idx, m in chain.coeffs.items():
            e, k = G.edges[idx]
            col = integrals[e]
            out = [o + m * col[i][k] for i, o in enumerate(out)]
        return out


def _imag_eigenvalues(tau, ctx):
    g = len(tau)
    with mpmath.workprec(ctx.prec):
        m = mpmath.matrix(g, g)
        for i in range(g):
            for j in range(g):
                m[i, j] = (mpmath.mpf(tau[i][j].imag) + mpmath.mpf(tau[j][i].imag)) / 2
        ev = mpmath.eigsy(m, eigvals_only=True)
        return sorted(float(x) for x in ev)


def _tau(omega, g, ctx):
    a = [row[:g] for row in omega]
    b = [row[g:] for row in omega]
    with ctx.mp():
        try:
            return mat_solve(a, b)
        except ZeroDivisionError:
            raise SingularAlphaBlock("the alpha block of the period matrix is singular") from None


def riemann_matrix(P: PeriodMatrix, ctx: PrecisionContext | None = None) -> RiemannMatrix:
    """tau = Omega_alpha^-1 Omega_beta with its validity defects."""
    ctx = ctx or PrecisionContext(max(53, P.precision_bits))
    g = P.genus
    tau = _tau(P.omega, g, ctx)
    with ctx.mp():
        defect = max((abs(tau[i][j] - tau[j][i]) for i in range(g) for j in range(g)), default=mpfr(0))
    ev = _imag_eigenvalues(tau, ctx)
    return RiemannMatrix(tau, float(defect), ev[0] if ev else math.inf, ev)


def period_matrix(curve, basis: DifferentialBasis, sym: SymplecticBasis, G: LiftedGraph, lifts: dict,
                  skel, ctx: PrecisionContext, threads: int = 1, integrals: dict | None = None,
                  check: bool = True) -> PeriodMatrix:
    """Omega = (integrals over alpha | integrals over beta).

    When the imaginary part of tau comes out negative definite, the beta
    cycles are negated (in ``sym`` as well) and ``orientation_fixed`` is set.
    """
    g = sym.genus
    orders = {}
    if integrals is None:
        needed = {G.edges[idx][0] for c in sym.cycles for idx in c.coeffs}
        integrals, orders = all_edge_periods(curve, basis, lifts, skel, ctx, threads, needed)
    cols = [chain_integral(c, G, integrals, g, ctx) for c in sym.cycles]
    omega = [[cols[j][i] for j in range(2 * g)] for i in range(g)]
    ref = {"differentials": basis.strings(curve.variables), "source": basis.source,
           "change_of_basis": sym.change_of_basis}
    P = PeriodMatrix(omega, g, ctx.working_bits, ref, integrals, orders)
    if g == 0:
        return P
    R = riemann_matrix(P, ctx)
    if R.imag_eigenvalues and R.imag_eigenvalues[-1] < 0:
        log.info("imaginary part of tau negative definite; negating the beta cycles")
        with ctx.mp():
            P.omega = [row[:g] + [-z for z in row[g:]] for row in omega]
        sym.beta = [-c for c in sym.beta]
        sym.change_of_basis = sym.change_of_basis[:g] + [[-x for x in r] for r in sym.change_of_basis[g:]]
        P.basis_ref["change_of_basis"] = sym.change_of_basis
        P.orientation_fixed = True
        R = riemann_matrix(P, ctx)
    if check:
        validate(R, ctx)
    return P


def validate(R: RiemannMatrix, ctx: PrecisionContext):
    limit = 2.0 ** (-ctx.working_bits / 2)
    if R.symmetry_defect >= limit:
        raise RiemannCheckFailed(f"tau is not symmetric (defect {R.symmetry_defect:.3g})")
    if not R.min_imag_eigenvalue > 0:
        raise RiemannCheckFailed(f"Im tau is not positive definite (min eigenvalue {R.min_imag_eigenvalue:.3g})")
