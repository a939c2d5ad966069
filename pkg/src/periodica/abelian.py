"""Homomorphisms, endomorphism algebras and symplectic maps of Jacobians,
computed from period matrices."""
from __future__ import annotations

import itertools
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import flint
import gmpy2
import numpy as np

from .errors import (ClosureFailure, IdempotentSearchFailed, NotFound, NotPositiveDefinite,
                     PrecisionTooLow, StructureConstantsNotRational)
from .lattice import algebraize, approximate_kernel, cholesky_exact, fincke_pohst, integer_kernel
from .numerics import PrecisionContext, mat_inv, mat_mul, mat_solve, mpc, mpfr
from .periods import PeriodMatrix, riemann_matrix

log = logging.getLogger(__name__)

IDEMPOTENT_DRAWS = 20
DRAW_HEIGHT = 10


def std_form(g: int) -> list[list[int]]:
    """E = [[0, I], [-I, 0]]."""
    return [[(1 if j == i + g else -1 if i == j + g else 0) for j in range(2 * g)] for i in range(2 * g)]


# ---------------------------------------------------------------------------
# small exact matrix helpers (lists of ints or Fractions)

def imat_mul(a, b):
    return (flint.fmpz_mat(a) * flint.fmpz_mat(b)).tolist() if a and b else []


def _to_int(M) -> list[list[int]]:
    return [[int(x) for x in row] for row in M.tolist()]


def transpose(a):
    return [list(r) for r in zip(*a)]


def identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _fz(a):
    return flint.fmpz_mat([[int(x) for x in row] for row in a])


def _fq(a):
    return flint.fmpq_mat([[flint.fmpq(Fraction(x).numerator, Fraction(x).denominator) for x in row]
                           for row in a])


def _q_to_frac(x) -> Fraction:
    return Fraction(int(x.p), int(x.q))


# ---------------------------------------------------------------------------
# (R, T) pairs

@dataclass
class HomEntry:
    R: list                 # 2 g2 x 2 g1 integers
    T: list                 # g2 x g1 complex
    residual: float

    @property
    def g1(self) -> int:
        return len(self.R[0]) // 2

    @property
    def g2(self) -> int:
        return len(self.R) // 2

    @property
    def blocks(self) -> dict:
        g1, g2 = self.g1, self.g2
        R = self.R
        return {"D": [r[:g1] for r in R[:g2]], "B": [r[g1:] for r in R[:g2]],
                "C": [r[:g1] for r in R[g2:]], "A": [r[g1:] for r in R[g2:]]}

    def to_json(self, digits: int = 20):
        fmt = lambda z: [format(z.real, f".{digits}g"), format(z.imag, f".{digits}g")]
        return {"R": self.R, "T": [[fmt(z) for z in row] for row in self.T], "residual": self.residual}


@dataclass
class HomBasis:
    entries: list
    g1: int
    g2: int

    @property
    def rank(self) -> int:
        return len(self.entries)

    @property
    def matrices(self) -> list:
        return [h.R for h in self.entries]

    def flat(self) -> list[list[int]]:
        return [[x for row in h.R for x in row] for h in self.entries]

    def to_json(self):
        return {"rank": self.rank, "g1": self.g1, "g2": self.g2, "basis": [h.to_json() for h in self.entries]}


def _tau(P: PeriodMatrix, ctx):
    return riemann_matrix(P, ctx).tau


def hom_system(tau1, tau2, ctx) -> list[list]:
    """Real linear system in the blocks (D, B, C, A) of R expressing
    B + tau2 A - (D + tau2 C) tau1 = 0."""
    g1, g2 = len(tau1), len(tau2)
    blk = g1 * g2
    nvar = 4 * blk
    idx = lambda b, p, q: b * blk + p * g1 + q
    rows_re, rows_im = [], []
    with ctx.mp():
        for p in range(g2):
            for q in range(g1):
                row = [mpc(0)] * nvar
                row[idx(1, p, q)] += 1
                for r in range(g2):
                    row[idx(3, r, q)] += tau2[p][r]
                for r in range(g1):
                    row[idx(0, p, r)] -= tau1[r][q]
                for r in range(g2):
                    for s in range(g1):
                        row[idx(2, r, s)] -= tau2[p][r] * tau1[s][q]
                rows_re.append([z.real for z in row])
                rows_im.append([z.imag for z in row])
    return rows_re + rows_im


def _unflatten(v, g1, g2) -> list[list[int]]:
    blk = g1 * g2
    D, B, C, A = (v[k * blk:(k + 1) * blk] for k in range(4))
    get = lambda X, p, q: X[p * g1 + q]
    R = [[0] * (2 * g1) for _ in range(2 * g2)]
    for p in range(g2):
        for q in range(g1):
            R[p][q] = get(D, p, q)
            R[p][g1 + q] = get(B, p, q)
            R[g2 + p][q] = get(C, p, q)
            R[g2 + p][g1 + q] = get(A, p, q)
    return R


def tangent_from_R(R, P1: PeriodMatrix, P2: PeriodMatrix, ctx):
    """T = (Omega2 R)[:, :g1] (Omega1[:, :g1])^-1 and the residual of T Omega1 = Omega2 R."""
    g1, g2 = P1.genus, P2.genus
    with ctx.mp():
        O2R = [[sum((P2.omega[i][k] * R[k][j] for k in range(2 * g2) if R[k][j]), mpc(0))
                for j in range(2 * g1)] for i in range(g2)]
        A1 = [row[:g1] for row in P1.omega]
        lhs = [row[:g1] for row in O2R]
        # T A1 = lhs  <=>  A1^T T^T = lhs^T
        Tt = mat_solve(transpose(A1), transpose(lhs))
        T = transpose(Tt)
        TO1 = mat_mul(T, P1.omega)
        scale = max([mpfr(1)] + [abs(z) for row in O2R for z in row])
        res = max(abs(TO1[i][j] - O2R[i][j]) for i in range(g2) for j in range(2 * g1)) / scale
    return T, float(res)


def R_from_T(T, P1: PeriodMatrix, P2: PeriodMatrix, ctx):
    """Solve Omega2 R = T Omega1 over the reals; returns (rounded R, defect)."""
    g1, g2 = P1.genus, P2.genus
    with ctx.mp():
        TO1 = mat_mul(T, P1.omega)
        A = [[mpc(z.real) for z in row] for row in P2.omega] + [[mpc(z.imag) for z in row] for row in P2.omega]
        rhs = [[mpc(z.real) for z in row] for row in TO1] + [[mpc(z.imag) for z in row] for row in TO1]
        X = mat_solve(A, rhs)
        R = [[int(gmpy2.rint(z.real)) for z in row] for row in X]
        defect = max(abs(X[i][j] - R[i][j]) for i in range(2 * g2) for j in range(2 * g1))
    return R, float(defect)


def homomorphisms(P1: PeriodMatrix, P2: PeriodMatrix, ctx: PrecisionContext,
                  keep_bits: int | None = None) -> HomBasis:
    """Z-basis of Hom(J1, J2) recovered from the period matrices."""
    g1, g2 = P1.genus, P2.genus
    if g1 == 0 or g2 == 0:
        return HomBasis([], g1, g2)
    tau1, tau2 = _tau(P1, ctx), _tau(P2, ctx)
    M = hom_system(tau1, tau2, ctx)
    kern = approximate_kernel(M, ctx, keep_bits)
    B = ctx.working_bits
    lo, hi = 2.0 ** (-B / 2), 2.0 ** (-B / 4)
    entries = []
    for v in kern:
        R = _unflatten(v, g1, g2)
        T, res = tangent_from_R(R, P1, P2, ctx)
        if res < lo:
            entries.append(HomEntry(R, T, res))
        elif res < hi:
            raise PrecisionTooLow(f"homomorphism residual {res:.3g} lies in the ambiguous zone")
        else:
            log.info("discarding lattice vector with residual %.3g", res)
    return HomBasis(entries, g1, g2)


def compose(h2: HomEntry, h1: HomEntry, ctx) -> HomEntry:
    """h2 after h1."""
    with ctx.mp():
        T = mat_mul(h2.T, h1.T)
    return HomEntry(_to_int(_fz(h2.R) * _fz(h1.R)), T, max(h1.residual, h2.residual))


def rosati_R(R) -> list[list[int]]:
    """R^dagger = -E R^T E."""
    g = len(R) // 2
    E = _fz(std_form(g))
    return _to_int(-(E * _fz(R).transpose() * E))


def rosati(h: HomEntry, P: PeriodMatrix, ctx) -> HomEntry:
    Rd = rosati_R(h.R)
    T, res = tangent_from_R(Rd, P, P, ctx)
    return HomEntry(Rd, T, res)


def hnf_equivalent(a: list, b: list) -> bool:
    """Whether two lists of integer matrices span the same Z-module."""
    from .lattice import hnf
    fa = [[x for row in m for x in row] for m in a]
    fb = [[x for row in m for x in row] for m in b]
    return hnf(fa) == hnf(fb)


# ---------------------------------------------------------------------------
# endomorphism algebra

@dataclass
class EndStructure:
    hom: HomBasis
    mult_table: list            # c[i][j][k]: b_i b_j = sum_k c_ijk b_k
    rosati_matrix: list         # b_i^dagger = sum_k r_ik b_k
    rosati_fixed_dim: int
    idempotents: list           # rational 2g x 2g matrices (Fractions)
    groups: list                # indices of mutually isogenous idempotents
    order_index: int | None = None
    center_dim: int = 0

    @property
    def rank(self) -> int:
        return self.hom.rank

    def idempotent_ranks(self) -> list[int]:
        return [_fq(e).rank() for e in self.idempotents]

    def to_json(self):
        return {
            "rank": self.rank,
            "rosati_fixed_dim": self.rosati_fixed_dim,
            "center_dim": self.center_dim,
            "idempotent_ranks": self.idempotent_ranks(),
            "idempotents": [[[str(x) for x in row] for row in e] for e in self.idempotents],
            "isogeny_groups": self.groups,
            "order_index": self.order_index,
            "mult_table": [[[str(x) for x in cij] for cij in ci] for ci in self.mult_table],
        }


def _coords(mats: list, targets: list):
    """Exact coordinates of each target in the span of mats (rational), or None."""
    F = _fq([[x for row in m for x in row] for m in mats]).transpose()   # N x r
    Ft = F.transpose()
    G = Ft * F
    out = []
    for t in targets:
        v = _fq([[x] for row in t for x in row])
        c = G.solve(Ft * v)
        if F * c != v:
            return None
        out.append([_q_to_frac(c[i, 0]) for i in range(c.nrows())])
    return out


def structure_constants(hom: HomBasis):
    mats = hom.matrices
    r = len(mats)
    prods = [_to_int(_fz(a) * _fz(b)) for a in mats for b in mats]
    coords = _coords(mats, prods)
    if coords is None:
        raise StructureConstantsNotRational("products of basis elements leave the computed module")
    return [[coords[i * r + j] for j in range(r)] for i in range(r)]


def trace_form(hom: HomBasis) -> list[list[Fraction]]:
    """Gram matrix of (x, y) -> tr(x^dagger y) on an endomorphism basis."""
    mats = [_fz(m) for m in hom.matrices]
    dag = [_fz(rosati_R(m.tolist())) for m in mats]
    r = len(mats)
    G = [[Fraction(int(sum((dag[i] * mats[j])[k, k] for k in range(mats[0].nrows())))) for j in range(r)]
         for i in range(r)]
    return [[(G[i][j] + G[j][i]) / 2 for j in range(r)] for i in range(r)]


class _Algebra:
    """Subalgebra of M_2g(Q) spanned by integer matrices, with the Rosati
    involution of the standard form."""

    def __init__(self, mats):
        self.mats = [_fq(m) for m in mats]
        self.n = self.mats[0].nrows()
        E = _fq(std_form(self.n // 2))
        self._E = E

    def dagger(self, x):
        return -(self._E * x.transpose() * self._E)

    def one(self):
        return _fq(identity(self.n))

    def combo(self, coeffs, basis):
        acc = flint.fmpq_mat(self.n, self.n)
        for c, b in zip(coeffs, basis):
            if c:
                acc = acc + b * c
        return acc


def _span(mats):
    """Basis of the Q-span of a list of fmpq matrices."""
    if not mats:
        return []
    n = mats[0].nrows()
    F = flint.fmpq_mat([[m[i, j] for i in range(n) for j in range(n)] for m in mats])
    Rr, rank = F.rref()
    return [flint.fmpq_mat([[Rr[k, i * n + j] for j in range(n)] for i in range(n)]) for k in range(rank)]


def _image_basis(e):
    """Columns spanning the image of e."""
    n = e.nrows()
    Rr, rank = e.transpose().rref()
    return flint.fmpq_mat([[Rr[k, i] for k in range(rank)] for i in range(n)]), rank


def _restrict(x, W):
    """Matrix of x on the column space W (x W subset W)."""
    Wt = W.transpose()
    return (Wt * W).solve(Wt * (x * W))


def _minpoly_on(x, W):
    return _restrict(x, W).minpoly()


def _poly_at(p, x, unit):
    coeffs = [p[i] for i in range(p.degree() + 1)]
    acc = unit * coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * x + unit * c
    return acc


def _crt_idempotents(u, m, unit):
    """Orthogonal idempotents q_i(u) for the coprime prime-power factors of m."""
    facs = m.factor()[1]
    if len(facs) < 2:
        return None
    parts = [f ** k for f, k in facs]
    out = []
    for i, pi in enumerate(parts):
        Mi = flint.fmpq_poly([1])
        for j, pj in enumerate(parts):
            if j != i:
                Mi = Mi * pj
        g, s, _ = Mi.xgcd(pi)
        q = (s * Mi) % m
        out.append(_poly_at(q, u, unit))
    return out


def _is_commutative(basis) -> bool:
    return all(a * b == b * a for a, b in itertools.combinations(basis, 2))


def _split(alg: _Algebra, e, rng: random.Random, depth=0):
    """Primitive symmetric idempotents summing to the symmetric idempotent e."""
    basis = _span([e * b * e for b in alg.mats])
    if len(basis) <= 1:
        return [e]
    W, _ = _image_basis(e)
    for _ in range(IDEMPOTENT_DRAWS):
        x = alg.combo([rng.randint(-DRAW_HEIGHT, DRAW_HEIGHT) for _ in basis], basis)
        u = x + alg.dagger(x)
        parts = _crt_idempotents(u, _minpoly_on(u, W), e)
        if parts:
            return [f for p in parts for f in _split(alg, p, rng, depth + 1)]
    if _is_commutative(basis):
        return [e]
    # non-commutative block: look for a zero divisor z among small elements,
    # then split the symmetric element z z^dagger
    for coeffs in _small_vectors(len(basis), 3):
        x = alg.combo(coeffs, basis)
        if x == flint.fmpq_mat(alg.n, alg.n):
            continue
        m = _minpoly_on(x, W)
        facs = m.factor()[1]
        if len(facs) == 1 and facs[0][1] == 1:
            continue
        f0, k0 = facs[0]
        z = _poly_at(f0 if len(facs) == 1 else f0 ** k0, x, e)
        s = z * alg.dagger(z)
        parts = _crt_idempotents(s, _minpoly_on(s, W), e)
        if parts:
            return [f for p in parts for f in _split(alg, p, rng, depth + 1)]
    log.info("no zero divisor found in a %d-dimensional block; treating it as a division algebra",
             len(basis))
    return [e]


def _small_vectors(dim, height):
    """Integer vectors ordered by max norm, up to the given height."""
    for h in range(1, height + 1):
        for v in itertools.product(range(-h, h + 1), repeat=dim):
            if max(abs(c) for c in v) == h:
                yield list(v)


def endomorphism_structure(P: PeriodMatrix, ctx: PrecisionContext, hom: HomBasis | None = None,
                           seed: int = 0) -> EndStructure:
    hom = hom if hom is not None else homomorphisms(P, P, ctx)
    if hom.rank == 0:
        raise IdempotentSearchFailed("endomorphism basis is empty; the identity was not recovered")
    mult = structure_constants(hom)
    mats = hom.matrices
    ros = _coords(mats, [rosati_R(m) for m in mats])
    if ros is None:
        raise StructureConstantsNotRational("Rosati involution does not preserve the computed module")
    r = len(mats)
    fixed = r - _fq([[ros[i][j] - (i == j) for j in range(r)] for i in range(r)]).rank()
    cholesky_exact(trace_form(hom))
    alg = _Algebra(mats)
    one = alg.one()
    if _coords(mats, [identity(2 * P.genus)]) is None:
        raise IdempotentSearchFailed("identity is not in the computed endomorphism module")
    rng = random.Random(seed)
    idem = _split(alg, one, rng)
    total = sum(e.rank() for e in idem)
    if total != 2 * P.genus:
        raise IdempotentSearchFailed(f"idempotent ranks sum to {total}, not {2 * P.genus}")
    for e in idem:
        if e * e != e or alg.dagger(e) != e:
            raise IdempotentSearchFailed("split produced a non-symmetric or non-idempotent element")
    idem.sort(key=lambda e: (e.rank(), str(e)))
    groups = _isogeny_groups(alg, idem)
    center = _center_dim(alg)
    frac = lambda e: [[_q_to_frac(e[i, j]) for j in range(e.ncols())] for i in range(e.nrows())]
    index = _order_index(alg, idem, groups)
    return EndStructure(hom, mult, ros, fixed, [frac(e) for e in idem], groups, index, center)


def _isogeny_groups(alg, idem) -> list[list[int]]:
    zero = flint.fmpq_mat(alg.n, alg.n)
    parent = list(range(len(idem)))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    for i, j in itertools.combinations(range(len(idem)), 2):
        if any(idem[i] * b * idem[j] != zero for b in alg.mats):
            parent[find(i)] = find(j)
    groups: dict = {}
    for i in range(len(idem)):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def _center_dim(alg) -> int:
    r = len(alg.mats)
    n = alg.n
    # x = sum c_k b_k commutes with every b_j
    rows = []
    for bj in alg.mats:
        comms = [bk * bj - bj * bk for bk in alg.mats]
        for i in range(n):
            for j in range(n):
                rows.append([c[i, j] for c in comms])
    return r - flint.fmpq_mat(rows).rank()


def _order_index(alg, idem, groups) -> int | None:
    """Index of the order in a product of matrix rings Z and M_k(Z).

    Recognised when each isogeny group of k idempotents spans a block of
    dimension k^2 with one-dimensional corners e_i A e_i."""
    zero = flint.fmpq_mat(alg.n, alg.n)
    for grp in groups:
        for i in grp:
            corner = _span([idem[i] * b * idem[i] for b in alg.mats])
            if len(corner) != 1:
                return None
        block = _span([idem[i] * b * idem[j] for i in grp for j in grp for b in alg.mats])
        if len(block) != len(grp) ** 2:
            return None
    ranks = [e.rank() for e in idem]

    def trd(x):
        return sum(_trace(e * x) / rk for e, rk in zip(idem, ranks))

    mats = alg.mats
    G = flint.fmpq_mat([[trd(a * b) for b in mats] for a in mats])
    d = abs(_q_to_frac(G.det()))
    if d.denominator != 1:
        return None
    root = math.isqrt(d.numerator)
    return root if root * root == d.numerator else None


def _trace(x):
    return sum((x[i, i] for i in range(x.nrows())), flint.fmpq(0))


# ---------------------------------------------------------------------------
# decomposition

@dataclass
class Factor:
    dimension: int
    idempotent: int
    multiplicity: int
    lattice: list               # integer columns spanning the saturated image of e
    periods: list               # dimension x 2 dimension complex matrix
    field: list                 # minimal polynomials of the tangent entries

    def to_json(self, digits: int = 20):
        fmt = lambda z: [format(z.real, f".{digits}g"), format(z.imag, f".{digits}g")]
        return {"dimension": self.dimension, "idempotent": self.idempotent,
                "multiplicity": self.multiplicity, "lattice": self.lattice,
                "periods": [[fmt(z) for z in row] for row in self.periods], "field": self.field}


def saturation(cols: list[list]) -> list[list[int]]:
    """Z-basis of (column span over Q) intersected with Z^n, as columns."""
    n = len(cols)
    M = _fq(cols)
    rank = M.rank()
    # orthogonal complement w with w^T M = 0, then the integer kernel of w
    comp = integer_kernel(transpose(cols)) if rank < n else []
    if not comp:
        return identity(n)
    basis = integer_kernel(comp)
    return transpose(basis)


def decompose(P: PeriodMatrix, structure: EndStructure, ctx: PrecisionContext,
              max_degree: int = 4) -> list[Factor]:
    out = []
    mult = {i: len(g) for g in structure.groups for i in g}
    for k, e in enumerate(structure.idempotents):
        rk = _fq(e).rank()
        d = rk // 2
        lat = saturation(e)
        with ctx.mp():
            OS = [[sum((P.omega[i][t] * lat[t][j] for t in range(len(lat)) if lat[t][j]), mpc(0))
                   for j in range(len(lat[0]))] for i in range(P.genus)]
        periods = _independent_rows(OS, d, ctx)
        field = _field_of(e, P, ctx, max_degree)
        out.append(Factor(d, k, mult[k], lat, periods, field))
    return out


def _independent_rows(M, d, ctx):
    rows = [list(r) for r in M]
    chosen = []
    with ctx.mp():
        work = [list(r) for r in rows]
        for _ in range(d):
            best = None
            for i, r in enumerate(work):
                if i in chosen:
                    continue
                nrm = max((abs(z) for z in r), default=mpfr(0))
                if best is None or nrm > best[0]:
                    best = (nrm, i)
            i = best[1]
            chosen.append(i)
            piv = max(range(len(work[i])), key=lambda j: abs(work[i][j]))
            for t, r in enumerate(work):
                if t != i and work[i][piv] != 0:
                    f = r[piv] / work[i][piv]
                    work[t] = [a - f * b for a, b in zip(r, work[i])]
    return [rows[i] for i in sorted(chosen)]


def _field_of(e, P, ctx, max_degree):
    den = 1
    for row in e:
        for x in row:
            den = math.lcm(den, Fraction(x).denominator)
    R = [[int(Fraction(x) * den) for x in row] for row in e]
    T, _ = tangent_from_R(R, P, P, ctx)
    polys = set()
    with ctx.mp():
        for row in T:
            for z in row:
                w = z / den
                if abs(w) < ctx.eps(ctx.working_bits // 2):
                    continue
                try:
                    cand = algebraize(w, max_degree, ctx)
                except NotFound:
                    polys.add("unknown")
                    continue
                if cand.degree > 1:
                    polys.add(cand.poly_str())
    return sorted(polys)


# ---------------------------------------------------------------------------
# symplectic maps

@dataclass
class SymplecticMapSet:
    maps: list
    target: str = "symplectic"
    degree: int = 1
    group_order: int | None = None
    element_order_histogram: dict = field(default_factory=dict)
    quotient_by_minus_one_order: int | None = None
    center_order: int | None = None
    degree_bound: Fraction | None = None

    def __len__(self):
        return len(self.maps)

    def to_json(self, with_maps: bool = True):
        out = {"count": len(self.maps), "target": self.target, "degree": self.degree,
               "group_order": self.group_order,
               "element_order_histogram": {str(k): v for k, v in sorted(self.element_order_histogram.items())},
               "quotient_by_minus_one_order": self.quotient_by_minus_one_order,
               "center_order": self.center_order}
        if self.degree_bound is not None:
            out["degree_bound"] = str(self.degree_bound)
        if with_maps:
            out["maps"] = [h.to_json() for h in self.maps]
        return out


def _pairing_gram(hom: HomBasis) -> list[list[Fraction]]:
    """Gram matrix of lambda -> tr(E1^-1 R^T E2 R) for R = sum lambda_i B_i."""
    E1 = _fz(std_form(hom.g1))
    E2 = _fz(std_form(hom.g2))
    E1inv = -E1
    mats = [_fz(m) for m in hom.matrices]
    left = [E1inv * m.transpose() * E2 for m in mats]
    r = len(mats)
    tr = lambda X: sum(X[k, k] for k in range(X.nrows()))
    G = [[Fraction(int(tr(left[i] * mats[j]))) for j in range(r)] for i in range(r)]
    return [[(G[i][j] + G[j][i]) / 2 for j in range(r)] for i in range(r)]


def _enumerate(hom: HomBasis, value: int, check, P1, P2, ctx) -> list[HomEntry]:
    if hom.rank == 0:
        return []
    G = _pairing_gram(hom)
    try:
        cholesky_exact(G)
    except NotPositiveDefinite:
        raise NotPositiveDefinite("trace form on the Hom basis is not positive definite") from None
    sols = fincke_pohst(G, value)
    mats = [_fz(m) for m in hom.matrices]
    out = []
    for lam, val in sols:
        if val != value:
            continue
        R = flint.fmpz_mat(2 * hom.g2, 2 * hom.g1)
        for c, m in zip(lam, mats):
            if c:
                R = R + m * c
        if check(R):
            Rl = _to_int(R)
            T, res = tangent_from_R(Rl, P1, P2, ctx)
            out.append(HomEntry(Rl, T, res))
    out.sort(key=lambda h: h.R)
    return out


def symplectic_isomorphisms(P1: PeriodMatrix, P2: PeriodMatrix, ctx: PrecisionContext,
                            hom: HomBasis | None = None) -> SymplecticMapSet:
    if P1.genus != P2.genus:
        return SymplecticMapSet([])
    hom = hom if hom is not None else homomorphisms(P1, P2, ctx)
    g = P1.genus
    E = _fz(std_form(g))
    maps = _enumerate(hom, 2 * g, lambda R: R.transpose() * E * R == E, P1, P2, ctx)
    return SymplecticMapSet(maps)


def fixed_degree_maps(P1: PeriodMatrix, P2: PeriodMatrix, d: int, ctx: PrecisionContext,
                      hom: HomBasis | None = None, direction: str = "pullback") -> SymplecticMapSet:
    """Homomorphisms scaling the polarization by d.

    ``pullback``:     R^T E2 R = d E1   (trace value 2 d g1)
    ``pushforward``:  R E1 R^T = d E2   (trace value 2 d g2)
    """
    hom = hom if hom is not None else homomorphisms(P1, P2, ctx)
    g1, g2 = P1.genus, P2.genus
    E1, E2 = _fz(std_form(g1)), _fz(std_form(g2))
    if direction == "pullback":
        value = 2 * d * g1
        check = lambda R: R.transpose() * E2 * R == E1 * d
    elif direction == "pushforward":
        value = 2 * d * g2
        check = lambda R: R * E1 * R.transpose() == E2 * d
    else:
        raise ValueError("direction must be 'pullback' or 'pushforward'")
    maps = _enumerate(hom, value, check, P1, P2, ctx)
    big, small = max(g1, g2), min(g1, g2)
    bound = Fraction(2 * big - 2, 2 * small - 2) if small > 1 else None
    return SymplecticMapSet(maps, target=direction, degree=d, degree_bound=bound)


# ---------------------------------------------------------------------------
# groups

def _as_array(maps) -> np.ndarray:
    return np.array([h.R if isinstance(h, HomEntry) else h for h in maps], dtype=np.int64)


def element_order(R: np.ndarray, cap: int = 10000) -> int:
    n = R.shape[0]
    one = np.eye(n, dtype=np.int64)
    X = R.copy()
    for k in range(1, cap + 1):
        if np.array_equal(X, one):
            return k
        X = X @ R
    raise ClosureFailure("element of unbounded order in a finite symplectic set")


def group_report(maps) -> dict:
    """Closure check plus order statistics for a finite matrix group."""
    A = _as_array(maps)
    m = len(A)
    if m == 0:
        raise ClosureFailure("empty set")
    n = A.shape[1]
    keys = {A[i].tobytes(): i for i in range(m)}
    one = np.eye(n, dtype=np.int64)
    if one.tobytes() not in keys:
        raise ClosureFailure("identity missing from the symplectic set")
    mult = np.empty((m, m), dtype=np.int64)
    chunk = max(1, 2 ** 22 // (m * n * n))
    for s in range(0, m, chunk):
        prods = np.einsum("aij,bjk->abik", A[s:s + chunk], A)
        for a in range(prods.shape[0]):
            for b in range(m):
                k = keys.get(prods[a, b].tobytes())
                if k is None:
                    raise ClosureFailure("symplectic set is not closed under composition")
                mult[s + a, b] = k
    e = keys[one.tobytes()]
    orders = []
    for i in range(m):
        k, x = 1, i
        while x != e:
            x = mult[x, i]
            k += 1
            if k > m:
                raise ClosureFailure("element order exceeds the group order")
        orders.append(k)
    hist = dict(sorted(Counter(orders).items()))
    center = sum(1 for i in range(m) if np.array_equal(mult[i], mult[:, i]))
    minus = (-one).tobytes() in keys
    return {"order": m, "histogram": hist, "center_order": center, "has_minus_one": minus,
            "abelian": center == m, "table": mult}


def dihedral_histogram(n: int) -> dict:
    """Element orders of the dihedral group of order 2n."""
    orders = Counter()
    for k in range(n):
        orders[n // math.gcd(k, n)] += 1
    orders[2] += n
    return dict(sorted(orders.items()))


def is_dihedral(report: dict) -> bool:
    m = report["order"]
    if m % 2 or m < 4:
        return False
    n = m // 2
    if report["histogram"] != dihedral_histogram(n):
        return False
    if n > 2 and report["abelian"]:
        return False
    return n in report["histogram"] or n == 2


def automorphism_group(P: PeriodMatrix, ctx: PrecisionContext, hom: HomBasis | None = None) -> SymplecticMapSet:
    S = symplectic_isomorphisms(P, P, ctx, hom)
    rep = group_report(S.maps)
    S.group_order = rep["order"]
    S.element_order_histogram = rep["histogram"]
    S.center_order = rep["center_order"]
    S.quotient_by_minus_one_order = rep["order"] // 2 if rep["has_minus_one"] else rep["order"]
    hurwitz = 84 * (P.genus - 1)
    if P.genus >= 2 and S.quotient_by_minus_one_order > hurwitz:
        log.warning("automorphism count %d exceeds the Hurwitz bound %d", S.quotient_by_minus_one_order, hurwitz)
    return S


def algebraize_matrix(T, ctx, max_degree: int = 6) -> list[list]:
    """Minimal polynomials of the entries of T (None where not recognized)."""
    out = []
    for row in T:
        r = []
        for z in row:
            if abs(z) < ctx.eps(ctx.working_bits // 2):
                r.append([0, 1])
                continue
            try:
                r.append(algebraize(z, max_degree, ctx).min_poly)
            except NotFound:
                r.append(None)
        out.append(r)
    return out
