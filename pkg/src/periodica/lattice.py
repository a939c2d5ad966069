"""Integer lattice tools: LLL, approximate kernels, Fincke-Pohst, recognition
of algebraic numbers."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import flint
import gmpy2

from .errors import NotFound, NotPositiveDefinite
from .numerics import PrecisionContext, mpc, mpfr

DELTA = Fraction(99, 100)
# sizes above this go to FLINT; the pure version stays available as an oracle
PURE_LLL_LIMIT = 12


# ---------------------------------------------------------------------------
# LLL

def lll_pure(rows: list[list[int]], delta: Fraction = DELTA):
    """Integral LLL on the rows of an integer matrix (linearly independent).

    All quantities are kept as integers (subdeterminants d_i and scaled
    Gram-Schmidt coefficients), so the result is exact.
    Returns (reduced rows, unimodular transform U) with U * rows = reduced."""
    b = [list(map(int, r)) for r in rows]
    n = len(b)
    if n == 0:
        return [], []
    H = [[int(i == j) for j in range(n)] for i in range(n)]
    p, q = delta.numerator, delta.denominator
    dot = lambda u, v: sum(x * y for x, y in zip(u, v))
    d = [0] * (n + 1)       # d[0] = 1, d[i] for the first i vectors
    lam = [[0] * n for _ in range(n)]
    d[0] = 1
    d[1] = dot(b[0], b[0])
    if d[1] == 0:
        raise ValueError("rows are linearly dependent")

    def red(k, l):
        # k, l are 0-based; d index l+1
        dl = d[l + 1]
        if 2 * abs(lam[k][l]) > dl:
            r = (2 * lam[k][l] + dl) // (2 * dl)
            b[k] = [x - r * y for x, y in zip(b[k], b[l])]
            H[k] = [x - r * y for x, y in zip(H[k], H[l])]
            lam[k][l] -= r * dl
            for i in range(l):
                lam[k][i] -= r * lam[l][i]

    def swap(k, kmax):
        b[k], b[k - 1] = b[k - 1], b[k]
        H[k], H[k - 1] = H[k - 1], H[k]
        for j in range(k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lm = lam[k][k - 1]
        B = (d[k - 1] * d[k + 1] + lm * lm) // d[k]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k + 1] * lam[i][k - 1] - lm * t) // d[k]
            lam[i][k - 1] = (B * t + lm * lam[i][k]) // d[k + 1]
        d[k] = B

    k, kmax = 1, 0
    while k < n:
        if k > kmax:
            kmax = k
            for j in range(k + 1):
                u = dot(b[k], b[j])
                for i in range(j):
                    u = (d[i + 1] * u - lam[k][i] * lam[j][i]) // d[i]
                if j < k:
                    lam[k][j] = u
                else:
                    d[k + 1] = u
                    if u == 0:
                        raise ValueError("rows are linearly dependent")
        red(k, k - 1)
        if q * d[k + 1] * d[k - 1] < p * d[k] * d[k] - q * lam[k][k - 1] ** 2:
            swap(k, kmax)
            k = max(1, k - 1)
        else:
            for l in range(k - 2, -1, -1):
                red(k, l)
            k += 1
    return b, H


def lll_reduce(rows: list[list[int]], delta: Fraction = DELTA, backend: str | None = None):
    """LLL-reduce the rows; returns (reduced rows, transform)."""
    if not rows:
        return [], []
    if backend is None:
        backend = "pure" if len(rows) <= PURE_LLL_LIMIT else "flint"
    if backend == "pure":
        return lll_pure(rows, delta)
    M = flint.fmpz_mat([list(map(int, r)) for r in rows])
    L, U = M.lll(transform=True, delta=float(delta))
    return _tolist(L), _tolist(U)


def _tolist(M) -> list[list[int]]:
    return [[int(x) for x in row] for row in M.tolist()]


def is_lll_reduced(rows, delta: Fraction = DELTA) -> bool:
    """Size reduction and the Lovasz condition, checked exactly."""
    n = len(rows)
    bstar: list[list[Fraction]] = []
    norms: list[Fraction] = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        v = [Fraction(x) for x in rows[i]]
        for j in range(i):
            mu[i][j] = sum(Fraction(x) * y for x, y in zip(rows[i], bstar[j])) / norms[j]
            v = [a - mu[i][j] * c for a, c in zip(v, bstar[j])]
        bstar.append(v)
        norms.append(sum(x * x for x in v))
    for i in range(n):
        for j in range(i):
            if abs(mu[i][j]) > Fraction(1, 2):
                return False
    for k in range(1, n):
        if norms[k] < (delta - mu[k][k - 1] ** 2) * norms[k - 1]:
            return False
    return True


def hnf(rows: list[list[int]]) -> list[list[int]]:
    """Row Hermite normal form with zero rows removed."""
    if not rows:
        return []
    H = _tolist(flint.fmpz_mat([list(map(int, r)) for r in rows]).hnf())
    return [r for r in H if any(r)]


def same_lattice(a, b) -> bool:
    return hnf(a) == hnf(b)


def integer_kernel(rows: list[list], ncols: int | None = None) -> list[list[int]]:
    """Z-basis (in HNF) of {v in Z^n : A v = 0} for a rational matrix A."""
    if not rows:
        n = ncols or 0
        return [[int(i == j) for j in range(n)] for i in range(n)]
    n = len(rows[0])
    den = 1
    for r in rows:
        for x in r:
            den = math.lcm(den, Fraction(x).denominator)
    A = [[int(Fraction(x) * den) for x in r] for r in rows]
    rank = flint.fmpz_mat(A).rank()
    if rank == n:
        return []
    scale = 1 + sum(abs(x) for r in A for x in r) * 2 ** (n + 4)
    lat = [[int(i == j) for i in range(n)] + [scale * A[k][j] for k in range(len(A))] for j in range(n)]
    red, _ = lll_reduce(lat, backend="flint")
    kern = [r[:n] for r in red if not any(r[n:])]
    if len(kern) != n - rank:
        raise ArithmeticError("integer kernel extraction failed")
    return hnf(kern)


# ---------------------------------------------------------------------------
# approximate kernels

def approximate_kernel(M: list[list], ctx: PrecisionContext, keep_bits: int | None = None,
                       accuracy_bits: int | None = None) -> list[list[int]]:
    """Small integer vectors x with M x ~ 0, as an HNF basis.

    M is a real matrix (rows of mpfr or float).  Entries are treated as
    accurate to ``accuracy_bits`` bits relative to their largest magnitude
    (default: working precision minus 12).  A vector is kept when its
    entries fit in ``keep_bits`` bits (default B/4) and its image is within
    the rounding noise of the lattice construction."""
    B = ctx.working_bits
    keep_bits = B // 4 if keep_bits is None else keep_bits
    accuracy_bits = B - 12 if accuracy_bits is None else accuracy_bits
    if not M:
        return []
    m, n = len(M), len(M[0])
    with gmpy2.context(precision=ctx.prec):
        scale = max([mpfr(1)] + [abs(mpfr(x)) for row in M for x in row])
        inv_eps = gmpy2.exp2(mpfr(accuracy_bits)) / scale
        Y = [[int(gmpy2.rint(mpfr(M[i][j]) * inv_eps)) for i in range(m)] for j in range(n)]
    lat = [[int(k == j) for k in range(n)] + Y[j] for j in range(n)]
    red, _ = lll_reduce(lat, backend="flint" if n > PURE_LLL_LIMIT else None)
    kept = []
    for r in red:
        x, y = r[:n], r[n:]
        if not any(x):
            continue
        if max(abs(v) for v in x).bit_length() > keep_bits:
            continue
        if max(abs(v) for v in y) <= n * (1 + sum(abs(v) for v in x)):
            kept.append(x)
    if not kept:
        return []
    return hnf(kept)


# ---------------------------------------------------------------------------
# Fincke-Pohst

def cholesky_exact(G: list[list]) -> tuple[list[list[Fraction]], list[Fraction]]:
    """Q-decomposition q(x) = sum_i Q_ii (x_i + sum_{j>i} Q_ij x_j)^2 over Q.
    Raises NotPositiveDefinite."""
    n = len(G)
    Q = [[Fraction(G[i][j]) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(n):
            if Q[i][j] != Q[j][i]:
                raise NotPositiveDefinite("Gram matrix is not symmetric")
    for i in range(n):
        if Q[i][i] <= 0:
            raise NotPositiveDefinite(f"Gram matrix is not positive definite (pivot {i})")
        for j in range(i + 1, n):
            Q[j][i] = Q[i][j]
            Q[i][j] = Q[i][j] / Q[i][i]
        for k in range(i + 1, n):
            for l in range(k, n):
                Q[k][l] -= Q[k][i] * Q[i][l]
    return [[Q[i][j] if j > i else Fraction(0) for j in range(n)] for i in range(n)], [Q[i][i] for i in range(n)]


def _quad(G, v):
    return sum(G[i][j] * v[i] * v[j] for i in range(len(v)) if v[i] for j in range(len(v)) if v[j])


def fincke_pohst(G: list[list], bound, reduce: bool = True) -> list[tuple[list[int], Fraction]]:
    """All integer v with v^T G v <= bound, paired with their values.

    G is positive definite with integer or rational entries.  The form is
    LLL-reduced first; enumeration uses floating-point pruning with a safety
    margin and exact final evaluation."""
    n = len(G)
    if n == 0:
        return [([], Fraction(0))]
    Gq = [[Fraction(x) for x in row] for row in G]
    bound = Fraction(bound)
    cholesky_exact(Gq)
    if reduce and n > 1:
        U = _reduce_gram(Gq)
        Gr = _congruent(Gq, U)
    else:
        U = [[int(i == j) for j in range(n)] for i in range(n)]
        Gr = Gq
    Qoff, diag = cholesky_exact(Gr)
    qf = [[float(x) for x in row] for row in Qoff]
    df = [float(x) for x in diag]
    slack = 1e-9 * (1 + float(bound))
    out = []
    x = [0] * n
    # iterative enumeration from the last coordinate down
    T = [0.0] * (n + 1)
    T[n - 1] = float(bound) + slack
    centers = [0.0] * n

    def bounds(i):
        c = -sum(qf[i][j] * x[j] for j in range(i + 1, n))
        centers[i] = c
        r = math.sqrt(max(T[i], 0.0) / df[i]) + 1e-9
        return math.ceil(c - r), math.floor(c + r)

    i = n - 1
    lo, hi = bounds(i)
    stack_hi = [0] * n
    x[i] = lo
    stack_hi[i] = hi
    while True:
        if x[i] > stack_hi[i]:
            i += 1
            if i == n:
                break
            x[i] += 1
            continue
        if i == 0:
            v = [sum(U[k][j] * x[k] for k in range(n)) for j in range(n)]
            val = _quad(Gq, v)
            if val <= bound:
                out.append((v, val))
            x[0] += 1
            continue
        t = x[i] - centers[i]
        T[i - 1] = T[i] - df[i] * t * t
        i -= 1
        lo, hi = bounds(i)
        x[i] = lo
        stack_hi[i] = hi
    out.sort(key=lambda r: (r[1], r[0]))
    return out


def _reduce_gram(G):
    """Unimodular U (rows) making U G U^T LLL-reduced, via the Cholesky
    factor scaled to integers."""
    n = len(G)
    den = 1
    for row in G:
        for x in row:
            den = math.lcm(den, x.denominator)
    Gi = flint.fmpz_mat([[int(x * den) for x in row] for row in G])
    try:
        _, U = Gi.lll(transform=True, rep="gram", gram="exact")
        return _tolist(U)
    except Exception:  # pragma: no cover - older FLINT builds
        return [[int(i == j) for j in range(n)] for i in range(n)]


def _congruent(G, U):
    n = len(G)
    UG = [[sum(U[i][k] * G[k][j] for k in range(n) if U[i][k]) for j in range(n)] for i in range(n)]
    return [[sum(UG[i][k] * U[j][k] for k in range(n) if U[j][k]) for j in range(n)] for i in range(n)]


# ---------------------------------------------------------------------------
# algebraic recognition

@dataclass
class AlgebraicCandidate:
    min_poly: list          # integer coefficients, constant term first
    root_index: int         # index among the complex roots sorted by (re, im)
    residual: float

    @property
    def degree(self) -> int:
        return len(self.min_poly) - 1

    def poly_str(self, var: str = "x") -> str:
        return str(flint.fmpz_poly(self.min_poly)).replace("x", var)


def algebraize(z, max_degree: int, ctx: PrecisionContext, residual_bits: float = 0.6,
               height_bits: float = 0.2, accuracy: float = 0.8, gap_bits: int = 8) -> AlgebraicCandidate:
    """Lowest-degree irreducible integer polynomial vanishing at z.

    A candidate must have small residual at z, coefficients below
    2^(height_bits B), and also lie ``gap_bits`` below the length expected
    of a random short vector in the relation lattice."""
    B = ctx.working_bits
    acc = int(accuracy * B)
    tol = 2.0 ** (-residual_bits * B)
    with gmpy2.context(precision=ctx.prec):
        z = mpc(z)
        real = abs(z.imag) < tol * max(1, abs(z))
        powers = [mpc(1)]
        for _ in range(max_degree):
            powers.append(powers[-1] * z)
        eqs = 1 if real else 2
        for d in range(1, max_degree + 1):
            rows = [[p.real for p in powers[: d + 1]]]
            if not real:
                rows.append([p.imag for p in powers[: d + 1]])
            cap = min(height_bits * B, acc * eqs / (d + 1) - gap_bits)
            if cap < 1:
                break
            for v in _relation_vectors(rows, acc, ctx):
                if max(abs(c) for c in v).bit_length() > cap:
                    continue
                for fac in _factors(v):
                    res = abs(_eval(fac, z))
                    size = sum(abs(c) * abs(z) ** i for i, c in enumerate(fac))
                    if res < tol * max(1, size):
                        return AlgebraicCandidate(fac, _root_index(fac, z), float(res))
    raise NotFound(f"no algebraic relation of degree <= {max_degree} found")


def _relation_vectors(M, accuracy_bits, ctx):
    """x-parts of an LLL-reduced basis of the (I | M / eps) lattice."""
    m, n = len(M), len(M[0])
    with gmpy2.context(precision=ctx.prec):
        scale = max([mpfr(1)] + [abs(mpfr(x)) for row in M for x in row])
        inv_eps = gmpy2.exp2(mpfr(accuracy_bits)) / scale
        Y = [[int(gmpy2.rint(mpfr(M[i][j]) * inv_eps)) for i in range(m)] for j in range(n)]
    lat = [[int(k == j) for k in range(n)] + Y[j] for j in range(n)]
    red, _ = lll_reduce(lat)
    return [r[:n] for r in red if any(r[:n])]


def _factors(v):
    p = flint.fmpz_poly(v)
    if p.degree() < 1:
        return []
    _, facs = p.factor()
    res = []
    for f, _ in sorted(facs, key=lambda t: t[0].degree()):
        c = [int(x) for x in f.coeffs()]
        if c[-1] < 0:
            c = [-x for x in c]
        res.append(c)
    return res


def _eval(c, z):
    acc = mpc(0)
    for a in reversed(c):
        acc = acc * z + a
    return acc


def _root_index(c, z) -> int:
    rts = flint.fmpz_poly(c).complex_roots()
    vals = sorted((complex(r[0].mid()) if hasattr(r[0], "mid") else complex(r[0]) for r in rts),
                  key=lambda w: (round(w.real, 12), round(w.imag, 12)))
    zc = complex(z)
    return min(range(len(vals)), key=lambda i: abs(vals[i] - zc))
