"""Multiprecision complex arithmetic, root finding and quadrature rules.

Scalars are ``gmpy2.mpc`` / ``gmpy2.mpfr`` values.  A polynomial is a plain
list of coefficients with index equal to degree.  All routines run inside
``ctx.mp()`` so that arithmetic uses the internal precision
``working_bits + guard_bits``.
"""
from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import gmpy2
import numpy as np

from .errors import DiskEscape, NonConvergence, SlowConvergence

mpc = gmpy2.mpc
mpfr = gmpy2.mpfr

ABERTH_CAP = 200
NEWTON_CAP = 100


@dataclass(frozen=True)
class PrecisionContext:
    working_bits: int = 100
    guard_bits: int = 20

    def __post_init__(self):
        if self.working_bits < 53:
            raise ValueError("working_bits must be at least 53")
        if not 0 < self.guard_bits < self.working_bits:
            raise ValueError("guard_bits must lie in (0, working_bits)")

    @property
    def prec(self) -> int:
        """Internal binary precision."""
        return self.working_bits + self.guard_bits

    @property
    def target_tolerance(self):
        return mpfr(2) ** (self.guard_bits - self.working_bits)

    def eps(self, bits):
        """2^(-bits) as an mpfr."""
        return gmpy2.exp2(mpfr(-bits))

    def mp(self):
        return gmpy2.context(precision=self.prec)

    def doubled(self) -> "PrecisionContext":
        return PrecisionContext(2 * self.working_bits, self.guard_bits)


def to_mpc(z) -> gmpy2.mpc:
    """Convert ints, Fractions, floats, complex and gmpy2 values to mpc at
    the current context precision."""
    if isinstance(z, Fraction):
        return mpc(mpfr(gmpy2.mpq(z.numerator, z.denominator)), 0)
    if isinstance(z, tuple):
        return mpc(to_mpfr(z[0]), to_mpfr(z[1]))
    return mpc(z)


def to_mpfr(x) -> gmpy2.mpfr:
    if isinstance(x, Fraction):
        return mpfr(gmpy2.mpq(x.numerator, x.denominator))
    return mpfr(x)


def horner(p: Sequence, z):
    acc = p[-1]
    for c in reversed(p[:-1]):
        acc = acc * z + c
    return acc


def horner2(p: Sequence, z):
    """Value and derivative of p at z."""
    acc = p[-1]
    der = 0
    for c in reversed(p[:-1]):
        der = der * z + acc
        acc = acc * z + c
    return acc, der


def coeff_norm(p: Sequence, r):
    """sum |a_i| r^i, the scale against which residuals are measured."""
    acc = abs(p[-1])
    for c in reversed(p[:-1]):
        acc = acc * r + abs(c)
    return acc


def residual_ok(p, z, ctx, slack_bits=0):
    val = abs(horner(p, z))
    return val <= ctx.eps(ctx.working_bits - ctx.guard_bits - slack_bits) * coeff_norm(p, abs(z))


# ---------------------------------------------------------------------------
# deterministic ordering

def tie_tolerance(ctx: PrecisionContext) -> float:
    return 2.0 ** (-ctx.working_bits // 2)


def sort_roots(values, ctx: PrecisionContext):
    """Sort lexicographically by (re, im).  Real parts closer than a
    relative 2^(-B/2) count as equal, so that conjugate pairs and other
    exact ties order the same way at every precision."""
    tol = tie_tolerance(ctx)

    def cmp(a, b):
        scale = max(1.0, abs(complex(a)), abs(complex(b)))
        dr = float(a.real - b.real)
        if abs(dr) > tol * scale:
            return -1 if dr < 0 else 1
        di = float(a.imag - b.imag)
        return (di > 0) - (di < 0)

    return sorted(values, key=functools.cmp_to_key(cmp))


# ---------------------------------------------------------------------------
# roots

def _initial_guesses(coeffs: list[complex]) -> list[complex]:
    """Starting points on circles whose radii come from the upper convex
    hull of (i, log|a_i|)."""
    n = len(coeffs) - 1
    logs = []
    for i, c in enumerate(coeffs):
        a = abs(c)
        logs.append(math.log(a) if a > 0 else -math.inf)
    pts = [(i, logs[i]) for i in range(n + 1) if logs[i] > -math.inf]
    hull: list[tuple[int, float]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    guesses = []
    for (i0, l0), (i1, l1) in zip(hull, hull[1:]):
        k = i1 - i0
        r = math.exp((l0 - l1) / k)
        for j in range(k):
            ang = 2 * math.pi * j / k + 2 * math.pi * i1 / n + 0.4
            guesses.append(r * cmath.exp(1j * ang))
    # roots at zero (low-order coefficients vanish)
    guesses.extend([0.0] * (n - len(guesses)))
    return guesses


def _aberth_double(coeffs: list[complex], z: np.ndarray, iters=60) -> np.ndarray:
    p = np.array(coeffs[::-1], dtype=complex)
    dp = np.polyder(p)
    n = len(z)
    for _ in range(iters):
        with np.errstate(all="ignore"):
            pv = np.polyval(p, z)
            dv = np.polyval(dp, z)
            ratio = pv / dv
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            s = inv.sum(axis=1)
            w = ratio / (1.0 - ratio * s)
        if not np.all(np.isfinite(w)):
            break
        z = z - w
        if np.max(np.abs(w)) < 1e-14 * max(1.0, np.max(np.abs(z))):
            break
    if not np.all(np.isfinite(z)):
        raise NonConvergence("double-precision root iteration diverged")
    return z


def roots(p: Sequence, ctx: PrecisionContext) -> list:
    """All roots of p with multiplicity, sorted canonically."""
    with ctx.mp():
        p = [to_mpc(c) for c in p]
        while len(p) > 1 and p[-1] == 0:
            p.pop()
        n = len(p) - 1
        if n < 1:
            raise ValueError("polynomial must have degree >= 1")
        if abs(p[-1]) <= ctx.target_tolerance:
            raise ValueError("leading coefficient below tolerance")
        lead = p[-1]
        monic = [c / lead for c in p]
        if n == 1:
            return [-monic[0]]
        approx = [complex(c) for c in monic]
        z0 = np.array(_initial_guesses(approx), dtype=complex)
        z0 = _aberth_double(approx, z0)
        z = [mpc(complex(v)) for v in z0]
        tol = ctx.eps(ctx.prec - 4)
        noise = ctx.eps(ctx.prec - 8) * (n + 1)
        for it in range(ABERTH_CAP):
            maxrel = mpfr(0)
            newz = list(z)
            for k in range(n):
                zk = z[k]
                val, der = horner2(monic, zk)
                # at rounding level the correction is meaningless
                if val == 0 or abs(val) <= noise * coeff_norm(monic, abs(zk)):
                    continue
                s = mpc(0)
                for j in range(n):
                    if j != k:
                        d = zk - z[j]
                        if d != 0:
                            s += 1 / d
                if der == 0:
                    w = val / (1 + abs(zk))
                else:
                    ratio = val / der
                    w = ratio / (1 - ratio * s)
                newz[k] = zk - w
                rel = abs(w) / max(mpfr(1), abs(zk))
                if rel > maxrel:
                    maxrel = rel
            z = newz
            if maxrel < tol:
                break
        else:
            raise NonConvergence(f"Aberth iteration did not converge in {ABERTH_CAP} steps")
        out = []
        for zk in z:
            out.append(_polish(monic, zk, ctx))
        for r in out:
            # multiple roots lose half their digits; allow for that
            if not residual_ok(monic, r, ctx, slack_bits=ctx.working_bits // 2):
                raise NonConvergence("root residual above tolerance")
        return sort_roots(out, ctx)


def _polish(p, z, ctx):
    tol = ctx.eps(ctx.prec - 2)
    for _ in range(NEWTON_CAP):
        val, der = horner2(p, z)
        if val == 0 or der == 0:
            return z
        step = val / der
        z = z - step
        if abs(step) <= tol * max(mpfr(1), abs(z)):
            return z
    return z


# ---------------------------------------------------------------------------
# Newton refinement inside a disk

def newton_refine(p: Sequence, y0, radius, ctx: PrecisionContext):
    """Newton iteration from y0 that must stay in the disk |y - y0| < radius.

    Raises DiskEscape when an iterate leaves the disk and SlowConvergence
    when, after three warm-up iterations, the step fails to halve.
    """
    with ctx.mp():
        y0 = to_mpc(y0)
        radius = to_mpfr(radius)
        if radius <= 0:
            raise ValueError("radius must be positive")
        tol = ctx.eps(ctx.prec - 2)
        noise = tol * 4 * len(p)
        y = y0
        prev = None
        for it in range(NEWTON_CAP):
            val, der = horner2(p, y)
            if val == 0:
                return y
            if der == 0:
                raise SlowConvergence("vanishing derivative")
            if it > 0 and abs(val) <= noise * coeff_norm(p, abs(y)):
                return y
            step = val / der
            y = y - step
            if abs(y - y0) >= radius:
                raise DiskEscape("Newton iterate left the disk")
            a = abs(step)
            if a <= tol * max(mpfr(1), abs(y)):
                if not residual_ok(p, y, ctx):
                    raise SlowConvergence("residual above tolerance at convergence")
                return y
            if prev is not None and it >= 3 and a > prev / 2:
                raise SlowConvergence("Newton step failed to halve")
            prev = a
        raise SlowConvergence("Newton iteration cap reached")


# ---------------------------------------------------------------------------
# Gauss-Legendre

def _legendre_eval(order, x):
    p0, p1 = mpfr(1), x
    for k in range(2, order + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    return p1, order * (x * p1 - p0) / (x * x - 1)


@functools.lru_cache(maxsize=64)
def _legendre_cached(order: int, prec: int):
    # double-precision starting values, then Newton on the three-term
    # recurrence; two or three iterations reach full precision
    if order <= 150:
        guess = [float(g) for g in np.polynomial.legendre.leggauss(order)[0][: order // 2]]
    else:
        guess = [-math.cos(math.pi * (i - 0.25) / (order + 0.5)) for i in range(1, order // 2 + 1)]
    half = order // 2
    nodes = []
    weights = []
    with gmpy2.context(precision=prec + 10):
        tol = gmpy2.exp2(mpfr(-(prec + 4)))
        for g in guess:
            x = mpfr(g)
            for _ in range(NEWTON_CAP):
                p, dp = _legendre_eval(order, x)
                step = p / dp
                x = x - step
                if abs(step) <= tol:
                    break
            else:
                raise NonConvergence("Legendre node iteration failed")
            p, dp = _legendre_eval(order, x)
            nodes.append(x)
            weights.append(2 / ((1 - x * x) * dp * dp))
        xs = nodes + [-x for x in reversed(nodes)]
        ws = weights + list(reversed(weights))
        if order % 2:
            p0, p1 = mpfr(1), mpfr(0)
            for k in range(2, order):
                p0, p1 = p1, (-(k - 1) * p0) / k
            dp = order * p1
            xs.insert(half, mpfr(0))
            ws.insert(half, 2 / (dp * dp))
        total = sum(ws)
        if abs(total - 2) > gmpy2.exp2(mpfr(-(prec - 8))):
            raise NonConvergence("Legendre weights do not sum to 2")
    with gmpy2.context(precision=prec):
        return tuple(mpfr(x) for x in xs), tuple(mpfr(w) for w in ws)


def legendre_rule(order: int, ctx: PrecisionContext):
    """Nodes (increasing) and weights of the Gauss-Legendre rule on [-1, 1]."""
    if order < 2:
        raise ValueError("order must be at least 2")
    xs, ws = _legendre_cached(order, ctx.prec)
    return list(xs), list(ws)


# ---------------------------------------------------------------------------
# small dense complex linear algebra

def mat_mul(a, b):
    m, k, n = len(a), len(b), len(b[0])
    return [[sum((a[i][t] * b[t][j] for t in range(k)), mpc(0)) for j in range(n)] for i in range(m)]


def mat_solve(a, b):
    """Solve a X = b by Gaussian elimination with partial pivoting.
    ``b`` is a matrix; returns X.  Raises ZeroDivisionError when singular."""
    n = len(a)
    m = len(b[0])
    aug = [list(a[i]) + list(b[i]) for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(aug[r][col]))
        if aug[piv][col] == 0:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        for r in range(col + 1, n):
            fac = aug[r][col] * inv
            if fac != 0:
                row_r, row_c = aug[r], aug[col]
                for c in range(col, n + m):
                    row_r[c] -= fac * row_c[c]
    x = [[mpc(0)] * m for _ in range(n)]
    for r in range(n - 1, -1, -1):
        for c in range(m):
            s = aug[r][n + c]
            for k in range(r + 1, n):
                s -= aug[r][k] * x[k][c]
            x[r][c] = s / aug[r][r]
    return x


def mat_inv(a):
    n = len(a)
    eye = [[mpc(1) if i == j else mpc(0) for j in range(n)] for i in range(n)]
    return mat_solve(a, eye)


def min_singular_ratio(a) -> float:
    """Cheap conditioning indicator (double precision)."""
    arr = np.array([[complex(v) for v in row] for row in a])
    s = np.linalg.svd(arr, compute_uv=False)
    return float(s[-1] / s[0]) if s[0] else 0.0
