"""Pure-Python implementations of the hot loops.

The compiled module ``_ckernels`` exposes the same two functions with the
same signatures; ``periodica.kernels`` picks one at import time.
"""
from __future__ import annotations

from bisect import bisect_right

import gmpy2

from .errors import DiskEscape, SlowConvergence

mpc = gmpy2.mpc
mpfr = gmpy2.mpfr

NEWTON_CAP = 100


def _fiber_poly(ycoeffs, x):
    out = []
    for fj in ycoeffs:
        acc = fj[-1] if fj else mpc(0)
        for c in reversed(fj[:-1]):
            acc = acc * x + c
        out.append(acc)
    return out


def _newton(p, start, center, radius, tol):
    """Newton iteration on p from start, confined to |y - center| < radius.
    Returns (root, p'(root))."""
    y = start
    prev = None
    for it in range(NEWTON_CAP):
        acc = p[-1]
        der = mpc(0)
        for c in reversed(p[:-1]):
            der = der * y + acc
            acc = acc * y + c
        if der == 0:
            raise SlowConvergence("vanishing derivative")
        step = acc / der
        y_old, y = y, y - step
        if abs(y - center) >= radius:
            raise DiskEscape("Newton iterate left the disk")
        a = abs(step)
        if a <= tol * max(1, abs(y)):
            acc = p[-1]
            der = mpc(0)
            for c in reversed(p[:-1]):
                der = der * y + acc
                acc = acc * y + c
            return y, der
        if prev is not None and it >= 3 and a > prev / 2:
            # a stalled step is fine once the residual is at rounding level
            if abs(acc) <= tol * 4 * len(p) * _norm_at(p, abs(y_old)):
                return y_old, der
            raise SlowConvergence("Newton step failed to halve")
        prev = a
    raise SlowConvergence("Newton iteration cap reached")


def _norm_at(p, r):
    acc = abs(p[-1])
    for c in reversed(p[:-1]):
        acc = acc * r + abs(c)
    return acc


def advance(ycoeffs, x, fiber, radius, prec):
    """Refine every fiber value at the new base point x inside its disk."""
    with gmpy2.context(precision=prec):
        tol = gmpy2.exp2(mpfr(2 - prec))
        p = _fiber_poly(ycoeffs, x)
        return [_newton(p, y, y, radius, tol)[0] for y in fiber]


def _min_gap(ys):
    best = None
    for a in range(len(ys)):
        for b in range(a + 1, len(ys)):
            d = abs(ys[a] - ys[b])
            if best is None or d < best:
                best = d
    return best


def track(ycoeffs, xa, fiber, xb, tol, max_halvings=60):
    """Continue a whole fiber from xa to xb with step halving."""
    ys = list(fiber)
    s, done, halvings = mpfr(1), mpfr(0), 0
    while done < 1:
        s = min(s, 1 - done)
        x = xa + (done + s) * (xb - xa)
        gap = _min_gap(ys)
        radius = gap / 3 if gap is not None else 1 + abs(ys[0])
        try:
            p = _fiber_poly(ycoeffs, x)
            ys = [_newton(p, y, y, radius, tol)[0] for y in ys]
        except (DiskEscape, SlowConvergence):
            halvings += 1
            if halvings > max_halvings:
                raise
            s /= 2
            continue
        done += s
        s *= 2
    return ys


def edge_quadrature(ycoeffs, numerators, v0, v1, ts, fibers, radii, nodes, weights, prec):
    """Sum over nodes of w * h_i(x, y_k) / f_y(x, y_k) on the segment
    x(t) = v0 + t (v1 - v0), t = (1 + node) / 2.  Returns g x n sums."""
    with gmpy2.context(precision=prec):
        tol = gmpy2.exp2(mpfr(2 - prec))
        n = len(fibers[0])
        g = len(numerators)
        dv = v1 - v0
        maxa = max([a for h in numerators for (a, _, _) in h] + [0])
        maxb = max([b for h in numerators for (_, b, _) in h] + [0])
        sums = [[mpc(0)] * n for _ in range(g)]
        tf = [float(t) for t in ts]
        for node, w in zip(nodes, weights):
            t = (1 + node) / 2
            x = v0 + t * dv
            m = min(bisect_right(tf, float(t)) - 1, len(ts) - 2)
            m = max(m, 0)
            span = ts[m + 1] - ts[m]
            lam = (t - ts[m]) / span
            p = _fiber_poly(ycoeffs, x)
            xp = [mpc(1)]
            for _ in range(maxa):
                xp.append(xp[-1] * x)
            for k in range(n):
                y0 = fibers[m][k]
                guess = y0 + lam * (fibers[m + 1][k] - y0)
                try:
                    y, dy = _newton(p, guess, y0, radii[m], tol)
                except (DiskEscape, SlowConvergence):
                    xm = v0 + ts[m] * dv
                    y = track(ycoeffs, xm, fibers[m], x, tol)[k]
                    y, dy = _newton(p, y, y, abs(y) + 1, tol)
                yp = [mpc(1)]
                for _ in range(maxb):
                    yp.append(yp[-1] * y)
                wd = w / dy
                for i, h in enumerate(numerators):
                    acc = mpc(0)
                    for a, b, c in h:
                        acc += c * xp[a] * yp[b]
                    sums[i][k] += acc * wd
        return sums
