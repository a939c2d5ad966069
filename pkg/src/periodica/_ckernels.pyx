# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""MPFR/MPC versions of the continuation and quadrature loops.

Same signatures and semantics as ``_pykernels``.  Inputs are copied into
C arrays once per call; the Newton and Horner loops then run without the
GIL, which is only re-acquired for the rare re-continuation fallback.
"""
from libc.stdlib cimport malloc, free

from gmpy2 cimport (import_gmpy2, mpc, mpfr, MPC, MPFR, GMPy_MPC_New,
                    __mpc_struct, __mpfr_struct, mpc_ptr, mpfr_ptr, mpfr_prec_t)

import gmpy2

from .errors import DiskEscape, SlowConvergence
from . import _pykernels

import_gmpy2()

cdef extern from *:
    """
    #include <mpfr.h>
    #include <mpc.h>

    #define PK_CAP 100

    typedef struct {
        mpc_t acc, der, step, tmp, old;
        mpfr_t nrm, ay, a, prev, t, lim, t1, t2, t3;
    } pk_work;

    static void pk_work_init(pk_work *w, mpfr_prec_t prec) {
        mpc_init2(w->acc, prec); mpc_init2(w->der, prec);
        mpc_init2(w->step, prec); mpc_init2(w->tmp, prec); mpc_init2(w->old, prec);
        mpfr_inits2(prec, w->nrm, w->ay, w->a, w->prev, w->t, w->lim, w->t1, w->t2, w->t3,
                    (mpfr_ptr) 0);
    }

    static void pk_work_clear(pk_work *w) {
        mpc_clear(w->acc); mpc_clear(w->der); mpc_clear(w->step); mpc_clear(w->tmp);
        mpc_clear(w->old);
        mpfr_clears(w->nrm, w->ay, w->a, w->prev, w->t, w->lim, w->t1, w->t2, w->t3,
                    (mpfr_ptr) 0);
    }

    /* Schoolbook complex arithmetic on MPFR parts.  Each part is rounded a
       few times instead of once, which is far cheaper than MPC's correctly
       rounded operations and well inside the guard bits. r may alias a or b. */
    static void pk_mul(mpc_ptr r, mpc_srcptr a, mpc_srcptr b, pk_work *w) {
        mpfr_mul(w->t1, mpc_realref(a), mpc_realref(b), MPFR_RNDN);
        mpfr_mul(w->t2, mpc_imagref(a), mpc_imagref(b), MPFR_RNDN);
        mpfr_mul(w->t3, mpc_realref(a), mpc_imagref(b), MPFR_RNDN);
        mpfr_sub(w->t1, w->t1, w->t2, MPFR_RNDN);
        mpfr_mul(w->t2, mpc_imagref(a), mpc_realref(b), MPFR_RNDN);
        mpfr_add(w->t3, w->t3, w->t2, MPFR_RNDN);
        mpfr_swap(mpc_realref(r), w->t1);
        mpfr_swap(mpc_imagref(r), w->t3);
    }

    static void pk_add(mpc_ptr r, mpc_srcptr a, mpc_srcptr b) {
        mpfr_add(mpc_realref(r), mpc_realref(a), mpc_realref(b), MPFR_RNDN);
        mpfr_add(mpc_imagref(r), mpc_imagref(a), mpc_imagref(b), MPFR_RNDN);
    }

    static void pk_sub(mpc_ptr r, mpc_srcptr a, mpc_srcptr b) {
        mpfr_sub(mpc_realref(r), mpc_realref(a), mpc_realref(b), MPFR_RNDN);
        mpfr_sub(mpc_imagref(r), mpc_imagref(a), mpc_imagref(b), MPFR_RNDN);
    }

    /* |a|^2 into r */
    static void pk_norm2(mpfr_ptr r, mpc_srcptr a, pk_work *w) {
        mpfr_sqr(w->t1, mpc_realref(a), MPFR_RNDN);
        mpfr_sqr(w->t2, mpc_imagref(a), MPFR_RNDN);
        mpfr_add(r, w->t1, w->t2, MPFR_RNDN);
    }

    /* r = a / b, r may alias a but not b */
    static void pk_div(mpc_ptr r, mpc_srcptr a, mpc_srcptr b, pk_work *w) {
        pk_norm2(w->lim, b, w);
        mpfr_mul(w->t1, mpc_realref(a), mpc_realref(b), MPFR_RNDN);
        mpfr_mul(w->t2, mpc_imagref(a), mpc_imagref(b), MPFR_RNDN);
        mpfr_add(w->t1, w->t1, w->t2, MPFR_RNDN);
        mpfr_mul(w->t3, mpc_imagref(a), mpc_realref(b), MPFR_RNDN);
        mpfr_mul(w->t2, mpc_realref(a), mpc_imagref(b), MPFR_RNDN);
        mpfr_sub(w->t3, w->t3, w->t2, MPFR_RNDN);
        mpfr_div(mpc_realref(r), w->t1, w->lim, MPFR_RNDN);
        mpfr_div(mpc_imagref(r), w->t3, w->lim, MPFR_RNDN);
    }

    /* value and derivative of p at y */
    static void pk_horner(const __mpc_struct *p, int len, mpc_srcptr y, pk_work *w) {
        int i;
        mpc_set(w->acc, p + len - 1, MPC_RNDNN);
        mpc_set_ui(w->der, 0, MPC_RNDNN);
        for (i = len - 2; i >= 0; i--) {
            pk_mul(w->der, w->der, y, w);
            pk_add(w->der, w->der, w->acc);
            pk_mul(w->acc, w->acc, y, w);
            pk_add(w->acc, w->acc, p + i);
        }
    }

    /* w->nrm = sum |p_i| r^i */
    static void pk_norm(const __mpc_struct *p, int len, mpfr_srcptr r, pk_work *w) {
        int i;
        mpc_abs(w->nrm, p + len - 1, MPFR_RNDN);
        for (i = len - 2; i >= 0; i--) {
            mpfr_mul(w->nrm, w->nrm, r, MPFR_RNDN);
            mpc_abs(w->t, p + i, MPFR_RNDN);
            mpfr_add(w->nrm, w->nrm, w->t, MPFR_RNDN);
        }
    }

    /* Newton confined to |y - center| < radius; squared magnitudes
       throughout.  0: converged, 1: left the disk, 2: slow or stalled */
    static int pk_newton(const __mpc_struct *p, int len, mpc_ptr y, mpc_srcptr center,
                         mpfr_srcptr radius, mpfr_srcptr tol, mpc_ptr der_out, pk_work *w) {
        int it, have_prev = 0;
        for (it = 0; it < PK_CAP; it++) {
            pk_horner(p, len, y, w);
            if (mpfr_zero_p(mpc_realref(w->der)) && mpfr_zero_p(mpc_imagref(w->der)))
                return 2;
            pk_div(w->step, w->acc, w->der, w);
            mpc_set(w->old, y, MPC_RNDNN);
            pk_sub(y, y, w->step);
            pk_sub(w->tmp, y, center);
            pk_norm2(w->t, w->tmp, w);
            mpfr_sqr(w->lim, radius, MPFR_RNDN);
            if (mpfr_cmp(w->t, w->lim) >= 0)
                return 1;
            pk_norm2(w->a, w->step, w);
            pk_norm2(w->ay, y, w);
            if (mpfr_cmp_ui(w->ay, 1) < 0)
                mpfr_set_ui(w->ay, 1, MPFR_RNDN);
            mpfr_sqr(w->lim, tol, MPFR_RNDN);
            mpfr_mul(w->lim, w->lim, w->ay, MPFR_RNDN);
            if (mpfr_cmp(w->a, w->lim) <= 0) {
                pk_horner(p, len, y, w);
                mpc_set(der_out, w->der, MPC_RNDNN);
                return 0;
            }
            if (have_prev && it >= 3) {
                /* |step| > prev / 2  <=>  |step|^2 > prev^2 / 4 */
                mpfr_div_2ui(w->t, w->prev, 2, MPFR_RNDN);
                if (mpfr_cmp(w->a, w->t) > 0) {
                    /* accept a stalled step whose residual is rounding noise */
                    mpc_abs(w->ay, w->old, MPFR_RNDN);
                    pk_norm(p, len, w->ay, w);
                    mpfr_mul_ui(w->lim, tol, 4 * (unsigned long) len, MPFR_RNDN);
                    mpfr_mul(w->lim, w->lim, w->nrm, MPFR_RNDN);
                    mpc_abs(w->t, w->acc, MPFR_RNDN);
                    if (mpfr_cmp(w->t, w->lim) <= 0) {
                        mpc_set(y, w->old, MPC_RNDNN);
                        mpc_set(der_out, w->der, MPC_RNDNN);
                        return 0;
                    }
                    return 2;
                }
            }
            mpfr_set(w->prev, w->a, MPFR_RNDN);
            have_prev = 1;
        }
        return 2;
    }

    /* out[j] = sum_i c[off[j] + i] x^i */
    static void pk_fiber_poly(const __mpc_struct *c, const int *off, const int *cnt, int len,
                              mpc_srcptr x, mpc_ptr out, pk_work *w) {
        int j, i;
        for (j = 0; j < len; j++) {
            if (cnt[j] == 0) {
                mpc_set_ui(out + j, 0, MPC_RNDNN);
                continue;
            }
            mpc_set(out + j, c + off[j] + cnt[j] - 1, MPC_RNDNN);
            for (i = cnt[j] - 2; i >= 0; i--) {
                pk_mul(out + j, out + j, x, w);
                pk_add(out + j, out + j, c + off[j] + i);
            }
        }
    }
    """
    ctypedef struct pk_work:
        pass
    ctypedef int mpfr_rnd_t
    ctypedef int mpc_rnd_t
    int MPC_RNDNN
    int MPFR_RNDN
    void pk_work_init(pk_work *w, mpfr_prec_t prec) noexcept nogil
    void pk_work_clear(pk_work *w) noexcept nogil
    int pk_newton(const __mpc_struct *p, int length, mpc_ptr y, const __mpc_struct *center,
                  const __mpfr_struct *radius, const __mpfr_struct *tol, mpc_ptr der_out,
                  pk_work *w) noexcept nogil
    void pk_fiber_poly(const __mpc_struct *c, const int *off, const int *cnt, int length,
                       const __mpc_struct *x, mpc_ptr out, pk_work *w) noexcept nogil
    void pk_mul(mpc_ptr r, const __mpc_struct *a, const __mpc_struct *b, pk_work *w) noexcept nogil
    void pk_div(mpc_ptr r, const __mpc_struct *a, const __mpc_struct *b, pk_work *w) noexcept nogil
    void pk_add(mpc_ptr r, const __mpc_struct *a, const __mpc_struct *b) noexcept nogil
    void pk_sub(mpc_ptr r, const __mpc_struct *a, const __mpc_struct *b) noexcept nogil
    void mpc_init2(mpc_ptr, mpfr_prec_t) noexcept nogil
    void mpc_clear(mpc_ptr) noexcept nogil
    int mpc_set(mpc_ptr, const __mpc_struct *, int) noexcept nogil
    int mpc_set_ui(mpc_ptr, unsigned long, int) noexcept nogil
    int mpc_add(mpc_ptr, const __mpc_struct *, const __mpc_struct *, int) noexcept nogil
    int mpc_sub(mpc_ptr, const __mpc_struct *, const __mpc_struct *, int) noexcept nogil
    int mpc_mul(mpc_ptr, const __mpc_struct *, const __mpc_struct *, int) noexcept nogil
    int mpc_div(mpc_ptr, const __mpc_struct *, const __mpc_struct *, int) noexcept nogil
    int mpc_mul_fr(mpc_ptr, const __mpc_struct *, const __mpfr_struct *, int) noexcept nogil
    int mpc_abs(mpfr_ptr, const __mpc_struct *, int) noexcept nogil
    void mpfr_init2(mpfr_ptr, mpfr_prec_t) noexcept nogil
    void mpfr_clear(mpfr_ptr) noexcept nogil
    int mpfr_set(mpfr_ptr, const __mpfr_struct *, int) noexcept nogil
    int mpfr_set_ui(mpfr_ptr, unsigned long, int) noexcept nogil
    int mpfr_set_ui_2exp(mpfr_ptr, unsigned long, long, int) noexcept nogil
    int mpfr_add(mpfr_ptr, const __mpfr_struct *, const __mpfr_struct *, int) noexcept nogil
    int mpfr_add_ui(mpfr_ptr, const __mpfr_struct *, unsigned long, int) noexcept nogil
    int mpfr_sub(mpfr_ptr, const __mpfr_struct *, const __mpfr_struct *, int) noexcept nogil
    int mpfr_div(mpfr_ptr, const __mpfr_struct *, const __mpfr_struct *, int) noexcept nogil
    int mpfr_div_2ui(mpfr_ptr, const __mpfr_struct *, unsigned long, int) noexcept nogil
    double mpfr_get_d(const __mpfr_struct *, int) noexcept nogil


cdef class _CArray:
    """A block of initialised mpc_t values freed with the object."""
    cdef __mpc_struct *v
    cdef int n

    def __cinit__(self, int n, mpfr_prec_t prec):
        cdef int i
        self.n = 0
        self.v = <__mpc_struct *> malloc(max(n, 1) * sizeof(__mpc_struct))
        if self.v == NULL:
            raise MemoryError()
        for i in range(n):
            mpc_init2(&self.v[i], prec)
        self.n = n

    def __dealloc__(self):
        cdef int i
        if self.v != NULL:
            for i in range(self.n):
                mpc_clear(&self.v[i])
            free(self.v)


cdef class _RArray:
    cdef __mpfr_struct *v
    cdef int n

    def __cinit__(self, int n, mpfr_prec_t prec):
        cdef int i
        self.n = 0
        self.v = <__mpfr_struct *> malloc(max(n, 1) * sizeof(__mpfr_struct))
        if self.v == NULL:
            raise MemoryError()
        for i in range(n):
            mpfr_init2(&self.v[i], prec)
        self.n = n

    def __dealloc__(self):
        cdef int i
        if self.v != NULL:
            for i in range(self.n):
                mpfr_clear(&self.v[i])
            free(self.v)


cdef inline void _put_c(__mpc_struct *dst, obj):
    cdef mpc z = obj if isinstance(obj, gmpy2.mpc) else gmpy2.mpc(obj)
    mpc_set(dst, MPC(z), MPC_RNDNN)


cdef inline void _put_r(__mpfr_struct *dst, obj):
    cdef mpfr r = obj if isinstance(obj, gmpy2.mpfr) else gmpy2.mpfr(obj)
    mpfr_set(dst, MPFR(r), MPFR_RNDN)


cdef inline mpc _get_c(const __mpc_struct *src, mpfr_prec_t prec):
    cdef mpc z = GMPy_MPC_New(prec, prec, NULL)
    mpc_set(MPC(z), src, MPC_RNDNN)
    return z


cdef class _YPoly:
    """Coefficients of f(x, y) grouped by y-degree, flattened."""
    cdef _CArray c
    cdef int *off
    cdef int *cnt
    cdef int length

    def __cinit__(self, ycoeffs, mpfr_prec_t prec):
        cdef int j, i, total = 0
        self.length = len(ycoeffs)
        self.off = <int *> malloc(max(self.length, 1) * sizeof(int))
        self.cnt = <int *> malloc(max(self.length, 1) * sizeof(int))
        if self.off == NULL or self.cnt == NULL:
            raise MemoryError()
        for j in range(self.length):
            self.off[j] = total
            self.cnt[j] = len(ycoeffs[j])
            total += self.cnt[j]
        self.c = _CArray(total, prec)
        for j in range(self.length):
            for i in range(self.cnt[j]):
                _put_c(&self.c.v[self.off[j] + i], ycoeffs[j][i])

    def __dealloc__(self):
        free(self.off)
        free(self.cnt)


def advance(ycoeffs, x, fiber, radius, prec):
    """Refine every fiber value at the new base point x inside its disk."""
    cdef mpfr_prec_t P = prec
    cdef int L = len(ycoeffs), n = len(fiber), k, status = 0
    cdef pk_work w
    cdef _YPoly f
    with gmpy2.context(precision=prec):
        f = _YPoly(ycoeffs, P)
        pol = _CArray(L, P)
        ys = _CArray(n, P)
        centers = _CArray(n, P)
        misc = _CArray(2, P)           # x, derivative scratch
        reals = _RArray(2, P)          # radius, tol
        for k in range(n):
            _put_c(&(<_CArray> ys).v[k], fiber[k])
            _put_c(&(<_CArray> centers).v[k], fiber[k])
        _put_c(&(<_CArray> misc).v[0], x)
        _put_r(&(<_RArray> reals).v[0], radius)
        mpfr_set_ui_2exp(&(<_RArray> reals).v[1], 1, 2 - P, MPFR_RNDN)
        pk_work_init(&w, P)
        try:
            with nogil:
                pk_fiber_poly(f.c.v, f.off, f.cnt, L,
                              &(<_CArray> misc).v[0], (<_CArray> pol).v, &w)
                for k in range(n):
                    status = pk_newton((<_CArray> pol).v, L, &(<_CArray> ys).v[k],
                                       &(<_CArray> centers).v[k], &(<_RArray> reals).v[0],
                                       &(<_RArray> reals).v[1], &(<_CArray> misc).v[1], &w)
                    if status:
                        break
        finally:
            pk_work_clear(&w)
        if status == 1:
            raise DiskEscape("Newton iterate left the disk")
        if status == 2:
            raise SlowConvergence("Newton iteration stalled")
        return [_get_c(&(<_CArray> ys).v[k], P) for k in range(n)]


cdef int _segment(const double *tf, int count, double t) noexcept nogil:
    # index m with tf[m] <= t < tf[m+1], clipped to [0, count - 2]
    cdef int lo = 0, hi = count, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if t < tf[mid]:
            hi = mid
        else:
            lo = mid + 1
    lo -= 1
    if lo > count - 2:
        lo = count - 2
    if lo < 0:
        lo = 0
    return lo


def edge_quadrature(ycoeffs, numerators, v0, v1, ts, fibers, radii, nodes, weights, prec):
    """Sum over nodes of w * h_i(x, y_k) / f_y(x, y_k) on the segment
    x(t) = v0 + t (v1 - v0), t = (1 + node) / 2.  Returns g x n sums."""
    cdef mpfr_prec_t P = prec
    cdef int L = len(ycoeffs), n = len(fibers[0]), g = len(numerators)
    cdef int M = len(ts), N = len(nodes), i, k, q, m, status, failed = -1
    cdef int maxa = 0, maxb = 0, nterms = 0, fail_k = 0
    cdef pk_work w
    cdef _YPoly f
    cdef bint pending = False
    for h in numerators:
        nterms += len(h)
        for a, b, _ in h:
            maxa = max(maxa, a)
            maxb = max(maxb, b)
    cdef int *hoff = <int *> malloc((g + 1) * sizeof(int))
    cdef int *ha = <int *> malloc(max(nterms, 1) * sizeof(int))
    cdef int *hb = <int *> malloc(max(nterms, 1) * sizeof(int))
    cdef double *tf = <double *> malloc(M * sizeof(double))
    with gmpy2.context(precision=prec):
        f = _YPoly(ycoeffs, P)
        hc = _CArray(nterms, P)
        q = 0
        for i in range(g):
            hoff[i] = q
            for a, b, coef in numerators[i]:
                ha[q] = a
                hb[q] = b
                _put_c(&(<_CArray> hc).v[q], coef)
                q += 1
        hoff[g] = q
        fib = _CArray(M * n, P)
        for m in range(M):
            for k in range(n):
                _put_c(&(<_CArray> fib).v[m * n + k], fibers[m][k])
        tsr = _RArray(M, P)
        rad = _RArray(M, P)
        for m in range(M):
            _put_r(&(<_RArray> tsr).v[m], ts[m])
            _put_r(&(<_RArray> rad).v[m], radii[m])
            tf[m] = float(ts[m])
        nw = _RArray(2 * N + 4, P)       # nodes, weights, tol, t, lam, scratch
        for q in range(N):
            _put_r(&(<_RArray> nw).v[q], nodes[q])
            _put_r(&(<_RArray> nw).v[N + q], weights[q])
        mpfr_set_ui_2exp(&(<_RArray> nw).v[2 * N], 1, 2 - P, MPFR_RNDN)
        sc = _CArray(6, P)               # v0, dv, x, guess, acc, deriv
        _put_c(&(<_CArray> sc).v[0], v0)
        _put_c(&(<_CArray> sc).v[1], v1)
        mpc_sub(&(<_CArray> sc).v[1], &(<_CArray> sc).v[1], &(<_CArray> sc).v[0], MPC_RNDNN)
        pol = _CArray(L, P)
        xp = _CArray(maxa + 1, P)
        yp = _CArray(maxb + 1, P)
        ys = _CArray(n, P)
        sums = _CArray(g * n, P)
        tmp = _CArray(2, P)
        for q in range(g * n):
            mpc_set_ui(&(<_CArray> sums).v[q], 0, MPC_RNDNN)
        pk_work_init(&w, P)
        try:
            q = 0
            while q < N:
                if not pending:
                    with nogil:
                        failed = _quad_nodes(q, N, L, n, g, M, maxa, maxb, hoff, ha, hb, tf,
                                             f.c.v, f.off, f.cnt,
                                             (<_CArray> hc).v, (<_CArray> fib).v,
                                             (<_RArray> tsr).v, (<_RArray> rad).v,
                                             (<_RArray> nw).v, (<_CArray> sc).v,
                                             (<_CArray> pol).v, (<_CArray> xp).v,
                                             (<_CArray> yp).v, (<_CArray> ys).v,
                                             (<_CArray> sums).v, (<_CArray> tmp).v, &w, &fail_k)
                    if failed < 0:
                        break
                    q = failed
                # Newton from the interpolated guess failed at (node q, sheet
                # fail_k): re-continue the fiber from the subdivision point
                t = (1 + nodes[q]) / 2
                x = v0 + t * (v1 - v0)
                m = _segment(tf, M, float(t))
                xm = v0 + ts[m] * (v1 - v0)
                tol = gmpy2.exp2(mpfr(2 - prec))
                y = _pykernels.track(ycoeffs, xm, fibers[m], x, tol)[fail_k]
                _put_c(&(<_CArray> ys).v[fail_k], y)
                _put_c(&(<_CArray> tmp).v[0], y)
                _put_r(&(<_RArray> nw).v[2 * N + 3], abs(y) + 1)
                with nogil:
                    status = pk_newton((<_CArray> pol).v, L, &(<_CArray> ys).v[fail_k],
                                       &(<_CArray> tmp).v[0], &(<_RArray> nw).v[2 * N + 3],
                                       &(<_RArray> nw).v[2 * N], &(<_CArray> sc).v[5], &w)
                if status == 1:
                    raise DiskEscape("Newton iterate left the disk")
                if status == 2:
                    raise SlowConvergence("Newton iteration stalled")
                with nogil:
                    _accumulate(q, N, fail_k, n, g, maxb, hoff, ha, hb, (<_CArray> hc).v,
                                (<_RArray> nw).v, (<_CArray> sc).v, (<_CArray> xp).v,
                                (<_CArray> yp).v, &(<_CArray> ys).v[fail_k], (<_CArray> sums).v,
                                &w)
                    failed = _quad_node_rest(q, fail_k + 1, N, L, n, g, M, maxb, hoff, ha, hb,
                                             (<_CArray> hc).v, (<_CArray> fib).v,
                                             (<_RArray> rad).v, (<_RArray> nw).v,
                                             (<_CArray> sc).v, (<_CArray> pol).v,
                                             (<_CArray> xp).v, (<_CArray> yp).v,
                                             (<_CArray> ys).v, (<_CArray> sums).v,
                                             (<_CArray> tmp).v, &w, &fail_k, m)
                pending = failed >= 0
                if not pending:
                    q += 1
        finally:
            pk_work_clear(&w)
            free(hoff)
            free(ha)
            free(hb)
            free(tf)
        return [[_get_c(&(<_CArray> sums).v[i * n + k], P) for k in range(n)] for i in range(g)]


cdef void _accumulate(int q, int N, int k, int n, int g, int maxb, const int *hoff,
                      const int *ha, const int *hb, const __mpc_struct *hc,
                      const __mpfr_struct *nw, __mpc_struct *sc, const __mpc_struct *xp,
                      __mpc_struct *yp, const __mpc_struct *y, __mpc_struct *sums, pk_work *w) noexcept nogil:
    # sums[i][k] += w / f_y * h_i(x, y); sc[5] holds f_y, sc[4] is scratch
    cdef int i, j, b
    mpc_set_ui(&yp[0], 1, MPC_RNDNN)
    for b in range(1, maxb + 1):
        pk_mul(&yp[b], &yp[b - 1], y, w)
    for i in range(g):
        mpc_set_ui(&sc[4], 0, MPC_RNDNN)
        for j in range(hoff[i], hoff[i + 1]):
            pk_mul(&sc[3], &hc[j], &xp[ha[j]], w)
            pk_mul(&sc[3], &sc[3], &yp[hb[j]], w)
            pk_add(&sc[4], &sc[4], &sc[3])
        mpc_mul_fr(&sc[4], &sc[4], &nw[N + q], MPC_RNDNN)
        pk_div(&sc[4], &sc[4], &sc[5], w)
        pk_add(&sums[i * n + k], &sums[i * n + k], &sc[4])


cdef int _quad_node_rest(int q, int k0, int N, int L, int n, int g, int M, int maxb,
                         const int *hoff, const int *ha, const int *hb, const __mpc_struct *hc,
                         const __mpc_struct *fib, const __mpfr_struct *rad, __mpfr_struct *nw,
                         __mpc_struct *sc, const __mpc_struct *pol, const __mpc_struct *xp,
                         __mpc_struct *yp, __mpc_struct *ys, __mpc_struct *sums,
                         __mpc_struct *tmp, pk_work *w, int *fail_k, int m) noexcept nogil:
    # sheets k0..n-1 of node q, with x, the fiber polynomial and the
    # interpolation weight (nw[2N+2]) already set up; returns q on failure
    cdef int k, status
    cdef const __mpc_struct *y0
    for k in range(k0, n):
        y0 = &fib[m * n + k]
        mpc_sub(&tmp[1], &fib[(m + 1) * n + k], y0, MPC_RNDNN)
        mpc_mul_fr(&tmp[1], &tmp[1], &nw[2 * N + 2], MPC_RNDNN)
        mpc_add(&ys[k], y0, &tmp[1], MPC_RNDNN)
        status = pk_newton(pol, L, &ys[k], y0, &rad[m], &nw[2 * N], &sc[5], w)
        if status:
            fail_k[0] = k
            return q
        _accumulate(q, N, k, n, g, maxb, hoff, ha, hb, hc, nw, sc, xp, yp, &ys[k], sums, w)
    return -1


cdef int _quad_nodes(int q0, int N, int L, int n, int g, int M, int maxa, int maxb,
                     const int *hoff, const int *ha, const int *hb, const double *tf,
                     const __mpc_struct *c, const int *off, const int *cnt,
                     const __mpc_struct *hc, const __mpc_struct *fib, const __mpfr_struct *tsr,
                     const __mpfr_struct *rad, __mpfr_struct *nw, __mpc_struct *sc,
                     __mpc_struct *pol, __mpc_struct *xp, __mpc_struct *yp, __mpc_struct *ys,
                     __mpc_struct *sums, __mpc_struct *tmp, pk_work *w, int *fail_k) noexcept nogil:
    """Nodes q0..N-1; returns the index of the first node where Newton failed, or -1."""
    cdef int q, m, a, r
    for q in range(q0, N):
        # t = (1 + node) / 2 and x = v0 + t dv
        mpfr_add_ui(&nw[2 * N + 1], &nw[q], 1, MPFR_RNDN)
        mpfr_div_2ui(&nw[2 * N + 1], &nw[2 * N + 1], 1, MPFR_RNDN)
        mpc_mul_fr(&sc[2], &sc[1], &nw[2 * N + 1], MPC_RNDNN)
        mpc_add(&sc[2], &sc[2], &sc[0], MPC_RNDNN)
        m = _segment(tf, M, mpfr_get_d(&nw[2 * N + 1], MPFR_RNDN))
        # lam = (t - ts[m]) / (ts[m+1] - ts[m])
        mpfr_sub(&nw[2 * N + 2], &nw[2 * N + 1], &tsr[m], MPFR_RNDN)
        mpfr_sub(&nw[2 * N + 3], &tsr[m + 1], &tsr[m], MPFR_RNDN)
        mpfr_div(&nw[2 * N + 2], &nw[2 * N + 2], &nw[2 * N + 3], MPFR_RNDN)
        pk_fiber_poly(c, off, cnt, L, &sc[2], pol, w)
        mpc_set_ui(&xp[0], 1, MPC_RNDNN)
        for a in range(1, maxa + 1):
            pk_mul(&xp[a], &xp[a - 1], &sc[2], w)
        r = _quad_node_rest(q, 0, N, L, n, g, M, maxb, hoff, ha, hb, hc, fib, rad, nw, sc,
                            pol, xp, yp, ys, sums, tmp, w, fail_k, m)
        if r >= 0:
            return r
    return -1
