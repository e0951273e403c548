# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_kernels_py``; same signatures and semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, atan2, hypot, fabs, M_PI, isfinite

cnp.import_array()

DEF GL_N = 20
cdef double GL_SPAN = 6.0
cdef int NEWTON_MAXITER = 100

_glx, _glw = np.polynomial.legendre.leggauss(GL_N)
cdef double[20] GLX
cdef double[20] GLW
for _i in range(GL_N):
    GLX[_i] = _glx[_i]
    GLW[_i] = _glw[_i]


cdef inline double _series(const double* c, const double* s, Py_ssize_t n, double t) noexcept nogil:
    cdef double c1 = cos(t), s1 = sin(t)
    cdef double ck = 1.0, sk = 0.0, tmp
    cdef double acc = c[0]
    cdef Py_ssize_t k
    for k in range(1, n):
        tmp = ck * c1 - sk * s1
        sk = sk * c1 + ck * s1
        ck = tmp
        acc += c[k] * ck + s[k] * sk
    return acc


cdef inline double _series_deriv(const double* c, const double* s, Py_ssize_t n, double t, int d) noexcept nogil:
    cdef double c1 = cos(t), s1 = sin(t)
    cdef double ck = 1.0, sk = 0.0, tmp, kd
    cdef double acc = 0.0
    cdef Py_ssize_t k
    cdef int j, m = d % 4
    if d == 0:
        return _series(c, s, n, t)
    for k in range(1, n):
        tmp = ck * c1 - sk * s1
        sk = sk * c1 + ck * s1
        ck = tmp
        kd = 1.0
        for j in range(d):
            kd *= k
        if m == 1:
            acc += kd * (s[k] * ck - c[k] * sk)
        elif m == 2:
            acc -= kd * (c[k] * ck + s[k] * sk)
        elif m == 3:
            acc += kd * (c[k] * sk - s[k] * ck)
        else:
            acc += kd * (c[k] * ck + s[k] * sk)
    return acc


cdef inline double _integrated(const double* c, const double* s, Py_ssize_t n, double t) noexcept nogil:
    # half-angle rotation recurrence: sin(k t) = 2 s_k c_k, 1 - cos(k t) = 2 s_k^2
    cdef double acc = c[0] * t
    cdef double c1 = cos(0.5 * t), s1 = sin(0.5 * t)
    cdef double ck = 1.0, sk = 0.0, tmp
    cdef Py_ssize_t k
    for k in range(1, n):
        tmp = ck * c1 - sk * s1
        sk = sk * c1 + ck * s1
        ck = tmp
        acc += (c[k] * 2.0 * sk * ck + s[k] * 2.0 * sk * sk) / k
    return acc


cdef double _invert(const double* c, const double* s, Py_ssize_t n, double target, double bound) noexcept nogil:
    cdef double lo = (target - bound) / c[0] - 1e-12
    cdef double hi = (target + bound) / c[0] + 1e-12
    cdef double th = target / c[0], f, new
    cdef int it
    for it in range(NEWTON_MAXITER):
        f = _integrated(c, s, n, th) - target
        if f < 0:
            lo = th
        elif f > 0:
            hi = th
        else:
            return th
        new = th - f / _series(c, s, n, th)
        if not (new > lo and new < hi):
            new = 0.5 * (lo + hi)
        if fabs(new - th) <= 4e-16 * (fabs(th) if fabs(th) > 1.0 else 1.0):
            return new
        th = new
    return th


cdef inline void _icos_isin(double phase, double m, double d, double* ic, double* isn) noexcept nogil:
    cdef double h
    if m == 0.0:
        ic[0] = d * cos(phase)
        isn[0] = d * sin(phase)
    else:
        h = sin(0.5 * m * d) / m
        ic[0] = 2.0 * cos(phase + 0.5 * m * d) * h
        isn[0] = 2.0 * sin(phase + 0.5 * m * d) * h


cdef void _closed_parts(const double* c, const double* s, Py_ssize_t n, double phi0, double psign,
                        double d, double* a, double* b) noexcept nogil:
    cdef Py_ssize_t k
    cdef double phase, p, icp, icm, isp, ism
    a[0] = 0.0
    b[0] = 0.0
    for k in range(n):
        phase = k * phi0
        p = psign * k
        _icos_isin(phase, p + 1.0, d, &icp, &isp)
        _icos_isin(phase, p - 1.0, d, &icm, &ism)
        a[0] += c[k] * 0.5 * (icp + icm) + s[k] * 0.5 * (isp + ism)
        b[0] += c[k] * 0.5 * (isp - ism) + s[k] * 0.5 * (icm - icp)


cdef void _chord(const double* c, const double* s, Py_ssize_t n, double th, double d,
                 double* A, double* B, double* C, double* Ap, double* Bp) noexcept nogil:
    cdef double r[GL_N]
    cdef double w, wt, cw, sw, h
    cdef int j
    if (n * fabs(d)) <= GL_SPAN:
        for j in range(GL_N):
            r[j] = _series(c, s, n, th + 0.5 * d * (GLX[j] + 1.0))
        A[0] = 0.0; B[0] = 0.0; C[0] = 0.0; Ap[0] = 0.0; Bp[0] = 0.0
        for j in range(GL_N):
            w = 0.5 * d * (GLX[j] + 1.0)
            wt = 0.5 * d * GLW[j]
            cw = cos(w)
            sw = sin(w)
            h = sin(0.5 * w)
            A[0] += wt * r[j] * cw
            B[0] += wt * r[j] * sw
            C[0] += wt * r[j] * 2.0 * h * h
            Ap[0] += wt * r[GL_N - 1 - j] * cw
            Bp[0] += wt * r[GL_N - 1 - j] * sw
    else:
        _closed_parts(c, s, n, th, 1.0, d, A, B)
        _closed_parts(c, s, n, th + d, -1.0, d, Ap, Bp)
        C[0] = _integrated(c, s, n, th + d) - _integrated(c, s, n, th) - A[0]


cdef void _reflect(const double* c, const double* s, Py_ssize_t n, double th, double v,
                   double* delta, double* vplus) noexcept nogil:
    cdef double lo = 0.0, hi = 2.0 * M_PI
    cdef double d = 2.0 * v
    cdef double A, B, C, Ap, Bp, f, new, slope
    cdef int it
    if d > 2.0 * M_PI * (1.0 - 1e-12):
        d = 2.0 * M_PI * (1.0 - 1e-12)
    if d < 1e-300:
        d = 1e-300
    for it in range(NEWTON_MAXITER):
        _chord(c, s, n, th, d, &A, &B, &C, &Ap, &Bp)
        f = atan2(B, A) - v
        if f == 0.0:
            break
        if f < 0:
            lo = d
        else:
            hi = d
        slope = _series(c, s, n, th + d) * sin(atan2(Bp, Ap)) / hypot(A, B)
        new = d - f / slope
        if not (new > lo and new < hi and isfinite(new)):
            new = 0.5 * (lo + hi)
        if fabs(new - d) <= 2e-16 * d or (hi - lo) <= 4e-16 * d:
            d = new
            break
        d = new
    _chord(c, s, n, th, d, &A, &B, &C, &Ap, &Bp)
    delta[0] = d
    vplus[0] = atan2(Bp, Ap)


def _prep(c, s):
    c = np.ascontiguousarray(c, dtype=np.float64)
    s = np.ascontiguousarray(s, dtype=np.float64)
    return c, s


def series(c, s, theta, deriv=0):
    c, s = _prep(c, s)
    th = np.asarray(theta, dtype=np.float64)
    shape = th.shape
    cdef const double[::1] tv = np.ascontiguousarray(th.ravel())
    out = np.empty(tv.shape[0])
    cdef double[::1] ov = out
    cdef const double[::1] cv = c, sv = s
    cdef Py_ssize_t i, n = c.shape[0]
    cdef int d = deriv
    with nogil:
        for i in range(tv.shape[0]):
            ov[i] = _series_deriv(&cv[0], &sv[0], n, tv[i], d)
    return out.reshape(shape)


def integrated(c, s, theta):
    c, s = _prep(c, s)
    th = np.asarray(theta, dtype=np.float64)
    shape = th.shape
    cdef const double[::1] tv = np.ascontiguousarray(th.ravel())
    out = np.empty(tv.shape[0])
    cdef double[::1] ov = out
    cdef const double[::1] cv = c, sv = s
    cdef Py_ssize_t i, n = c.shape[0]
    with nogil:
        for i in range(tv.shape[0]):
            ov[i] = _integrated(&cv[0], &sv[0], n, tv[i])
    return out.reshape(shape)


def invert_integrated(c, s, target):
    c, s = _prep(c, s)
    tg = np.atleast_1d(np.asarray(target, dtype=np.float64))
    shape = tg.shape
    cdef const double[::1] tv = np.ascontiguousarray(tg.ravel())
    out = np.empty(tv.shape[0])
    cdef double[::1] ov = out
    cdef const double[::1] cv = c, sv = s
    cdef Py_ssize_t i, k, n = c.shape[0]
    cdef double bound = 0.0
    for k in range(1, n):
        bound += 2.0 * (fabs(cv[k]) + fabs(sv[k])) / k
    with nogil:
        for i in range(tv.shape[0]):
            ov[i] = _invert(&cv[0], &sv[0], n, tv[i], bound)
    return out.reshape(shape)


def chord(rc, rs, theta, delta):
    rc, rs = _prep(rc, rs)
    th, dl = np.broadcast_arrays(np.asarray(theta, dtype=np.float64), np.asarray(delta, dtype=np.float64))
    cdef const double[::1] tv = np.ascontiguousarray(th.ravel())
    cdef const double[::1] dv = np.ascontiguousarray(dl.ravel())
    cdef Py_ssize_t m = tv.shape[0]
    outs = np.empty((5, m))
    cdef double[:, ::1] ov = outs
    cdef const double[::1] cv = rc, sv = rs
    cdef Py_ssize_t i, n = rc.shape[0]
    with nogil:
        for i in range(m):
            _chord(&cv[0], &sv[0], n, tv[i], dv[i], &ov[0, i], &ov[1, i], &ov[2, i], &ov[3, i], &ov[4, i])
    return outs[0], outs[1], outs[2], outs[3], outs[4]


def reflect(rc, rs, theta, v):
    rc, rs = _prep(rc, rs)
    th, vv = np.broadcast_arrays(np.asarray(theta, dtype=np.float64), np.asarray(v, dtype=np.float64))
    cdef const double[::1] tv = np.ascontiguousarray(th.ravel())
    cdef const double[::1] vv_ = np.ascontiguousarray(vv.ravel())
    cdef Py_ssize_t m = tv.shape[0]
    delta = np.empty(m)
    vplus = np.empty(m)
    cdef double[::1] dv = delta, pv = vplus
    cdef const double[::1] cv = rc, sv = rs
    cdef Py_ssize_t i, n = rc.shape[0]
    with nogil:
        for i in range(m):
            _reflect(&cv[0], &sv[0], n, tv[i], vv_[i], &dv[i], &pv[i])
    return delta, vplus


def orbit(rc, rs, double theta0, double v0, Py_ssize_t nsteps):
    rc, rs = _prep(rc, rs)
    thetas = np.empty(nsteps + 1)
    vs = np.empty(nsteps + 1)
    cdef double[::1] tv = thetas, vv = vs
    cdef const double[::1] cv = rc, sv = rs
    cdef Py_ssize_t i, n = rc.shape[0]
    cdef double d, vp
    tv[0] = theta0
    vv[0] = v0
    with nogil:
        for i in range(nsteps):
            _reflect(&cv[0], &sv[0], n, tv[i], vv[i], &d, &vp)
            tv[i + 1] = tv[i] + d
            vv[i + 1] = vp
    return thetas, vs
