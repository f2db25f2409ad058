# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled trajectory kernels.

Line-for-line mirror of ``_pyref``: identical expression grouping, identical
noise-block layout, libm ``pow`` for the |x|^d branch (CPython's float power
calls the same libm), and the build disables multiply-add contraction — so
trajectories are bitwise identical to the pure-Python fallback.  The hot
loops run without the GIL, which lets the harness thread pool scale.
"""

import numpy as np

from libc.math cimport NAN, fabs, isfinite, pow

IMPLEMENTATION = "compiled"

cdef double _DIVERGENCE = 1e12


cdef inline double _value(int kind, int dexp, double[::1] lam, double[::1] cen,
                          double[::1] x, Py_ssize_t d) noexcept nogil:
    cdef double ax, s, di
    cdef Py_ssize_t i
    if kind == 0:
        ax = fabs(x[0])
        if ax < 1.0:
            return pow(ax, <double>dexp)
        return 1.0 + dexp * (ax - 1.0)
    s = 0.0
    for i in range(d):
        di = x[i] - cen[i]
        s += lam[i] * di * di
    return 0.5 * s


cdef inline void _grad_into(int kind, int dexp, double[::1] lam, double[::1] cen,
                            double[::1] x, double[::1] out, Py_ssize_t d) noexcept nogil:
    cdef double xv, ax, t
    cdef Py_ssize_t i
    if kind == 0:
        xv = x[0]
        ax = fabs(xv)
        if ax < 1.0:
            t = dexp * pow(ax, <double>(dexp - 1))
        else:
            t = <double>dexp
        if xv > 0.0:
            out[0] = t
        elif xv < 0.0:
            out[0] = -t
        else:
            out[0] = 0.0
        return
    for i in range(d):
        out[i] = lam[i] * (x[i] - cen[i])


cdef inline Py_ssize_t _noisy_into(double[::1] nz, Py_ssize_t pos, double sigma,
                                   bint elementwise, int K, Py_ssize_t d,
                                   double[::1] grad, double[::1] out) noexcept nogil:
    cdef double zs, f
    cdef Py_ssize_t i
    cdef int j
    if elementwise:
        for i in range(d):
            zs = 0.0
            for j in range(K):
                zs += nz[pos + j * d + i]
            out[i] = (1.0 + sigma * (zs / K)) * grad[i]
        return pos + K * d
    zs = 0.0
    for j in range(K):
        zs += nz[pos + j]
    f = 1.0 + sigma * (zs / K)
    for i in range(d):
        out[i] = f * grad[i]
    return pos + K


def shang_trajectory(int kind, int dexp, lam, cen, x0, v0, bint sc,
                     double mu, double L, double m, double base_at,
                     double sig_s, double sig_n, bint elementwise, int K,
                     long n_iters, rec_ks, noise):
    cdef double[::1] lam_v = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[::1] cen_v = np.ascontiguousarray(cen, dtype=np.float64)
    cdef double[::1] nz = np.ascontiguousarray(noise, dtype=np.float64)
    cdef long long[::1] rk = np.ascontiguousarray(rec_ks, dtype=np.int64)
    x_arr = np.array(x0, dtype=np.float64)
    v_arr = np.array(v0, dtype=np.float64)
    cdef double[::1] x = x_arr
    cdef double[::1] v = v_arr
    cdef Py_ssize_t d = x.shape[0]
    cdef Py_ssize_t need = (n_iters + 1) * K * (d if elementwise else 1)
    if nz.shape[0] < need:
        raise ValueError(f"noise array too short: {nz.shape[0]} < {need}")

    scratch = np.zeros((4, d))
    cdef double[::1] g = scratch[0]
    cdef double[::1] g1 = scratch[1]
    cdef double[::1] grad = scratch[2]
    cdef double[::1] x1 = scratch[3]
    xp_arr = np.zeros(d)
    cdef double[::1] xp = xp_arr

    sub_arr = np.empty(rk.shape[0])
    en_arr = np.empty(rk.shape[0])
    cdef double[::1] sub = sub_arr
    cdef double[::1] en = en_arr
    cdef Py_ssize_t nrec = rk.shape[0]

    cdef double csq = 1.0 + sig_s * sig_s
    cdef double c2L = csq * csq * L
    cdef double a, at, gm, b, ge, a1, at1, gm1, b1, ge1
    cdef double aux, atb, hx, c1, c2, dv1, aux1, s0, sv, vd, dvi, e0, ev
    cdef Py_ssize_t ri = 0, i, pos = 0
    cdef long k, diverged_at = -1, kk

    with nogil:
        if sc:
            at = base_at
            a = at / (1.0 - m * at)
            b = at * csq / mu
            gm = mu
            ge = mu
        else:
            a = 2.0 / (0 + 1)
            at = 2.0 / (0 + 1 + 2.0 * m)
            gm = a * at * c2L
            b = a * csq / gm
            ge = at * at * c2L

        _grad_into(kind, dexp, lam_v, cen_v, x, grad, d)
        pos = _noisy_into(nz, pos, sig_n, elementwise, K, d, grad, g)
        aux = at * b
        for i in range(d):
            xp[i] = x[i] - aux * g[i]

        if ri < nrec and rk[ri] == 0:
            s0 = _value(kind, dexp, lam_v, cen_v, xp, d)
            vd = 0.0
            for i in range(d):
                dvi = v[i] - cen_v[i]
                vd += dvi * dvi
            e0 = s0 + 0.5 * ge * vd
            sub[ri] = s0
            en[ri] = e0
            ri += 1

        for k in range(n_iters):
            if sc:
                a1 = a; at1 = at; gm1 = gm; b1 = b; ge1 = ge
            else:
                a1 = 2.0 / (k + 2)
                at1 = 2.0 / (k + 2 + 2.0 * m)
                gm1 = a1 * at1 * c2L
                b1 = a1 * csq / gm1
                ge1 = at1 * at1 * c2L

            atb = at * b
            hx = 1.0 + at
            for i in range(d):
                x1[i] = (x[i] + at * v[i] - atb * g[i]) / hx
            _grad_into(kind, dexp, lam_v, cen_v, x1, grad, d)
            pos = _noisy_into(nz, pos, sig_n, elementwise, K, d, grad, g1)
            c1 = a * (mu / gm)
            c2 = a / gm
            dv1 = 1.0 + c1
            for i in range(d):
                v[i] = (v[i] + c1 * x1[i] - c2 * g1[i]) / dv1
            aux1 = at1 * b1
            for i in range(d):
                xp[i] = x1[i] - aux1 * g1[i]
                x[i] = x1[i]
                g[i] = g1[i]
            a = a1; at = at1; gm = gm1; b = b1; ge = ge1

            if ri < nrec and rk[ri] == k + 1:
                sv = _value(kind, dexp, lam_v, cen_v, xp, d)
                vd = 0.0
                for i in range(d):
                    dvi = v[i] - cen_v[i]
                    vd += dvi * dvi
                ev = sv + 0.5 * ge * vd
                if not (sv <= _DIVERGENCE) or not isfinite(ev):
                    diverged_at = k + 1
                    for kk in range(ri, nrec):
                        sub[kk] = NAN
                        en[kk] = NAN
                    break
                sub[ri] = sv
                en[ri] = ev
                ri += 1

    return sub_arr, en_arr, diverged_at


def dl_trajectory(int kind, int dexp, lam, cen, x0, v0,
                  double alpha, double gamma, double m,
                  double sig_n, bint elementwise, int K,
                  long n_iters, rec_ks, noise):
    cdef double[::1] lam_v = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[::1] cen_v = np.ascontiguousarray(cen, dtype=np.float64)
    cdef double[::1] nz = np.ascontiguousarray(noise, dtype=np.float64)
    cdef long long[::1] rk = np.ascontiguousarray(rec_ks, dtype=np.int64)
    x_arr = np.array(x0, dtype=np.float64)
    v_arr = np.array(v0, dtype=np.float64)
    cdef double[::1] x = x_arr
    cdef double[::1] v = v_arr
    cdef Py_ssize_t d = x.shape[0]
    cdef Py_ssize_t need = n_iters * K * (d if elementwise else 1)
    if nz.shape[0] < need:
        raise ValueError(f"noise array too short: {nz.shape[0]} < {need}")

    scratch = np.zeros((2, d))
    cdef double[::1] g = scratch[0]
    cdef double[::1] grad = scratch[1]

    sub_arr = np.empty(rk.shape[0])
    en_arr = np.full(rk.shape[0], np.nan)
    cdef double[::1] sub = sub_arr
    cdef Py_ssize_t nrec = rk.shape[0]

    cdef double at = alpha / (1.0 + m * alpha)
    cdef double s = alpha / gamma
    cdef double ats = at * s
    cdef double hx = 1.0 + at
    cdef double sv
    cdef Py_ssize_t ri = 0, i, pos = 0
    cdef long k, diverged_at = -1, kk

    with nogil:
        if ri < nrec and rk[ri] == 0:
            sub[ri] = _value(kind, dexp, lam_v, cen_v, x, d)
            ri += 1

        for k in range(n_iters):
            _grad_into(kind, dexp, lam_v, cen_v, x, grad, d)
            pos = _noisy_into(nz, pos, sig_n, elementwise, K, d, grad, g)
            for i in range(d):
                v[i] = v[i] - s * g[i]
            for i in range(d):
                x[i] = (x[i] + at * v[i] - ats * g[i]) / hx

            if ri < nrec and rk[ri] == k + 1:
                sv = _value(kind, dexp, lam_v, cen_v, x, d)
                if not (sv <= _DIVERGENCE):
                    diverged_at = k + 1
                    for kk in range(ri, nrec):
                        sub[kk] = NAN
                    break
                sub[ri] = sv
                ri += 1

    return sub_arr, en_arr, diverged_at


def snag_trajectory(int kind, int dexp, lam, cen, x0, v0,
                    double ah, double s, double bh, double eta,
                    double sig_n, bint elementwise, int K,
                    long n_iters, rec_ks, noise):
    cdef double[::1] lam_v = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[::1] cen_v = np.ascontiguousarray(cen, dtype=np.float64)
    cdef double[::1] nz = np.ascontiguousarray(noise, dtype=np.float64)
    cdef long long[::1] rk = np.ascontiguousarray(rec_ks, dtype=np.int64)
    x_arr = np.array(x0, dtype=np.float64)
    v_arr = np.array(v0, dtype=np.float64)
    cdef double[::1] x = x_arr
    cdef double[::1] v = v_arr
    cdef Py_ssize_t d = x.shape[0]
    cdef Py_ssize_t need = n_iters * K * (d if elementwise else 1)
    if nz.shape[0] < need:
        raise ValueError(f"noise array too short: {nz.shape[0]} < {need}")

    scratch = np.zeros((2, d))
    cdef double[::1] g = scratch[0]
    cdef double[::1] grad = scratch[1]

    sub_arr = np.empty(rk.shape[0])
    en_arr = np.full(rk.shape[0], np.nan)
    cdef double[::1] sub = sub_arr
    cdef Py_ssize_t nrec = rk.shape[0]

    cdef double ahs = ah * s
    cdef double vi, sv
    cdef Py_ssize_t ri = 0, i, pos = 0
    cdef long k, diverged_at = -1, kk

    with nogil:
        if ri < nrec and rk[ri] == 0:
            sub[ri] = _value(kind, dexp, lam_v, cen_v, x, d)
            ri += 1

        for k in range(n_iters):
            _grad_into(kind, dexp, lam_v, cen_v, x, grad, d)
            pos = _noisy_into(nz, pos, sig_n, elementwise, K, d, grad, g)
            for i in range(d):
                vi = bh * v[i] + (1.0 - bh) * x[i] - eta * g[i]
                v[i] = vi
                x[i] = ah * x[i] + (1.0 - ah) * vi - ahs * g[i]

            if ri < nrec and rk[ri] == k + 1:
                sv = _value(kind, dexp, lam_v, cen_v, x, d)
                if not (sv <= _DIVERGENCE):
                    diverged_at = k + 1
                    for kk in range(ri, nrec):
                        sub[kk] = NAN
                    break
                sub[ri] = sv
                ri += 1

    return sub_arr, en_arr, diverged_at


def baseline_trajectory(int kind, int dexp, lam, cen, x0, int method,
                        double lr, double mom,
                        double sig_n, bint elementwise, int K,
                        long n_iters, rec_ks, noise):
    cdef double[::1] lam_v = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[::1] cen_v = np.ascontiguousarray(cen, dtype=np.float64)
    cdef double[::1] nz = np.ascontiguousarray(noise, dtype=np.float64)
    cdef long long[::1] rk = np.ascontiguousarray(rec_ks, dtype=np.int64)
    x_arr = np.array(x0, dtype=np.float64)
    cdef double[::1] x = x_arr
    cdef Py_ssize_t d = x.shape[0]
    cdef Py_ssize_t need = n_iters * K * (d if elementwise else 1)
    if nz.shape[0] < need:
        raise ValueError(f"noise array too short: {nz.shape[0]} < {need}")

    scratch = np.zeros((4, d))
    cdef double[::1] buf = scratch[0]
    cdef double[::1] y = scratch[1]
    cdef double[::1] g = scratch[2]
    cdef double[::1] grad = scratch[3]

    sub_arr = np.empty(rk.shape[0])
    en_arr = np.full(rk.shape[0], np.nan)
    cdef double[::1] sub = sub_arr
    cdef Py_ssize_t nrec = rk.shape[0]

    cdef double xi, sv
    cdef Py_ssize_t ri = 0, i, pos = 0
    cdef long k, diverged_at = -1, kk

    with nogil:
        if ri < nrec and rk[ri] == 0:
            sub[ri] = _value(kind, dexp, lam_v, cen_v, x, d)
            ri += 1

        for k in range(n_iters):
            if method == 2:
                for i in range(d):
                    y[i] = x[i] + mom * buf[i]
                _grad_into(kind, dexp, lam_v, cen_v, y, grad, d)
                pos = _noisy_into(nz, pos, sig_n, elementwise, K, d, grad, g)
                for i in range(d):
                    xi = y[i] - lr * g[i]
                    buf[i] = xi - x[i]
                    x[i] = xi
            else:
                _grad_into(kind, dexp, lam_v, cen_v, x, grad, d)
                pos = _noisy_into(nz, pos, sig_n, elementwise, K, d, grad, g)
                if method == 1:
                    for i in range(d):
                        buf[i] = mom * buf[i] + g[i]
                        x[i] = x[i] - lr * buf[i]
                else:
                    for i in range(d):
                        x[i] = x[i] - lr * g[i]

            if ri < nrec and rk[ri] == k + 1:
                sv = _value(kind, dexp, lam_v, cen_v, x, d)
                if not (sv <= _DIVERGENCE):
                    diverged_at = k + 1
                    for kk in range(ri, nrec):
                        sub[kk] = NAN
                    break
                sub[ri] = sv
                ri += 1

    return sub_arr, en_arr, diverged_at
