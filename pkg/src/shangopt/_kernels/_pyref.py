"""Pure-Python trajectory kernels (fallback when the extension is absent).

Each function runs a full trajectory for one problem family, consuming a
pre-generated flat array of standard normals (one block per oracle evaluation
point) and returning suboptimality/energy at the requested record indices.

The arithmetic here is the reference for the compiled kernels: the compiled
code repeats every expression with the same grouping, both consume the same
noise layout, and multiply-add fusion is disabled at compilation, so the two
implementations produce bitwise-identical trajectories.

Problem families: kind 0 is the 1-D |x|^d flat-bottomed function with
exponent ``dexp``; kind 1 is the diagonal quadratic with eigenvalues ``lam``
and center ``cen``.  Both have minimum value 0 at ``cen`` (zeros for kind 0).
"""

from __future__ import annotations

import math

import numpy as np

IMPLEMENTATION = "pure"

_DIVERGENCE = 1e12


def _value(kind, dexp, lam, cen, x):
    if kind == 0:
        ax = abs(x[0])
        if ax < 1.0:
            return ax**dexp
        return 1.0 + dexp * (ax - 1.0)
    s = 0.0
    for i in range(len(x)):
        di = x[i] - cen[i]
        s += lam[i] * di * di
    return 0.5 * s


def _grad_into(kind, dexp, lam, cen, x, out):
    if kind == 0:
        xv = x[0]
        ax = abs(xv)
        if ax < 1.0:
            t = dexp * ax ** (dexp - 1)
        else:
            t = float(dexp)
        if xv > 0.0:
            out[0] = t
        elif xv < 0.0:
            out[0] = -t
        else:
            out[0] = 0.0
        return
    for i in range(len(x)):
        out[i] = lam[i] * (x[i] - cen[i])


def _noisy_into(nz, pos, sigma, elementwise, K, d, grad, out):
    """Apply one evaluation point's noise block; returns the new cursor."""
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


def _sc_coeffs(base_at, m, csq, mu):
    at = base_at
    a = at / (1.0 - m * at)
    b = at * csq / mu
    return a, at, mu, b, mu


def _convex_coeffs(k, m, csq, c2L):
    a = 2.0 / (k + 1)
    at = 2.0 / (k + 1 + 2.0 * m)
    gm = a * at * c2L
    b = a * csq / gm
    ge = at * at * c2L
    return a, at, gm, b, ge


def _truncate(sub, en, ri, nrec):
    for j in range(ri, nrec):
        sub[j] = math.nan
        en[j] = math.nan


def shang_trajectory(
    kind, dexp, lam, cen, x0, v0, sc, mu, L, m, base_at,
    sig_s, sig_n, elementwise, K, n_iters, rec_ks, noise,
):
    """Accelerated-family trajectory (damped when m > 0; m = 0 is undamped).

    ``sig_s`` resolves the schedule, ``sig_n`` scales the actual noise (they
    differ in frozen-hyperparameter sweeps).  Records are (suboptimality of
    the auxiliary iterate, Lyapunov energy).  Returns (sub, en, diverged_at).
    """
    d = len(x0)
    need = (n_iters + 1) * K * (d if elementwise else 1)
    if len(noise) < need:
        raise ValueError(f"noise array too short: {len(noise)} < {need}")
    nz = noise.tolist() if isinstance(noise, np.ndarray) else list(noise)
    lam = list(map(float, lam))
    cen = list(map(float, cen))
    x = list(map(float, x0))
    v = list(map(float, v0))
    g = [0.0] * d
    g1 = [0.0] * d
    grad = [0.0] * d
    x1 = [0.0] * d
    xp = [0.0] * d

    csq = 1.0 + sig_s * sig_s
    c2L = csq * csq * L
    if sc:
        a, at, gm, b, ge = _sc_coeffs(base_at, m, csq, mu)
    else:
        a, at, gm, b, ge = _convex_coeffs(0, m, csq, c2L)

    nrec = len(rec_ks)
    sub = np.empty(nrec)
    en = np.empty(nrec)
    ri = 0
    diverged_at = -1

    pos = 0
    _grad_into(kind, dexp, lam, cen, x, grad)
    pos = _noisy_into(nz, pos, sig_n, elementwise, K, d, grad, g)
    aux = at * b
    for i in range(d):
        xp[i] = x[i] - aux * g[i]

    if ri < nrec and rec_ks[ri] == 0:
        s0 = _value(kind, dexp, lam, cen, xp)
        vd = 0.0
        for i in range(d):
            dv = v[i] - cen[i]
            vd += dv * dv
        e0 = s0 + 0.5 * ge * vd
        sub[ri] = s0
        en[ri] = e0
        ri += 1

    for k in range(n_iters):
        if sc:
            a1, at1, gm1, b1, ge1 = a, at, gm, b, ge
        else:
            a1, at1, gm1, b1, ge1 = _convex_coeffs(k + 1, m, csq, c2L)

        atb = at * b
        hx = 1.0 + at
        for i in range(d):
            x1[i] = (x[i] + at * v[i] - atb * g[i]) / hx
        _grad_into(kind, dexp, lam, cen, x1, grad)
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
        a, at, gm, b, ge = a1, at1, gm1, b1, ge1

        if ri < nrec and rec_ks[ri] == k + 1:
            sv = _value(kind, dexp, lam, cen, xp)
            vd = 0.0
            for i in range(d):
                dvi = v[i] - cen[i]
                vd += dvi * dvi
            ev = sv + 0.5 * ge * vd
            if not (sv <= _DIVERGENCE) or not math.isfinite(ev):
                diverged_at = k + 1
                _truncate(sub, en, ri, nrec)
                break
            sub[ri] = sv
            en[ri] = ev
            ri += 1

    return sub, en, diverged_at


def dl_trajectory(
    kind, dexp, lam, cen, x0, v0, alpha, gamma, m,
    sig_n, elementwise, K, n_iters, rec_ks, noise,
):
    """One-draw practical variant: v-update first, x-update second."""
    d = len(x0)
    need = n_iters * K * (d if elementwise else 1)
    if len(noise) < need:
        raise ValueError(f"noise array too short: {len(noise)} < {need}")
    nz = noise.tolist() if isinstance(noise, np.ndarray) else list(noise)
    lam = list(map(float, lam))
    cen = list(map(float, cen))
    x = list(map(float, x0))
    v = list(map(float, v0))
    g = [0.0] * d
    grad = [0.0] * d

    at = alpha / (1.0 + m * alpha)
    s = alpha / gamma
    ats = at * s
    hx = 1.0 + at

    nrec = len(rec_ks)
    sub = np.empty(nrec)
    en = np.full(nrec, math.nan)
    ri = 0
    diverged_at = -1
    pos = 0

    if ri < nrec and rec_ks[ri] == 0:
        sub[ri] = _value(kind, dexp, lam, cen, x)
        ri += 1

    for k in range(n_iters):
        _grad_into(kind, dexp, lam, cen, x, grad)
        pos = _noisy_into(nz, pos, sig_n, elementwise, K, d, grad, g)
        for i in range(d):
            v[i] = v[i] - s * g[i]
        for i in range(d):
            x[i] = (x[i] + at * v[i] - ats * g[i]) / hx

        if ri < nrec and rec_ks[ri] == k + 1:
            sv = _value(kind, dexp, lam, cen, x)
            if not (sv <= _DIVERGENCE):
                diverged_at = k + 1
                _truncate(sub, en, ri, nrec)
                break
            sub[ri] = sv
            ri += 1

    return sub, en, diverged_at


def snag_trajectory(
    kind, dexp, lam, cen, x0, v0, ah, s, bh, eta,
    sig_n, elementwise, K, n_iters, rec_ks, noise,
):
    """Four-parameter Nesterov variant (averaging form, constant parameters)."""
    d = len(x0)
    need = n_iters * K * (d if elementwise else 1)
    if len(noise) < need:
        raise ValueError(f"noise array too short: {len(noise)} < {need}")
    nz = noise.tolist() if isinstance(noise, np.ndarray) else list(noise)
    lam = list(map(float, lam))
    cen = list(map(float, cen))
    x = list(map(float, x0))
    v = list(map(float, v0))
    g = [0.0] * d
    grad = [0.0] * d

    ahs = ah * s
    nrec = len(rec_ks)
    sub = np.empty(nrec)
    en = np.full(nrec, math.nan)
    ri = 0
    diverged_at = -1
    pos = 0

    if ri < nrec and rec_ks[ri] == 0:
        sub[ri] = _value(kind, dexp, lam, cen, x)
        ri += 1

    for k in range(n_iters):
        _grad_into(kind, dexp, lam, cen, x, grad)
        pos = _noisy_into(nz, pos, sig_n, elementwise, K, d, grad, g)
        for i in range(d):
            vi = bh * v[i] + (1.0 - bh) * x[i] - eta * g[i]
            v[i] = vi
            x[i] = ah * x[i] + (1.0 - ah) * vi - ahs * g[i]

        if ri < nrec and rec_ks[ri] == k + 1:
            sv = _value(kind, dexp, lam, cen, x)
            if not (sv <= _DIVERGENCE):
                diverged_at = k + 1
                _truncate(sub, en, ri, nrec)
                break
            sub[ri] = sv
            ri += 1

    return sub, en, diverged_at


def baseline_trajectory(
    kind, dexp, lam, cen, x0, method, lr, mom,
    sig_n, elementwise, K, n_iters, rec_ks, noise,
):
    """SGD (method 0), heavy ball (1), or Nesterov lookahead descent (2)."""
    d = len(x0)
    need = n_iters * K * (d if elementwise else 1)
    if len(noise) < need:
        raise ValueError(f"noise array too short: {len(noise)} < {need}")
    nz = noise.tolist() if isinstance(noise, np.ndarray) else list(noise)
    lam = list(map(float, lam))
    cen = list(map(float, cen))
    x = list(map(float, x0))
    buf = [0.0] * d
    y = [0.0] * d
    g = [0.0] * d
    grad = [0.0] * d

    nrec = len(rec_ks)
    sub = np.empty(nrec)
    en = np.full(nrec, math.nan)
    ri = 0
    diverged_at = -1
    pos = 0

    if ri < nrec and rec_ks[ri] == 0:
        sub[ri] = _value(kind, dexp, lam, cen, x)
        ri += 1

    for k in range(n_iters):
        if method == 2:
            for i in range(d):
                y[i] = x[i] + mom * buf[i]
            _grad_into(kind, dexp, lam, cen, y, grad)
            pos = _noisy_into(nz, pos, sig_n, elementwise, K, d, grad, g)
            for i in range(d):
                xi = y[i] - lr * g[i]
                buf[i] = xi - x[i]
                x[i] = xi
        else:
            _grad_into(kind, dexp, lam, cen, x, grad)
            pos = _noisy_into(nz, pos, sig_n, elementwise, K, d, grad, g)
            if method == 1:
                for i in range(d):
                    buf[i] = mom * buf[i] + g[i]
                    x[i] = x[i] - lr * buf[i]
            else:
                for i in range(d):
                    x[i] = x[i] - lr * g[i]

        if ri < nrec and rec_ks[ri] == k + 1:
            sv = _value(kind, dexp, lam, cen, x)
            if not (sv <= _DIVERGENCE):
                diverged_at = k + 1
                _truncate(sub, en, ri, nrec)
                break
            sub[ri] = sv
            ri += 1

    return sub, en, diverged_at
