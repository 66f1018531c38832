"""Compiled inner loops shared by the public numpy-level API and the SGD engine.

Every public vector routine that has to agree bit for bit with the engine
(norm, clip, projection, per-sample gradients) goes through these functions.
"""
import math

import numpy as np
from numba import njit

# oracle kinds
MEAN, LINREG, LOGREG, LAD = 0, 1, 2, 3
# domain kinds
UNCONSTRAINED, BALL, BOX = 0, 1, 2

_SHRINK = 1.0 - 2.0 ** -52


@njit(cache=True)
def vnorm(v):
    m = 0.0
    for i in range(v.shape[0]):
        a = abs(v[i])
        if a > m:
            m = a
    if m == 0.0:
        return 0.0
    s = 0.0
    if 1e-150 < m < 1e150:
        for i in range(v.shape[0]):
            s += v[i] * v[i]
        return math.sqrt(s)
    # rescale to dodge overflow/underflow of the squares
    for i in range(v.shape[0]):
        r = v[i] / m
        s += r * r
    return m * math.sqrt(s)


@njit(cache=True)
def clip_into(v, level, out):
    """Write clip_level(v) to out; return True when v was shrunk."""
    n = vnorm(v)
    if n <= level:
        for i in range(v.shape[0]):
            out[i] = v[i]
        return False
    scale = level / n
    while True:
        for i in range(v.shape[0]):
            out[i] = v[i] * scale
        if vnorm(out) <= level:
            return True
        scale *= _SHRINK


@njit(cache=True)
def project_into(x, kind, center, radius, lower, upper, out, work):
    d = x.shape[0]
    if kind == BALL:
        for i in range(d):
            work[i] = x[i] - center[i]
        n = vnorm(work)
        if n <= radius:
            for i in range(d):
                out[i] = x[i]
            return
        scale = radius / n
        diff = work.copy()
        while True:
            for i in range(d):
                out[i] = center[i] + diff[i] * scale
            for i in range(d):
                work[i] = out[i] - center[i]
            if vnorm(work) <= radius:
                return
            scale *= _SHRINK
    elif kind == BOX:
        for i in range(d):
            a = x[i]
            if a < lower[i]:
                a = lower[i]
            if a > upper[i]:
                a = upper[i]
            out[i] = a
    else:
        for i in range(d):
            out[i] = x[i]


@njit(cache=True)
def _dot(a, b):
    s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


@njit(cache=True)
def sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def gradient_into(kind, x, xi, yv, out):
    d = x.shape[0]
    if kind == MEAN:
        for i in range(d):
            out[i] = x[i] - xi[i]
        return
    r = _dot(xi, x) - yv
    if kind == LINREG:
        c = r
    elif kind == LOGREG:
        z = _dot(xi, x)
        c = (1.0 - yv) * sigmoid(z) - yv * sigmoid(-z)  # phi(z) - y without cancellation
    else:
        c = 1.0 if r > 0.0 else (-1.0 if r < 0.0 else 0.0)
    for i in range(d):
        out[i] = c * xi[i]


@njit(cache=True)
def run_block(kind, x, X, y, t0, level, decaying, A, mu, gamma, eta,
              dom_kind, center, radius, lower, upper,
              acc, comp, xstar, rec_mode, rec_x, rec_g, rec_clip, rec_err, rec_off):
    """Advance clipped projected SGD over the samples in (X, y).

    x is updated in place; acc/comp hold a compensated running sum of iterates.
    rec_mode: 0 nothing, 1 distance to xstar, 2 full trajectory.
    Returns (clip events, local index of the first non-finite iterate or -1).
    """
    d = x.shape[0]
    g = np.empty(d)
    gc = np.empty(d)
    xn = np.empty(d)
    work = np.empty(d)
    clips = 0
    for i in range(X.shape[0]):
        t = t0 + i
        if rec_mode == 1:
            for j in range(d):
                work[j] = x[j] - xstar[j]
            rec_err[rec_off + i] = vnorm(work)
        elif rec_mode == 2:
            for j in range(d):
                rec_x[rec_off + i, j] = x[j]
        # Neumaier summation keeps the one-pass average accurate over long runs
        for j in range(d):
            s = acc[j] + x[j]
            if abs(acc[j]) >= abs(x[j]):
                comp[j] += (acc[j] - s) + x[j]
            else:
                comp[j] += (x[j] - s) + acc[j]
            acc[j] = s
        gradient_into(kind, x, X[i], y[i], g)
        hit = clip_into(g, level, gc)
        if hit:
            clips += 1
        if rec_mode == 2:
            for j in range(d):
                rec_g[rec_off + i, j] = g[j]
            rec_clip[rec_off + i] = hit
        if decaying:
            den = mu * (t + gamma)
            for j in range(d):
                xn[j] = x[j] - (A * gc[j]) / den
        else:
            for j in range(d):
                xn[j] = x[j] - eta * gc[j]
        project_into(xn, dom_kind, center, radius, lower, upper, x, work)
        for j in range(d):
            if not math.isfinite(x[j]):
                return clips, i
    return clips, -1
