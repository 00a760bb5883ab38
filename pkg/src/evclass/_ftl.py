"""Compiled kernels for follow-the-leader betting.

The objective is ``sum_j counts[j] * log(1 - rows[j] . theta)`` over the
distinct constraint vectors seen so far. Projection kinds:

0  unconstrained (no parameters)
1  interval box ``params[0] <= theta[0] <= params[1]``
2  heavy-tail ellipse with mean ``params[0]`` (theta = (alpha, beta))
3  grid retraction: slack entries clipped at 0, then radial shrink so that
   ``max(table @ theta) <= 1``
"""

import math

import numpy as np
from numba import njit

BOX, ELLIPSE, RETRACT, FREE = 1, 2, 3, 0
# round-off level on the mean log-wealth scale
ACCEPT_SLACK = 1e-13


@njit(cache=True)
def objective(theta, rows, counts):
    total = 0.0
    for j in range(rows.shape[0]):
        e = 1.0
        for k in range(theta.shape[0]):
            e -= rows[j, k] * theta[k]
        if e <= 0.0:
            return -np.inf
        total += counts[j] * math.log(e)
    return total


@njit(cache=True)
def _gradient(theta, rows, counts):
    g = np.zeros(theta.shape[0])
    for j in range(rows.shape[0]):
        e = 1.0
        for k in range(theta.shape[0]):
            e -= rows[j, k] * theta[k]
        for k in range(theta.shape[0]):
            g[k] -= counts[j] * rows[j, k] / e
    return g


@njit(cache=True)
def _ellipse_value(a, b, mu):
    return a * a + 4.0 * mu * a * b + 4.0 * b * b - 4.0 * b


@njit(cache=True)
def _ellipse_point(pa, pb, mu, nu):
    # (I + 2 nu Q) theta = p - nu q  with Q = [[1, 2mu], [2mu, 4]], q = (0, -4)
    a11 = 1.0 + 2.0 * nu
    a12 = 4.0 * nu * mu
    a22 = 1.0 + 8.0 * nu
    r1 = pa
    r2 = pb + 4.0 * nu
    det = a11 * a22 - a12 * a12
    return (a22 * r1 - a12 * r2) / det, (a11 * r2 - a12 * r1) / det


@njit(cache=True)
def project_ellipse(pa, pb, mu):
    """Euclidean projection onto the heavy-tail ellipse.

    Safeguarded Newton on the multiplier ``nu``; the returned point is always
    taken from the feasible end of the bracket.
    """
    if _ellipse_value(pa, pb, mu) <= 0.0:
        return pa, pb
    hi = 1.0
    a, b = _ellipse_point(pa, pb, mu, hi)
    while _ellipse_value(a, b, mu) > 0.0:
        hi *= 2.0
        a, b = _ellipse_point(pa, pb, mu, hi)
    lo = 0.0
    nu = 0.0
    for _ in range(100):
        ta, tb = _ellipse_point(pa, pb, mu, nu)
        h = _ellipse_value(ta, tb, mu)
        if h > 0.0:
            lo = nu
        else:
            hi = nu
            a, b = ta, tb
            if h >= -1e-14:
                break
        if hi - lo <= 1e-15 * hi:
            break
        # d theta / d nu = -(I + 2 nu Q)^{-1} grad g(theta)
        ga = 2.0 * ta + 4.0 * mu * tb
        gb = 4.0 * mu * ta + 8.0 * tb - 4.0
        a11 = 1.0 + 2.0 * nu
        a12 = 4.0 * nu * mu
        a22 = 1.0 + 8.0 * nu
        det = a11 * a22 - a12 * a12
        da = -(a22 * ga - a12 * gb) / det
        db = -(a11 * gb - a12 * ga) / det
        slope = ga * da + gb * db
        nxt = nu - h / slope if slope < 0.0 else 0.5 * (lo + hi)
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        nu = nxt
    return a, b


@njit(cache=True)
def project_into(theta, out, kind, params, table, m_tight):
    for k in range(theta.shape[0]):
        out[k] = theta[k]
    if kind == BOX:
        out[0] = min(max(out[0], params[0]), params[1])
    elif kind == ELLIPSE:
        a, b = project_ellipse(out[0], out[1], params[0])
        out[0] = a
        out[1] = max(b, 0.0)
    elif kind == RETRACT:
        for k in range(m_tight, out.shape[0]):
            out[k] = max(out[k], 0.0)
        s = -np.inf
        for i in range(table.shape[0]):
            v = 0.0
            for k in range(out.shape[0]):
                v += table[i, k] * out[k]
            s = max(s, v)
        if s > 1.0:
            for k in range(out.shape[0]):
                out[k] /= s


@njit(cache=True)
def project(theta, kind, params, table, m_tight):
    out = np.empty_like(theta)
    project_into(theta, out, kind, params, table, m_tight)
    return out


@njit(cache=True)
def ascend(start, rows, counts, kind, params, table, m_tight, iterations, step):
    """Projected gradient ascent on the mean log-wealth, step ``step / sqrt(k)``.

    A step that would lower the objective by more than ``ACCEPT_SLACK`` is
    halved (up to 10 times) and otherwise skipped, so the trace never drops
    by more than that slack between iterations.
    """
    p = start.shape[0]
    total = 0.0
    for j in range(counts.shape[0]):
        total += counts[j]
    w = counts / total if total > 0 else counts.copy()
    theta = project(start, kind, params, table, m_tight)
    f = objective(theta, rows, w)
    if f == -np.inf:
        theta[:] = 0.0
        f = objective(theta, rows, w)
    trace = np.empty(iterations + 1)
    trace[0] = f
    trial = np.empty(p)
    cand = np.empty(p)
    for it in range(1, iterations + 1):
        g = _gradient(theta, rows, w)
        eta = step / math.sqrt(it)
        for _ in range(10):
            for k in range(p):
                trial[k] = theta[k] + eta * g[k]
            project_into(trial, cand, kind, params, table, m_tight)
            fc = objective(cand, rows, w)
            if fc >= f - ACCEPT_SLACK:
                theta[:] = cand
                f = fc
                break
            eta *= 0.5
        trace[it] = f
    return theta, trace
