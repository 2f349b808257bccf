"""Independent reference computations used only by the tests.

Nothing here calls into the package solvers: l is re-derived in vectorised
numpy and maximized by brute-force grids plus bounded scalar refinement.
"""

import numpy as np
from scipy import optimize, special


def ell_logit(x, beta, p, q):
    """l(u) at u = expit(x), vectorised over x."""
    b1, b2, b3 = beta
    x = np.asarray(x, dtype=float)
    u, v = special.expit(x), special.expit(-x)
    ent = -0.5 * (special.xlogy(u, u) + special.xlogy(v, v))
    return b1 * u + b2 * u**p + b3 * u**q + ent


def span(beta, p, q):
    b1, b2, b3 = beta
    return 2.0 * (abs(b1) + p * abs(b2) + q * abs(b3)) + 2.0


def _refine(x0, h, beta, p, q):
    res = optimize.minimize_scalar(lambda x: -ell_logit(x, beta, p, q),
                                   bounds=(x0 - h, x0 + h), method="bounded",
                                   options={"xatol": 1e-12})
    return float(res.x), float(-res.fun)


def grid_sup(beta, p, q, n=10**6):
    """sup of l over [0, 1]: a logit grid of n points plus both endpoints, then polished."""
    s = span(beta, p, q)
    xs = np.linspace(-s, s, n)
    vals = ell_logit(xs, beta, p, q)
    k = int(np.argmax(vals))
    h = xs[1] - xs[0]
    _, refined = _refine(xs[k], h, beta, p, q)
    endpoints = (0.0, sum(beta))
    return max(float(vals[k]), refined, *endpoints)


def dell_logit(x, beta, p, q):
    """l'(u) at u = expit(x); the entropy part is exactly -x/2."""
    b1, b2, b3 = beta
    u = special.expit(np.asarray(x, dtype=float))
    return b1 + p * b2 * u ** (p - 1) + q * b3 * u ** (q - 1) - 0.5 * x


def local_maxima(beta, p, q, n=200_001):
    """(u, value) of every interior local maximum, from + to - sign changes of l'."""
    s = span(beta, p, q)
    xs = np.linspace(-s, s, n)
    g = dell_logit(xs, beta, p, q)
    idx = np.where((g[:-1] > 0) & (g[1:] <= 0))[0]
    out = []
    for k in idx:
        x = optimize.brentq(lambda t: dell_logit(t, beta, p, q), xs[k], xs[k + 1], xtol=1e-14)
        out.append((float(special.expit(x)), float(ell_logit(x, beta, p, q))))
    return out


def transition_by_bisection(beta1, beta3, p, q, lo, hi, split_u=0.5, iters=200):
    """beta2 in (lo, hi) where the two local maxima of l have equal height.

    If the grid sees a single maximum, it counts as the low branch when it
    lies below ``split_u``.
    """

    def gap(b2):
        m = local_maxima((beta1, b2, beta3), p, q)
        if len(m) < 2:
            # only one branch left: decide by which side it sits on
            return -1.0 if m[0][0] < split_u else 1.0
        return m[-1][1] - m[0][1]

    a, b = lo, hi
    ga = gap(a)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        gm = gap(mid)
        if (gm > 0) == (ga > 0):
            a, ga = mid, gm
        else:
            b = mid
    return 0.5 * (a + b)
