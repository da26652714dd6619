"""Independent oracles used by the test suite.

These deliberately avoid the package's own quadrature and optimizers:
weighted norms go through scipy's QUADPACK, derivatives through central
finite differences, the pointwise gap constant through a dense scan of the
reduced 2-D parameterization, and projections through brute-force grids.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize


def quad_weighted_norm(profile, use_derivative: bool, q: float, gamma: float, N: int,
                       r_hi: float = 400.0) -> float:
    """sphere_area * int |f|^q r^(N-1-gamma) dr via QUADPACK."""
    f = profile.deriv if use_derivative else profile.eval
    area = 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)
    lo = max(profile.support[0], 0.0)
    hi = min(profile.support[1], r_hi)

    def g(r):
        return abs(float(f(np.array([r]))[0])) ** q * r ** (N - 1.0 - gamma)

    val, _ = quad(g, lo, hi, limit=400)
    return area * val


def central_diff(fn, r: float, h: float) -> float:
    a = float(fn(np.array([r + h]))[0])
    b = float(fn(np.array([r - h]))[0])
    return (a - b) / (2.0 * h)


def reduced_scan_gap_constant(p: float, nt: int = 641, na: int = 361) -> float:
    """inf gap_p/kernel over the reduced coordinates (|X| = 1, |Y|, angle).

    The ratio is scale- and rotation-invariant, so this 2-D scan (plus a
    Nelder-Mead polish) covers the full vector problem.
    """
    ts = np.logspace(-6.0, 6.0, nt)
    cosv = np.cos(np.linspace(0.0, np.pi, na))
    best_val = math.inf
    best_at = (1.0, 1.0)
    for t in ts:
        g = t**p - 1.0 - p * (t * cosv - 1.0)
        d2 = np.maximum(1.0 + t * t - 2.0 * t * cosv, 0.0)
        d = np.sqrt(d2)
        k = d**p if p >= 2.0 else np.minimum(d**p, d2)
        ok = k > 0.0
        if ok.any():
            r = g[ok] / k[ok]
            i = int(np.argmin(r))
            if r[i] < best_val:
                best_val = float(r[i])
                best_at = (float(t), float(np.arccos(np.clip(cosv[ok][i], -1, 1))))

    def f(z):
        t = math.exp(z[0])
        ang = min(max(z[1], 0.0), math.pi)
        c = math.cos(ang)
        g = t**p - 1.0 - p * (t * c - 1.0)
        d2 = max(1.0 + t * t - 2.0 * t * c, 0.0)
        d = math.sqrt(d2)
        k = d**p if p >= 2.0 else min(d**p, d2)
        return g / k if k > 0.0 else math.inf

    res = minimize(f, [math.log(best_at[0]), best_at[1]], method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    return min(best_val, float(res.fun))


def grid_scan_min(fn, c_range, lam_range=None):
    """Dense grid minimum of fn(c) or fn(c, lam)."""
    best = math.inf
    arg = None
    if lam_range is None:
        for c in c_range:
            v = fn(c)
            if v < best:
                best, arg = v, c
        return best, arg
    for lam in lam_range:
        for c in c_range:
            v = fn(c, lam)
            if v < best:
                best, arg = v, (c, lam)
    return best, arg
