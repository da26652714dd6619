"""Derivative-free scalar minimization: bracket expansion + golden section.

Used for the inner projection coefficient (convex or at least unimodal in
the search variable) and for the scale parameter on a log grid.  Kept
dependency-free and instrumented with an evaluation counter so callers can
report optimizer effort.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

__all__ = ["MinimizeResult", "bracket_minimum", "golden_section", "minimize_unimodal"]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0


@dataclass
class MinimizeResult:
    x: float
    fx: float
    evaluations: int
    converged: bool


def bracket_minimum(
    f: Callable[[float], float],
    x0: float,
    step: float = 1.0,
    grow: float = 2.0,
    max_expand: int = 80,
) -> tuple[float, float, float, int]:
    """Expand around x0 until the middle point beats both ends.

    Returns (lo, mid, hi, evaluations) with f(mid) <= min(f(lo), f(hi)).
    Raises RuntimeError if no bracket is found within max_expand doublings.
    """
    evals = 0

    def ev(x: float) -> float:
        nonlocal evals
        evals += 1
        return f(x)

    fm = ev(x0)
    lo, hi = x0 - step, x0 + step
    flo, fhi = ev(lo), ev(hi)
    mid = x0
    for _ in range(max_expand):
        if fm <= flo and fm <= fhi:
            return lo, mid, hi, evals
        if flo < fhi:
            # walk left
            mid, fm, hi, fhi = lo, flo, mid, fm
            step *= grow
            lo = mid - step
            flo = ev(lo)
        else:
            mid, fm, lo, flo = hi, fhi, mid, fm
            step *= grow
            hi = mid + step
            fhi = ev(hi)
    raise RuntimeError("bracket_minimum: no bracket found (function may be monotone)")


def golden_section(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> MinimizeResult:
    """Golden-section search on [lo, hi] for a unimodal f.

    tol is the absolute width target, scaled by max(1, |lo|, |hi|).
    """
    evals = 0

    def ev(x: float) -> float:
        nonlocal evals
        evals += 1
        return f(x)

    a, b = (lo, hi) if lo <= hi else (hi, lo)
    width_tol = tol * max(1.0, abs(a), abs(b))
    x1 = a + _INVPHI2 * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = ev(x1), ev(x2)
    it = 0
    while (b - a) > width_tol and it < max_iter:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = a + _INVPHI2 * (b - a)
            f1 = ev(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = ev(x2)
        it += 1
    if f1 <= f2:
        x, fx = x1, f1
    else:
        x, fx = x2, f2
    return MinimizeResult(x=x, fx=fx, evaluations=evals, converged=(b - a) <= width_tol)


def minimize_unimodal(
    f: Callable[[float], float],
    x0: float,
    step: float = 1.0,
    tol: float = 1e-10,
) -> MinimizeResult:
    """Bracket around x0, then golden-section inside the bracket."""
    lo, _, hi, bevals = bracket_minimum(f, x0, step=step)
    res = golden_section(f, lo, hi, tol=tol)
    res.evaluations += bevals
    return res
