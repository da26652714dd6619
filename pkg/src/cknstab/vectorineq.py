"""Pointwise vector and scalar inequality kernels.

The central object is the Bregman-type gap of the convex map V -> |V|^p,

    gap_p(X, Y) = |Y|^p - |X|^p - p |X|^(p-2) X . (Y - X)  >= 0,

together with its sharpened quadratic lower bound (with the anchor vector
case analysis), the distance kernel min{|Y-X|^p, |X|^(p-2)|Y-X|^2} it
dominates, and two scalar inequalities used by the half-power machinery.
Brute-force scanners estimate the best constants empirically; none of the
constants has a known closed form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = [
    "VecPair",
    "InequalityReport",
    "EmpiricalConstant",
    "bregman_gap",
    "bregman_gap_signed",
    "gap_scale",
    "gap_scale_signed",
    "anchor_vector",
    "gap_lower_bound",
    "gap_kernel",
    "bregman_gap_batch",
    "gap_kernel_batch",
    "gap_scale_batch",
    "gap_lower_bound_batch",
    "sample_vector_pairs",
    "estimate_gap_constant",
    "half_power_difference_check",
    "power_sum_check",
]

# Margin used to call a sampled inequality violated, relative to the natural
# magnitude scale of the expression (so cancellation noise is not reported).
VIOLATION_TOL = 1e-12


@dataclass(frozen=True)
class VecPair:
    """A sample point (x, y) in R^d x R^d together with the exponent p."""

    x: tuple[float, ...]
    y: tuple[float, ...]
    p: float

    def __post_init__(self) -> None:
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have the same dimension")
        if not self.p > 1.0:
            raise ValueError("need p > 1")

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.x, dtype=float), np.asarray(self.y, dtype=float)


@dataclass
class InequalityReport:
    """Universal record for one pointwise inequality evaluation."""

    lhs: float
    rhs: float
    violation: bool
    witness: Any
    label: str = ""
    detail: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


@dataclass
class EmpiricalConstant:
    """Best constant seen by a scan, with the witness that attains it."""

    value: float
    sample_count: int
    worst_witness: Any
    scan_description: str
    seed: int | None = None

    def to_json(self, **extra: Any) -> str:
        payload = {
            "constant": self.value,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "worst_witness": _jsonable(self.worst_witness),
            "scan": self.scan_description,
        }
        payload.update(extra)
        return json.dumps(payload, sort_keys=True)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, VecPair):
        return {"x": list(obj.x), "y": list(obj.y), "p": obj.p}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    return obj


def _norm(v: np.ndarray) -> float:
    return float(np.linalg.norm(v))


def bregman_gap(X, Y, p: float) -> float:
    """|Y|^p - |X|^p - p |X|^(p-2) X.(Y-X); nonnegative by convexity.

    At X = 0 the middle term is defined as its limit 0 (p > 1).  For p = 2
    the exact identity |Y - X|^2 is used, which is also the numerically
    stable form.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if not p > 1.0:
        raise ValueError("need p > 1")
    if p == 2.0:
        return float(np.dot(Y - X, Y - X))
    nx = _norm(X)
    ny = _norm(Y)
    if nx == 0.0:
        return ny**p
    return ny**p - nx**p - p * nx ** (p - 2.0) * float(np.dot(X, Y - X))


def bregman_gap_signed(x, y, p: float):
    """Vectorized gap for collinear arguments given as signed magnitudes.

    For X = x e, Y = y e with a common unit vector e the gap depends only on
    the signed scalars; |X|^(p-2) X.(Y-X) becomes sign(x)|x|^(p-1) (y - x).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if p == 2.0:
        return (y - x) ** 2
    ax = np.abs(x)
    return np.abs(y) ** p - ax**p - p * np.sign(x) * ax ** (p - 1.0) * (y - x)


def gap_scale(X, Y, p: float) -> float:
    """Magnitude scale |Y|^p + |X|^p + p|X|^(p-1)|Y-X| of the gap expression.

    Cancellation noise in bregman_gap is bounded by machine epsilon times
    this scale; tolerance checks should be relative to it.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    nx = _norm(X)
    return _norm(Y) ** p + nx**p + p * nx ** (p - 1.0) * _norm(Y - X)


def gap_scale_signed(x, y, p: float):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ax = np.abs(x)
    return np.abs(y) ** p + ax**p + p * ax ** (p - 1.0) * np.abs(y - x)


def anchor_vector(x, s, p: float) -> np.ndarray:
    """Anchor z(x, s) of the sharpened quadratic bound, s playing x + y.

    Its magnitude (never exceeding max(|x|, |s|)) is chosen so the signed
    Hessian term p(p-2)|z|^(p-2)(|x|-|s|)^2 stays dominated by the
    quadratic part.  Defined for p != 2; x = s = 0 is rejected.
    """
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    if p == 2.0 or not p > 1.0:
        raise ValueError("anchor vector is defined for p > 1, p != 2")
    nx, ns = _norm(x), _norm(s)
    if nx == 0.0 and ns == 0.0:
        raise ValueError("anchor vector undefined at x = s = 0")
    if p < 2.0:
        if nx >= ns:
            return x.copy()
        den = (2.0 - p) * ns + (p - 1.0) * nx
        if den == 0.0:  # impossible for ns > 0; guarded anyway
            raise ZeroDivisionError("anchor denominator vanished")
        return (ns / den) ** (1.0 / (p - 2.0)) * x
    if nx < ns:
        return x.copy()
    return (ns / nx) ** (1.0 / (p - 2.0)) * s


def gap_lower_bound(x, y, p: float, gamma: float, c_pg: float) -> float:
    """Sharpened lower bound for the gap at (X, Y) = (x, x + y).

    (1-gamma)/2 [ p|x|^(p-2)|y|^2 + p(p-2)|z|^(p-2)(|x|-|x+y|)^2 ]
    + c_pg * ( min{|y|^p, |x|^(p-2)|y|^2}  if 1 < p < 2,  |y|^p  if p >= 2 ).

    The bracket is defined as 0 at x = 0 (its limit: the two singular terms
    cancel at leading order for p < 2 and vanish individually for p > 2).
    """
    if gamma <= 0.0:
        raise ValueError("need gamma > 0")
    if c_pg < 0.0:
        raise ValueError("need c_pg >= 0")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = x + y
    nx, ny, ns = _norm(x), _norm(y), _norm(s)
    if nx == 0.0:
        bracket = 0.0
    elif p == 2.0:
        bracket = 2.0 * ny**2
    else:
        z = anchor_vector(x, s, p)
        nz = _norm(z)
        hess = 0.0 if nz == 0.0 else nz ** (p - 2.0) * (nx - ns) ** 2
        bracket = p * nx ** (p - 2.0) * ny**2 + p * (p - 2.0) * hess
    if p < 2.0:
        tail = ny**p if nx == 0.0 else min(ny**p, nx ** (p - 2.0) * ny**2)
    else:
        tail = ny**p
    return 0.5 * (1.0 - gamma) * bracket + c_pg * tail


def gap_kernel(X, Y, p: float) -> float:
    """Distance kernel dominated by the gap (without its constant):

    min{|Y-X|^p, |X|^(p-2)|Y-X|^2} for 1 < p < 2, |Y-X|^p for p >= 2.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if not p > 1.0:
        raise ValueError("need p > 1")
    d = _norm(Y - X)
    if p >= 2.0:
        return d**p
    nx = _norm(X)
    if nx == 0.0:
        return d**p
    return min(d**p, nx ** (p - 2.0) * d**2)


def bregman_gap_batch(X: np.ndarray, Y: np.ndarray, p: float) -> np.ndarray:
    """bregman_gap over rows of X, Y."""
    nx = np.linalg.norm(X, axis=1)
    ny = np.linalg.norm(Y, axis=1)
    if p == 2.0:
        return np.sum((Y - X) ** 2, axis=1)
    dot = np.einsum("ij,ij->i", X, Y - X)
    mid = np.zeros_like(nx)
    pos = nx > 0.0
    mid[pos] = p * nx[pos] ** (p - 2.0) * dot[pos]
    return ny**p - nx**p - mid


def gap_kernel_batch(X: np.ndarray, Y: np.ndarray, p: float) -> np.ndarray:
    d = np.linalg.norm(Y - X, axis=1)
    if p >= 2.0:
        return d**p
    nx = np.linalg.norm(X, axis=1)
    out = d**p
    pos = nx > 0.0
    out[pos] = np.minimum(out[pos], nx[pos] ** (p - 2.0) * d[pos] ** 2)
    return out


def gap_scale_batch(X: np.ndarray, Y: np.ndarray, p: float) -> np.ndarray:
    nx = np.linalg.norm(X, axis=1)
    return (np.linalg.norm(Y, axis=1) ** p + nx**p
            + p * nx ** (p - 1.0) * np.linalg.norm(Y - X, axis=1))


def _anchor_magnitude_batch(nx: np.ndarray, ns: np.ndarray, p: float) -> np.ndarray:
    """|z(x, s)| over batches of magnitudes (rotation invariance makes the
    anchor's magnitude a function of |x|, |s| alone)."""
    out = np.empty_like(nx)
    if p < 2.0:
        keep = nx >= ns
        out[keep] = nx[keep]
        sw = ~keep
        den = (2.0 - p) * ns[sw] + (p - 1.0) * nx[sw]
        out[sw] = (ns[sw] / den) ** (1.0 / (p - 2.0)) * nx[sw]
    else:
        keep = nx < ns
        out[keep] = nx[keep]
        sw = ~keep
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(nx[sw] > 0.0, ns[sw] / nx[sw], 0.0)
        out[sw] = ratio ** (1.0 / (p - 2.0)) * ns[sw]
    return out


def gap_lower_bound_batch(
    x: np.ndarray, y: np.ndarray, p: float, gamma: float, c_pg: float,
    with_scale: bool = False,
):
    """gap_lower_bound over rows of (x, y); see gap_lower_bound.

    with_scale=True also returns the magnitude scale of the bracket (its
    two terms nearly cancel by construction for p < 2, so comparisons must
    be relative to that scale, not to the result).
    """
    s = x + y
    nx = np.linalg.norm(x, axis=1)
    ny = np.linalg.norm(y, axis=1)
    ns = np.linalg.norm(s, axis=1)
    bracket = np.zeros_like(nx)
    bracket_scale = np.zeros_like(nx)
    pos = nx > 0.0
    if p == 2.0:
        bracket[pos] = 2.0 * ny[pos] ** 2
        bracket_scale[pos] = bracket[pos]
    else:
        nz = _anchor_magnitude_batch(nx[pos], ns[pos], p)
        hess = np.zeros_like(nz)
        zpos = nz > 0.0
        hess[zpos] = nz[zpos] ** (p - 2.0) * (nx[pos][zpos] - ns[pos][zpos]) ** 2
        first = p * nx[pos] ** (p - 2.0) * ny[pos] ** 2
        bracket[pos] = first + p * (p - 2.0) * hess
        bracket_scale[pos] = first + p * abs(p - 2.0) * hess
    if p < 2.0:
        tail = ny**p
        tail[pos] = np.minimum(tail[pos], nx[pos] ** (p - 2.0) * ny[pos] ** 2)
    else:
        tail = ny**p
    value = 0.5 * (1.0 - gamma) * bracket + c_pg * tail
    if not with_scale:
        return value
    return value, 0.5 * abs(1.0 - gamma) * bracket_scale + c_pg * tail


def sample_vector_pairs(rng: np.random.Generator, n: int, dim: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Random (X, Y) pairs: isotropic directions, log-uniform magnitudes in
    [1e-6, 1e6], plus near-collinear and near-equal stress blocks."""
    n_plain = (7 * n) // 10
    n_coll = (3 * n) // 20
    n_eq = n - n_plain - n_coll

    def directions(k: int) -> np.ndarray:
        v = rng.standard_normal((k, dim))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def magnitudes(k: int) -> np.ndarray:
        return 10.0 ** rng.uniform(-6.0, 6.0, size=k)

    X = directions(n_plain) * magnitudes(n_plain)[:, None]
    Y = directions(n_plain) * magnitudes(n_plain)[:, None]

    # near-collinear: Y along X with a small transverse component
    Xc = directions(n_coll) * magnitudes(n_coll)[:, None]
    t = rng.uniform(-4.0, 4.0, size=n_coll)
    perp = directions(n_coll) * (10.0 ** rng.uniform(-8.0, -3.0, size=n_coll))[:, None]
    Yc = Xc * t[:, None] + perp * np.linalg.norm(Xc, axis=1, keepdims=True)

    # near-equal: Y = X (1 + delta), |delta| in [1e-5, 1e-1] (kept above the
    # cancellation floor of double precision)
    Xe = directions(n_eq) * magnitudes(n_eq)[:, None]
    delta = 10.0 ** rng.uniform(-5.0, -1.0, size=n_eq) * rng.choice([-1.0, 1.0], size=n_eq)
    Ye = Xe * (1.0 + delta)[:, None]

    return np.vstack([X, Xc, Xe]), np.vstack([Y, Yc, Ye])


def estimate_gap_constant(p: float, sample_count: int = 100_000, seed: int = 0) -> EmpiricalConstant:
    """Estimate inf gap_p / kernel over random samples.

    The infimum is scale- and rotation-invariant; random sampling here is
    the confirmation layer, while the dense reduced-coordinate scan used in
    the test suite is the independent oracle.  Pairs with vanishing kernel
    are excluded.
    """
    if not p > 1.0:
        raise ValueError("need p > 1")
    if sample_count < 10_000:
        raise ValueError("sample_count too small for a meaningful scan (need >= 10^4)")
    rng = np.random.default_rng(seed)
    X, Y = sample_vector_pairs(rng, sample_count)
    gaps = bregman_gap_batch(X, Y, p)
    kernels = gap_kernel_batch(X, Y, p)
    ok = kernels > 0.0
    ratios = gaps[ok] / kernels[ok]
    idx = int(np.argmin(ratios))
    rows = np.flatnonzero(ok)
    worst = VecPair(tuple(X[rows[idx]]), tuple(Y[rows[idx]]), p)
    return EmpiricalConstant(
        value=float(ratios[idx]),
        sample_count=int(ok.sum()),
        worst_witness=worst,
        scan_description=(
            "random isotropic directions, log-uniform magnitudes in [1e-6, 1e6], "
            "with near-collinear and near-equal stress blocks"
        ),
        seed=seed,
    )


def half_power_difference_check(m: float, n: float, p: float) -> InequalityReport:
    """Check | |m|^((p-2)/2) m - |n|^((p-2)/2) n |^2 <= 4 |m - n|^p (1 < p < 2),
    and the refined same-sign bound with constant 1 when m*n > 0."""
    if not 1.0 < p < 2.0:
        raise ValueError("need 1 < p < 2")

    def h(t: float) -> float:
        return 0.0 if t == 0.0 else math.copysign(abs(t) ** (p / 2.0), t)

    lhs = (h(m) - h(n)) ** 2
    rhs = 4.0 * abs(m - n) ** p
    tol = VIOLATION_TOL * (1.0 + lhs + rhs)
    violation = lhs > rhs + tol
    detail: dict = {}
    if m * n > 0.0:
        refined = abs(m - n) ** p
        detail["same_sign_rhs"] = refined
        detail["same_sign_violation"] = lhs > refined + VIOLATION_TOL * (1.0 + lhs + refined)
        violation = violation or detail["same_sign_violation"]
    return InequalityReport(lhs=lhs, rhs=rhs, violation=violation,
                            witness=(m, n, p), label="half-power difference", detail=detail)


def power_sum_check(m: float, n: float, q: float) -> InequalityReport:
    """Check |m+n|^q <= C_q (|m|^q + |n|^q) with C_q = max(1, 2^(q-1))."""
    if not q > 0.0:
        raise ValueError("need q > 0")
    cq = max(1.0, 2.0 ** (q - 1.0))
    lhs = abs(m + n) ** q
    rhs = cq * (abs(m) ** q + abs(n) ** q)
    tol = VIOLATION_TOL * (1.0 + lhs + rhs)
    return InequalityReport(lhs=lhs, rhs=rhs, violation=lhs > rhs + tol,
                            witness=(m, n, q), label="power-sum bound",
                            detail={"constant": cq})
