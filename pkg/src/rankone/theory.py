"""Decay constants r(c) and alpha(c) of the subcritical rank-1 model.

Both constants are radii of convergence of generating functions of the
multi-type Poisson branching process.  They are computed here in two
independent ways:

* by tangency: ``r(c)`` is the ``z0`` for which the line ``y`` touches the
  convex map ``y -> z f(y)``, and ``alpha(c)`` the analogous ``z0`` for
  ``y -> F(y, z)``;
* by brute force: the monotone fixed-point iterations for ``H_z`` and
  ``G_z`` converge below the radius and blow up above it, so bisection on
  the verdict brackets the radius (:func:`radius_scan`).

The two routes share nothing except :class:`~rankone.model.TypeSpace`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import BracketNotFound, ExponentOverflow, NotSubcritical, OutOfRange
from .model import TypeSpace, c_critical, moments

EXP_GUARD = 700.0
ITER_MAX = 100_000
ITER_CAP_FACTOR = 1e12
ITER_RTOL = 1e-12


class Regime(str, enum.Enum):
    SUBCRITICAL = "subcritical"
    AT_OR_ABOVE_CRITICAL = "at_or_above_critical"


class Verdict(str, enum.Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class TangencySolution:
    y0: float
    z0: float
    residual_fixed: float
    residual_slope: float
    iterations: int
    regime: Regime

    @property
    def log_z0(self) -> float:
        return math.log(self.z0)


@dataclass(frozen=True)
class GFIterationTrace:
    z: float
    verdict: Verdict
    limit_value: Optional[float]
    iterations: int
    monotone: bool = True


# ---------------------------------------------------------------------------
# Weighted exponential sums


def _exp_sums(space: TypeSpace, rate: float, powers=(1, 2)):
    """``[E psi^k exp(rate psi) for k in powers]`` with the overflow guard."""
    psi = space.psi
    expo = rate * psi
    top = float(expo.max())
    if top > EXP_GUARD:
        raise ExponentOverflow(f"exponent {top:.6g} exceeds guard {EXP_GUARD:g}")
    e = space.weights * np.exp(expo)
    return [math.fsum(e * psi**k) for k in powers]


def _rate_limit(space: TypeSpace) -> float:
    """Largest exponent rate usable on ``space`` (exclusive)."""
    limit = EXP_GUARD / float(space.psi.max())
    if space.tail_rate is not None:
        limit = min(limit, space.tail_rate)
    return limit


def f_eval(space: TypeSpace, c: float, y: float) -> tuple[float, float]:
    """Value and slope of ``f(y) = E[psi exp(c psi m1 (y-1))] / m1``.

    The slope is ``c E[psi^2 exp(c psi m1 (y-1))]``; at ``y = 1`` it is
    ``c m2``.
    """
    if y < 1:
        raise OutOfRange(f"f is only evaluated on y >= 1, got {y}")
    m1 = moments(space).m1
    s1, s2 = _exp_sums(space, c * m1 * (y - 1.0))
    return s1 / m1, c * s2


def F_eval(space: TypeSpace, c: float, y: float, z: float) -> tuple[float, float]:
    """Activity analogue ``F(y, z) = E[z^psi psi exp(c psi m1 (y-1))] / m1`` and its y-slope."""
    if y < 1 or z < 1:
        raise OutOfRange(f"F is only evaluated on y >= 1, z >= 1, got y={y}, z={z}")
    m1 = moments(space).m1
    s1, s2 = _exp_sums(space, math.log(z) + c * m1 * (y - 1.0))
    return s1 / m1, c * s2


# ---------------------------------------------------------------------------
# Scalar root finding


def _safeguarded_newton(
    fun: Callable[[float], tuple[float, float]],
    lo: float,
    hi: float,
    flo: float,
    fhi: float,
    xtol: float = 4e-16,
    max_iter: int = 400,
) -> tuple[float, int]:
    """Root of ``fun`` on a sign-change bracket; Newton steps, bisection fallback.

    ``fun`` returns ``(value, derivative)``.  The bracket shrinks every
    iteration, so this terminates even when Newton misbehaves.
    """
    if flo == 0:
        return lo, 0
    if fhi == 0:
        return hi, 0
    if (flo > 0) == (fhi > 0):
        raise BracketNotFound("no sign change", lo=lo, hi=hi, flo=flo, fhi=fhi)
    x = 0.5 * (lo + hi)
    for it in range(1, max_iter + 1):
        fx, dfx = fun(x)
        if fx == 0:
            return x, it
        if (fx > 0) == (flo > 0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        if hi - lo <= xtol * max(1.0, abs(x)):
            return 0.5 * (lo + hi), it
        xn = x - fx / dfx if dfx != 0 and math.isfinite(dfx) else math.nan
        if not lo < xn < hi:
            xn = 0.5 * (lo + hi)
        if xn == x:
            return x, it
        x = xn
    return x, max_iter


def _expand_bracket(
    sign_at: Callable[[float], float], start: float, step0: float, limit: float
) -> tuple[float, float]:
    """Grow ``start + step`` geometrically until ``sign_at`` turns negative.

    Returns the last positive point and the first non-positive one, never
    stepping past ``limit`` (exclusive).  Raises BracketNotFound otherwise.
    """
    lo, step = start, step0
    last = None
    while True:
        x = start + step
        if x >= limit:
            x = start + (limit - start) * (1 - 1e-9)
            last = True
        try:
            v = sign_at(x)
        except ExponentOverflow:
            raise BracketNotFound(
                "bracket hit the overflow guard", lo=lo, hi=x
            ) from None
        if v <= 0:
            return lo, x
        if last:
            raise BracketNotFound("no sign change before the domain limit", lo=lo, limit=limit)
        lo = x
        step *= 2.0


def _check_c(space: TypeSpace, c: float) -> bool:
    """True when ``c`` is strictly subcritical; validates ``c > 0``."""
    if not (c > 0 and math.isfinite(c)):
        raise OutOfRange(f"c must be positive, got {c}")
    return c < c_critical(space)


# ---------------------------------------------------------------------------
# r(c)


def solve_y(space: TypeSpace, c: float) -> float:
    """Unique ``y0 > 1`` with ``y0 = f(y0) / f'(y0)``."""
    return _solve_y(space, c)[0]


def _solve_y(space: TypeSpace, c: float) -> tuple[float, int]:
    if not _check_c(space, c):
        raise NotSubcritical(f"c={c} is not below c_cr={c_critical(space)}")
    m1 = moments(space).m1
    ymax = 1.0 + _rate_limit(space) / (c * m1)

    def g(y):
        m1_ = m1
        s1, s2, s3 = _exp_sums(space, c * m1_ * (y - 1.0), (1, 2, 3))
        # g = f - y f', g' = -y f''
        return s1 / m1_ - y * c * s2, -y * c * c * m1_ * s3

    step0 = min(1.0, 0.25 * (ymax - 1.0))
    lo, hi = _expand_bracket(lambda y: g(y)[0], 1.0, step0, ymax)
    y0, it = _safeguarded_newton(g, lo, hi, g(lo)[0], g(hi)[0])
    return y0, it


def tangency_r(space: TypeSpace, c: float) -> TangencySolution:
    """Tangency point and ``r(c)``; ``r = 1`` when ``c >= c_cr``."""
    if not _check_c(space, c):
        return TangencySolution(1.0, 1.0, 0.0, 0.0, 0, Regime.AT_OR_ABOVE_CRITICAL)
    y0, it = _solve_y(space, c)
    val, slope = f_eval(space, c, y0)
    z0 = 1.0 / slope
    return TangencySolution(
        y0=y0,
        z0=z0,
        residual_fixed=abs(z0 * val - y0),
        residual_slope=abs(z0 * slope - 1.0),
        iterations=it,
        regime=Regime.SUBCRITICAL,
    )


def r_of_c(space: TypeSpace, c: float) -> float:
    return tangency_r(space, c).z0


# ---------------------------------------------------------------------------
# alpha(c)


def _inner_min(space: TypeSpace, c: float, s: float, m1: float, limit: float):
    """Minimize ``F(y, e^s) - y`` over ``y >= 1``; returns ``(min, y*, iterations)``.

    ``F`` is convex in ``y``; the minimizer solves ``dF/dy = 1`` unless the
    slope already exceeds one at ``y = 1``.
    """

    def slope_eq(y):
        _, s2, s3 = _exp_sums(space, s + c * m1 * (y - 1.0), (1, 2, 3))
        return c * s2 - 1.0, c * c * m1 * s3

    d1 = slope_eq(1.0)[0]
    if d1 >= 0:
        s1 = _exp_sums(space, s, (1,))[0]
        return s1 / m1 - 1.0, 1.0, 0
    ymax = 1.0 + (limit - s) / (c * m1)
    step0 = min(1.0, 0.25 * (ymax - 1.0))
    lo, hi = _expand_bracket(lambda y: -slope_eq(y)[0], 1.0, step0, ymax)
    ystar, it = _safeguarded_newton(slope_eq, lo, hi, slope_eq(lo)[0], slope_eq(hi)[0])
    s1 = _exp_sums(space, s + c * m1 * (ystar - 1.0), (1,))[0]
    return s1 / m1 - ystar, ystar, it


def tangency_alpha(space: TypeSpace, c: float, max_bisect: int = 200) -> TangencySolution:
    """Tangency point and ``alpha(c)`` by outer bisection on ``log z``.

    ``z`` is feasible when ``y -> F(y, z)`` has a fixed point ``y >= 1``,
    i.e. when ``min_y F(y, z) - y <= 0``.  ``alpha`` is the largest
    feasible ``z``; the search for ``log z`` is capped by the tail rate of
    the un-truncated family when one is known.
    """
    if not _check_c(space, c):
        return TangencySolution(1.0, 1.0, 0.0, 0.0, 0, Regime.AT_OR_ABOVE_CRITICAL)
    m1 = moments(space).m1
    limit = _rate_limit(space)

    def excess(s):
        return _inner_min(space, c, s, m1, limit)[0]

    # excess(s) is nondecreasing in s; excess(0) <= 0
    lo, s = 0.0, min(0.1, 0.5 * limit)
    while excess(s) <= 0:
        lo = s
        if 2 * s < limit:
            s = 2 * s
        elif limit - lo > 1e-12 * limit:
            s = lo + 0.5 * (limit - lo)
        else:
            raise BracketNotFound("alpha search reached the summability limit", s=s, limit=limit)
    hi = s
    total = 0
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        total += 1
        if excess(mid) > 0:
            hi = mid
        else:
            lo = mid
    s0 = lo
    val_min, y0, inner_it = _inner_min(space, c, s0, m1, limit)
    z0 = math.exp(s0)
    val, slope = F_eval(space, c, y0, z0)
    return TangencySolution(
        y0=y0,
        z0=z0,
        residual_fixed=abs(val - y0),
        residual_slope=abs(slope - 1.0),
        iterations=total + inner_it,
        regime=Regime.SUBCRITICAL,
    )


def alpha_of_c(space: TypeSpace, c: float) -> float:
    return tangency_alpha(space, c).z0


# ---------------------------------------------------------------------------
# Generating-function iterations (independent oracle)


def _iterate(space, c, z, max_iter, cap, activity_weighted) -> GFIterationTrace:
    if z < 1:
        raise OutOfRange(f"z must be >= 1, got {z}")
    m = moments(space)
    w, psi = space.weights, space.psi
    if activity_weighted:
        coef = w * psi * np.power(z, psi)
    else:
        coef = z * w * psi
    if cap is None:
        cap = ITER_CAP_FACTOR * m.m1
    h = 0.0
    monotone = True
    for it in range(1, max_iter + 1):
        expo = c * psi * (h - m.m1)
        if float(expo.max()) > EXP_GUARD:
            return GFIterationTrace(z, Verdict.DIVERGED, None, it, monotone)
        hn = math.fsum(coef * np.exp(expo))
        if not math.isfinite(hn) or hn > cap:
            return GFIterationTrace(z, Verdict.DIVERGED, None, it, monotone)
        if abs(hn - h) < ITER_RTOL * hn:
            return GFIterationTrace(z, Verdict.CONVERGED, hn, it, monotone)
        if hn < h:
            monotone = False
        h = hn
    return GFIterationTrace(z, Verdict.INCONCLUSIVE, None, max_iter, monotone)


def iterate_H(space: TypeSpace, c: float, z: float, max_iter: int = ITER_MAX, cap=None) -> GFIterationTrace:
    """Monotone iteration ``H <- z E[psi exp(c psi (H - m1))]`` from ``H = 0``."""
    return _iterate(space, c, z, max_iter, cap, activity_weighted=False)


def iterate_G(space: TypeSpace, c: float, z: float, max_iter: int = ITER_MAX, cap=None) -> GFIterationTrace:
    """Monotone iteration ``G <- E[z^psi psi exp(c psi (G - m1))]`` from ``G = 0``."""
    return _iterate(space, c, z, max_iter, cap, activity_weighted=True)


def radius_scan(space: TypeSpace, c: float, mode: str = "progeny", rel_tol: float = 1e-3) -> tuple[float, float]:
    """Bracket the radius of convergence by bisection on iteration verdicts.

    ``mode="progeny"`` brackets r(c) via :func:`iterate_H`;
    ``mode="activity"`` brackets alpha(c) via :func:`iterate_G`.
    Returns ``(z_lo, z_hi)`` with ``z_lo`` converged and ``z_hi`` diverged.
    """
    if mode not in ("progeny", "activity"):
        raise OutOfRange(f"mode must be 'progeny' or 'activity', got {mode!r}")
    if not (1e-6 < rel_tol < 0.1):
        raise OutOfRange(f"rel_tol must lie in (1e-6, 0.1), got {rel_tol}")
    if not _check_c(space, c):
        raise NotSubcritical(f"c={c} is not below c_cr={c_critical(space)}")
    step = iterate_H if mode == "progeny" else iterate_G

    def verdict(z):
        tr = step(space, c, z)
        if tr.verdict is Verdict.INCONCLUSIVE:
            raise BracketNotFound("iteration inconclusive", z=z, iterations=tr.iterations)
        return tr.verdict is Verdict.CONVERGED

    lo, d = 1.0, 0.1
    while verdict(1.0 + d):
        lo = 1.0 + d
        d *= 2.0
        if d > 1e6:
            raise BracketNotFound("no divergence found", z=1.0 + d)
    hi = 1.0 + d
    while hi / lo - 1.0 > rel_tol:
        mid = math.sqrt(lo * hi)
        if verdict(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


# ---------------------------------------------------------------------------
# Homogeneous closed form


def er_log_r(c: float) -> float:
    """``log r(c) = c - 1 + |log c|`` for G(n, c/n), ``0 < c < 1``."""
    if not 0 < c < 1:
        raise OutOfRange(f"closed form needs 0 < c < 1, got {c}")
    return c - 1.0 + abs(math.log(c))
