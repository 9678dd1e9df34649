"""Exact Legendre transforms of piecewise-linear convex scalar functions.

A function is stored by its finiteness domain, interior breakpoints, segment
slopes, and one anchor value. Conjugation in this form is an exact finite
computation: breakpoints and slopes exchange roles, and values come from a
finite sup over the breakpoint/endpoint candidates. Infinity never enters any
arithmetic; an unbounded domain side is recorded as ``math.inf`` in the domain
fields only, and evaluation outside the domain returns ``math.inf`` as a
sentinel.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

from .errors import InvariantError

_MERGE_TOL = 1e-12


@dataclass(frozen=True)
class PLConvexFn:
    """A proper convex piecewise-linear function on a closed interval.

    ``slopes[i]`` applies between ``breakpoints[i-1]`` and ``breakpoints[i]``
    (with the domain endpoints closing the two outer segments); a single-point
    domain has no slopes at all. Slopes are strictly increasing after the
    canonical merge of ties, and breakpoints lie strictly inside the domain.
    """

    lo: float
    hi: float
    breakpoints: tuple[float, ...]
    slopes: tuple[float, ...]
    anchor_x: float
    anchor_y: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            raise InvariantError(f"invalid domain [{lo}, {hi}]")
        breaks = [float(b) for b in self.breakpoints]
        slopes = [float(s) for s in self.slopes]
        if lo == hi:
            if breaks or slopes:
                raise InvariantError("a point-domain function has no breakpoints or slopes")
        else:
            if len(slopes) != len(breaks) + 1:
                raise InvariantError(
                    f"{len(breaks)} breakpoints need {len(breaks) + 1} slopes, got {len(slopes)}"
                )
            for b in breaks:
                if not (lo < b < hi):
                    raise InvariantError(f"breakpoint {b} outside the open domain ({lo}, {hi})")
            if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
                raise InvariantError("breakpoints must be strictly increasing")
            for s in slopes:
                if not math.isfinite(s):
                    raise InvariantError("slopes must be finite")
            # canonical form: merge repeated slopes, dropping the breakpoint between
            merged_b: list[float] = []
            merged_s: list[float] = [slopes[0]]
            for b, s in zip(breaks, slopes[1:]):
                if s < merged_s[-1] - _MERGE_TOL:
                    raise InvariantError("slopes must be nondecreasing (convexity)")
                if s <= merged_s[-1]:
                    continue
                merged_b.append(b)
                merged_s.append(s)
            breaks, slopes = merged_b, merged_s
        ax, ay = float(self.anchor_x), float(self.anchor_y)
        if not (math.isfinite(ax) and math.isfinite(ay)):
            raise InvariantError("anchor must be finite")
        if not (lo <= ax <= hi):
            raise InvariantError(f"anchor {ax} outside the domain [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "breakpoints", tuple(breaks))
        object.__setattr__(self, "slopes", tuple(slopes))
        object.__setattr__(self, "anchor_x", ax)
        object.__setattr__(self, "anchor_y", ay)

    # -- basic queries -----------------------------------------------------

    def is_point(self) -> bool:
        return self.lo == self.hi

    def _slope_integral(self, a: float, b: float) -> float:
        """Integral of the slope step function from a to b, a <= b in domain."""
        pts = self.breakpoints
        total = 0.0
        left = a
        for i, bp in enumerate(pts):
            if bp <= a:
                continue
            if bp >= b:
                break
            total += self.slopes[i] * (bp - left)
            left = bp
        if b > left:
            total += self.slopes[bisect_left(pts, b)] * (b - left)
        return total

    def evaluate(self, x: float) -> float:
        """Value at x; math.inf outside the domain."""
        x = float(x)
        if self.is_point():
            return self.anchor_y if x == self.lo else math.inf
        if x < self.lo or x > self.hi:
            return math.inf
        if x >= self.anchor_x:
            return self.anchor_y + self._slope_integral(self.anchor_x, x)
        return self.anchor_y - self._slope_integral(x, self.anchor_x)

    __call__ = evaluate

    def one_sided_derivs(self, x: float, snap: float = 1e-12) -> tuple[float, float]:
        """Left and right derivatives at x; +/-inf outward at domain endpoints."""
        x = float(x)
        if x < self.lo - snap or x > self.hi + snap:
            raise InvariantError(f"{x} is outside the domain closure [{self.lo}, {self.hi}]")
        if self.is_point():
            return (-math.inf, math.inf)
        left: float
        right: float
        if x <= self.lo + snap and math.isfinite(self.lo):
            return (-math.inf, self.slopes[0])
        if x >= self.hi - snap and math.isfinite(self.hi):
            return (self.slopes[-1], math.inf)
        # snap to a breakpoint if within tolerance
        pts = self.breakpoints
        j = bisect_left(pts, x)
        for cand in (j - 1, j):
            if 0 <= cand < len(pts) and abs(pts[cand] - x) <= snap:
                return (self.slopes[cand], self.slopes[cand + 1])
        return (self.slopes[j], self.slopes[j])

    def shift(self, c: float) -> "PLConvexFn":
        """The function plus a constant."""
        return PLConvexFn(
            self.lo, self.hi, self.breakpoints, self.slopes, self.anchor_x, self.anchor_y + c
        )

    # -- constructors --------------------------------------------------------

    @classmethod
    def absolute_value(cls) -> "PLConvexFn":
        return cls(-math.inf, math.inf, (0.0,), (-1.0, 1.0), 0.0, 0.0)

    @classmethod
    def point(cls, x: float, value: float) -> "PLConvexFn":
        return cls(x, x, (), (), x, value)

    @classmethod
    def linear(cls, slope: float, x0: float = 0.0, y0: float = 0.0) -> "PLConvexFn":
        return cls(-math.inf, math.inf, (), (slope,), x0, y0)


def conjugate(phi: PLConvexFn) -> PLConvexFn:
    """The Legendre transform t -> sup_x (t*x - phi(x)), exact.

    Breakpoints and slopes exchange: the conjugate's breakpoints are phi's
    slopes and its slopes are the maximizer positions (domain endpoint or
    breakpoint). A finite domain endpoint becomes an outer conjugate slope;
    an infinite one bounds the conjugate's domain at the adjacent slope.
    """
    if phi.is_point():
        # sup over a single point: the affine function t*x0 - phi(x0)
        return PLConvexFn(
            -math.inf, math.inf, (), (phi.lo,), 0.0, -phi.anchor_y
        )
    slopes, breaks = phi.slopes, phi.breakpoints
    lo_fin, hi_fin = math.isfinite(phi.lo), math.isfinite(phi.hi)
    if not lo_fin and not hi_fin and len(slopes) == 1:
        # affine on the whole line: conjugate finite only at the slope
        s0 = slopes[0]
        return PLConvexFn.point(s0, s0 * phi.anchor_x - phi.anchor_y)
    new_lo = -math.inf if lo_fin else slopes[0]
    new_hi = math.inf if hi_fin else slopes[-1]
    new_breaks = list(slopes)
    new_slopes = list(breaks)
    if lo_fin:
        new_slopes.insert(0, phi.lo)
    else:
        new_breaks.pop(0)
    if hi_fin:
        new_slopes.append(phi.hi)
    else:
        new_breaks.pop()
    candidates = ([phi.lo] if lo_fin else []) + list(breaks) + ([phi.hi] if hi_fin else [])
    if new_breaks:
        t0 = new_breaks[0]
    else:
        t0 = new_lo if math.isfinite(new_lo) else new_hi
    v0 = max(t0 * x - phi.evaluate(x) for x in candidates)
    return PLConvexFn(new_lo, new_hi, tuple(new_breaks), tuple(new_slopes), t0, v0)


def biconjugate(phi: PLConvexFn) -> PLConvexFn:
    """Conjugate twice; equals phi for convex functions continuous on their
    closed domain (everything this type can represent)."""
    return conjugate(conjugate(phi))


def attainment_check(
    phi: PLConvexFn, x: float, t: float, tol: float = 1e-9
) -> tuple[bool, bool, bool]:
    """Evaluate the three equivalent attainment conditions independently.

    Returns (value equality phi(x) + phi*(t) == t*x, derivative bracket of
    phi* at t containing x, derivative bracket of phi at x containing t).
    The contract is that all three always agree.
    """
    x, t = float(x), float(t)
    star = conjugate(phi)
    fx = phi.evaluate(x)
    ft = star.evaluate(t)
    if not (math.isfinite(fx) and math.isfinite(ft)):
        raise InvariantError("attainment_check needs x in dom(phi) and t in dom(phi*)")
    eq = abs(fx + ft - t * x) <= tol
    d_minus_star, d_plus_star = star.one_sided_derivs(t)
    bracket_star = (d_minus_star <= x + tol) and (x <= d_plus_star + tol)
    d_minus, d_plus = phi.one_sided_derivs(x)
    bracket = (d_minus <= t + tol) and (t <= d_plus + tol)
    return eq, bracket_star, bracket


def fn_to_dict(phi: PLConvexFn) -> dict:
    """JSON-friendly form; unbounded domain sides become null."""
    return {
        "domain": [None if not math.isfinite(phi.lo) else phi.lo,
                   None if not math.isfinite(phi.hi) else phi.hi],
        "breakpoints": list(phi.breakpoints),
        "slopes": list(phi.slopes),
        "anchor": [phi.anchor_x, phi.anchor_y],
    }


def fn_from_dict(doc: dict) -> PLConvexFn:
    try:
        lo, hi = doc["domain"]
        breaks = doc["breakpoints"]
        slopes = doc["slopes"]
        ax, ay = doc["anchor"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvariantError(f"malformed piecewise-linear function document: {exc}") from exc
    return PLConvexFn(
        -math.inf if lo is None else float(lo),
        math.inf if hi is None else float(hi),
        tuple(float(b) for b in breaks),
        tuple(float(s) for s in slopes),
        float(ax),
        float(ay),
    )
