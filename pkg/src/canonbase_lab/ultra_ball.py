"""Exact p-adic absolute value on the rationals, the bounded projective-line
distance built from it, and the ultrametric sort of closed balls.

All arithmetic in this module is exact rational; no floating point enters.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InvariantError


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class PAdicContext:
    prime: int

    def __post_init__(self):
        if not _is_prime(int(self.prime)):
            raise InvariantError(f"{self.prime} is not prime")
        object.__setattr__(self, "prime", int(self.prime))


def _vp(n: int, p: int) -> int:
    if n == 0:
        raise InvariantError("valuation of zero is undefined")
    v = 0
    n = abs(n)
    while n % p == 0:
        n //= p
        v += 1
    return v


def padic_abs(x, ctx: PAdicContext) -> Fraction:
    """|x|_p = p^(-v) with v the net exponent of p in x; |0| = 0."""
    x = Fraction(x)
    if x == 0:
        return Fraction(0)
    p = ctx.prime
    v = _vp(x.numerator, p) - _vp(x.denominator, p)
    return Fraction(1, p**v) if v >= 0 else Fraction(p**(-v))


@dataclass(frozen=True)
class ProjPoint:
    """A point of the projective line: an exact rational, or infinity."""

    value: Fraction | None

    def __post_init__(self):
        if self.value is not None:
            object.__setattr__(self, "value", Fraction(self.value))

    @property
    def is_infinity(self) -> bool:
        return self.value is None

    @classmethod
    def infinity(cls) -> "ProjPoint":
        return cls(None)

    @classmethod
    def of(cls, value) -> "ProjPoint":
        return cls(Fraction(value))

    def __str__(self) -> str:
        return "inf" if self.value is None else str(self.value)


INFINITY = ProjPoint.infinity()


def proj_distance(x: ProjPoint, y: ProjPoint, ctx: PAdicContext) -> Fraction:
    """The bounded distance on the projective line:
    |x - y| / (max(|x|,1) * max(|y|,1)), with d(x, inf) = 1 / max(|x|,1)."""
    if x.is_infinity and y.is_infinity:
        return Fraction(0)
    if x.is_infinity:
        return Fraction(1) / max(padic_abs(y.value, ctx), Fraction(1))
    if y.is_infinity:
        return Fraction(1) / max(padic_abs(x.value, ctx), Fraction(1))
    num = padic_abs(x.value - y.value, ctx)
    den = max(padic_abs(x.value, ctx), Fraction(1)) * max(padic_abs(y.value, ctx), Fraction(1))
    return num / den


def _dotminus(a: Fraction, b: Fraction) -> Fraction:
    return a - b if a > b else Fraction(0)


@dataclass(frozen=True)
class Ball:
    """A closed ball of the sort: a center point and a radius in [0, 1]."""

    center: ProjPoint
    radius: Fraction

    def __post_init__(self):
        r = Fraction(self.radius)
        if not (0 <= r <= 1):
            raise InvariantError(f"ball radius must lie in [0, 1], got {r}")
        object.__setattr__(self, "radius", r)


def ball_distance(a: Ball, b: Ball, ctx: PAdicContext) -> Fraction:
    """d(a_r, b_s) = |r - s| v (d(a, b) - (r ^ s))+, a pseudometric that
    vanishes exactly when the closed balls coincide."""
    rs = abs(a.radius - b.radius)
    centers = proj_distance(a.center, b.center, ctx)
    return max(rs, _dotminus(centers, min(a.radius, b.radius)))


def phi_ball(x: ProjPoint, a: Ball, ctx: PAdicContext) -> Fraction:
    """Distance from a point to the closed ball: (d(x, center) - radius)+."""
    return _dotminus(proj_distance(x, a.center, ctx), a.radius)


def ball_equal(a: Ball, b: Ball, ctx: PAdicContext) -> bool:
    """Zero distance; equivalently equal radii with d(centers) <= radius."""
    return ball_distance(a, b, ctx) == 0


def sup_formula_check(
    a: Ball, b: Ball, witnesses: list[ProjPoint], ctx: PAdicContext
) -> tuple[Fraction, Fraction]:
    """The supremum over the witnesses of |phi(x, a) - phi(x, b)| together
    with the ball distance. Each witness gives a lower bound; including both
    centers plus a point far from both attains the distance exactly."""
    if not witnesses:
        raise InvariantError("the witness list must be nonempty")
    sup = max(abs(phi_ball(x, a, ctx) - phi_ball(x, b, ctx)) for x in witnesses)
    return sup, ball_distance(a, b, ctx)


def far_witness(a: Ball, b: Ball, ctx: PAdicContext) -> ProjPoint:
    """A point at projective distance one from both centers: infinity when
    both centers are integral-size, zero when both are large; a mixed pair is
    already at distance one, where the centers themselves suffice."""
    zero = ProjPoint.of(0)

    def small(pt: ProjPoint) -> bool:
        return pt.is_infinity or padic_abs(pt.value, ctx) <= 1

    if small(a.center) and small(b.center):
        return INFINITY if not (a.center.is_infinity or b.center.is_infinity) else zero
    return zero
