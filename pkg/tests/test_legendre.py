import math
import random

import pytest

from canonbase_lab.errors import InvariantError
from canonbase_lab.legendre import (
    PLConvexFn,
    attainment_check,
    biconjugate,
    conjugate,
    fn_from_dict,
    fn_to_dict,
)

from reference import ref_conjugate_value

INF = math.inf

ABS = PLConvexFn.absolute_value()
# the shortfall instance 0.5*(3x+2)^+ + 0.5*(3x-4)^+
SHORTFALL = PLConvexFn(-INF, INF, (-2 / 3, 4 / 3), (0.0, 1.5, 3.0), -2 / 3, 0.0)


def dyadic_plfn(rng: random.Random) -> PLConvexFn:
    k = rng.randint(0, 4)
    breaks = sorted(rng.sample([i / 4 for i in range(-16, 17)], k))
    slopes = sorted(rng.sample([i / 4 for i in range(-20, 21)], k + 1))
    lo_choice, hi_choice = rng.random() < 0.5, rng.random() < 0.5
    lo = (breaks[0] if breaks else 0.0) - rng.randint(1, 8) / 4 if lo_choice else -INF
    hi = (breaks[-1] if breaks else 0.0) + rng.randint(1, 8) / 4 if hi_choice else INF
    anchor_x = breaks[0] if breaks else (lo if lo_choice else (hi if hi_choice else 0.0))
    anchor_y = rng.randint(-16, 16) / 4
    return PLConvexFn(lo, hi, tuple(breaks), tuple(slopes), anchor_x, anchor_y)


def domain_samples(phi: PLConvexFn, rng: random.Random) -> list[float]:
    pts = list(phi.breakpoints)
    lo = phi.lo if math.isfinite(phi.lo) else (pts[0] if pts else 0.0) - 2.0
    hi = phi.hi if math.isfinite(phi.hi) else (pts[-1] if pts else 0.0) + 2.0
    pts += [lo, hi]
    for _ in range(3):
        pts.append(lo + (hi - lo) * rng.randint(0, 16) / 16)
    return sorted(set(pts))


# -- construction ------------------------------------------------------------

def test_merges_tied_slopes():
    phi = PLConvexFn(-INF, INF, (0.0, 1.0), (1.0, 1.0, 2.0), 0.0, 0.0)
    assert phi.breakpoints == (1.0,)
    assert phi.slopes == (1.0, 2.0)


def test_rejects_decreasing_slopes():
    with pytest.raises(InvariantError):
        PLConvexFn(-INF, INF, (0.0,), (1.0, 0.5), 0.0, 0.0)


def test_rejects_unordered_breakpoints():
    with pytest.raises(InvariantError):
        PLConvexFn(-INF, INF, (1.0, 0.0), (0.0, 1.0, 2.0), 0.0, 0.0)


def test_rejects_breakpoint_outside_domain():
    with pytest.raises(InvariantError):
        PLConvexFn(0.0, 1.0, (2.0,), (0.0, 1.0), 0.5, 0.0)


def test_dict_roundtrip():
    doc = fn_to_dict(SHORTFALL)
    back = fn_from_dict(doc)
    assert back.breakpoints == SHORTFALL.breakpoints
    assert back.slopes == SHORTFALL.slopes
    assert back.lo == SHORTFALL.lo and back.hi == SHORTFALL.hi


# -- evaluation and derivatives ------------------------------------------------

def test_abs_evaluation():
    assert ABS.evaluate(0.0) == 0.0
    assert ABS.evaluate(-3.0) == 3.0
    assert ABS.evaluate(2.5) == 2.5


def test_one_sided_derivs_abs():
    assert ABS.one_sided_derivs(0.0) == (-1.0, 1.0)
    assert ABS.one_sided_derivs(2.0) == (1.0, 1.0)


def test_one_sided_derivs_shortfall_breakpoint():
    assert SHORTFALL.one_sided_derivs(-2 / 3) == (0.0, 1.5)


def test_one_sided_derivs_domain_endpoints():
    phi = PLConvexFn(0.0, 1.0, (), (2.0,), 0.0, 0.0)
    assert phi.one_sided_derivs(0.0) == (-INF, 2.0)
    assert phi.one_sided_derivs(1.0) == (2.0, INF)
    with pytest.raises(InvariantError):
        phi.one_sided_derivs(2.0)


# -- conjugation ----------------------------------------------------------------

def test_conjugate_abs_is_indicator():
    star = conjugate(ABS)
    assert (star.lo, star.hi) == (-1.0, 1.0)
    assert star.evaluate(0.5) == 0.0
    assert star.evaluate(-1.0) == 0.0
    assert star.evaluate(1.5) == INF


def test_conjugate_shortfall_at_mid_slope():
    star = conjugate(SHORTFALL)
    oracle = ref_conjugate_value(SHORTFALL.evaluate, [-2 / 3, 4 / 3], 1.5)
    assert oracle == -1.0
    assert star.evaluate(1.5) == pytest.approx(-1.0, abs=1e-12)


def test_conjugate_linear_is_point():
    phi = PLConvexFn.linear(2.0, 0.0, 1.0)
    star = conjugate(phi)
    assert star.is_point() and star.lo == 2.0
    assert star.evaluate(2.0) == -1.0
    assert star.evaluate(2.1) == INF


def test_biconjugate_abs():
    back = biconjugate(ABS)
    assert back.breakpoints == ABS.breakpoints
    assert back.slopes == ABS.slopes
    for x in (-2.0, -0.5, 0.0, 1.0, 3.0):
        assert back.evaluate(x) == ABS.evaluate(x)


def test_biconjugate_shortfall_exact_at_breakpoints():
    back = biconjugate(SHORTFALL)
    assert back.breakpoints == SHORTFALL.breakpoints
    assert back.slopes == SHORTFALL.slopes
    for b in SHORTFALL.breakpoints:
        assert abs(back.evaluate(b) - SHORTFALL.evaluate(b)) <= 1e-12


def test_biconjugate_linear():
    phi = PLConvexFn.linear(-1.5, 1.0, 0.25)
    back = biconjugate(phi)
    for x in (-2.0, 0.0, 1.0, 4.0):
        assert back.evaluate(x) == pytest.approx(phi.evaluate(x), abs=1e-12)


def test_biconjugate_random_instances():
    rng = random.Random(1)
    for _ in range(300):
        phi = dyadic_plfn(rng)
        back = biconjugate(phi)
        assert back.breakpoints == phi.breakpoints
        assert back.slopes == phi.slopes
        for b in phi.breakpoints:
            assert abs(back.evaluate(b) - phi.evaluate(b)) <= 1e-12


def test_conjugate_monotone_under_constant_shift():
    star = conjugate(SHORTFALL)
    shifted_star = conjugate(SHORTFALL.shift(0.75))
    for t in (0.0, 0.5, 1.5, 3.0):
        assert shifted_star.evaluate(t) == pytest.approx(star.evaluate(t) - 0.75, abs=1e-12)


def test_conjugate_antitone_in_argument():
    # 2|x| >= |x| pointwise, so its conjugate is pointwise smaller
    double = PLConvexFn(-INF, INF, (0.0,), (-2.0, 2.0), 0.0, 0.0)
    star_small = conjugate(ABS)
    star_big = conjugate(double)
    for t in (-1.5, -1.0, 0.0, 0.7, 1.0, 1.5):
        assert star_big.evaluate(t) <= star_small.evaluate(t)


def test_fenchel_young_random():
    rng = random.Random(2)
    for _ in range(200):
        phi = dyadic_plfn(rng)
        star = conjugate(phi)
        xs = domain_samples(phi, rng)
        ts = domain_samples(star, rng)
        for x in xs:
            fx = phi.evaluate(x)
            if not math.isfinite(fx):
                continue
            for t in ts:
                ft = star.evaluate(t)
                if not math.isfinite(ft):
                    continue
                assert fx + ft >= t * x - 1e-9


# -- attainment -------------------------------------------------------------------

def test_attainment_worked_triples():
    assert attainment_check(ABS, 0.0, 0.5) == (True, True, True)
    assert attainment_check(ABS, 2.0, 0.5) == (False, False, False)
    assert attainment_check(ABS, 2.0, 1.0) == (True, True, True)


def test_attainment_requires_domain():
    star_domain_outside = 2.0  # conj of |x| lives on [-1, 1]
    with pytest.raises(InvariantError):
        attainment_check(ABS, 0.0, star_domain_outside)


def test_attainment_conditions_agree_random():
    rng = random.Random(3)
    for _ in range(500):
        phi = dyadic_plfn(rng)
        star = conjugate(phi)
        xs = [x for x in domain_samples(phi, rng) if math.isfinite(phi.evaluate(x))]
        ts = [t for t in domain_samples(star, rng) if math.isfinite(star.evaluate(t))]
        if not xs or not ts:
            continue
        x = rng.choice(xs)
        t = rng.choice(ts)
        eq, bracket_star, bracket = attainment_check(phi, x, t, tol=0.0)
        assert eq == bracket_star == bracket
