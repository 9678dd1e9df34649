import math
import random
from fractions import Fraction

import pytest

from canonbase_lab.errors import InvariantError
from canonbase_lab.legendre import biconjugate
from canonbase_lab.lp_canon import (
    canonical_base_1type,
    canonical_base_ntype,
    cond_exp_dotminus,
    duality_pairing,
    f_zero,
    grid_approx,
    increasing_realisation,
    interval_cond_exp,
    lq_transport,
    p1_counterexample,
    partial_cond_exp,
    psi,
    remark_counterexample,
    slice_norm_bound_check,
    slices,
)
from canonbase_lab.measure_core import (
    ExtensionPair,
    LatticeElement,
    lp_norm,
    signed_power,
)
from canonbase_lab.oracle import type_equal_1
from conftest import random_element, random_pair

from reference import ref_partial_prefix, ref_slice, spow_deviation_bound

UNIT2 = ExtensionPair((1.0,), 2)
F24 = UNIT2.element([[-2.0, 4.0]])


def instances(seed, count, **kw):
    rng = random.Random(seed)
    for _ in range(count):
        pair = random_pair(rng, **kw)
        yield rng, pair, random_element(rng, pair)


# -- f_zero -------------------------------------------------------------------

def test_f_zero_nonnegative_embedded():
    pair = ExtensionPair((1.0, 2.0), 3)
    g = LatticeElement(pair.base_space(), (1.5, 0.25))
    assert f_zero(pair.embed(g), pair, 1).values == (1.5, 0.25)


def test_f_zero_worked():
    assert f_zero(F24, UNIT2, 1).values == (3.0,)


def test_f_zero_orthogonal_only():
    pair = ExtensionPair((1.0,), 2, True)
    f = pair.element([[0.0, 0.0]], plus=[1.0, 1.0], minus=[-0.5, 0.0])
    assert f_zero(f, pair, 1).values == (0.0,)


# -- the shortfall family ----------------------------------------------------------

def test_psi_worked_instance():
    fam = psi(F24, UNIT2, 1)
    fn = fam.fibers[0]
    for x in (-3.0, -2 / 3, 0.0, 1.0, 4 / 3, 2.0):
        expected = 0.5 * max(3 * x + 2, 0.0) + 0.5 * max(3 * x - 4, 0.0)
        assert fn.evaluate(x) == pytest.approx(expected, abs=1e-12)


def test_psi_constant_fiber():
    pair = ExtensionPair((1.0,), 4)
    f = pair.element([[2.5] * 4])
    fn = psi(f, pair, 1).fibers[0]
    for x in (-1.0, 0.5, 1.0, 1.5, 3.0):
        assert fn.evaluate(x) == pytest.approx(2.5 * max(x - 1.0, 0.0), abs=1e-12)


def test_psi_zero_element():
    pair = ExtensionPair((1.0, 1.0), 4)
    fam = psi(LatticeElement.zero(pair.total_space()), pair, 1)
    assert all(fn.evaluate(x) == 0.0 for fn in fam.fibers for x in (-2.0, 0.0, 2.0))


def test_psi_envelope_property(rng):
    for _, pair, f in instances(10, 30):
        fam = psi(f, pair, 1)
        xs = [-4.0, -1.0, 0.0, 0.5, 2.0, 5.0]
        for x, y in zip(xs, xs[1:]):
            vx, vy = fam.value_at(x), fam.value_at(y)
            for a, b, f0 in zip(vx.values, vy.values, fam.f0.values):
                assert a <= b + 1e-12
                assert b <= a + (y - x) * f0 + 1e-9


def test_psi_biconjugate_exact(rng):
    for _, pair, f in instances(11, 30):
        for fn in psi(f, pair, 1).fibers:
            back = biconjugate(fn)
            assert back.breakpoints == fn.breakpoints
            assert back.slopes == fn.slopes
            for b in fn.breakpoints:
                assert abs(back.evaluate(b) - fn.evaluate(b)) <= 1e-12


def test_psi_cdf_identity(rng):
    for _, pair, f in instances(12, 30):
        fam = psi(f, pair, 1)
        rows = pair.rows(f)
        for fn, f0, row in zip(fam.fibers, fam.f0.values, rows):
            if f0 == 0.0:
                continue
            probe = list(fn.breakpoints) + [-5.0, 0.3, 7.0]
            for x in probe:
                _, d_plus = fn.one_sided_derivs(x)
                frac = sum(1 for v in row if v <= x * f0 + 1e-12) / pair.n
                assert d_plus == pytest.approx(f0 * frac, abs=1e-9)


# -- partial conditional expectations ------------------------------------------------

def test_partial_endpoints():
    assert partial_cond_exp(F24, UNIT2, 1, 0.0).values == (0.0,)
    assert partial_cond_exp(F24, UNIT2, 1, 1.0).values == (1.0,)


def test_partial_linear_on_embedded_nonnegative():
    pair = ExtensionPair((1.0, 1.0), 4)
    g = LatticeElement(pair.base_space(), (2.0, 0.5))
    f = pair.embed(g)
    for t in (0.25, 0.5, 0.9):
        expected = tuple(t * v for v in g.values)
        assert partial_cond_exp(f, pair, 1, t).approx_equal(
            LatticeElement(pair.base_space(), expected), tol=1e-12
        )


def test_partial_worked_half():
    assert partial_cond_exp(F24, UNIT2, 1, 0.5).values == (-1.0,)


def test_partial_rejects_outside_unit_interval():
    with pytest.raises(InvariantError):
        partial_cond_exp(F24, UNIT2, 1, 1.5)


def test_partial_matches_prefix_oracle(rng):
    for r, pair, f in instances(13, 40):
        t = r.randint(1, 15) / 16 if r.random() < 0.5 else r.random()
        got = partial_cond_exp(f, pair, 1, t)
        rows = pair.rows(f)
        for value, row in zip(got.values, rows):
            assert value == pytest.approx(ref_partial_prefix(row, t), abs=1e-9)


def test_partial_prefix_identity_exact(rng):
    for _, pair, f in instances(14, 20):
        n = pair.n
        rows = [sorted(row) for row in pair.rows(f)]
        for k in (1, n // 2, n):
            got = partial_cond_exp(f, pair, 1, k / n)
            for value, row in zip(got.values, rows):
                assert value == pytest.approx(sum(row[:k]) / n, abs=1e-12)


def test_partial_convex_in_t(rng):
    ts = [k / 8 for k in range(9)]
    for _, pair, f in instances(15, 20):
        curves = [partial_cond_exp(f, pair, 1, t).values for t in ts]
        e1 = curves[-1]
        for i in range(pair.m):
            seq = [c[i] for c in curves]
            for a, b, c in zip(seq, seq[1:], seq[2:]):
                assert c - 2 * b + a >= -1e-9  # convexity
            for t, v in zip(ts, seq):
                assert v <= t * e1[i] + 1e-9


def test_remark_phi_attainment(rng):
    # the slice at t attains the conjugate: t*g - E[(g - f)^+ | base] = E_t for g = f_t
    for r, pair, f in instances(16, 30):
        t = r.choice([0.2, 0.5, 0.8, r.random() or 0.3])
        g = slices(f, pair, 1).slice_at(t)
        lhs = t * g - cond_exp_dotminus(g, f, pair)
        rhs = partial_cond_exp(f, pair, 1, t)
        assert lhs.approx_equal(rhs, tol=1e-9)


# -- intervals ---------------------------------------------------------------------

def test_interval_full_range_is_cond_exp():
    assert interval_cond_exp(F24, UNIT2, 1, 0.0, 1.0).values == (1.0,)


def test_interval_worked():
    assert interval_cond_exp(F24, UNIT2, 1, 0.5, 1.0).values == (2.0,)


def test_interval_embedded_scaling():
    pair = ExtensionPair((1.0,), 4)
    f = pair.embed(LatticeElement(pair.base_space(), (2.0,)))
    out = interval_cond_exp(f, pair, 1, 0.25, 0.75)
    assert out.values == pytest.approx((1.0,), abs=1e-12)


def test_interval_rejects_bad_order():
    with pytest.raises(InvariantError):
        interval_cond_exp(F24, UNIT2, 1, 0.5, 0.5)


def test_interval_additivity(rng):
    for _, pair, f in instances(17, 20):
        a = interval_cond_exp(f, pair, 1, 0.1, 0.4)
        b = interval_cond_exp(f, pair, 1, 0.4, 0.9)
        c = interval_cond_exp(f, pair, 1, 0.1, 0.9)
        assert (a + b).approx_equal(c, tol=1e-9)


# -- slices and the increasing realisation -----------------------------------------

def test_slices_order_statistics():
    fam = slices(F24, UNIT2, 1)
    assert fam.slice_at(0.25).values == (-2.0,)
    assert fam.slice_at(0.75).values == (4.0,)


def test_slices_embedded_fixed():
    pair = ExtensionPair((1.0, 1.0), 4)
    g = LatticeElement(pair.base_space(), (1.0, -2.0))
    fam = slices(pair.embed(g), pair, 1)
    for t in (0.1, 0.5, 0.999, 1.0):
        assert fam.slice_at(t).values == g.values


def test_slices_nondecreasing(rng):
    for _, pair, f in instances(18, 20):
        fam = slices(f, pair, 1)
        prev = fam.slice_at(1 / 64)
        for t in (0.25, 0.5, 0.75, 1.0):
            cur = fam.slice_at(t)
            assert all(a <= b + 1e-12 for a, b in zip(prev.values, cur.values))
            prev = cur


def test_slices_match_reference(rng):
    for r, pair, f in instances(19, 30):
        fam = slices(f, pair, 1)
        rows = pair.rows(f)
        t = r.random() or 0.5
        got = fam.slice_at(t)
        for value, row in zip(got.values, rows):
            assert value == pytest.approx(ref_slice(row, t), abs=1e-12)


def test_increasing_realisation_sorts_rows():
    pair = ExtensionPair((1.0,), 2, True)
    f = pair.element([[4.0, -2.0]])
    fhat = increasing_realisation(f, pair, 1)
    assert pair.rows(fhat) == [[-2.0, 4.0]]
    assert pair.plus_values(fhat) == [0.0, 0.0]


def test_increasing_realisation_fixed_point():
    pair = ExtensionPair((1.0,), 2, True)
    f = pair.element([[-2.0, 4.0]], plus=[1.5, 1.5], minus=[-0.5, -0.5])
    fhat = increasing_realisation(f, pair, 1)
    assert fhat.values == f.values


def test_increasing_realisation_preserves_type(rng):
    for _, pair, f in instances(20, 60, orth=True):
        fhat = increasing_realisation(f, pair, 1)
        assert type_equal_1(f, fhat, pair, 1)
        # the plus fiber carries all positive orthogonal mass
        assert all(v >= 0 for v in pair.plus_values(fhat))
        assert all(v <= 0 for v in pair.minus_values(fhat))


# -- slice norm bound ---------------------------------------------------------------

def test_slice_norm_bound_worked():
    lhs, rhs = slice_norm_bound_check(F24, UNIT2, 1, 0.5)
    assert lhs == pytest.approx(2.0, abs=1e-12)
    assert rhs == pytest.approx(12.0, abs=1e-12)


def test_slice_norm_bound_embedded():
    pair = ExtensionPair((1.0,), 4)
    f = pair.embed(LatticeElement(pair.base_space(), (3.0,)))
    lhs, rhs = slice_norm_bound_check(f, pair, 1, 0.5)
    assert lhs == pytest.approx(3.0, abs=1e-12)
    assert rhs == pytest.approx(12.0, abs=1e-12)


def test_slice_norm_bound_random():
    rng = random.Random(21)
    for _ in range(200):
        pair = random_pair(rng)
        f = random_element(rng, pair)
        p = rng.choice([1.0, 1.5, 2.0, 3.0])
        t = rng.choice([0.1, 0.3, 0.5, 0.7, 0.9])
        lhs, rhs = slice_norm_bound_check(f, pair, p, t)
        assert lhs <= rhs + 1e-9


# -- grid approximation -------------------------------------------------------------

def test_grid_approx_worked():
    g, h = grid_approx(F24, UNIT2, 1, 0.5, 4.0, 8)
    assert h.values == pytest.approx((-1.0,), abs=1e-12)


def test_grid_approx_sandwich_and_agreement(rng):
    for r, pair, f in instances(22, 40):
        t = r.choice([0.25, 0.5, 0.75])
        bound = r.choice([1.0, 2.0, 4.0, 8.0])
        grid_n = r.choice([4, 8, 16])
        g, h = grid_approx(f, pair, 1, t, bound, grid_n)
        f0 = f_zero(f, pair, 1)
        et = partial_cond_exp(f, pair, 1, t)
        ft = slices(f, pair, 1).slice_at(t)
        e1 = partial_cond_exp(f, pair, 1, 1.0)
        for i in range(pair.m):
            gap = h.values[i] - g.values[i]
            assert -1e-9 <= gap <= 2 * bound * f0.values[i] / grid_n + 1e-9
            if abs(ft.values[i]) <= bound:
                assert h.values[i] == pytest.approx(et.values[i], abs=1e-9)
            # envelope chain
            assert -f0.values[i] - 1e-9 <= h.values[i] <= et.values[i] + 1e-9
            assert et.values[i] <= t * e1.values[i] + 1e-9
            assert t * e1.values[i] <= f0.values[i] + 1e-9


def test_grid_approx_rejects_bad_params():
    with pytest.raises(InvariantError):
        grid_approx(F24, UNIT2, 1, 0.0, 1.0, 4)
    with pytest.raises(InvariantError):
        grid_approx(F24, UNIT2, 1, 0.5, -1.0, 4)


# -- transport -----------------------------------------------------------------------

def test_transport_identity_when_equal_exponents():
    assert lq_transport(F24, 2, 2) is F24


def test_transport_worked():
    out = lq_transport(F24, 1, 2)
    assert out.values == pytest.approx((-math.sqrt(2), 2.0), abs=1e-12)
    assert lp_norm(out, 2) == pytest.approx(math.sqrt(3), abs=1e-12)
    assert lp_norm(out, 2) == pytest.approx(lp_norm(F24, 1) ** 0.5, abs=1e-12)


def test_transport_isometry_random(rng):
    for r, pair, f in instances(23, 40):
        p = r.choice([1.0, 1.5, 2.0, 3.0])
        q = r.choice([1.0, 1.5, 2.0, 3.0])
        out = lq_transport(f, p, q)
        assert lp_norm(out, q) == pytest.approx(lp_norm(f, p) ** (p / q), abs=1e-9)


def test_duality_pairing_trivial():
    pair = ExtensionPair((1.0,), 1)
    one = pair.element([[1.0]])
    zero = pair.element([[0.0]])
    assert duality_pairing(one, one, 2, 2) == pytest.approx(1.0, abs=1e-12)
    assert duality_pairing(one, zero, 2, 2) == 0.0


def test_duality_pairing_two_routes(rng):
    for r, pair, f in instances(24, 30):
        g = random_element(r, pair)
        p = r.choice([1.0, 2.0, 3.0])
        q = r.choice([1.5, 2.0, 3.0])
        qc = q / (q - 1.0)
        lhs = duality_pairing(f, g, p, q)
        theta_f = lq_transport(f, p, q)
        theta_g = lq_transport(g, p, qc)
        direct = sum(
            w * a * b
            for w, a, b in zip(f.space.weights, theta_f.values, theta_g.values)
        )
        assert lhs == pytest.approx(direct, abs=1e-9 * (1 + abs(direct)))


def test_duality_pairing_rejects_q_one():
    with pytest.raises(InvariantError):
        duality_pairing(F24, F24, 1, 1)


# -- pairing characterisation of the conditional expectation -------------------------

def test_pairing_check_zero_h():
    from canonbase_lab.lp_canon import cond_exp_pairing_check

    h = LatticeElement.zero(UNIT2.base_space())
    assert cond_exp_pairing_check(F24, UNIT2, 2, h) == (0.0, 0.0)


def test_pairing_check_embedded():
    from canonbase_lab.lp_canon import cond_exp_pairing_check

    pair = ExtensionPair((1.0, 0.5), 4)
    g = LatticeElement(pair.base_space(), (1.5, -1.0))
    h = LatticeElement(pair.base_space(), (0.5, 2.0))
    lhs, rhs = cond_exp_pairing_check(pair.embed(g), pair, 2, h)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_pairing_check_random(rng):
    from canonbase_lab.lp_canon import cond_exp_pairing_check

    for r, pair, f in instances(25, 40):
        h = LatticeElement(
            pair.base_space(), tuple(r.randint(-32, 32) / 8 for _ in range(pair.m))
        )
        lhs, rhs = cond_exp_pairing_check(f, pair, 2.0, h)
        assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(lhs)))


def test_pairing_check_rejects_p_one():
    from canonbase_lab.lp_canon import cond_exp_pairing_check

    with pytest.raises(InvariantError):
        cond_exp_pairing_check(F24, UNIT2, 1, LatticeElement.zero(UNIT2.base_space()))


# -- transported interval convergence -------------------------------------------------

def test_transported_interval_worked_sequence():
    from canonbase_lab.lp_canon import transported_interval_convergence

    devs = transported_interval_convergence(F24, UNIT2, 0.25, 0.75, [2.0, 1.5, 1.1, 1.01])
    assert all(a > b for a, b in zip(devs, devs[1:]))
    assert devs[-1] < 0.05


def test_transported_interval_bound(rng):
    from canonbase_lab.lp_canon import transported_interval_convergence

    t, s = 0.25, 0.75
    for r, pair, f in instances(26, 20, orth=False):
        # positive profiles: the deviation bound is taken per normalized fiber
        f = abs(f)
        f0 = f_zero(f, pair, 1)
        for q in (2.0, 1.5, 1.1):
            dev = transported_interval_convergence(f, pair, t, s, [q])[0]
            envelope = max(f0.values)
            assert dev <= spow_deviation_bound(t, s, q) * envelope + 1e-9


def test_transported_interval_rejects_bad_q():
    from canonbase_lab.lp_canon import transported_interval_convergence

    with pytest.raises(InvariantError):
        transported_interval_convergence(F24, UNIT2, 0.25, 0.75, [1.0])


# -- canonical bases -----------------------------------------------------------------

def test_base_worked_single_point_grid():
    cb = canonical_base_1type(F24, UNIT2, 1, [0.5])
    assert cb.pos_norm == pytest.approx(2.0, abs=1e-12)
    assert cb.neg_norm == pytest.approx(1.0, abs=1e-12)
    assert cb.partials[0.5].values == (-1.0,)


def test_base_zero_element():
    zero = LatticeElement.zero(UNIT2.total_space())
    cb = canonical_base_1type(zero, UNIT2, 1, [0.25, 0.5, 1.0])
    assert cb.pos_norm == 0.0 and cb.neg_norm == 0.0
    assert all(v == 0.0 for e in cb.partials.values() for v in e.values)


def test_base_reconstruction_worked():
    grid = [0.5, 1.0]
    cb = canonical_base_1type(F24, UNIT2, 1, grid)
    assert cb.reconstruct_sorted_rows(2) == [[-2.0, 4.0]]


def test_base_reconstruction_random(rng):
    for _, pair, f in instances(27, 30):
        n = pair.n
        grid = [k / n for k in range(1, n + 1)]
        cb = canonical_base_1type(f, pair, 1, grid)
        rows = cb.reconstruct_sorted_rows(n)
        expected = [sorted(row) for row in pair.rows(f)]
        for got, want in zip(rows, expected):
            assert got == pytest.approx(want, abs=1e-9)


def test_base_interval_variant_reconstruction(rng):
    for _, pair, f in instances(28, 15):
        n = pair.n
        grid = [k / n for k in range(n + 1)]
        cb = canonical_base_1type(f, pair, 1, grid, intervals=True)
        rows = cb.reconstruct_sorted_rows(n)
        expected = [sorted(row) for row in pair.rows(f)]
        for got, want in zip(rows, expected):
            assert got == pytest.approx(want, abs=1e-9)


def test_base_equality_iff_type_small(rng):
    rng = random.Random(29)
    pair = ExtensionPair((0.5, 0.5), 4, False)
    grid = [k / 4 for k in range(1, 5)]
    f = pair.element([[1.0, 2.0, 0.0, -1.0], [3.0, 3.0, 0.5, 0.5]])
    g = pair.element([[2.0, -1.0, 1.0, 0.0], [0.5, 3.0, 0.5, 3.0]])  # rearranged
    h = pair.element([[1.0, 2.0, 0.0, -1.0], [3.0, 2.5, 0.5, 0.5]])  # one value off
    cb = lambda e: canonical_base_1type(e, pair, 1, grid)
    assert cb(f).approx_equal(cb(g)) and type_equal_1(f, g, pair, 1)
    assert not cb(f).approx_equal(cb(h)) and not type_equal_1(f, h, pair, 1)


def test_base_detects_top_slice_trade():
    # equal on every slice below the top and equal total norms, but different
    # top-slice distributions across atoms: the endpoint entry must separate
    pair = ExtensionPair((0.5, 0.5), 2, False)
    f = pair.element([[1.0, 2.0], [1.0, 4.0]])
    g = pair.element([[1.0, 3.0], [1.0, 3.0]])
    grid_inner = [0.5]
    cb_inner = lambda e: canonical_base_1type(e, pair, 1, grid_inner)
    assert cb_inner(f).approx_equal(cb_inner(g))  # interior grid cannot separate
    grid_full = [0.5, 1.0]
    cb_full = lambda e: canonical_base_1type(e, pair, 1, grid_full)
    assert not cb_full(f).approx_equal(cb_full(g))
    assert not type_equal_1(f, g, pair, 1)


def test_base_rejects_empty_or_bad_grid():
    with pytest.raises(InvariantError):
        canonical_base_1type(F24, UNIT2, 1, [])
    with pytest.raises(InvariantError):
        canonical_base_1type(F24, UNIT2, 1, [0.5, 0.5])
    with pytest.raises(InvariantError):
        canonical_base_1type(F24, UNIT2, 1, [0.5, 1.5])


def test_ntype_single_reduces_to_multiples():
    nt = canonical_base_ntype([F24], UNIT2, 1, [0.5, 1.0], k_max=2)
    for k in (-2, -1, 0, 1, 2):
        direct = canonical_base_1type(float(k) * F24, UNIT2, 1, [0.5, 1.0])
        assert nt.bases[(k,)].approx_equal(direct)


def test_ntype_diagonal_pair_collapses():
    nt = canonical_base_ntype([F24, F24], UNIT2, 1, [0.5, 1.0], k_max=1)
    for k in (-1, 0, 1):
        for l in (-1, 0, 1):
            direct = canonical_base_1type(float(k + l) * F24, UNIT2, 1, [0.5, 1.0])
            assert nt.bases[(k, l)].approx_equal(direct)


def test_ntype_distinguishes_remark_pair():
    pair = ExtensionPair((1.0, 1.0, 1.0), 1, False)
    g = pair.element([[1.0], [-1.0], [0.0]])
    h = pair.element([[1.0], [1.0], [-2.0]])
    nt_gh = canonical_base_ntype([g, h], pair, 1, [0.5, 1.0], k_max=1)
    nt_gnh = canonical_base_ntype([g, -h], pair, 1, [0.5, 1.0], k_max=1)
    assert not nt_gh.absolute_summary.approx_equal(nt_gnh.absolute_summary)


# -- counterexample families -----------------------------------------------------------

def test_p1_family_norms():
    for eps in (Fraction(1, 4), Fraction(1, 16), Fraction(1, 64)):
        rep = p1_counterexample(eps, 1.0)
        assert rep.f_norm == 1.0
        assert rep.partial_norm == 1.0
        assert all(v == -1.0 for v in rep.partial.values)


def test_p2_family_decays():
    norms = [p1_counterexample(Fraction(1, m), 2.0).partial_norm for m in (4, 16, 64)]
    for eps, norm in zip((0.25, 1 / 16, 1 / 64), norms):
        assert norm == pytest.approx(eps**0.5, abs=1e-9)
    assert norms[0] > norms[1] > norms[2]


def test_p1_rejects_bad_eps():
    with pytest.raises(InvariantError):
        p1_counterexample(Fraction(2, 5), 1.0)
    with pytest.raises(InvariantError):
        p1_counterexample(Fraction(1, 3), 1.0, fiber_cells=4)


def test_remark_report():
    rep = remark_counterexample()
    assert rep.single_types_all_equal
    assert not rep.joint_types_equal
    assert rep.witness_with_h == pytest.approx(1.0, abs=1e-12)
    assert rep.witness_with_minus_h == pytest.approx(0.0, abs=1e-12)


# -- consistency of signed powers used in transport ------------------------------------

def test_signed_power_consistency_with_transport():
    out = lq_transport(F24, 1, 2)
    assert out.values[0] == signed_power(-2.0, 0.5)
