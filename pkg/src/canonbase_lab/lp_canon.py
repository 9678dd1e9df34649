"""Partial conditional expectations over a fibered extension, computed by
exact piecewise-linear conjugation, together with slices, increasing
realisations, grid approximations, L_p <-> L_q transport, and the canonical
base tuples built from them.

Everything here works per base atom: the fiber values over an atom determine
a convex piecewise-linear shortfall function, whose conjugate evaluated at
slope t*f0 is the partial conditional expectation E_t, equal to the integral
of the sorted fiber profile from 0 to t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .errors import InvariantError, SpaceMismatchError
from .legendre import PLConvexFn, conjugate
from .measure_core import (
    ExtensionPair,
    LatticeElement,
    MeasureSpace,
    lp_norm,
    neg_part,
    pos_part,
    signed_power,
)
from .oracle import DirectionalMass

_INF = math.inf


def _require_on_pair(f: LatticeElement, pair: ExtensionPair) -> None:
    if f.space != pair.total_space():
        raise SpaceMismatchError("element does not live on the total space of this pair")


def _check_p(p: float) -> float:
    p = float(p)
    if not p >= 1.0:
        raise InvariantError(f"L_p exponent must satisfy p >= 1, got {p}")
    return p


# ---------------------------------------------------------------------------
# The shortfall transform and its conjugate
# ---------------------------------------------------------------------------

def f_zero(f: LatticeElement, pair: ExtensionPair, p: float) -> LatticeElement:
    """Conditional expectation of |f| onto the base, as a base-space element."""
    _check_p(p)
    _require_on_pair(f, pair)
    return pair.cond_exp_base(abs(f))


def _fiber_psi(values: Sequence[float], f0: float, n: int) -> PLConvexFn:
    """The convex function x -> mean_j (x*f0 - v_j)^+ for one fiber."""
    if f0 == 0.0:
        return PLConvexFn(-_INF, _INF, (), (0.0,), 0.0, 0.0)
    breaks: list[float] = []
    slopes: list[float] = [0.0]
    cum = 0
    for v in sorted(values):
        b = v / f0
        cum += 1
        if breaks and b <= breaks[-1]:
            slopes[-1] = cum * f0 / n
        else:
            breaks.append(b)
            slopes.append(cum * f0 / n)
    return PLConvexFn(-_INF, _INF, tuple(breaks), tuple(slopes), breaks[0], 0.0)


@dataclass(frozen=True)
class PsiFamily:
    """Per base atom, the piecewise-linear shortfall function, plus the
    envelope element f0 = E[|f| | base]."""

    pair: ExtensionPair
    fibers: tuple[PLConvexFn, ...]
    f0: LatticeElement

    def value_at(self, x: float) -> LatticeElement:
        return LatticeElement(
            self.pair.base_space(), tuple(fn.evaluate(x) for fn in self.fibers)
        )


def psi(f: LatticeElement, pair: ExtensionPair, p: float) -> PsiFamily:
    """The shortfall family x -> E[(x*f0 - f)^+ | base], exact and PL per atom."""
    _check_p(p)
    _require_on_pair(f, pair)
    f0 = f_zero(f, pair, p)
    n = pair.n
    fibers = tuple(
        _fiber_psi(row, f0.values[i], n) for i, row in enumerate(pair.rows(f))
    )
    return PsiFamily(pair, fibers, f0)


def partial_cond_exp(f: LatticeElement, pair: ExtensionPair, p: float, t: float) -> LatticeElement:
    """E_t: per atom, the conjugate of the shortfall function at slope t*f0.

    Equals the integral of the sorted fiber profile from 0 to t, so E_0 = 0
    and E_1 is the full conditional expectation.
    """
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise InvariantError(f"t must lie in [0, 1], got {t}")
    fam = psi(f, pair, p)
    return _partial_from_family(fam, t)


def _partial_from_family(fam: PsiFamily, t: float) -> LatticeElement:
    out = []
    for fn, f0w in zip(fam.fibers, fam.f0.values):
        if f0w == 0.0:
            out.append(0.0)
        else:
            out.append(conjugate(fn).evaluate(t * f0w))
    return LatticeElement(fam.pair.base_space(), tuple(out))


def interval_cond_exp(
    f: LatticeElement, pair: ExtensionPair, p: float, t: float, s: float
) -> LatticeElement:
    """E_[t,s] = E_s - E_t; additive over adjacent intervals."""
    t, s = float(t), float(s)
    if not (0.0 <= t < s <= 1.0):
        raise InvariantError(f"need 0 <= t < s <= 1, got t={t}, s={s}")
    fam = psi(f, pair, p)
    return _partial_from_family(fam, s) - _partial_from_family(fam, t)


# ---------------------------------------------------------------------------
# Slices and the increasing realisation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SliceFamily:
    """Per base atom, the nondecreasing rearrangement of the fiber values;
    the slice at t is the ceil(t*n)-th order statistic."""

    pair: ExtensionPair
    sorted_rows: tuple[tuple[float, ...], ...]

    def slice_at(self, t: float) -> LatticeElement:
        t = float(t)
        n = self.pair.n
        if not 0.0 < t <= 1.0:
            raise InvariantError(f"slices are defined for t in (0, 1], got {t}")
        k = min(n, max(1, math.ceil(t * n)))
        return LatticeElement(
            self.pair.base_space(), tuple(row[k - 1] for row in self.sorted_rows)
        )


def slices(f: LatticeElement, pair: ExtensionPair, p: float) -> SliceFamily:
    _check_p(p)
    _require_on_pair(f, pair)
    return SliceFamily(pair, tuple(tuple(sorted(row)) for row in pair.rows(f)))


def increasing_realisation(f: LatticeElement, pair: ExtensionPair, p: float) -> LatticeElement:
    """The canonical type-preserving rearrangement: each base fiber sorted
    ascending, and the orthogonal part replaced by the signed constants
    +|f+ restricted to the orthogonal part| and -|f- restricted|."""
    p = _check_p(p)
    _require_on_pair(f, pair)
    rows = [sorted(row) for row in pair.rows(f)]
    if not pair.has_orthogonal:
        return pair.element(rows)
    orth = pair.plus_values(f) + pair.minus_values(f)
    w = 1.0 / pair.n
    plus_c = (sum(w * max(v, 0.0) ** p for v in orth)) ** (1.0 / p)
    minus_c = (sum(w * max(-v, 0.0) ** p for v in orth)) ** (1.0 / p)
    return pair.element(rows, plus=[plus_c] * pair.n, minus=[-minus_c] * pair.n)


def slice_norm_bound_check(
    f: LatticeElement, pair: ExtensionPair, p: float, t: float
) -> tuple[float, float]:
    """Returns (||f_t||_p over the base, ||f||_p / (t - t^2)^(1/p))."""
    p = _check_p(p)
    t = float(t)
    if not 0.0 < t < 1.0:
        raise InvariantError(f"the slice bound needs t in (0, 1), got {t}")
    lhs = lp_norm(slices(f, pair, p).slice_at(t), p)
    rhs = lp_norm(f, p) / (t - t * t) ** (1.0 / p)
    return lhs, rhs


# ---------------------------------------------------------------------------
# Grid approximation of E_t from finitely many shortfall values
# ---------------------------------------------------------------------------

def grid_approx(
    f: LatticeElement,
    pair: ExtensionPair,
    p: float,
    t: float,
    bound: float,
    grid_n: int,
) -> tuple[LatticeElement, LatticeElement]:
    """The finite join g over the slope grid {bound*k/grid_n : |k| <= grid_n}
    and the exact windowed sup h over [-bound, bound], per atom.

    Atomwise, 0 <= h - g <= 2*bound*f0/grid_n, and h equals E_t wherever the
    slice at t has absolute value at most ``bound``.
    """
    t = float(t)
    bound = float(bound)
    grid_n = int(grid_n)
    if not 0.0 < t < 1.0:
        raise InvariantError(f"grid approximation needs t in (0, 1), got {t}")
    if not (bound > 0 and grid_n >= 1):
        raise InvariantError("need bound > 0 and grid_n >= 1")
    fam = psi(f, pair, p)
    g_vals, h_vals = [], []
    for fn, f0w in zip(fam.fibers, fam.f0.values):
        g = max(
            t * (bound * k / grid_n) * f0w - fn.evaluate(bound * k / grid_n)
            for k in range(-grid_n, grid_n + 1)
        )
        candidates = [-bound, bound] + [b for b in fn.breakpoints if -bound < b < bound]
        h = max(t * x * f0w - fn.evaluate(x) for x in candidates)
        g_vals.append(g)
        h_vals.append(h)
    base = pair.base_space()
    return LatticeElement(base, tuple(g_vals)), LatticeElement(base, tuple(h_vals))


# ---------------------------------------------------------------------------
# Transport between L_p structures and the duality pairing
# ---------------------------------------------------------------------------

def lq_transport(f: LatticeElement, p: float, q: float) -> LatticeElement:
    """The carrier bijection between the p- and q-structures: atomwise signed
    power v -> v^(p/q); transports the norm via ||f||_p^(p/q)."""
    p, q = _check_p(p), _check_p(q)
    if p == q:
        return f
    alpha = p / q
    return f.map(lambda v: signed_power(v, alpha) if v != 0.0 else 0.0)


def duality_pairing(f: LatticeElement, g: LatticeElement, p: float, q: float) -> float:
    """Pairing of the transported elements f^(p/q) and g^(p/q'), computed
    through the kernel (f^(1/q) g^(1/q'))^p inside the integral."""
    p = _check_p(p)
    q = float(q)
    if not q > 1.0:
        raise InvariantError("the duality pairing needs q > 1 (conjugate exponent defined)")
    if f.space != g.space:
        raise SpaceMismatchError("pairing needs elements on one space")
    qc = q / (q - 1.0)
    total = 0.0
    for w, a, b in zip(f.space.weights, f.values, g.values):
        kernel = (signed_power(a, 1.0 / q) if a != 0.0 else 0.0) * (
            signed_power(b, 1.0 / qc) if b != 0.0 else 0.0
        )
        total += w * (signed_power(kernel, p) if kernel != 0.0 else 0.0)
    return total


def cond_exp_pairing_check(
    f: LatticeElement, pair: ExtensionPair, p: float, h: LatticeElement
) -> tuple[float, float]:
    """Both sides of the pairing identity int f h^(p-1) = int E[f|base] h^(p-1).

    The left integral runs over the total space with h lifted fiber-constant;
    the right over the base. Requires p > 1 (the identity still holds at
    p = 1 but no longer characterises the conditional expectation there).
    """
    p = _check_p(p)
    if p == 1.0:
        raise InvariantError("the pairing characterisation needs p > 1")
    _require_on_pair(f, pair)
    if h.space != pair.base_space():
        raise SpaceMismatchError("h must live on the base space")
    h_lift = pair.embed(h)
    lhs = sum(
        w * v * (signed_power(hv, p - 1.0) if hv != 0.0 else 0.0)
        for w, v, hv in zip(f.space.weights, f.values, h_lift.values)
    )
    e = pair.cond_exp_base(f)
    rhs = sum(
        w * v * (signed_power(hv, p - 1.0) if hv != 0.0 else 0.0)
        for w, v, hv in zip(e.space.weights, e.values, h.values)
    )
    return lhs, rhs


def transported_interval_convergence(
    f: LatticeElement,
    pair: ExtensionPair,
    t: float,
    s: float,
    q_list: Sequence[float],
) -> list[float]:
    """For each q, the sup-deviation between E_[t,s] computed in the ambient
    L_1 structure and the same quantity computed in the q-structure and
    transported back (atomwise q-th signed power of E_[t,s] of f^(1/q))."""
    t, s = float(t), float(s)
    if not (0.0 < t < s < 1.0):
        raise InvariantError(f"need 0 < t < s < 1, got t={t}, s={s}")
    reference = interval_cond_exp(f, pair, 1.0, t, s)
    deviations = []
    for q in q_list:
        q = float(q)
        if not q > 1.0:
            raise InvariantError(f"transport exponents must exceed 1, got {q}")
        transported = interval_cond_exp(lq_transport(f, 1.0, q), pair, q, t, s)
        back = transported.map(lambda v: signed_power(v, q) if v != 0.0 else 0.0)
        deviations.append(max(abs(a - b) for a, b in zip(back.values, reference.values)))
    return deviations


# ---------------------------------------------------------------------------
# Canonical base tuples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LpCanonicalBase:
    """The tuple (||f+||, ||f-||, partials over a grid) or its interval form.

    On the full grid {k/n : k = 1..n} (right endpoint included, standing in
    for the endpoint limit over a dense grid) the partials determine the
    sorted fiber values exactly via first differences.
    """

    p: float
    pos_norm: float
    neg_norm: float
    grid: tuple[float, ...]
    partials: Mapping[float, LatticeElement] | None = None
    intervals: Mapping[tuple[float, float], LatticeElement] | None = None

    def approx_equal(self, other: "LpCanonicalBase", tol: float = 1e-9) -> bool:
        if self.p != other.p or len(self.grid) != len(other.grid):
            return False
        if any(abs(a - b) > tol for a, b in zip(self.grid, other.grid)):
            return False
        if abs(self.pos_norm - other.pos_norm) > tol:
            return False
        if abs(self.neg_norm - other.neg_norm) > tol:
            return False
        if (self.partials is None) != (other.partials is None):
            return False
        if self.partials is not None:
            for key, mine in self.partials.items():
                theirs = other.partials.get(key)
                if theirs is None or not mine.approx_equal(theirs, tol):
                    return False
        if (self.intervals is None) != (other.intervals is None):
            return False
        if self.intervals is not None:
            for key, mine in self.intervals.items():
                theirs = other.intervals.get(key)
                if theirs is None or not mine.approx_equal(theirs, tol):
                    return False
        return True

    def reconstruct_sorted_rows(self, fiber_cells: int) -> list[list[float]]:
        """Invert the prefix sums: the k-th sorted fiber value per atom is
        n*(E_{k/n} - E_{(k-1)/n}). Requires the full grid."""
        n = int(fiber_cells)
        if self.partials is not None:
            expected = [(k + 1) / n for k in range(n)]
            if len(self.grid) != n or any(
                abs(a - b) > 1e-12 for a, b in zip(self.grid, expected)
            ):
                raise InvariantError("reconstruction needs the full grid {k/n : k = 1..n}")
            m = len(next(iter(self.partials.values())).values)
            rows = [[0.0] * n for _ in range(m)]
            prev = [0.0] * m
            for k, tk in enumerate(self.grid):
                cur = self.partials[tk].values
                for i in range(m):
                    rows[i][k] = n * (cur[i] - prev[i])
                prev = list(cur)
            return rows
        if self.intervals is not None:
            expected = [k / n for k in range(n + 1)]
            if len(self.grid) != n + 1 or any(
                abs(a - b) > 1e-12 for a, b in zip(self.grid, expected)
            ):
                raise InvariantError(
                    "interval reconstruction needs the grid {k/n : k = 0..n}"
                )
            first = self.intervals[(self.grid[0], self.grid[1])]
            m = len(first.values)
            rows = [[0.0] * n for _ in range(m)]
            for k in range(n):
                seg = self.intervals[(self.grid[k], self.grid[k + 1])]
                for i in range(m):
                    rows[i][k] = n * seg.values[i]
            return rows
        raise InvariantError("empty canonical base")


def canonical_base_1type(
    f: LatticeElement,
    pair: ExtensionPair,
    p: float,
    grid: Sequence[float],
    intervals: bool = False,
) -> LpCanonicalBase:
    """Assemble the canonical base tuple of f over the given grid.

    Grid points lie in [0, 1]; the endpoints stand in for the limits over a
    dense grid (E_0 = 0 and E_1 = the full conditional expectation, both
    exact here).
    """
    p = _check_p(p)
    _require_on_pair(f, pair)
    pts = tuple(float(t) for t in grid)
    if not pts:
        raise InvariantError("the grid must be nonempty")
    if any(not 0.0 <= t <= 1.0 for t in pts):
        raise InvariantError("grid points must lie in [0, 1]")
    if any(b <= a for a, b in zip(pts, pts[1:])):
        raise InvariantError("grid points must be strictly increasing")
    fam = psi(f, pair, p)
    pos_norm = lp_norm(pos_part(f), p)
    neg_norm = lp_norm(neg_part(f), p)
    values = {t: _partial_from_family(fam, t) for t in pts}
    if intervals:
        pairs = {
            (a, b): values[b] - values[a]
            for i, a in enumerate(pts)
            for b in pts[i + 1 :]
        }
        return LpCanonicalBase(p, pos_norm, neg_norm, pts, None, pairs)
    return LpCanonicalBase(p, pos_norm, neg_norm, pts, values, None)


@dataclass(frozen=True)
class NTypeBase:
    """Canonical bases of all integer combinations k . f over a box, plus the
    directional-mass summary standing in for the absolute joint type."""

    k_max: int
    bases: Mapping[tuple[int, ...], LpCanonicalBase]
    absolute_summary: DirectionalMass


def canonical_base_ntype(
    fs: Sequence[LatticeElement],
    pair: ExtensionPair,
    p: float,
    grid: Sequence[float],
    k_max: int,
    intervals: bool = False,
) -> NTypeBase:
    p = _check_p(p)
    if not fs:
        raise InvariantError("the tuple of elements must be nonempty")
    for g in fs:
        _require_on_pair(g, pair)
    k_max = int(k_max)
    if k_max < 1:
        raise InvariantError("the integer box must contain a spanning set (k_max >= 1)")
    bases = {}
    for combo in product(range(-k_max, k_max + 1), repeat=len(fs)):
        elem = LatticeElement.zero(pair.total_space())
        for k, g in zip(combo, fs):
            if k:
                elem = elem + float(k) * g
        bases[combo] = canonical_base_1type(elem, pair, p, grid, intervals)
    summary = DirectionalMass.from_elements(fs, p)
    return NTypeBase(k_max, bases, summary)


# ---------------------------------------------------------------------------
# Worked counterexample families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class P1Report:
    """Norms of the concentrated family f_eps and of its partial E_eps."""

    eps: Fraction
    p: float
    fiber_cells: int
    f_norm: float
    partial: LatticeElement
    partial_norm: float


def p1_counterexample(
    eps: Fraction | float,
    p: float,
    base_weights: Sequence[float] = (1.0,),
    fiber_cells: int | None = None,
) -> P1Report:
    """The unit-norm family concentrated on the first eps-fraction of every
    fiber, with value -eps^(-1/p); its partial at t = eps has norm
    eps^(1 - 1/p), which stays at 1 when p = 1."""
    p = _check_p(p)
    eps = Fraction(eps).limit_denominator(10**9) if not isinstance(eps, Fraction) else eps
    if not (0 < eps < 1) or eps.numerator != 1:
        raise InvariantError(f"eps must be of the form 1/m, got {eps}")
    m = eps.denominator
    n = fiber_cells if fiber_cells is not None else m
    if n % m != 0:
        raise InvariantError(f"fiber_cells {n} is not divisible by 1/eps = {m}")
    if abs(sum(base_weights) - 1.0) > 1e-12:
        raise InvariantError("the base must have total mass one")
    pair = ExtensionPair(tuple(base_weights), n)
    depth = -(float(eps) ** (-1.0 / p))
    cells = n // m
    row = [depth] * cells + [0.0] * (n - cells)
    f = pair.element([list(row) for _ in range(pair.m)])
    partial = partial_cond_exp(f, pair, p, float(eps))
    return P1Report(
        eps=eps,
        p=p,
        fiber_cells=n,
        f_norm=lp_norm(f, p),
        partial=partial,
        partial_norm=lp_norm(partial, p),
    )


@dataclass(frozen=True)
class RemarkReport:
    """Outcome of the joint-type counterexample on three unit atoms."""

    k_bound: int
    single_types_all_equal: bool
    joint_types_equal: bool
    witness_with_h: float
    witness_with_minus_h: float


def remark_counterexample(k_bound: int = 5) -> RemarkReport:
    """On atoms of weight one, g = (1,-1,0) and h = (1,1,-2): every integer
    combination k*g + l*h has the same absolute type as k*g - l*h, yet the
    joint types of (g, h) and (g, -h) differ; the term (x ^ y)+ integrates to
    1 against (g, h) and to 0 against (g, -h)."""
    from .krivine import Join as TJoin, Meet as TMeet, Var as TVar, Zero as TZero, eval_element
    from .oracle import absolute_type_equal

    space = MeasureSpace((1.0, 1.0, 1.0))
    g = LatticeElement(space, (1.0, -1.0, 0.0))
    h = LatticeElement(space, (1.0, 1.0, -2.0))
    all_equal = True
    for k in range(-k_bound, k_bound + 1):
        for l in range(-k_bound, k_bound + 1):
            plus = float(k) * g + float(l) * h
            minus = float(k) * g - float(l) * h
            if not absolute_type_equal([plus], [minus], 1.0):
                all_equal = False
    joint_equal = absolute_type_equal([g, h], [g, -h], 1.0)
    witness = TJoin(TMeet(TVar(0), TVar(1)), TZero())
    wa = eval_element(witness, [g, h])
    wb = eval_element(witness, [g, -h])
    integral_a = sum(w * v for w, v in zip(space.weights, wa.values))
    integral_b = sum(w * v for w, v in zip(space.weights, wb.values))
    return RemarkReport(
        k_bound=k_bound,
        single_types_all_equal=all_equal,
        joint_types_equal=joint_equal,
        witness_with_h=integral_a,
        witness_with_minus_h=integral_b,
    )


# ---------------------------------------------------------------------------
# Helper used by attainment-style identities
# ---------------------------------------------------------------------------

def cond_exp_dotminus(g: LatticeElement, f: LatticeElement, pair: ExtensionPair) -> LatticeElement:
    """E[(g - f)^+ | base] for a base element g, as a base-space element."""
    if g.space != pair.base_space():
        raise SpaceMismatchError("g must live on the base space")
    _require_on_pair(f, pair)
    n = pair.n
    out = []
    for gw, row in zip(g.values, pair.rows(f)):
        out.append(math.fsum(max(gw - v, 0.0) for v in row) / n)
    return LatticeElement(pair.base_space(), tuple(out))
