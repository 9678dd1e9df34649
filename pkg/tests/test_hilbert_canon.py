import numpy as np
import pytest

from canonbase_lab.errors import InvariantError
from canonbase_lab.hilbert_canon import (
    Subspace,
    hs_cb,
    nonuniform_witness,
    phi_identity_check,
    project,
)

E1 = Subspace(3, ((1.0, 0.0, 0.0),))


def random_subspace(rng, dim):
    count = rng.integers(0, dim + 1)
    vecs = rng.standard_normal((max(count, 1), dim))
    return Subspace.span(dim, vecs[:count]) if count else Subspace(dim, ())


def test_subspace_rejects_non_orthonormal():
    with pytest.raises(InvariantError):
        Subspace(2, ((1.0, 0.0), (1.0, 0.0)))
    with pytest.raises(InvariantError):
        Subspace(2, ((2.0, 0.0),))


def test_project_fixes_members():
    v = (3.0, 0.0, 0.0)
    assert np.allclose(project(v, E1), v)


def test_project_kills_orthogonal():
    assert np.allclose(project((0.0, 2.0, -1.0), E1), 0.0)


def test_project_coordinate():
    assert np.allclose(project((1.0, 2.0, 3.0), E1), (1.0, 0.0, 0.0))


def test_projection_idempotent_and_selfadjoint():
    rng = np.random.default_rng(6)
    for _ in range(50):
        dim = int(rng.integers(1, 9))
        sub = random_subspace(rng, dim)
        v, w = rng.standard_normal(dim), rng.standard_normal(dim)
        pv = project(v, sub)
        assert np.allclose(project(pv, sub), pv, atol=1e-10)
        assert np.dot(pv, w) == pytest.approx(np.dot(v, project(w, sub)), abs=1e-9)


def test_hs_cb_inside_subspace():
    sub = Subspace(3, ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)))
    vs = [(1.0, 2.0, 0.0), (0.0, -1.0, 0.0)]
    base = hs_cb(vs, sub)
    assert np.allclose(base.projections, vs)
    assert np.allclose(base.gram, [[5.0, -2.0], [-2.0, 1.0]])


def test_hs_cb_orthogonal_unit():
    base = hs_cb([(0.0, 1.0, 0.0)], E1)
    assert np.allclose(base.projections, [(0.0, 0.0, 0.0)])
    assert np.allclose(base.gram, [[1.0]])


def test_hs_cb_worked():
    base = hs_cb([(1.0, 2.0, 3.0)], E1)
    assert np.allclose(base.projections, [(1.0, 0.0, 0.0)])
    assert np.allclose(base.gram, [[14.0]])


def test_phi_identity_zero_u():
    vs = [(1.0, 2.0, 3.0)]
    lhs, rhs = phi_identity_check(vs, [1.0], (0.0, 0.0, 0.0), E1)
    assert lhs == pytest.approx(14.0, abs=1e-12)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_phi_identity_worked():
    lhs, rhs = phi_identity_check([(1.0, 2.0, 3.0)], [1.0], (5.0, 0.0, 0.0), E1)
    assert lhs == pytest.approx(49.0, abs=1e-12)
    assert rhs == pytest.approx(14.0 - 1.0 + 36.0, abs=1e-12)


def test_phi_identity_inside_subspace_collapses():
    sub = Subspace(2, ((1.0, 0.0), (0.0, 1.0)))
    vs = [(1.0, 1.0), (2.0, -1.0)]
    lhs, rhs = phi_identity_check(vs, [0.5, 2.0], (1.0, 1.0), sub)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_phi_identity_rejects_outside_u():
    with pytest.raises(InvariantError):
        phi_identity_check([(1.0, 2.0, 3.0)], [1.0], (0.0, 1.0, 0.0), E1)


def test_phi_identity_random():
    rng = np.random.default_rng(7)
    for _ in range(100):
        dim = int(rng.integers(1, 11))
        sub = random_subspace(rng, dim)
        count = int(rng.integers(1, 4))
        vs = rng.standard_normal((count, dim))
        lam = rng.standard_normal(count)
        u = project(rng.standard_normal(dim), sub)
        lhs, rhs = phi_identity_check(vs, lam, u, sub)
        assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(lhs)))


def test_equal_base_gives_equal_phi():
    rng = np.random.default_rng(8)
    sub = Subspace(4, ((1.0, 0.0, 0.0, 0.0),))
    # two distinct tuples with identical projections and Gram matrices
    vs_a = [(1.0, 2.0, 0.0, 0.0), (0.5, 0.0, 1.0, 0.0)]
    vs_b = [(1.0, 0.0, 2.0, 0.0), (0.5, 1.0 / np.sqrt(5), 0.0, 2.0 / np.sqrt(5))]
    base_a, base_b = hs_cb(vs_a, sub), hs_cb(vs_b, sub)
    assert np.allclose(base_a.projections, base_b.projections)
    assert np.allclose(base_a.gram, base_b.gram)
    for _ in range(25):
        lam = rng.standard_normal(2)
        u = project(rng.standard_normal(4), sub)
        lhs_a, _ = phi_identity_check(vs_a, lam, u, sub)
        lhs_b, _ = phi_identity_check(vs_b, lam, u, sub)
        assert lhs_a == pytest.approx(lhs_b, abs=1e-9 * (1 + abs(lhs_a)))


def test_nonuniform_witness_separates():
    first, second, sub, lam = nonuniform_witness()
    base_a, base_b = hs_cb(first, sub), hs_cb(second, sub)
    assert np.allclose(base_a.projections, base_b.projections)
    assert not np.allclose(base_a.gram, base_b.gram)
    zero_u = (0.0,) * sub.dim
    lhs_a, _ = phi_identity_check(first, lam, zero_u, sub)
    lhs_b, _ = phi_identity_check(second, lam, zero_u, sub)
    assert abs(lhs_a - lhs_b) > 1e-6
