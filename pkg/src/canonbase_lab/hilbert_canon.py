"""Orthogonal projections, Gram data, and the quadratic expansion identity
for inner-product spaces.

The projection of a tuple alone does not pin down squared norms of linear
combinations; adding the Gram matrix does, which is exactly what the
expansion identity exercises.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvariantError

_ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class Subspace:
    """A subspace of R^dim given by an orthonormal basis (possibly empty)."""

    dim: int
    basis: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        mat = np.asarray(self.basis, dtype=float).reshape(len(self.basis), self.dim)
        gram = mat @ mat.T
        if len(self.basis) and np.abs(gram - np.eye(len(self.basis))).max() > _ORTHO_TOL:
            raise InvariantError("subspace basis is not orthonormal")
        object.__setattr__(
            self, "basis", tuple(tuple(float(v) for v in row) for row in mat)
        )

    @classmethod
    def span(cls, dim: int, vectors: Sequence[Sequence[float]]) -> "Subspace":
        """Orthonormalize the given spanning vectors (dropping dependents)."""
        basis: list[np.ndarray] = []
        for vec in vectors:
            v = np.asarray(vec, dtype=float)
            for b in basis:
                v = v - (v @ b) * b
            norm = float(np.linalg.norm(v))
            if norm > 1e-12:
                basis.append(v / norm)
        return cls(dim, tuple(tuple(b) for b in basis))


def project(v: Sequence[float], sub: Subspace) -> np.ndarray:
    """Orthogonal projection onto the subspace; the residual is orthogonal."""
    vec = np.asarray(v, dtype=float)
    if vec.shape != (sub.dim,):
        raise InvariantError(f"expected a vector of dimension {sub.dim}, got shape {vec.shape}")
    out = np.zeros(sub.dim)
    for b in sub.basis:
        bv = np.asarray(b)
        out += (vec @ bv) * bv
    return out


@dataclass(frozen=True)
class HilbertBase:
    projections: tuple[tuple[float, ...], ...]
    gram: tuple[tuple[float, ...], ...]


def hs_cb(vs: Sequence[Sequence[float]], sub: Subspace) -> HilbertBase:
    """The tuple of projections together with the full Gram matrix."""
    mat = np.asarray(vs, dtype=float).reshape(len(vs), sub.dim)
    projections = tuple(tuple(project(row, sub)) for row in mat)
    gram = mat @ mat.T
    return HilbertBase(projections, tuple(tuple(float(x) for x in row) for row in gram))


def phi_identity_check(
    vs: Sequence[Sequence[float]],
    lambdas: Sequence[float],
    u: Sequence[float],
    sub: Subspace,
    tol: float = 1e-9,
) -> tuple[float, float]:
    """Both sides of
    ||sum l_i v_i + u||^2 =
    ||sum l_i v_i||^2 - ||sum l_i P v_i||^2 + ||sum l_i P v_i + u||^2
    for u inside the subspace."""
    mat = np.asarray(vs, dtype=float).reshape(len(vs), sub.dim)
    lam = np.asarray(lambdas, dtype=float)
    if lam.shape != (len(mat),):
        raise InvariantError("one coefficient per vector is required")
    uv = np.asarray(u, dtype=float)
    if uv.shape != (sub.dim,):
        raise InvariantError(f"u must have dimension {sub.dim}")
    if np.linalg.norm(uv - project(uv, sub)) > tol * (1.0 + np.linalg.norm(uv)):
        raise InvariantError("u must belong to the subspace")
    combo = lam @ mat
    proj_combo = lam @ np.array([project(row, sub) for row in mat])
    lhs = float(np.dot(combo + uv, combo + uv))
    rhs = float(
        np.dot(combo, combo)
        - np.dot(proj_combo, proj_combo)
        + np.dot(proj_combo + uv, proj_combo + uv)
    )
    return lhs, rhs


def nonuniform_witness() -> tuple[list[list[float]], list[list[float]], Subspace, list[float]]:
    """Two single-vector tuples with equal projections but different Gram
    matrices, hence different squared norms at lambda = 1 and u = 0."""
    sub = Subspace(3, ((1.0, 0.0, 0.0),))
    first = [[0.0, 1.0, 0.0]]
    second = [[0.0, 0.0, 2.0]]
    return first, second, sub, [1.0]
