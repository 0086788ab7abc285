"""Orthonormal bases and orthogonal projection onto linear subspaces.

A subspace of R^D with dimension H is stored as an ``(H, D)`` array whose
rows are orthonormal basis vectors.  Reconstruction of ``x`` is the
orthogonal projection ``sum_i (b_i . x) b_i`` and the residual is
``x - reconstruction``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBasis, DimensionMismatch

ORTHONORMAL_TOL = 1e-10
DEPENDENCE_TOL = 1e-12


def orthonormality_error(vectors: np.ndarray) -> float:
    """Return ``max |B B^T - I|`` for row-basis ``B``."""
    vectors = np.atleast_2d(vectors)
    gram = vectors @ vectors.T
    return float(np.max(np.abs(gram - np.eye(vectors.shape[0]))))


@dataclass(frozen=True, eq=False)
class BasisSet:
    """Orthonormal basis of an H-dimensional subspace of R^D.

    ``vectors`` holds one basis vector per row.  The array is copied and
    made read-only on construction, so instances behave as values.
    """

    vectors: np.ndarray

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=float, copy=True)
        if vectors.ndim != 2 or vectors.shape[0] == 0:
            raise DimensionMismatch("basis must be a non-empty (H, D) array")
        if vectors.shape[0] > vectors.shape[1]:
            raise DimensionMismatch(
                f"subspace_dim {vectors.shape[0]} exceeds dimension {vectors.shape[1]}")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("basis contains non-finite entries")
        err = orthonormality_error(vectors)
        if err >= ORTHONORMAL_TOL:
            raise ValueError(f"basis is not orthonormal (max |BB^T - I| = {err:.3g})")
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    @property
    def subspace_dim(self) -> int:
        return self.vectors.shape[0]

    def __eq__(self, other):
        if not isinstance(other, BasisSet):
            return NotImplemented
        return self.vectors.shape == other.vectors.shape and bool(
            np.array_equal(self.vectors, other.vectors))

    def __hash__(self):
        return hash((self.vectors.shape, self.vectors.tobytes()))


def gram_schmidt(vectors) -> BasisSet:
    """Orthonormalize ``vectors`` with modified Gram-Schmidt.

    Parameters
    ----------
    vectors : array_like, shape (H, D)
        Linearly independent vectors, one per row, with ``H <= D``.

    Returns
    -------
    BasisSet
        Orthonormal rows spanning the same subspace, in input order.

    Raises
    ------
    DegenerateBasis
        If an intermediate residual norm drops below 1e-12.

    Notes
    -----
    Each vector is re-orthogonalized once against its predecessors before
    normalization, which keeps the output orthonormal to rounding even for
    nearly dependent input.
    """
    work = np.array(vectors, dtype=float, copy=True)
    if work.ndim == 1:
        work = work[None, :]
    if work.ndim != 2 or work.shape[0] == 0:
        raise DimensionMismatch("expected a non-empty (H, D) array of vectors")
    h, d = work.shape
    if h > d:
        raise DegenerateBasis(f"{h} vectors in R^{d} cannot be linearly independent")
    for i in range(h):
        if i:
            # second pass: restores orthogonality lost to cancellation
            work[i] -= (work[:i] @ work[i]) @ work[:i]
        norm = np.linalg.norm(work[i])
        if not np.isfinite(norm) or norm < DEPENDENCE_TOL:
            raise DegenerateBasis(
                f"vector {i} is linearly dependent on its predecessors "
                f"(residual norm {norm:.3g})")
        work[i] /= norm
        # MGS: remove the new direction from every later vector immediately.
        if i + 1 < h:
            coeffs = work[i + 1:] @ work[i]
            work[i + 1:] -= np.outer(coeffs, work[i])
    return BasisSet(work)


def _check_vector(basis: BasisSet, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != basis.dimension:
        raise DimensionMismatch(
            f"vector has length {x.shape[-1]}, basis lives in R^{basis.dimension}")
    return x


def project(basis: BasisSet, x) -> np.ndarray:
    """Orthogonal projection of ``x`` onto ``span(basis)``.

    ``x`` may be a single vector or a ``(R, D)`` batch of row vectors.
    """
    x = _check_vector(basis, x)
    b = basis.vectors
    return (x @ b.T) @ b


def residual(basis: BasisSet, x) -> np.ndarray:
    """Component of ``x`` orthogonal to ``span(basis)``."""
    x = _check_vector(basis, x)
    return x - project(basis, x)


def projector_matrix(basis: BasisSet) -> np.ndarray:
    """Explicit ``D x D`` projector ``sum_i b_i b_i^T``.

    Symmetrized so that ``P == P.T`` holds exactly.
    """
    b = basis.vectors
    p = b.T @ b
    return 0.5 * (p + p.T)
