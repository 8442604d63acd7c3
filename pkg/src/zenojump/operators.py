"""Dense operator primitives.

Operators are plain complex ``numpy`` arrays; the functions here validate the
structural invariants (hermiticity, unitarity, projector idempotence, density
positivity) against a :class:`~zenojump.policy.NumericPolicy` and provide the
small set of exact-linear-algebra operations the rest of the package builds
on.  All eigenvector phases are fixed deterministically so repeated runs
produce bit-identical output.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .policy import NumericPolicy, default_policy

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "as_square_matrix",
    "max_norm",
    "check_hermitian",
    "check_unitary",
    "check_projector",
    "check_density",
    "projector_rank",
    "eigh",
    "matrix_exp_unitary",
    "trace_product",
    "tensor_product",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def as_square_matrix(m) -> np.ndarray:
    """Coerce to a square complex matrix or raise."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    return a


def max_norm(m) -> float:
    """Entrywise max-abs norm."""
    a = np.asarray(m)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a)))


def check_hermitian(m, policy: NumericPolicy | None = None) -> np.ndarray:
    """Validate hermiticity within ``hermitian_tol * (1 + |M|)``."""
    pol = default_policy(policy)
    a = as_square_matrix(m)
    defect = max_norm(a - a.conj().T)
    if defect > pol.hermitian_tol * (1.0 + max_norm(a)):
        raise ValidationError(
            f"matrix is not Hermitian: defect {defect:.3e} exceeds "
            f"{pol.hermitian_tol:.1e} * (1 + max|M|)"
        )
    return a


def check_unitary(m, policy: NumericPolicy | None = None) -> np.ndarray:
    """Validate ``U^dagger U = I`` within ``unitary_tol``."""
    pol = default_policy(policy)
    a = as_square_matrix(m)
    defect = max_norm(a.conj().T @ a - np.eye(a.shape[0]))
    if defect > pol.unitary_tol:
        raise ValidationError(
            f"matrix is not unitary: defect {defect:.3e} exceeds {pol.unitary_tol:.1e}"
        )
    return a


def check_projector(m, policy: NumericPolicy | None = None) -> np.ndarray:
    """Validate an orthogonal projector: Hermitian, idempotent, integer trace."""
    pol = default_policy(policy)
    a = as_square_matrix(m)
    herm = max_norm(a - a.conj().T)
    if herm > pol.projector_tol:
        raise ValidationError(f"projector is not Hermitian: defect {herm:.3e}")
    idem = max_norm(a @ a - a)
    if idem > pol.projector_tol:
        raise ValidationError(f"projector is not idempotent: defect {idem:.3e}")
    tr = a.trace().real
    if abs(tr - round(tr)) > pol.rank_tol:
        raise ValidationError(f"projector trace {tr!r} is not within {pol.rank_tol:.1e} of an integer")
    return a


def projector_rank(m, policy: NumericPolicy | None = None) -> int:
    """Rank of a validated projector, read off its trace."""
    a = check_projector(m, policy)
    return int(round(a.trace().real))


def check_density(m, policy: NumericPolicy | None = None) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, positive semidefinite."""
    pol = default_policy(policy)
    a = check_hermitian(m, policy)
    tr = a.trace()
    if abs(tr - 1.0) > pol.trace_tol:
        raise ValidationError(f"density matrix trace {tr} differs from 1 by more than {pol.trace_tol:.1e}")
    lowest = float(np.linalg.eigvalsh(a)[0])
    if lowest < -pol.psd_tol:
        raise ValidationError(f"density matrix has eigenvalue {lowest:.3e} below -{pol.psd_tol:.1e}")
    return a


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive.

    Ties resolve to the smallest row index, which keeps the output
    deterministic across runs and platforms.
    """
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    scale = np.abs(pivots)
    # Zero columns cannot occur for unitary eigenvector matrices.
    phases = np.where(scale > 0, pivots / np.where(scale > 0, scale, 1.0), 1.0)
    return vectors / phases


def eigh(m, policy: NumericPolicy | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvector columns phase-fixed.  Raises :class:`ValidationError` if the
    input fails the hermiticity check.
    """
    a = check_hermitian(m, policy)
    vals, vecs = np.linalg.eigh(a)
    return vals, _fix_phases(vecs)


def matrix_exp_unitary(h, dt: float, policy: NumericPolicy | None = None) -> np.ndarray:
    """``exp(-i * H * dt)`` for Hermitian ``H`` via eigendecomposition."""
    vals, vecs = eigh(h, policy)
    phases = np.exp(-1j * vals * float(dt))
    return (vecs * phases) @ vecs.conj().T


def trace_product(matrices) -> complex:
    """Trace of the ordered product of matrices.

    All factors must be square with one common dimension; the empty list is
    rejected.  The value is invariant under cyclic permutation of the
    arguments up to floating-point noise.
    """
    mats = [as_square_matrix(m) for m in matrices]
    if not mats:
        raise ValidationError("trace_product requires at least one matrix")
    dim = mats[0].shape[0]
    for i, m in enumerate(mats):
        if m.shape[0] != dim:
            raise ValidationError(
                f"trace_product dimension mismatch: argument {i} has dimension "
                f"{m.shape[0]}, expected {dim}"
            )
    if len(mats) == 1:
        return complex(mats[0].trace())
    # Contract left to right, then close the trace; O(n d^3).
    acc = mats[0]
    for m in mats[1:-1]:
        acc = acc @ m
    return complex(np.sum(acc * mats[-1].T))


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product with complex dtype."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
