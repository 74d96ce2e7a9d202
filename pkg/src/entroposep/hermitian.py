"""Dense Hermitian and density-matrix algebra.

Matrices are plain ``numpy`` arrays.  Functions that need bipartite structure
take a :class:`DensityMatrix`, which carries optional subsystem dimensions.
Product-space indices follow the ``np.kron`` convention: row ``(i, i')`` of
``A (x) B`` is ``i * dim(B) + i'``.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import UsageError, ValidationError


class SpectralData(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated density matrix, optionally tagged with bipartite dims."""

    matrix: np.ndarray
    dims: Optional[Tuple[int, int]] = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def require_dims(self) -> Tuple[int, int]:
        if self.dims is None:
            raise UsageError("bipartite dims are not set on this density matrix")
        return self.dims


def as_hermitian(a, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Validate ``a`` as a Hermitian matrix and return an exactly Hermitian copy."""
    a = np.array(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValidationError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    dev = np.max(np.abs(a - a.conj().T))
    if dev > tol.hermitian_atol:
        raise ValidationError(f"matrix is not Hermitian (max deviation {dev:.3g})")
    return 0.5 * (a + a.conj().T)


def as_density(rho, dims=None, tol: Tolerances = DEFAULT_TOLERANCES) -> DensityMatrix:
    """Coerce ``rho`` to a :class:`DensityMatrix`, validating trace and positivity.

    Inputs failing PSD are rejected, never projected.
    """
    if isinstance(rho, DensityMatrix):
        if dims is None or tuple(dims) == rho.dims:
            return rho
        rho = rho.matrix
    h = as_hermitian(rho, tol)
    tr = np.trace(h).real
    if abs(tr - 1.0) > tol.trace_atol:
        raise ValidationError(f"trace is {float(tr)!r}, expected 1")
    lo = np.linalg.eigvalsh(h)[0]
    if lo < -tol.psd_atol:
        raise ValidationError(f"matrix is not positive semidefinite (min eigenvalue {lo:.3g})")
    if dims is not None:
        dims = (int(dims[0]), int(dims[1]))
        if dims[0] < 1 or dims[1] < 1 or dims[0] * dims[1] != h.shape[0]:
            raise ValidationError(f"dims {dims} incompatible with matrix size {h.shape[0]}")
    return DensityMatrix(h, dims)


def as_unit_vector(v, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    nrm = np.vdot(v, v).real
    if v.size < 1 or abs(nrm - 1.0) > tol.unit_norm_atol:
        raise ValidationError(f"vector is not normalized (squared norm {float(nrm)!r})")
    return v


def eig_hermitian(h, tol: Tolerances = DEFAULT_TOLERANCES) -> SpectralData:
    """Ascending eigendecomposition with a reproducible eigenvector gauge.

    Each eigenvector is rotated so that its first largest-modulus component
    is real and positive.  Degenerate subspaces keep the (deterministic)
    basis returned by LAPACK for the same input.
    """
    h = as_hermitian(h, tol)
    w, u = np.linalg.eigh(h)
    idx = np.argmax(np.abs(u), axis=0)
    pivot = u[idx, np.arange(u.shape[1])]
    u = u * (np.abs(pivot) / pivot)
    return SpectralData(w, u)


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a), np.asarray(b))


def partial_trace(rho, keep: str = "left") -> np.ndarray:
    """Trace out one factor of a bipartite state.

    ``keep="left"`` returns the reduced state on the first factor.
    """
    rho = as_density(rho) if not isinstance(rho, DensityMatrix) else rho
    n, n2 = rho.require_dims()
    t = rho.matrix.reshape(n, n2, n, n2)
    if keep == "left":
        return np.einsum("ijkj->ik", t)
    if keep == "right":
        return np.einsum("ijil->jl", t)
    raise UsageError(f"keep must be 'left' or 'right', got {keep!r}")


def partial_transpose(rho) -> np.ndarray:
    """Transpose on the second factor."""
    rho = as_density(rho) if not isinstance(rho, DensityMatrix) else rho
    n, n2 = rho.require_dims()
    t = rho.matrix.reshape(n, n2, n, n2).transpose(0, 3, 2, 1)
    return t.reshape(n * n2, n * n2)


def ppt_min_eigenvalue(rho) -> float:
    """Smallest eigenvalue of the partial transpose; negative means NPT."""
    return float(np.linalg.eigvalsh(partial_transpose(rho))[0])


def trace_distance(a, b) -> float:
    a = a.matrix if isinstance(a, DensityMatrix) else np.asarray(a)
    b = b.matrix if isinstance(b, DensityMatrix) else np.asarray(b)
    if a.shape != b.shape:
        raise UsageError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density_matrix(n: int, rng: np.random.Generator, floor: float = 0.0) -> np.ndarray:
    """Random full-rank state whose eigenvalues are all at least ``floor``."""
    if floor * n >= 1.0:
        raise UsageError(f"eigenvalue floor {floor} impossible in dimension {n}")
    p = floor + (1.0 - n * floor) * rng.dirichlet(np.ones(n))
    u = random_unitary(n, rng)
    rho = (u * p) @ u.conj().T
    return 0.5 * (rho + rho.conj().T)
