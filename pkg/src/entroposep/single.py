"""Maximum-entropy continuous ensemble for a single system.

For a full-rank state rho the ensemble density is ``mu(phi) = exp<phi|X|phi>``
with X Hermitian and ``grad K(X) = rho``.  X commutes with rho, so the
problem reduces to n equations ``dK/dx_j = p_j`` in rho's eigenbasis, solved
by Newton's method with the exact Hessian of K.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import DomainError, EfficiencyError, IterationError, RangeError, UsageError
from .hermitian import as_density, eig_hermitian
from .kfunctional import k_grad_eigen, k_hessian_eigen, k_value
from .sphere import McEstimate, mc_projector_mean, mc_scalar_mean, sample_unit_vectors

MAX_ITERATIONS = 200
MIN_ACCEPTANCE = 1e-6


@dataclass(frozen=True, eq=False)
class EnsembleParam:
    """Hermitian X defining ``mu(phi) = exp<phi|X|phi>``.

    ``eigenvalues``/``eigenvectors`` hold X's spectral data; when X was
    solved for a state they are that state's eigenbasis (X commutes with it).
    """

    X: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    commutes_with_target: bool = False

    @classmethod
    def from_matrix(cls, x_op) -> "EnsembleParam":
        spec = eig_hermitian(x_op)
        return cls(spec.reconstruct(), spec.eigenvalues, spec.eigenvectors)

    @property
    def n(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True, eq=False)
class SolveReport:
    param: EnsembleParam
    iterations: int
    residual: float
    entropy: float
    history: list = field(default_factory=list)

    @property
    def X(self) -> np.ndarray:
        return self.param.X


def _newton(p, x0, tol, max_iter):
    x = x0.copy()
    r = k_grad_eigen(x) - p
    res = np.max(np.abs(r))
    history = [res]
    it = 0
    while res > tol:
        if it >= max_iter:
            raise IterationError(
                f"Newton did not converge in {max_iter} iterations (residual {res:.3g})",
                residual=res)
        it += 1
        step = np.linalg.solve(k_hessian_eigen(x), -r)
        t = 1.0
        while True:
            try:
                x_new = x + t * step
                r_new = k_grad_eigen(x_new) - p
                res_new = np.max(np.abs(r_new))
            except RangeError:
                res_new = np.inf
            if res_new < res or t < 1e-12:
                break
            t *= 0.5
        if not np.isfinite(res_new) or res_new >= res:
            # stalled at rounding level; accept if already good enough
            if res <= 10 * tol:
                break
            raise IterationError(f"line search failed (residual {res:.3g})", residual=res)
        x, r, res = x_new, r_new, res_new
        history.append(res)
    return x, it, res, history


def solve_single(rho, tol: float = 1e-10, max_iterations: int = MAX_ITERATIONS) -> SolveReport:
    """Find X with ``grad K(X) = rho``.

    Raises :class:`DomainError` for rank-deficient states and
    :class:`IterationError` if Newton fails to converge.
    """
    if tol < 1e-12:
        raise UsageError(f"tolerance must be at least 1e-12, got {tol}")
    rho = as_density(rho)
    spec = eig_hermitian(rho.matrix)
    p = spec.eigenvalues
    floor = DEFAULT_TOLERANCES.full_rank_floor
    if p[0] < floor:
        raise DomainError(
            f"robust separability requires full rank: smallest eigenvalue {p[0]:.3g} < {floor}")
    n = p.size
    x0 = np.log(n * p)
    x, it, res, history = _newton(p, x0, tol, max_iterations)
    u = spec.eigenvectors
    x_op = (u * x) @ u.conj().T
    x_op = 0.5 * (x_op + x_op.conj().T)
    param = EnsembleParam(x_op, x, u, commutes_with_target=True)
    return SolveReport(param, it, float(res), float(-np.dot(x, p)) + 0.0, history)


def ensemble_density(param: EnsembleParam, phi) -> np.ndarray:
    """``exp<phi|X|phi>`` for one vector or a batch of row vectors."""
    phi = np.asarray(phi, dtype=complex)
    if phi.shape[-1] != param.n:
        raise UsageError(f"vector dimension {phi.shape[-1]} does not match X ({param.n})")
    q = np.einsum("...i,ij,...j->...", phi.conj(), param.X, phi).real
    return np.exp(q)


def ensemble_entropy(param: EnsembleParam, rho) -> float:
    """Differential entropy at a solution: ``-tr(X rho)``."""
    r = rho.matrix if hasattr(rho, "matrix") else np.asarray(rho)
    return float(-np.trace(param.X @ r).real) + 0.0


def acceptance_rate(param: EnsembleParam) -> float:
    """Expected acceptance of uniform-proposal rejection sampling."""
    x = param.eigenvalues
    return k_value(x - x.max())


def sample_ensemble(param: EnsembleParam, rng: np.random.Generator,
                    size: Optional[int] = None) -> np.ndarray:
    """Draw from the density ``exp<phi|X|phi>`` by rejection against uniform.

    The envelope is ``exp(x_max)``; only ``X - x_max I`` enters, so shifting
    X by a multiple of the identity leaves the law unchanged.
    """
    acc = acceptance_rate(param)
    if acc < MIN_ACCEPTANCE:
        raise EfficiencyError(
            f"expected acceptance {acc:.3g} below {MIN_ACCEPTANCE}; "
            "eigenvalue spread of X is too large for rejection sampling")
    want = 1 if size is None else int(size)
    shifted = param.X - param.eigenvalues.max() * np.eye(param.n)
    out = []
    got = 0
    batch = max(64, int(1.2 * want / acc))
    while got < want:
        v = sample_unit_vectors(param.n, batch, rng)
        q = np.einsum("si,ij,sj->s", v.conj(), shifted, v).real
        keep = v[rng.random(batch) < np.exp(q)]
        out.append(keep)
        got += keep.shape[0]
    res = np.concatenate(out)[:want]
    return res[0] if size is None else res


def reconstruct_mc(param: EnsembleParam, m_samples: int, seed: int,
                   threads: Optional[int] = None) -> McEstimate:
    """Monte-Carlo estimate of the integral of ``mu(phi) |phi><phi|``."""
    return mc_projector_mean(lambda v: ensemble_density(param, v), param.n,
                             m_samples, seed, threads=threads)


def ensemble_log_density_moment(param: EnsembleParam, m_samples: int, seed: int):
    """MC estimate of ``-integral mu ln mu`` with its standard error."""
    def f(v):
        q = np.einsum("si,ij,sj->s", v.conj(), param.X, v).real
        return -np.exp(q) * q

    return mc_scalar_mean(f, param.n, m_samples, seed)

