"""Separability certificates for bipartite states.

A robustly separable state is reproduced by the product-state ensemble
``mu(phi, psi) = exp<phi psi|X|phi psi>`` for a Hermitian X on the product
space, i.e. ``grad K(X) = rho`` where K is the integral of that density over
S x S'.  X is found by minimizing the convex dual

    F(X) = K(X) - tr(X rho),    grad F = grad K(X) - rho,

with sample-average approximation: each epoch fixes a pool of product
vectors, runs L-BFGS on the resulting deterministic surrogate, and hands its
solution to the next epoch as a warm start.  The epoch solutions are
averaged and the result is checked on an independent validation pool.

For entangled states F is unbounded below (any entanglement witness is a
descent direction that never turns back), so the iterates run away; this is
reported as "no certificate", never as proof of entanglement.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import lbfgs
from .config import DEFAULT_TOLERANCES
from .errors import DomainError, RangeError, UsageError
from .hermitian import as_density, as_hermitian, partial_trace, ppt_min_eigenvalue
from .single import solve_single
from .sphere import (McEstimate, draw_product_vectors, mc_product_projector_mean,
                     product_rows, projector_moments, run_shards, shard_plan)

TRAIN, VALIDATE, VERIFY = 1, 2, 3
BASE_ACCEPT_THRESHOLD = 5e-3
INNER_GTOL = 1e-8


def default_accept_threshold(n: int, n2: int) -> float:
    """5e-3 at 2x2, growing like sqrt(n n' / 4) with the product dimension."""
    return BASE_ACCEPT_THRESHOLD * max(1.0, np.sqrt(n * n2 / 4.0))


@dataclass(frozen=True)
class SolveConfig:
    pool_size: int = 200_000
    refresh_epochs: int = 8
    accept_threshold: Optional[float] = None
    diverge_norm: float = 60.0
    max_iterations: int = 200
    seed: int = 0
    low_discrepancy: bool = False
    validate_size: int = 1_000_000
    threads: Optional[int] = None

    def check(self):
        if self.pool_size < 1000:
            raise UsageError(f"pool_size must be at least 1000, got {self.pool_size}")
        if not self.diverge_norm > 0:
            raise UsageError(f"diverge_norm must be positive, got {self.diverge_norm}")
        if self.refresh_epochs < 1:
            raise UsageError("refresh_epochs must be at least 1")
        if self.max_iterations < 1:
            raise UsageError("max_iterations must be at least 1")
        if self.validate_size < 2:
            raise UsageError("validate_size must be at least 2")
        if self.accept_threshold is not None and not self.accept_threshold > 0:
            raise UsageError("accept_threshold must be positive")


@dataclass(frozen=True, eq=False)
class ProductPool:
    phi: np.ndarray
    psi: np.ndarray
    vectors: np.ndarray

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def dims(self) -> Tuple[int, int]:
        return self.phi.shape[1], self.psi.shape[1]


def draw_pool(n: int, n2: int, size: int, seed, low_discrepancy: bool = False,
              threads: Optional[int] = None) -> ProductPool:
    """Materialize ``size`` uniform product pairs; ``seed`` may be an int or int list."""

    def shard(m, ss):
        return draw_product_vectors(n, n2, m, ss, low_discrepancy)

    parts = run_shards(shard, shard_plan(size, seed), threads)
    phi = np.concatenate([p[0] for p in parts])
    psi = np.concatenate([p[1] for p in parts])
    return ProductPool(phi, psi, product_rows(phi, psi))


def _quadratic_forms(x_op, vectors):
    q = np.einsum("si,si->s", vectors.conj() @ x_op, vectors).real
    lim = DEFAULT_TOLERANCES.exp_arg_max
    if q.size and np.max(np.abs(q)) > lim:
        raise RangeError(f"quadratic form {np.max(np.abs(q)):.4g} exceeds {lim}")
    return q


def _check_dims(x_op, pool):
    n, n2 = pool.dims
    if x_op.shape != (n * n2, n * n2):
        raise UsageError(f"X has shape {x_op.shape}, pool has dims {(n, n2)}")


def k_bi_mc(x_op, pool: ProductPool):
    """Pool mean of ``exp<phi psi|X|phi psi>`` and its standard error."""
    x_op = np.asarray(x_op, dtype=complex)
    _check_dims(x_op, pool)
    w = np.exp(_quadratic_forms(x_op, pool.vectors))
    return float(w.mean()), float(w.std(ddof=1) / np.sqrt(w.size))


def _weighted_mean(w, vectors):
    g = (vectors * w[:, None]).T @ vectors.conj() / w.size
    return 0.5 * (g + g.conj().T)


def grad_bi_mc(x_op, pool: ProductPool) -> McEstimate:
    """Pool mean of ``w |phi psi><phi psi|`` with ``w = exp<phi psi|X|phi psi>``."""
    x_op = np.asarray(x_op, dtype=complex)
    _check_dims(x_op, pool)
    w = np.exp(_quadratic_forms(x_op, pool.vectors))
    return projector_moments(pool.vectors, w).estimate()


def dual_objective(x_op, rho, pool: ProductPool) -> float:
    """``F(X) = K(X) - tr(X rho)`` on the pool."""
    r = rho.matrix if hasattr(rho, "matrix") else np.asarray(rho)
    k, _ = k_bi_mc(x_op, pool)
    return k - float(np.trace(np.asarray(x_op) @ r).real)


def dual_value_and_grad(x_op, rho_m, pool: ProductPool):
    """``(F, grad F)`` on the pool; ``F = inf`` where the exponent overflows."""
    try:
        q = _quadratic_forms(x_op, pool.vectors)
    except RangeError:
        return np.inf, np.zeros_like(x_op)
    w = np.exp(q)
    val = float(w.mean()) - float(np.vdot(x_op, rho_m).real)
    return val, _weighted_mean(w, pool.vectors) - rho_m


@dataclass(frozen=True)
class EpochTrace:
    epoch: int
    start_residual: float
    surrogate_start: float
    surrogate_end: float
    iterations: int
    grad_norm: float
    x_norm: float
    message: str
    values: list = field(default_factory=list, repr=False)


@dataclass(frozen=True, eq=False)
class SeparabilityCertificate:
    X: np.ndarray
    dims: Tuple[int, int]
    residual: float
    residual_noise: float
    accept_threshold: float
    samples_train: int
    samples_validate: int
    iterations: int
    seed: int
    trace: List[EpochTrace] = field(default_factory=list, repr=False)
    validation: Optional[McEstimate] = field(default=None, repr=False)

    issued = True


@dataclass(frozen=True, eq=False)
class NoCertificate:
    """Refusal to certify.  Not a proof of entanglement."""

    reason: str  # "divergence" or "stall"
    detail: str
    X: np.ndarray
    dims: Tuple[int, int]
    residual: Optional[float]
    residual_noise: Optional[float]
    iterations: int
    seed: int
    ppt_min_eigenvalue: float
    trace: List[EpochTrace] = field(default_factory=list, repr=False)

    issued = False


def product_warm_start(rho) -> np.ndarray:
    """``X_A (x) I + I (x) X_B`` from single-system solves on the marginals."""
    n, n2 = rho.require_dims()
    xa = solve_single(partial_trace(rho, "left")).X
    xb = solve_single(partial_trace(rho, "right")).X
    return np.kron(xa, np.eye(n2)) + np.kron(np.eye(n), xb)


def _fro(a) -> float:
    return float(np.linalg.norm(a))


def solve_bipartite(rho, cfg: SolveConfig = SolveConfig(), dims=None):
    """Try to certify separability of ``rho``.

    Returns a :class:`SeparabilityCertificate` or a :class:`NoCertificate`.
    """
    cfg.check()
    rho = as_density(rho, dims=dims)
    n, n2 = rho.require_dims()
    lo = np.linalg.eigvalsh(rho.matrix)[0]
    if lo < DEFAULT_TOLERANCES.full_rank_floor:
        raise DomainError(
            f"robust separability requires full rank: smallest eigenvalue {lo:.3g}")
    threshold = cfg.accept_threshold or default_accept_threshold(n, n2)
    rho_m = rho.matrix
    x = product_warm_start(rho)
    trace = []
    solutions = []
    total_it = 0

    def refuse(reason, detail, x_cur, residual=None, noise=None):
        return NoCertificate(reason, detail, x_cur, (n, n2), residual, noise, total_it,
                             cfg.seed, ppt_min_eigenvalue(rho), trace)

    for epoch in range(cfg.refresh_epochs):
        pool = draw_pool(n, n2, cfg.pool_size, [cfg.seed, TRAIN, epoch],
                         cfg.low_discrepancy, cfg.threads)
        f0, g0 = dual_value_and_grad(x, rho_m, pool)
        res = lbfgs.minimize(
            lambda z: dual_value_and_grad(z, rho_m, pool), x,
            gtol=INNER_GTOL, max_iterations=cfg.max_iterations,
            callback=lambda z, f, g: _fro(z) > cfg.diverge_norm)
        total_it += res.iterations
        x = res.x
        trace.append(EpochTrace(epoch, _fro(g0) if np.isfinite(f0) else np.inf, f0,
                                res.value, res.iterations, _fro(res.grad), _fro(x),
                                res.message, res.values))
        if _fro(x) > cfg.diverge_norm:
            return refuse("divergence",
                          f"|X|_F = {_fro(x):.4g} exceeded {cfg.diverge_norm} in epoch {epoch} "
                          f"while the surrogate fell to {res.value:.4g}", x)
        solutions.append(x)

    x_final = np.mean(solutions, axis=0)
    x_final = 0.5 * (x_final + x_final.conj().T)
    est = validation_estimate(x_final, n, n2, cfg.validate_size, [cfg.seed, VALIDATE],
                              cfg.threads, cfg.low_discrepancy)
    residual = _fro(est.mean - rho_m)
    noise = est.noise
    if residual <= threshold + 3.0 * noise:
        return SeparabilityCertificate(x_final, (n, n2), residual, noise, threshold,
                                       cfg.pool_size * cfg.refresh_epochs, cfg.validate_size,
                                       total_it, cfg.seed, trace, est)
    return refuse("stall",
                  f"validation residual {residual:.4g} above threshold {threshold:.4g} "
                  f"(+3 x noise {noise:.3g}) after {cfg.refresh_epochs} epochs",
                  x_final, residual, noise)


def validation_estimate(x_op, n, n2, m_samples, seed, threads=None,
                        low_discrepancy=False) -> McEstimate:
    """Streaming estimate of ``grad K(X)`` on a fresh pool."""
    x_op = np.asarray(x_op, dtype=complex)

    def weight(phi, psi):
        return np.exp(_quadratic_forms(x_op, product_rows(phi, psi)))

    return mc_product_projector_mean(weight, n, n2, m_samples, seed, threads=threads,
                                     low_discrepancy=low_discrepancy)


@dataclass(frozen=True, eq=False)
class VerificationReport:
    passed: bool
    residual: float
    noise: float
    entry_residuals: np.ndarray
    std_err: np.ndarray
    max_sigma: float
    samples: int
    seed: int
    sigmas: float = 4.0


def verify_certificate(rho, x_op, m_samples: int, seed: int, dims=None,
                       threads: Optional[int] = None, sigmas: float = 4.0) -> VerificationReport:
    """Re-evaluate ``grad K(X) - rho`` on an independent pool.

    Passes when the real and imaginary parts of every entry lie within
    ``sigmas`` standard errors of zero.
    """
    rho = as_density(rho, dims=dims)
    n, n2 = rho.require_dims()
    x_op = as_hermitian(x_op)
    if x_op.shape != rho.matrix.shape:
        raise UsageError(f"certificate has shape {x_op.shape}, state has {rho.matrix.shape}")
    est = validation_estimate(x_op, n, n2, m_samples, [seed, VERIFY], threads)
    d = est.mean - rho.matrix
    se = est.std_err
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.maximum(np.abs(d.real), np.abs(d.imag)) / se
    z = np.where(se > 0, z, np.where(np.abs(d) > 0, np.inf, 0.0))
    max_sigma = float(np.max(z))
    return VerificationReport(bool(max_sigma <= sigmas), _fro(d), est.noise, d, se,
                              max_sigma, m_samples, seed, sigmas)
