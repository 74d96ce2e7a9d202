"""Smeared spectral decomposition.

A full-rank state ``rho = sum_k p_k |e_k><e_k|`` is reproduced exactly by the
strictly positive density

    mu(phi) = C * sum_k (p_k - 1/((K+1) n)) |<e_k|phi>|^(2Kn),
    C = ((K+1) n)! / (K (Kn)! n!),

as long as every coefficient is positive, i.e. ``(K+1) n p_min > 1``.
Equivalently ``mu`` is the mixture with weights ``q_k`` of the normalized
component densities ``C_A |<e_k|phi>|^(2Kn)``, with
``C_A = ((K+1) n)! / ((K+1) (Kn)! n!)``.  Larger K concentrates each
component around its eigenvector.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError, UsageError
from .hermitian import SpectralData, as_density, eig_hermitian, trace_distance
from .sphere import McEstimate, mc_projector_mean, projector_moments, sample_unit_vectors


@dataclass(frozen=True, eq=False)
class SmearedDecomposition:
    spectral: SpectralData
    order: int
    coeffs: np.ndarray
    norm_const: float  # log C_A

    @property
    def n(self) -> int:
        return self.coeffs.size


def min_valid_order(p) -> int:
    """Smallest ``K >= 1`` with ``(K+1) n p_min > 1``."""
    p = np.asarray(p, dtype=float).ravel()
    if np.any(p <= 0):
        raise DomainError("all eigenvalues must be positive for a smeared decomposition")
    n = p.size
    k = max(1, int(math.floor(1.0 / (n * p.min()))))
    # guard the floor against rounding either way
    while k > 1 and k * n * p.min() > 1:
        k -= 1
    while (k + 1) * n * p.min() <= 1:
        k += 1
    return k


def smear_coefficients(p, order: int) -> np.ndarray:
    """``q_k = (K+1)/K * (p_k - 1/((K+1) n))``."""
    p = np.asarray(p, dtype=float).ravel()
    if order < 1:
        raise UsageError(f"smear order must be at least 1, got {order}")
    n = p.size
    bad = np.nonzero((order + 1) * n * p <= 1)[0]
    if bad.size:
        k = int(bad[0])
        raise DomainError(
            f"order {order} too small: eigenvalue p[{k}] = {float(p[k])!r} needs (K+1)*n*p > 1")
    return (order + 1) / order * (p - 1.0 / ((order + 1) * n))


def log_component_const(order: int, n: int) -> float:
    """``log( ((K+1)n)! / ((K+1) (Kn)! n!) )``."""
    k = order
    return float(gammaln((k + 1) * n + 1) - math.log(k + 1) - gammaln(k * n + 1) - gammaln(n + 1))


def smear(rho, order: Optional[int] = None) -> SmearedDecomposition:
    rho = as_density(rho)
    spec = eig_hermitian(rho.matrix)
    p = spec.eigenvalues
    if order is None:
        order = min_valid_order(p)
    q = smear_coefficients(p, order)
    return SmearedDecomposition(spec, int(order), q, log_component_const(order, p.size))


def smear_log_density(sd: SmearedDecomposition, phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex)
    if phi.shape[-1] != sd.n:
        raise UsageError(f"vector dimension {phi.shape[-1]} does not match ({sd.n})")
    overlaps = np.abs(phi @ sd.spectral.eigenvectors.conj()) ** 2
    with np.errstate(divide="ignore"):
        log_t = np.log(overlaps)
    kn = sd.order * sd.n
    return sd.norm_const + logsumexp(np.log(sd.coeffs) + kn * log_t, axis=-1)


def smear_density(sd: SmearedDecomposition, phi) -> np.ndarray:
    """Density value(s) at one vector or a batch of row vectors."""
    return np.exp(smear_log_density(sd, phi))


def sample_smeared(sd: SmearedDecomposition, rng: np.random.Generator,
                   size: Optional[int] = None, return_components: bool = False):
    """Exact draws from the smeared mixture.

    Pick component k with probability ``q_k``; its overlap
    ``t = |<e_k|phi>|^2`` is Beta(Kn+1, n-1); the rest of the vector is a
    uniform unit vector of the orthogonal complement, and the phase on
    ``e_k`` is uniform.
    """
    m = 1 if size is None else int(size)
    n = sd.n
    u = sd.spectral.eigenvectors
    comp = rng.choice(n, size=m, p=sd.coeffs / sd.coeffs.sum())
    theta = rng.uniform(0.0, 2 * np.pi, size=m)
    ek = u[:, comp].T
    if n == 1:
        phi = ek * np.exp(1j * theta)[:, None]
    else:
        t = rng.beta(sd.order * n + 1, n - 1, size=m)
        g = sample_unit_vectors(n, m, rng)
        g = g - ek * np.sum(ek.conj() * g, axis=1, keepdims=True)
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        phi = (np.sqrt(t) * np.exp(1j * theta))[:, None] * ek + np.sqrt(1.0 - t)[:, None] * g
    if size is None:
        phi, comp = phi[0], comp[0]
    return (phi, comp) if return_components else phi


def reconstruct_from_samples(vectors: np.ndarray) -> McEstimate:
    """Empirical mean of ``|phi><phi|`` over sampler output."""
    return projector_moments(vectors, np.ones(vectors.shape[0])).estimate()


def reconstruct_smeared_mc(sd: SmearedDecomposition, m_samples: int, seed: int,
                           threads: Optional[int] = None) -> McEstimate:
    """Reconstruction by weighting uniform samples with the smeared density."""
    return mc_projector_mean(lambda v: smear_density(sd, v), sd.n, m_samples, seed,
                             threads=threads)


@dataclass(frozen=True)
class ConvergencePoint:
    order: int
    concentration: float
    concentration_err: float
    trace_distance: float


def smear_convergence_curve(rho, orders: Sequence[int], m_samples: int,
                            seed: int = 0, threshold: float = 0.9):
    """Concentration of the smeared ensemble on the eigenvectors, per order.

    For each K, draw ``m_samples`` exact samples and report the fraction with
    ``max_k |<e_k|phi>|^2 > threshold`` (and its standard error), together
    with the trace distance between the empirical reconstruction and rho.
    """
    rho = as_density(rho)
    out = []
    children = np.random.SeedSequence(seed).spawn(len(orders))
    for order, ss in zip(orders, children):
        sd = smear(rho, order)
        rng = np.random.default_rng(ss)
        phi = sample_smeared(sd, rng, m_samples)
        overlaps = np.abs(phi @ sd.spectral.eigenvectors.conj()) ** 2
        hit = (overlaps.max(axis=1) > threshold).astype(float)
        frac = float(hit.mean())
        err = float(np.sqrt(frac * (1 - frac) / m_samples))
        td = trace_distance(reconstruct_from_samples(phi).mean, rho.matrix)
        out.append(ConvergencePoint(int(order), frac, err, td))
    return out
