"""Uniform sampling and Monte-Carlo operator integrals on complex unit spheres.

The measure is the unitarily invariant probability measure on the unit
sphere of C^n (total mass 1), so every integral here is a plain expectation.
Points are drawn by normalizing a vector of 2n iid standard Gaussians.

Sampling is split into fixed-size shards with their own sub-seeds spawned
from the user seed.  Shard moments are merged in shard order, which makes
results bit-identical for any thread count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .errors import NumericError, UsageError

SHARD_SIZE = 1 << 15
# relative floor for noise bands: a constant integrand has zero variance, but
# its mean still carries summation rounding
ROUNDING_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class McEstimate:
    """Mean of a Hermitian-matrix-valued integrand with per-entry standard errors.

    ``std_err`` is the larger of the real-part and imaginary-part standard
    errors of each entry; ``trace_std_err`` is the standard error of the
    trace of the mean.
    """

    mean: np.ndarray
    std_err: np.ndarray
    samples: int
    seed: Optional[int] = None
    trace_std_err: float = float("nan")

    def within(self, target, sigmas: float = 4.0) -> bool:
        """True if real and imaginary parts of every entry lie in the noise band.

        The band never shrinks below ``ROUNDING_FLOOR`` times the largest
        entry of the mean.
        """
        d = self.mean - np.asarray(target)
        floor = ROUNDING_FLOOR * float(np.max(np.abs(self.mean), initial=0.0))
        band = np.maximum(sigmas * self.std_err, floor)
        return bool(np.all(np.abs(d.real) <= band) and np.all(np.abs(d.imag) <= band))

    @property
    def noise(self) -> float:
        """Aggregate (Frobenius) standard error."""
        return float(np.linalg.norm(self.std_err))


@dataclass
class _Moments:
    count: int
    mean: np.ndarray
    m2_re: np.ndarray
    m2_im: np.ndarray
    tr_mean: float
    tr_m2: float

    def merge(self, other: "_Moments") -> "_Moments":
        # pairwise mean/variance update; associative up to rounding, applied in fixed order.
        n = self.count + other.count
        delta = other.mean - self.mean
        dtr = other.tr_mean - self.tr_mean
        f = self.count * other.count / n
        return _Moments(
            n,
            self.mean + delta * (other.count / n),
            self.m2_re + other.m2_re + delta.real ** 2 * f,
            self.m2_im + other.m2_im + delta.imag ** 2 * f,
            self.tr_mean + dtr * (other.count / n),
            self.tr_m2 + other.tr_m2 + dtr * dtr * f,
        )

    def estimate(self, seed=None) -> McEstimate:
        m = self.count
        mean = 0.5 * (self.mean + self.mean.conj().T)
        var_re = np.maximum(self.m2_re, 0.0) / (m - 1)
        var_im = np.maximum(self.m2_im, 0.0) / (m - 1)
        se = np.sqrt(np.maximum(var_re, var_im) / m)
        se = np.maximum(se, se.T)
        tr_se = float(np.sqrt(max(self.tr_m2, 0.0) / (m - 1) / m))
        return McEstimate(mean, se, m, seed, tr_se)


def projector_moments(vectors: np.ndarray, weights: np.ndarray) -> _Moments:
    """Moments of ``w_s |v_s><v_s|`` over the rows of ``vectors``.

    Second moments are formed with matrix products instead of materializing
    the per-sample outer products.
    """
    m = vectors.shape[0]
    re, im = vectors.real, vectors.imag
    w = weights
    w2 = w * w
    mean = ((vectors * w[:, None]).T @ vectors.conj()) / m
    rr, ii, ri = re * re, im * im, re * im
    # Re(v_i conj(v_j)) = r_i r_j + m_i m_j ; Im(v_i conj(v_j)) = m_i r_j - r_i m_j
    a = (rr * w2[:, None]).T
    b = (ii * w2[:, None]).T
    c = (ri * w2[:, None]).T
    s_re = a @ rr + 2.0 * (c @ ri) + b @ ii
    s_im = b @ rr - 2.0 * (c @ ri) + a @ ii
    m2_re = s_re - m * mean.real ** 2
    m2_im = s_im - m * mean.imag ** 2
    np.fill_diagonal(m2_im, 0.0)
    tr = w * np.sum(rr + ii, axis=1)
    tr_mean = float(tr.mean())
    tr_m2 = float(np.sum((tr - tr_mean) ** 2))
    return _Moments(m, mean, m2_re, m2_im, tr_mean, tr_m2)


def shard_plan(m_samples: int, seed: int):
    """Deterministic ``(size, SeedSequence)`` pairs covering ``m_samples``."""
    if m_samples < 1:
        raise UsageError(f"sample count must be positive, got {m_samples}")
    sizes = [SHARD_SIZE] * (m_samples // SHARD_SIZE)
    if m_samples % SHARD_SIZE:
        sizes.append(m_samples % SHARD_SIZE)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    return list(zip(sizes, children))


def run_shards(fn, plan, threads: Optional[int] = None):
    """Map ``fn(size, seedseq)`` over a shard plan, preserving shard order."""
    if threads is None or threads <= 1 or len(plan) == 1:
        return [fn(size, ss) for size, ss in plan]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda item: fn(*item), plan))


def gaussian_to_sphere(g: np.ndarray, n: int) -> np.ndarray:
    z = g[:, :n] + 1j * g[:, n:2 * n]
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _normals(size, d, seedseq, low_discrepancy=False):
    if low_discrepancy:
        sob = stats.qmc.Sobol(d, scramble=True, seed=np.random.default_rng(seedseq))
        u = sob.random(size)
        u = np.clip(u, 1e-16, 1.0 - 1e-16)
        return stats.norm.ppf(u)
    return np.random.default_rng(seedseq).standard_normal((size, d))


def sample_unit_vectors(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` iid uniform unit vectors of C^n as rows."""
    if n < 1:
        raise UsageError(f"dimension must be positive, got {n}")
    return gaussian_to_sphere(rng.standard_normal((size, 2 * n)), n)


def sample_unit_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    return sample_unit_vectors(n, 1, rng)[0]


def draw_vectors(n: int, size: int, seedseq, low_discrepancy=False) -> np.ndarray:
    return gaussian_to_sphere(_normals(size, 2 * n, seedseq, low_discrepancy), n)


def draw_product_vectors(n: int, n2: int, size: int, seedseq, low_discrepancy=False):
    """Return ``(phi, psi)`` arrays of independent uniform unit vectors."""
    g = _normals(size, 2 * (n + n2), seedseq, low_discrepancy)
    return gaussian_to_sphere(g[:, :2 * n], n), gaussian_to_sphere(g[:, 2 * n:], n2)


def product_rows(phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Row-wise Kronecker product ``phi_s (x) psi_s``."""
    return (phi[:, :, None] * psi[:, None, :]).reshape(phi.shape[0], -1)


def _checked_weights(w, vectors):
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape[0] != vectors.shape[0]:
        raise UsageError("weight function must return one value per sample")
    bad = ~np.isfinite(w)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise NumericError(f"non-finite weight {float(w[k])!r} at sample {k}", sample=vectors[k])
    return w


def mc_projector_mean(
    weight: Optional[Callable[[np.ndarray], np.ndarray]],
    n: int,
    m_samples: int,
    seed: int,
    threads: Optional[int] = None,
    low_discrepancy: bool = False,
) -> McEstimate:
    """Estimate the integral of ``weight(phi) |phi><phi|`` over the unit sphere of C^n.

    ``weight`` is vectorized: it receives an ``(m, n)`` array of unit vectors
    and returns ``m`` non-negative reals.  ``None`` means weight 1.
    """
    if m_samples < 2:
        raise UsageError("need at least 2 samples")

    def shard(size, ss):
        v = draw_vectors(n, size, ss, low_discrepancy)
        w = np.ones(size) if weight is None else _checked_weights(weight(v), v)
        return projector_moments(v, w)

    parts = run_shards(shard, shard_plan(m_samples, seed), threads)
    acc = parts[0]
    for p in parts[1:]:
        acc = acc.merge(p)
    return acc.estimate(seed)


def mc_product_projector_mean(
    weight: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]],
    n: int,
    n2: int,
    m_samples: int,
    seed: int,
    threads: Optional[int] = None,
    low_discrepancy: bool = False,
) -> McEstimate:
    """Estimate the integral of ``weight(phi, psi) |phi psi><phi psi|`` over S x S'."""
    if m_samples < 2:
        raise UsageError("need at least 2 samples")

    def shard(size, ss):
        phi, psi = draw_product_vectors(n, n2, size, ss, low_discrepancy)
        v = product_rows(phi, psi)
        w = np.ones(size) if weight is None else _checked_weights(weight(phi, psi), v)
        return projector_moments(v, w)

    parts = run_shards(shard, shard_plan(m_samples, seed), threads)
    acc = parts[0]
    for p in parts[1:]:
        acc = acc.merge(p)
    return acc.estimate(seed)


def mc_scalar_mean(fn, n: int, m_samples: int, seed: int, threads: Optional[int] = None):
    """Mean and standard error of a scalar integrand over the sphere of C^n."""

    def shard(size, ss):
        v = draw_vectors(n, size, ss)
        x = np.asarray(fn(v), dtype=float)
        mu = x.mean()
        return size, mu, float(np.sum((x - mu) ** 2))

    parts = run_shards(shard, shard_plan(m_samples, seed), threads)
    cnt, mu, m2 = parts[0]
    for c, u, q in parts[1:]:
        tot = cnt + c
        d = u - mu
        mu += d * c / tot
        m2 += q + d * d * cnt * c / tot
        cnt = tot
    return float(mu), float(np.sqrt(m2 / (cnt - 1) / cnt))


def log_moment_coefficient(m: int, n: int) -> float:
    """``log(m! (n-1)! / (m+n)!)``."""
    return float(gammaln(m + 1) + gammaln(n) - gammaln(m + n + 1))


def moment_projector_integral(e, m: int, n: Optional[int] = None) -> np.ndarray:
    """Closed form of the integral of ``|<e|phi>|^(2m) |phi><phi|``.

    Equals ``m! (n-1)! / (m+n)! * (m |e><e| + I)``.
    """
    e = np.asarray(e, dtype=complex).ravel()
    n = e.size if n is None else n
    if e.size != n:
        raise UsageError(f"vector has length {e.size}, expected {n}")
    if m < 0:
        raise UsageError(f"moment order must be non-negative, got {m}")
    coef = np.exp(log_moment_coefficient(m, n))
    return coef * (m * np.outer(e, e.conj()) + np.eye(n))
