"""A few standard two-qubit states used in examples and tests."""

import numpy as np

from .hermitian import DensityMatrix, as_density


def maximally_mixed(n: int, dims=None) -> DensityMatrix:
    return as_density(np.eye(n) / n, dims=dims)


def singlet() -> np.ndarray:
    v = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2)
    return np.outer(v, v.conj())


def bell_phi_plus() -> np.ndarray:
    v = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2)
    return np.outer(v, v.conj())


def werner(p: float) -> DensityMatrix:
    """``p * |singlet><singlet| + (1 - p) * I/4``; separable iff ``p <= 1/3``."""
    return as_density(p * singlet() + (1.0 - p) * np.eye(4) / 4, dims=(2, 2))
