"""The trace functional K(X) = integral of exp<phi|X|phi> over the unit sphere.

K depends only on the eigenvalues x_1..x_n of X and equals ``(n-1)!`` times
the (n-1)-th divided difference of ``exp`` over them.  Divided differences
are taken from the corner entry of the exponential of the bidiagonal matrix
``diag(xs) + superdiag(1)``, which stays accurate when eigenvalues cluster
or coincide.  The partial-fraction sum and the two-term recurrence are kept
as independent cross-checks for well-separated arguments.
"""

import math

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import RangeError
from .hermitian import eig_hermitian

_TAYLOR_RADIUS = 0.5
_TAYLOR_EXTRA_TERMS = 20


def _check_args(xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float).ravel()
    if xs.size < 1:
        raise ValueError("need at least one argument")
    if not np.all(np.isfinite(xs)):
        raise RangeError("non-finite argument")
    lim = DEFAULT_TOLERANCES.exp_arg_max
    hi, lo = xs.max(), xs.min()
    if hi - lo > lim or abs(hi) > lim:
        raise RangeError(
            f"arguments out of range: need max-min <= {lim} and |max| <= {lim}, "
            f"got max={float(hi)!r}, min={float(lo)!r}")
    return xs


def _exp_dd2(a, b):
    # f[a, b] for exp without cancellation
    return np.exp(0.5 * (a + b)) * _sinhc(0.5 * (a - b))


def _sinhc(h):
    h = np.asarray(h, dtype=float)
    out = np.ones_like(h)
    big = np.abs(h) > 1e-4
    out[big] = np.sinh(h[big]) / h[big]
    hs = h[~big] ** 2
    out[~big] = 1.0 + hs / 6.0 * (1.0 + hs / 20.0)
    return out


def exp_bidiagonal(xs) -> np.ndarray:
    """Exponential of ``diag(xs) + superdiag(1)``.

    Entry ``(i, j)``, ``j >= i``, equals the divided difference of exp over
    ``xs[i..j]``.  The matrix is shifted by the midpoint of the arguments,
    scaled by ``2**-s`` until the diagonal fits in the Taylor radius, expanded
    by Horner's rule and squared back.  After every squaring the diagonal and
    first superdiagonal are reset to their exact values.  All entries are
    positive, so the squarings add no cancellation.
    """
    xs = np.asarray(xs, dtype=float)
    m = xs.size
    c = 0.5 * (xs.max() + xs.min())
    d = xs - c
    spread = np.max(np.abs(d))
    s = 0 if spread <= _TAYLOR_RADIUS else int(math.ceil(math.log2(spread / _TAYLOR_RADIUS)))
    h = 2.0 ** -s
    b = np.diag(d * h) + np.diag(np.full(m - 1, h), 1)
    terms = m + _TAYLOR_EXTRA_TERMS
    e = np.eye(m)
    for k in range(terms, 0, -1):
        e = np.eye(m) + (b @ e) / k
    e = np.triu(e)
    for level in range(s - 1, -1, -1):
        e = e @ e
        hl = 2.0 ** -level
        dl = d * hl
        e[np.diag_indices(m)] = np.exp(dl)
        if m > 1:
            e[np.arange(m - 1), np.arange(1, m)] = hl * _exp_dd2(dl[:-1], dl[1:])
    if s == 0:
        e[np.diag_indices(m)] = np.exp(d)
        if m > 1:
            e[np.arange(m - 1), np.arange(1, m)] = _exp_dd2(d[:-1], d[1:])
    return e * math.exp(c)


def divided_diff_exp(xs) -> float:
    """Divided difference of exp over ``xs`` (repeated values allowed)."""
    xs = _check_args(xs)
    if xs.size == 1:
        return math.exp(xs[0])
    # sort so the corner entry does not depend on argument order
    return float(exp_bidiagonal(np.sort(xs))[0, -1])


def k_value(xs) -> float:
    """K for an operator with eigenvalues ``xs``: ``(n-1)! exp[x_1..x_n]``."""
    xs = _check_args(xs)
    return math.factorial(xs.size - 1) * divided_diff_exp(xs)


def k_grad_eigen(xs) -> np.ndarray:
    """Partial derivatives of K with respect to each eigenvalue.

    ``dK/dx_j = (n-1)! exp[x_1..x_n, x_j]``.  These are the diagonal entries
    of grad K(X) in the eigenbasis of X.
    """
    xs = _check_args(xs)
    f = math.factorial(xs.size - 1)
    return np.array([f * divided_diff_exp(np.append(xs, x)) for x in xs])


def k_hessian_eigen(xs) -> np.ndarray:
    """Second partials of K in the eigenvalues.

    Off the diagonal ``(n-1)! exp[xs, x_i, x_j]``; on it the repeated
    argument doubles the derivative, giving ``2 (n-1)! exp[xs, x_j, x_j]``.
    """
    xs = _check_args(xs)
    n = xs.size
    f = math.factorial(n - 1)
    hess = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            v = f * divided_diff_exp(np.concatenate([xs, [xs[i], xs[j]]]))
            hess[i, j] = hess[j, i] = 2.0 * v if i == j else v
    return hess


def grad_k_operator(x_op) -> np.ndarray:
    """grad K at a Hermitian X; shares the eigenbasis of X."""
    spec = eig_hermitian(x_op)
    g = k_grad_eigen(spec.eigenvalues)
    u = spec.eigenvectors
    out = (u * g) @ u.conj().T
    return 0.5 * (out + out.conj().T)


def k_partial_fractions(xs) -> float:
    """``(n-1)! sum_k e^{x_k} / prod_{i != k} (x_k - x_i)``; distinct arguments only."""
    xs = np.asarray(xs, dtype=float).ravel()
    n = xs.size
    total = 0.0
    for k in range(n):
        others = np.delete(xs, k)
        total += math.exp(xs[k]) / np.prod(xs[k] - others)
    return math.factorial(n - 1) * total


def k_recurrence(xs) -> float:
    """K from the two-term recurrence in the last two arguments.

    ``F^n(x) = (n-1)/(x_{n-1} - x_n) * (F^{n-1}(x_1..x_{n-1}) - F^{n-1}(x_1..x_{n-2}, x_n))``
    with ``F^1(x) = e^x``.  At each level the pair with the widest gap is
    moved to the end (the value is symmetric); an all-equal tuple falls back
    to its exact limit ``e^x``.
    """
    xs = [float(x) for x in np.asarray(xs, dtype=float).ravel()]
    return _recur(xs)


def _recur(xs):
    n = len(xs)
    if n == 1:
        return math.exp(xs[0])
    i, j = int(np.argmax(xs)), int(np.argmin(xs))
    if xs[i] == xs[j]:
        return math.exp(xs[0])
    rest = [x for k, x in enumerate(xs) if k not in (i, j)]
    a, b = xs[i], xs[j]
    return (n - 1) / (a - b) * (_recur(rest + [a]) - _recur(rest + [b]))


def k_grad_qubit(x1: float, x2: float):
    """Closed-form qubit gradient ``(g_1, g_2)``; requires ``x1 != x2``."""
    d2 = (x1 - x2) ** 2
    g1 = (math.exp(x1) * (x1 - x2 - 1) + math.exp(x2)) / d2
    g2 = (math.exp(x2) * (x2 - x1 - 1) + math.exp(x1)) / d2
    return g1, g2
