"""Limited-memory BFGS with Armijo backtracking.

Works on any numpy array with the real inner product ``Re vdot(a, b)``, so
Hermitian matrices can be optimized directly: every iterate is a real linear
combination of Hermitian matrices and stays exactly Hermitian.

``fun`` returns ``(value, gradient)`` and may return ``value = inf`` for
points outside its domain; the line search then backtracks.  Iteration
stops when the gradient norm drops below ``gtol`` or an accepted step lowers
the value by less than ``ftol`` relative.  ``callback`` is called after each
accepted step with ``(x, value, grad)`` and may return True to stop early.
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np


@dataclass
class LbfgsResult:
    x: np.ndarray
    value: float
    grad: np.ndarray
    iterations: int
    evaluations: int
    converged: bool
    stopped: bool
    message: str
    values: list = field(default_factory=list)


def _dot(a, b):
    return float(np.vdot(a, b).real)


def minimize(fun, x0, *, gtol=1e-8, ftol=1e-15, max_iterations=200, memory=10,
             c1=1e-4, max_backtracks=50, callback=None) -> LbfgsResult:
    x = np.array(x0, copy=True)
    f, g = fun(x)
    nev = 1
    if not np.isfinite(f):
        return LbfgsResult(x, f, g, 0, nev, False, False, "non-finite value at start", [f])
    pairs = deque(maxlen=memory)
    values = [f]
    for it in range(1, max_iterations + 1):
        gnorm = np.sqrt(_dot(g, g))
        if gnorm <= gtol:
            return LbfgsResult(x, f, g, it - 1, nev, True, False, "gradient tolerance reached", values)
        # two-loop recursion
        q = g.copy()
        alphas = []
        for s, y, rho in reversed(pairs):
            a = rho * _dot(s, q)
            alphas.append(a)
            q = q - a * y
        if pairs:
            s, y, _ = pairs[-1]
            q = q * (_dot(s, y) / _dot(y, y))
        else:
            q = q / max(gnorm, 1.0)
        for (s, y, rho), a in zip(pairs, reversed(alphas)):
            b = rho * _dot(y, q)
            q = q + (a - b) * s
        d = -q
        slope = _dot(g, d)
        if slope >= 0:
            pairs.clear()
            d = -g / max(gnorm, 1.0)
            slope = _dot(g, d)
        t = 1.0
        for _ in range(max_backtracks):
            x_new = x + t * d
            f_new, g_new = fun(x_new)
            nev += 1
            if np.isfinite(f_new) and f_new <= f + c1 * t * slope:
                break
            t *= 0.5
        else:
            return LbfgsResult(x, f, g, it - 1, nev, False, False, "line search failed", values)
        s, y = x_new - x, g_new - g
        sy = _dot(s, y)
        if sy > 1e-12 * np.sqrt(_dot(s, s) * _dot(y, y)):
            pairs.append((s, y, 1.0 / sy))
        decrease = f - f_new
        x, f, g = x_new, f_new, g_new
        values.append(f)
        if callback is not None and callback(x, f, g):
            return LbfgsResult(x, f, g, it, nev, False, True, "stopped by callback", values)
        if decrease <= ftol * max(abs(f), 1.0):
            return LbfgsResult(x, f, g, it, nev, True, False, "no further decrease", values)
    converged = np.sqrt(_dot(g, g)) <= gtol
    return LbfgsResult(x, f, g, max_iterations, nev, converged, False,
                       "gradient tolerance reached" if converged else "iteration limit", values)
