"""Limited-memory BFGS with a strong Wolfe line search.

The line search follows the bracketing/zoom scheme of Nocedal & Wright
(Algorithms 3.5 and 3.6) with safeguarded cubic interpolation.  Trial
points whose objective is not finite are treated as overshooting.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

__all__ = ["LBFGSResult", "lbfgs_minimize", "strong_wolfe", "two_loop"]


@dataclass
class LBFGSResult:
    x: np.ndarray
    f: float
    grad: np.ndarray
    n_evals: int
    n_iter: int
    message: str
    # one row per accepted iterate: (iteration, loss, grad_norm, wall_ms)
    history: list = field(default_factory=list)


def two_loop(g, pairs):
    """Return ``-H g`` for the L-BFGS inverse Hessian built from ``pairs``.

    ``pairs`` holds ``(s, y, 1 / y.s)`` tuples, oldest first.
    """
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * np.dot(s, q)
        q -= a * y
        alphas.append(a)
    s, y, _ = pairs[-1]
    q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return -q


def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimizer of the cubic interpolating two points and slopes, or None."""
    d1 = ga + gb - 3 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0:
        return None
    d2 = np.copysign(np.sqrt(disc), b - a)
    denom = gb - ga + 2 * d2
    if denom == 0:
        return None
    t = b - (b - a) * (gb + d2 - d1) / denom
    return t if np.isfinite(t) else None


def strong_wolfe(phi, f0, g0, step, c1=1e-4, c2=0.9, max_evals=25, step_max=1e10):
    """Find a step satisfying the strong Wolfe conditions.

    ``phi(t)`` returns ``(f, slope, payload)`` at step ``t``; ``f0`` and
    ``g0`` are the value and slope at 0 (``g0 < 0``).  Returns
    ``(t, f, payload, evals)`` or ``(None, None, None, evals)`` on failure.
    """
    evals = 0

    def probe(t):
        nonlocal evals
        evals += 1
        try:
            f, d, payload = phi(t)
        except FloatingPointError:
            return np.inf, np.nan, None
        if not np.isfinite(f):
            return np.inf, np.nan, None
        return f, d, payload

    def zoom(lo, f_lo, d_lo, p_lo, hi, f_hi, d_hi):
        while evals < max_evals:
            width = hi - lo
            t = None
            if np.isfinite(f_hi) and np.isfinite(d_hi):
                t = _cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi)
            lo_b, hi_b = sorted((lo + 0.1 * width, hi - 0.1 * width))
            if t is None or not lo_b <= t <= hi_b:
                t = 0.5 * (lo + hi)
            f, d, p = probe(t)
            if f > f0 + c1 * t * g0 or f >= f_lo:
                hi, f_hi, d_hi = t, f, d
            else:
                if abs(d) <= -c2 * g0:
                    return t, f, p
                if d * (hi - lo) >= 0:
                    hi, f_hi, d_hi = lo, f_lo, d_lo
                lo, f_lo, d_lo, p_lo = t, f, d, p
            if abs(hi - lo) <= 1e-16 * max(1.0, abs(lo)):
                break
        # no Wolfe point found; accept the best sufficient-decrease point seen
        if lo > 0 and p_lo is not None:
            return lo, f_lo, p_lo
        return None, None, None

    prev, f_prev, d_prev, p_prev = 0.0, f0, g0, None
    t = step
    while evals < max_evals:
        f, d, p = probe(t)
        if f > f0 + c1 * t * g0 or (prev > 0 and f >= f_prev):
            r = zoom(prev, f_prev, d_prev, p_prev, t, f, d)
            return r + (evals,)
        if abs(d) <= -c2 * g0:
            return t, f, p, evals
        if d >= 0:
            r = zoom(t, f, d, p, prev, f_prev, d_prev)
            return r + (evals,)
        prev, f_prev, d_prev, p_prev = t, f, d, p
        t = min(4.0 * t, step_max)
    return None, None, None, evals


def lbfgs_minimize(fun, x0, iterations, memory=20, *, c1=1e-4, c2=0.9, grad_tol=1e-10,
                   initial_step=1.0, callback=None):
    """Minimize ``fun`` with L-BFGS.

    Parameters
    ----------
    fun : callable
        ``fun(x) -> (f, grad)`` on flat float arrays.
    x0 : ndarray
        Starting point; any shape, flattened internally.
    iterations : int
        Maximum number of accepted steps.
    memory : int
        Number of stored curvature pairs.
    initial_step : float
        Scale of the first step (taken along ``-grad / |grad|_1``).
    callback : callable, optional
        Called as ``callback(iteration, x, f, grad)`` after each accepted step.

    Stops early when ``|grad| < grad_tol`` or when the line search fails on
    two consecutive iterations.  Always returns the best iterate found.
    """
    if memory < 1:
        raise ValueError("memory must be >= 1")
    shape = np.shape(x0)
    x = np.array(x0, dtype=np.float64).ravel()
    t0 = time.perf_counter()

    def wrapped(z):
        f, g = fun(z.reshape(shape))
        return float(f), np.asarray(g, dtype=np.float64).ravel()

    f, g = wrapped(x)
    n_evals = 1
    if not np.isfinite(f):
        raise FloatingPointError("objective is not finite at the starting point")
    gnorm = float(np.linalg.norm(g))
    history = [(0, f, gnorm, 0.0)]
    if gnorm < grad_tol:
        return LBFGSResult(x.reshape(shape), f, g.reshape(shape), n_evals, 0,
                           "gradient below tolerance", history)

    pairs = deque(maxlen=memory)
    failures = 0
    message = "iteration limit reached"
    it = 0
    while it < iterations:
        if pairs:
            d = two_loop(g, list(pairs))
            step = 1.0
        else:
            d = -g
            step = initial_step * min(1.0, 1.0 / np.abs(g).sum())
        slope = float(np.dot(g, d))
        if not slope < 0:
            pairs.clear()
            d = -g
            slope = -gnorm**2
            step = initial_step * min(1.0, 1.0 / np.abs(g).sum())

        def phi(t, d=d):
            z = x + t * d
            fz, gz = wrapped(z)
            return fz, float(np.dot(gz, d)), (z, gz)

        t, f_new, payload, evals = strong_wolfe(phi, f, slope, step, c1=c1, c2=c2)
        n_evals += evals
        if t is None:
            failures += 1
            if failures >= 2:
                message = "line search failed twice"
                break
            pairs.clear()
            continue
        failures = 0
        x_new, g_new = payload
        s = x_new - x
        y = g_new - g
        sy = float(np.dot(s, y))
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))
        x, f, g = x_new, f_new, g_new
        gnorm = float(np.linalg.norm(g))
        it += 1
        history.append((it, f, gnorm, 1e3 * (time.perf_counter() - t0)))
        if callback is not None:
            callback(it, x.reshape(shape), f, g.reshape(shape))
        if gnorm < grad_tol:
            message = "gradient below tolerance"
            break
    return LBFGSResult(x.reshape(shape), f, g.reshape(shape), n_evals, it, message, history)
