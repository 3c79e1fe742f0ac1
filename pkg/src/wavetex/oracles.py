"""Slow reference computations used to cross-check the fast paths.

Nothing here shares convolution or covariance code with the vectorized
modules: convolutions are literal sums over the filter support with modular
indexing, covariances are loops over pixels.  Sizes are capped at 32x32.
"""
from __future__ import annotations

import functools
import json
from dataclasses import asdict, dataclass

import numpy as np

from .config import ModelConfig
from .imagecore import make_rng
from .representation import (
    four_phase_weights,
    phase_harmonic,
    rectifier_decomposition_check,
    rectifier_fourier_coefficient,
    rectifier_fourier_coefficient_exact,
)
from .statistics import (
    C1, C2, J1, J2, T1, T2, A1, A2, TAU,
    IndexSet,
    StatisticsOperator,
    build_index_set,
    build_shift_set,
)
from .wavelets import build_filter_bank, wavelet_transform

__all__ = [
    "OracleReport",
    "naive_convolution",
    "naive_covariance",
    "naive_statistics",
    "convolution_check",
    "covariance_check",
    "prop1_check",
    "prop1_sweep",
    "prop2_check",
    "rectifier_check",
    "fourier_coefficient_check",
    "finite_difference_gradient",
    "gradient_check",
    "CHECKS",
    "run_all",
]

MAX_ORACLE_SIZE = 32


@dataclass
class OracleReport:
    """Outcome of one oracle comparison; ``passed`` means the error is within ``tolerance``."""

    name: str
    max_abs_err: float
    max_rel_err: float
    passed: bool
    tolerance: float

    def to_dict(self):
        return asdict(self)


def _report(name, abs_err, rel_err, tolerance, metric="rel"):
    err = rel_err if metric == "rel" else abs_err
    return OracleReport(name, float(abs_err), float(rel_err), bool(err <= tolerance), tolerance)


def _guard(n):
    if n > MAX_ORACLE_SIZE:
        raise ValueError(f"oracle paths are limited to n <= {MAX_ORACLE_SIZE} (got {n})")


def naive_convolution(x, filt):
    """``(x * f)(u) = sum_v x(u - v) f(v)`` with circular indexing.

    ``filt`` is an ``(n, n)`` spatial filter with its origin at index 0.
    """
    x = np.asarray(x)
    filt = np.asarray(filt)
    n = x.shape[0]
    _guard(n)
    out = np.zeros((n, n), dtype=np.result_type(x, filt))
    rows = np.arange(n)
    for v0 in range(n):
        for v1 in range(n):
            f = filt[v0, v1]
            if f == 0:
                continue
            out += f * x[np.ix_((rows - v0) % n, (rows - v1) % n)]
    return out


def naive_covariance(a, b, tau, mean_a=0.0, mean_b=0.0, window=None):
    """``(1/|W|) sum_u 1_W(u) 1_W(u - tau) (a(u) - m_a)(b(u - tau) - m_b)``.

    ``window`` is a boolean mask (all pixels when None); ``|W|`` is its size.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    n = a.shape[0]
    _guard(n)
    if window is None:
        window = np.ones((n, n), dtype=bool)
    total = 0.0
    for u0 in range(n):
        for u1 in range(n):
            s0, s1 = (u0 - tau[0]) % n, (u1 - tau[1]) % n
            if window[u0, u1] and window[s0, s1]:
                total += (a[u0, u1] - mean_a) * (b[s0, s1] - mean_b)
    return total / window.sum()


def _window(n, level):
    m = np.zeros((n, n), dtype=bool)
    lo, hi = 2**level, n - 2**level
    m[lo:hi, lo:hi] = True
    return m


def _naive_planes(x, bank, alphas):
    """Complex coefficients, rectified planes ``(C, J, L, A, n, n)`` and low-pass planes."""
    x = np.asarray(x, dtype=np.float64)
    xc = x[None] if x.ndim == 2 else x
    C, n = xc.shape[0], xc.shape[-1]
    J, L = bank.j_max, bank.l_count
    z = np.zeros((C, J, L, n, n), dtype=np.complex128)
    for c in range(C):
        for j in range(J):
            for t in range(L):
                z[c, j, t] = naive_convolution(xc[c], bank.band_pass_spatial[j, t])
    low = np.stack([naive_convolution(xc[c], bank.low_pass_spatial).real for c in range(C)])
    r = np.empty((C, J, L, len(alphas), n, n))
    for k, alpha in enumerate(alphas):
        r[:, :, :, k] = np.maximum(np.cos(alpha) * z.real - np.sin(alpha) * z.imag, 0.0)
    return z, r, low


def naive_statistics(x, bank, index_set, boundary="periodic", means_from=None):
    """Statistic vector built from literal sums, in the fast path's layout.

    Centering means come from ``means_from`` (``x`` itself when None).
    """
    n = bank.n
    _guard(n)
    A = index_set.alpha_count
    alphas = 2 * np.pi * np.arange(A) / A
    _, r, low = _naive_planes(x, bank, alphas)
    _, r_obs, _ = _naive_planes(x if means_from is None else means_from, bank, alphas)
    J = bank.j_max
    if boundary == "periodic":
        windows = {k: None for k in range(J + 1)}
    else:
        windows = {k: _window(n, k) for k in range(J + 1)}

    def mean(plane, level):
        w = windows[level]
        return plane.mean() if w is None else plane[w].mean()

    def win(level):
        return windows[level] if windows[level] is not None else np.ones((n, n), bool)

    vals = []
    C = index_set.channels
    for c in range(C):
        for j in range(J):
            for t in range(bank.l_count):
                for a in range(A):
                    vals.append(mean(r[c, j, t, a], j if boundary == "windowed" else 0))
    sh = index_set.shifts
    for c, j, t, a, c2, j2, t2, a2, k in index_set.entries.tolist():
        level = max(j, j2) if boundary == "windowed" else 0
        vals.append(naive_covariance(
            r[c, j, t, a], r[c2, j2, t2, a2], sh[k],
            mean(r_obs[c, j, t, a], level), mean(r_obs[c2, j2, t2, a2], level), win(level)))
    level = J if boundary == "windowed" else 0
    for c, c2, k in index_set.lowpass.tolist():
        vals.append(naive_covariance(low[c], low[c2], sh[k], window=win(level)))
    return np.array(vals)


# -- checks ---------------------------------------------------------------

def convolution_check(n=16, j_max=2, l_count=2, seed=0, tolerance=1e-10):
    """FFT wavelet transform against the literal circular sum."""
    bank = build_filter_bank(n, j_max, l_count)
    x = make_rng(seed).standard_normal((n, n))
    fast = wavelet_transform(x, bank)
    err = 0.0
    scale = 0.0
    for j in range(j_max):
        for t in range(l_count):
            ref = naive_convolution(x, bank.band_pass_spatial[j, t])
            err = max(err, np.abs(fast.band[j, t] - ref).max())
            scale = max(scale, np.abs(ref).max())
    ref = naive_convolution(x, bank.low_pass_spatial)
    err = max(err, np.abs(fast.low - ref).max())
    return _report("convolution", err, err / scale, tolerance, metric="abs")


def covariance_check(n=16, variant="I", j_max=2, l_count=2, alpha_count=4, boundary="periodic",
                     seed=0, tolerance=1e-10):
    """Vectorized statistics against pixel loops, means taken from a separate observation."""
    bank = build_filter_bank(n, j_max, l_count)
    iset = build_index_set(variant=variant, j_max=j_max, l_count=l_count, alpha_count=alpha_count)
    rng = make_rng(seed)
    shape = (3, n, n) if iset.channels == 3 else (n, n)
    obs = rng.standard_normal(shape)
    x = rng.standard_normal(shape)
    op = StatisticsOperator(bank, iset, boundary)
    fast, _ = op.forward(x, op.observation_means(obs))
    ref = naive_statistics(x, bank, iset, boundary, means_from=obs)
    err = np.abs(fast - ref).max()
    return _report(f"covariance-{variant}-{boundary}", err, err / np.abs(ref).max(), tolerance,
                   metric="abs")


@functools.lru_cache(maxsize=8)
def _quadrature_coefficients(k_max, points=2**20):
    """``c_k`` for ``|k| <= k_max`` by the trapezoidal rule, computed as one DFT."""
    if points < 4 * k_max + 64:
        raise ValueError("too few quadrature points")
    a = 2 * np.pi * np.arange(points) / points
    spec = np.fft.fft(np.maximum(np.cos(a), 0.0)) / points
    ks = np.arange(-k_max, k_max + 1)
    return ks, spec[ks % points]


def _harmonic_stack(z, k_max):
    return np.stack([phase_harmonic(z, k) for k in range(-k_max, k_max + 1)])


def _rectified(z, alphas):
    alphas = np.asarray(alphas, dtype=np.float64)[:, None, None]
    return np.maximum(np.cos(alphas) * z.real - np.sin(alphas) * z.imag, 0.0)


def _expansion(h1, h2s, alphas, alphas2, k_max):
    """Truncated expansion from harmonic stacks ``(2K+1, n, n)``; ``h2s`` already shifted."""
    ks, ck = _quadrature_coefficients(k_max)
    m = len(ks)
    wph = h1.reshape(m, -1) @ h2s.reshape(m, -1).conj().T / h1[0].size
    e1 = ck[None, :] * np.exp(1j * np.outer(alphas, ks))
    e2 = ck[None, :] * np.exp(1j * np.outer(alphas2, ks))
    return e1 @ wph @ e2.conj().T


def _prop1_errors(ra, rb_shift, rhs):
    """Absolute errors and errors relative to ``sqrt(E[ra^2] E[rb^2])`` (Cauchy-Schwarz)."""
    lhs = np.einsum("aij,bij->ab", ra, rb_shift) / ra[0].size
    err = np.abs(lhs - rhs)
    scale = np.sqrt(np.outer((ra**2).mean(axis=(1, 2)), (rb_shift**2).mean(axis=(1, 2))))
    return lhs, err, err / scale


def prop1_check(x, j, theta, j2, theta2, tau, alpha, alpha2, k_max, l_count=4,
                tolerance=1e-3):
    """Rectifier covariance against its truncated phase-harmonic expansion.

    Compares ``(1/n^2) sum_u rho_a(z(u)) rho_a2(z2(u - tau))`` with
    ``sum_{|k|,|k'| <= K} c_k c_k'^* e^{i(k a - k' a2)} C_wph(k, k')``,
    where ``C_wph`` correlates the phase harmonics ``[z]^k`` and ``[z2]^k'``.
    ``theta`` and ``theta2`` are orientation indices, ``alpha`` and
    ``alpha2`` angles in radians.  The relative error is taken against
    ``sqrt(E[rho_a^2] E[rho_a2^2])``, which bounds the covariance and stays
    meaningful when it vanishes (e.g. ``a2 = a + pi`` at ``tau = 0``).
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    _guard(n)
    bank = build_filter_bank(n, max(j, j2) + 1, l_count)
    z = naive_convolution(x, bank.band_pass_spatial[j, theta])
    z2s = np.roll(naive_convolution(x, bank.band_pass_spatial[j2, theta2]), tuple(tau), (0, 1))
    rhs = _expansion(_harmonic_stack(z, k_max), _harmonic_stack(z2s, k_max),
                     np.array([alpha]), np.array([alpha2]), k_max)
    lhs, err, rel = _prop1_errors(_rectified(z, [alpha]), _rectified(z2s, [alpha2]), rhs)
    rep = _report(f"prop1-K{k_max}", err.max(), rel.max(), tolerance)
    rep.values = (float(lhs[0, 0]), complex(rhs[0, 0]))
    return rep


def prop1_sweep(x, k_max, j_max=2, l_count=2, alpha_count=4, tolerance=1e-3):
    """:func:`prop1_check` over every plane pair, shift and phase pair at once."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    _guard(n)
    bank = build_filter_bank(n, j_max, l_count)
    alphas = 2 * np.pi * np.arange(alpha_count) / alpha_count
    z = [naive_convolution(x, bank.band_pass_spatial[j, t])
         for j in range(j_max) for t in range(l_count)]
    harm = [_harmonic_stack(zz, k_max) for zz in z]
    rect = [_rectified(zz, alphas) for zz in z]
    worst_abs = worst_rel = 0.0
    for ha, ra in zip(harm, rect):
        for hb, rb in zip(harm, rect):
            for tau in build_shift_set(j_max, l_count):
                s = tuple(int(v) for v in tau)
                rhs = _expansion(ha, np.roll(hb, s, (1, 2)), alphas, alphas, k_max)
                _, err, rel = _prop1_errors(ra, np.roll(rb, s, (1, 2)), rhs)
                worst_abs = max(worst_abs, err.max())
                worst_rel = max(worst_rel, rel.max())
    return _report(f"prop1-sweep-K{k_max}", worst_abs, worst_rel, tolerance)


def prop2_check(x=None, n=32, j_max=3, l_count=2, seed=0, tolerance=1e-8):
    """Four-phase weighted rectifier covariances against raw wavelet correlations.

    Rectifier covariances come from the statistics operator with zero
    centering means over every phase pair; the raw correlations
    ``(1/n^2) sum_u z(u) conj(z'(u - tau))`` from shifted products of the
    FFT coefficients.  Errors are relative to ``sqrt(C(z,z) C(z',z'))``.
    """
    if x is None:
        x = make_rng(seed).standard_normal((n, n))
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    _guard(n)
    bank = build_filter_bank(n, j_max, l_count)
    shifts = build_shift_set(j_max, l_count)
    A = 4
    g = np.stack(np.meshgrid(np.arange(j_max), np.arange(l_count), np.arange(A),
                             np.arange(j_max), np.arange(l_count), np.arange(A),
                             np.arange(len(shifts)), indexing="ij"), -1).reshape(-1, 7)
    zeros = np.zeros((len(g), 1), dtype=np.int64)
    entries = np.concatenate([zeros, g[:, :3], zeros, g[:, 3:]], axis=1)
    iset = IndexSet("L", j_max, l_count, A, 1, shifts, entries, np.zeros((0, 3), np.int64))
    op = StatisticsOperator(bank, iset)
    values, _ = op.forward(x, np.zeros((j_max, l_count, A))[None])
    cov = values[op.sizes[0]: op.sizes[0] + op.sizes[1]]
    w = four_phase_weights()
    weights = w[entries[:, A1]] * np.conj(w[entries[:, A2]])
    combined = np.zeros((j_max, l_count, j_max, l_count, len(shifts)), dtype=np.complex128)
    np.add.at(combined, (entries[:, J1], entries[:, T1], entries[:, J2], entries[:, T2],
                         entries[:, TAU]), weights * cov)
    z = wavelet_transform(x, bank).band
    power = np.mean(np.abs(z) ** 2, axis=(-2, -1))
    worst_abs = worst_rel = 0.0
    for j in range(j_max):
        for t in range(l_count):
            for j2 in range(j_max):
                for t2 in range(l_count):
                    for k, s in enumerate(shifts):
                        raw = np.mean(z[j, t] * np.conj(np.roll(z[j2, t2], tuple(s), (0, 1))))
                        err = abs(combined[j, t, j2, t2, k] - raw)
                        scale = np.sqrt(power[j, t] * power[j2, t2])
                        worst_abs = max(worst_abs, err)
                        worst_rel = max(worst_rel, err / scale)
    return _report("prop2", worst_abs, worst_rel, tolerance)


def rectifier_check(count=10_000, seed=0, tolerance=1e-14):
    """Four quarter-turn rectifiers rebuild ``z``."""
    rng = make_rng(seed)
    z = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    z *= np.exp(rng.uniform(-5, 5, count))
    err = np.abs(rectifier_decomposition_check(z) - z)
    return _report("rectifier", err.max(), (err / np.abs(z)).max(), tolerance)


def fourier_coefficient_check(k_max=16, tolerance=1e-10):
    """Quadrature ``c_k`` against the closed form."""
    err = max(abs(rectifier_fourier_coefficient(k) - rectifier_fourier_coefficient_exact(k))
              for k in range(-k_max, k_max + 1))
    return _report("fourier-coefficients", err, err / (1 / np.pi), tolerance, metric="abs")


def finite_difference_gradient(f, x, pixels, h=1e-5):
    """Central differences of scalar ``f`` at the flat indices ``pixels`` of ``x``."""
    x = np.array(x, dtype=np.float64)
    flat = x.reshape(-1)
    out = np.empty(len(pixels))
    for i, p in enumerate(pixels):
        keep = flat[p]
        flat[p] = keep + h
        fp = f(x)
        flat[p] = keep - h
        fm = f(x)
        flat[p] = keep
        out[i] = (fp - fm) / (2 * h)
    return out


def _kink_pixels(x, bank, alphas, h, margin):
    """Flat pixel indices whose finite-difference stencil may cross a rectifier kink.

    A pixel is excluded when some rectifier input lies within ``margin`` of
    zero, or within the largest change a step ``h`` at that pixel can cause.
    """
    xc = x[None] if x.ndim == 2 else x
    C, n = xc.shape[0], xc.shape[-1]
    z = wavelet_transform(xc, bank).band  # (C, J, L, n, n)
    cos = np.cos(alphas)[:, None, None, None, None, None]
    sin = np.sin(alphas)[:, None, None, None, None, None]
    inp = np.abs(cos * z.real - sin * z.imag)  # (A, C, J, L, n, n)
    bad = np.zeros((C, n, n), dtype=bool)
    psi = np.abs(bank.band_pass_spatial)  # (J, L, n, n)
    for a, c, j, t, u0, u1 in zip(*np.nonzero(inp < margin + h * psi.max())):
        # inputs at u move by h * |psi(u - p)| when pixel p moves by h
        reach = h * np.roll(psi[j, t][::-1, ::-1], (u0 + 1, u1 + 1), axis=(0, 1))
        bad[c] |= inp[a, c, j, t, u0, u1] < np.maximum(margin, 2 * reach)
    return np.flatnonzero(bad.reshape(-1))


def gradient_check(variant="I", n=16, j_max=2, l_count=2, alpha_count=4, boundary="periodic",
                   pixels=50, h=1e-5, seed=0, tolerance=1e-4):
    """Analytic loss gradient against central differences at sampled pixels.

    The loss is ``|C x - C x_obs|^2`` for two independent noise images.
    Pixels whose stencil could cross a rectifier kink are skipped.  The
    relative error of a pixel is taken against ``max(|g_i|, 1e-3 |g|_inf)``.
    """
    from .synthesis import Objective

    _guard(n)
    cfg = ModelConfig(variant=variant, n=n, j_max=j_max, l_count=l_count,
                      alpha_count=alpha_count, boundary=boundary)
    rng = make_rng(seed)
    shape = (3, n, n) if cfg.color else (n, n)
    obs = rng.uniform(0, 1, shape)
    x = rng.uniform(0, 1, shape)
    obj = Objective(obs, cfg)
    _, grad = obj.loss_and_gradient(x)
    grad = grad.reshape(-1)
    excluded = _kink_pixels(x, obj.bank, obj.operator.alphas, h, 1e-6)
    allowed = np.setdiff1d(np.arange(x.size), excluded)
    chosen = rng.choice(allowed, size=min(pixels, len(allowed)), replace=False)
    fd = finite_difference_gradient(obj.loss, x, chosen, h)
    an = grad[chosen]
    err = np.abs(fd - an)
    scale = np.maximum(np.abs(an), 1e-3 * np.abs(grad).max())
    rep = _report(f"gradient-{variant}-{boundary}", err.max(), (err / scale).max(), tolerance)
    rep.excluded = int(len(excluded))
    return rep


# check name -> callable returning a list of reports
CHECKS = {
    "convolution": lambda: [convolution_check()],
    "covariance": lambda: [covariance_check(variant=v, boundary=b)
                           for v in ("I", "C_reduced") for b in ("periodic", "windowed")],
    "prop1": lambda: [prop1_sweep(make_rng(0).standard_normal((16, 16)), 64)],
    "prop2": lambda: [prop2_check()],
    "rectifier": lambda: [rectifier_check()],
    "fourier": lambda: [fourier_coefficient_check()],
    "gradient": lambda: [gradient_check(variant=v) for v in ("S", "I", "L", "C")],
}


def run_all(only=None):
    """Run the oracle suite, or the checks named in ``only``."""
    names = list(CHECKS) if not only else list(only)
    unknown = [k for k in names if k not in CHECKS]
    if unknown:
        raise ValueError(f"unknown checks {unknown}; available: {sorted(CHECKS)}")
    reports = []
    for name in names:
        reports.extend(CHECKS[name]())
    return reports


def reports_to_json(reports):
    return json.dumps([r.to_dict() for r in reports], indent=2)
