"""Phase-shifted rectifiers, phase harmonics and the rectified wavelet stack."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .wavelets import wavelet_transform

__all__ = [
    "phase_grid",
    "rectify",
    "rectifier_decomposition_check",
    "phase_harmonic",
    "rectifier_fourier_coefficient",
    "rectifier_fourier_coefficient_exact",
    "four_phase_weights",
    "RectifiedStack",
    "rectify_planes",
    "compute_representation",
]


def phase_grid(count):
    """Uniform phases ``2 pi a / count`` for ``a = 0 .. count-1``."""
    return 2 * np.pi * np.arange(count) / count


def rectify(z, alpha):
    """``max(0, Re(exp(i alpha) z))``, elementwise."""
    z = np.asarray(z)
    re = np.cos(alpha) * z.real - np.sin(alpha) * z.imag
    return np.maximum(re, 0.0)


def rectifier_decomposition_check(z):
    """Rebuild ``z`` from its four quarter-turn rectifications.

    ``rho_0(z) - rho_pi(z) - i (rho_{pi/2}(z) - rho_{3pi/2}(z))`` equals ``z``.
    The quarter-turn rotations are applied exactly (no trigonometric
    round-off) so the identity holds to the last bit up to the final sums.
    """
    z = np.asarray(z, dtype=np.complex128)
    re, im = z.real, z.imag
    r0 = np.maximum(re, 0.0)
    r_half = np.maximum(-im, 0.0)  # Re(i z) = -Im z
    r_pi = np.maximum(-re, 0.0)
    r_3half = np.maximum(im, 0.0)
    return (r0 - r_pi) - 1j * (r_half - r_3half)


def four_phase_weights():
    """Coefficients ``a`` with ``z = sum_a a[k] rho_{k pi/2}(z)``.

    The product ``a[k] * conj(a[k'])`` weights the four-phase rectifier
    correlations so that they sum to the raw correlation ``z conj(z')``.
    """
    return np.array([1.0, -1.0j, -1.0, 1.0j])


def phase_harmonic(z, k):
    """``|z| exp(i k arg z)`` with ``arg 0 = 0``."""
    z = np.asarray(z, dtype=np.complex128)
    mod = np.abs(z)
    if k == 1:
        return z.copy()
    phase = np.angle(z)
    return mod * np.exp(1j * k * phase)


def rectifier_fourier_coefficient(k, quadrature_points=2**20):
    """Fourier coefficient ``c_k`` of ``h(a) = max(0, cos a)`` by trapezoidal quadrature.

    ``c_k = (1 / 2 pi) int_0^{2 pi} h(a) exp(-i k a) da``.
    """
    k = int(k)
    if quadrature_points < 4 * abs(k) + 64:
        raise ValueError("quadrature_points must be >= 4|k| + 64")
    a = 2 * np.pi * np.arange(quadrature_points) / quadrature_points
    h = np.maximum(np.cos(a), 0.0)
    return complex(np.mean(h * np.exp(-1j * k * a)))


def rectifier_fourier_coefficient_exact(k):
    """Closed form of ``c_k``: ``1/4`` at ``|k| = 1``, else ``cos(k pi/2) / (pi (1 - k^2))``."""
    k = abs(int(k))
    if k == 1:
        return 0.25
    return np.cos(k * np.pi / 2) / (np.pi * (1 - k * k))


@dataclass(frozen=True, eq=False)
class RectifiedStack:
    """Rectified planes and the centering means.

    ``planes`` has shape ``(C, J, L, A, n, n)`` (``C = 1`` for gray images)
    and holds raw, uncentered values.  ``means`` has shape ``(C, J, L, A)``;
    it comes from the observation and is subtracted only when covariances
    are formed.  ``coeffs`` keeps the complex wavelet coefficients the
    planes were computed from.
    """

    planes: np.ndarray
    means: np.ndarray
    alphas: np.ndarray
    coeffs: object

    @property
    def count(self):
        return int(np.prod(self.planes.shape[:4]))

    def centered(self):
        return self.planes - self.means[..., None, None]


def rectify_planes(band, alphas):
    """Apply ``rho_alpha`` for each phase; ``band`` is ``(C, J, L, n, n)`` complex.

    Returns ``(C, J, L, A, n, n)``.
    """
    cos = np.cos(alphas)[:, None, None]
    sin = np.sin(alphas)[:, None, None]
    re = band.real[..., None, :, :]
    im = band.imag[..., None, :, :]
    return np.maximum(cos * re - sin * im, 0.0)


def compute_representation(x, bank, alphas, means=None):
    """Rectified wavelet stack of a gray ``(n, n)`` or color ``(3, n, n)`` image.

    When ``means`` is None the spatial averages of ``x``'s own planes are
    stored (observation pass); otherwise the supplied observation means are
    kept for centering.
    """
    x = np.asarray(x, dtype=np.float64)
    xc = x[None] if x.ndim == 2 else x
    coeffs = wavelet_transform(xc, bank)
    alphas = np.asarray(alphas, dtype=np.float64)
    planes = rectify_planes(coeffs.band, alphas)
    if means is None:
        means = planes.mean(axis=(-2, -1))
    else:
        means = np.asarray(means, dtype=np.float64)
        if means.shape != planes.shape[:4]:
            raise ValueError(f"means shape {means.shape} does not match stack {planes.shape[:4]}")
    return RectifiedStack(planes, means, alphas, coeffs)
