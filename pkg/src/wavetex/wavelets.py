"""Oriented Morlet filter bank and periodic wavelet transform.

Filters are built in the spatial domain on a grid large enough that the
Gaussian envelope vanishes, folded onto the periodic ``n x n`` grid, and
stored in the Fourier domain.  Convolutions are circular:
``(x * psi)(u) = sum_v x(u - v) psi(v)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

__all__ = [
    "FilterBank",
    "WaveletCoefficients",
    "build_filter_bank",
    "wavelet_transform",
    "adjoint_wavelet_transform",
    "littlewood_paley",
    "FAMILIES",
]

XI0 = 3 * np.pi / 4
SIGMA0 = 0.8


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Fourier-domain band-pass filters ``psi_{j,theta}`` and low-pass ``phi_J``.

    ``band_pass[j, l]`` is the filter at scale ``2**j`` and angle
    ``l * pi / l_count``.  The spatial versions are kept for inspection and
    for the slow reference paths in :mod:`wavetex.oracles`.
    """

    n: int
    j_max: int
    l_count: int
    family: str
    band_pass: np.ndarray  # (J, L, n, n) complex
    low_pass: np.ndarray  # (n, n) complex
    band_pass_spatial: np.ndarray = field(repr=False)
    low_pass_spatial: np.ndarray = field(repr=False)
    workers: int | None = field(default=None, compare=False)

    @property
    def thetas(self):
        return np.pi * np.arange(self.l_count) / self.l_count

    def index(self):
        """List of ``(j, l)`` pairs in storage order."""
        return [(j, l) for j in range(self.j_max) for l in range(self.l_count)]


@dataclass(frozen=True, eq=False)
class WaveletCoefficients:
    """Band-pass planes ``band[..., j, l, :, :]`` and low-pass plane ``low[..., :, :]``.

    A leading channel axis is present for color input.
    """

    band: np.ndarray
    low: np.ndarray


def _fold(arr, n):
    """Periodize a centered array whose first element sits at a multiple of -n."""
    m = arr.shape[0] // n
    return arr.reshape(m, n, m, n).sum(axis=(0, 2))


def _support_half_width(n, width):
    # envelope exp(-d^2 / (2 width^2)) < 1e-20 beyond ~9.6 widths
    periods = max(1, int(np.ceil(9.6 * width / n)))
    return periods * n


def _morlet_spatial(n, j, theta, l_count, xi0=XI0, sigma0=SIGMA0):
    slant = 4.0 / l_count
    sigma = sigma0 * 2**j
    half = _support_half_width(n, sigma / min(1.0, slant))
    k = np.arange(-half, half, dtype=np.float64)
    u1, u2 = np.meshgrid(k, k, indexing="ij")
    c, s = np.cos(theta), np.sin(theta)
    v1 = (c * u1 + s * u2) / 2**j
    v2 = (-s * u1 + c * u2) / 2**j
    envelope = np.exp(-(v1**2 + slant**2 * v2**2) / (2 * sigma0**2))
    gabor = _fold(envelope * np.exp(1j * xi0 * v1), n)
    envelope = _fold(envelope, n)
    beta = gabor.sum() / envelope.sum()
    psi = gabor - beta * envelope
    return psi / np.abs(psi).sum()


def _gaussian_spatial(n, sigma):
    half = _support_half_width(n, sigma)
    k = np.arange(-half, half, dtype=np.float64)
    g = np.exp(-(k**2) / (2 * sigma**2))
    g2 = _fold(np.outer(g, g), n)
    return (g2 / g2.sum()).astype(np.complex128)


def _morlet_bank(n, j_max, l_count):
    thetas = np.pi * np.arange(l_count) / l_count
    psi = np.stack(
        [np.stack([_morlet_spatial(n, j, t, l_count) for t in thetas]) for j in range(j_max)]
    )
    phi = _gaussian_spatial(n, SIGMA0 * 2**j_max)
    return psi, phi


FAMILIES = {"morlet": _morlet_bank}


def build_filter_bank(n, j_max, l_count, family="morlet", workers=None):
    """Build the bank of ``j_max * l_count`` oriented wavelets plus one low-pass.

    Raises ``ValueError`` when ``2**j_max > n / 4`` or the family is unknown.
    """
    n, j_max, l_count = int(n), int(j_max), int(l_count)
    if n < 8 or n & (n - 1):
        raise ValueError(f"n must be a power of two >= 8, got {n}")
    if j_max < 1 or l_count < 1:
        raise ValueError("j_max and l_count must be positive")
    if 2**j_max > n // 4:
        raise ValueError(f"scale 2**{j_max} too large for a {n}x{n} grid (need 2**J <= n/4)")
    try:
        builder = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown wavelet family {family!r}; known: {sorted(FAMILIES)}") from None
    psi, phi = builder(n, j_max, l_count)
    psi_hat = sfft.fft2(psi, workers=workers)
    # zero-mean is enforced on the spatial filter; clear float residue at DC
    psi_hat[..., 0, 0] = 0.0
    phi_hat = sfft.fft2(phi, workers=workers)
    for a in (psi, phi, psi_hat, phi_hat):
        a.setflags(write=False)
    return FilterBank(n, j_max, l_count, family, psi_hat, phi_hat, psi, phi, workers)


def _check_size(x, bank):
    if x.shape[-2:] != (bank.n, bank.n):
        raise ValueError(f"image is {x.shape[-2:]}, filter bank expects {(bank.n, bank.n)}")


def wavelet_transform(x, bank):
    """Circular convolution of ``x`` with every filter of ``bank``.

    ``x`` has shape ``(n, n)`` or ``(C, n, n)``; the band-pass output has
    shape ``(..., J, L, n, n)``.
    """
    x = np.asarray(x, dtype=np.float64)
    _check_size(x, bank)
    xh = sfft.fft2(x, workers=bank.workers)
    band = sfft.ifft2(xh[..., None, None, :, :] * bank.band_pass, workers=bank.workers)
    low = sfft.ifft2(xh * bank.low_pass, workers=bank.workers)
    return WaveletCoefficients(band, low)


def adjoint_wavelet_transform(coeffs, bank):
    """Adjoint of :func:`wavelet_transform` for the real inner product.

    With ``<a, b> = sum Re(a conj(b))`` over all planes this satisfies
    ``<W x, y> == <x, W* y>`` for every real image ``x``.
    """
    band = np.asarray(coeffs.band)
    low = np.asarray(coeffs.low)
    _check_size(band, bank)
    _check_size(low, bank)
    bh = sfft.fft2(band, workers=bank.workers)
    acc = (bh * np.conj(bank.band_pass)).sum(axis=(-4, -3))
    acc = acc + sfft.fft2(low, workers=bank.workers) * np.conj(bank.low_pass)
    return sfft.ifft2(acc, workers=bank.workers).real


def littlewood_paley(bank):
    """Frequency coverage ``A(w)`` of the bank on the ``n x n`` Fourier grid.

    ``A(w) = sum_{j,l} (|psi(w)|^2 + |psi(-w)|^2) / 2 + |phi(w)|^2``.
    """
    p2 = np.abs(bank.band_pass) ** 2
    p2 = p2.sum(axis=(0, 1))
    flipped = np.roll(p2[::-1, ::-1], 1, axis=(0, 1))  # w -> -w
    return 0.5 * (p2 + flipped) + np.abs(bank.low_pass) ** 2
