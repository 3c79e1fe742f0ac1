import numpy as np
import pytest

from wavetex.oracles import naive_convolution
from wavetex.wavelets import (
    WaveletCoefficients,
    adjoint_wavelet_transform,
    build_filter_bank,
    littlewood_paley,
    wavelet_transform,
)


@pytest.fixture(scope="module")
def bank16():
    return build_filter_bank(16, 2, 4)


def test_bank_shapes():
    bank = build_filter_bank(64, 3, 4)
    assert bank.band_pass.shape == (3, 4, 64, 64)
    assert bank.low_pass.shape == (64, 64)
    assert bank.band_pass.shape[0] * bank.band_pass.shape[1] + 1 == 13
    np.testing.assert_allclose(bank.thetas, np.arange(4) * np.pi / 4)


def test_bank_rejects_large_scale_and_unknown_family():
    with pytest.raises(ValueError):
        build_filter_bank(64, 5, 4)
    with pytest.raises(ValueError):
        build_filter_bank(64, 2, 4, family="haar")


def test_zero_dc_and_finite():
    bank = build_filter_bank(64, 4, 4)
    peak = np.abs(bank.band_pass).max(axis=(-2, -1))
    assert np.all(np.abs(bank.band_pass[..., 0, 0]) / peak < 1e-12)
    assert np.all(np.isfinite(bank.band_pass)) and np.all(np.isfinite(bank.low_pass))
    assert abs(bank.low_pass[0, 0] - 1) < 1e-12


def test_filters_are_read_only():
    bank = build_filter_bank(32, 2, 2)
    with pytest.raises(ValueError):
        bank.band_pass[0, 0, 0, 0] = 1


def test_littlewood_paley_ratio():
    bank = build_filter_bank(256, 5, 4)
    a = littlewood_paley(bank)
    ratio = a.max() / a.reshape(-1)[1:].min()
    assert ratio <= 10


def test_delta_gives_filter(bank16):
    x = np.zeros((16, 16))
    x[0, 0] = 1
    c = wavelet_transform(x, bank16)
    np.testing.assert_allclose(c.band, bank16.band_pass_spatial, atol=1e-12)
    np.testing.assert_allclose(c.low.real, bank16.low_pass_spatial, atol=1e-12)


def test_constant_input(bank16):
    c = wavelet_transform(np.full((16, 16), 3.0), bank16)
    assert np.abs(c.band).max() <= 1e-10 * 3
    np.testing.assert_allclose(c.low, 3.0 * bank16.low_pass[0, 0], atol=1e-10)


def test_matches_direct_sum_8x8(rng):
    bank = build_filter_bank(8, 1, 2)
    x = rng.standard_normal((8, 8))
    c = wavelet_transform(x, bank)
    for t in range(2):
        ref = naive_convolution(x, bank.band_pass_spatial[0, t])
        assert np.abs(c.band[0, t] - ref).max() < 1e-10


def test_size_mismatch(bank16):
    with pytest.raises(ValueError):
        wavelet_transform(np.zeros((32, 32)), bank16)


def _random_coeffs(rng, shape_band, n):
    band = rng.standard_normal(shape_band) + 1j * rng.standard_normal(shape_band)
    low = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return WaveletCoefficients(band, low)


def test_adjoint_dot_product(bank16, rng):
    x = rng.standard_normal((16, 16))
    y = _random_coeffs(rng, bank16.band_pass.shape, 16)
    c = wavelet_transform(x, bank16)
    lhs = np.sum((c.band * np.conj(y.band)).real) + np.sum((c.low * np.conj(y.low)).real)
    rhs = np.sum(x * adjoint_wavelet_transform(y, bank16))
    assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


def test_adjoint_of_zero_and_gram_psd(bank16, rng):
    zero = WaveletCoefficients(np.zeros(bank16.band_pass.shape, complex), np.zeros((16, 16), complex))
    assert np.all(adjoint_wavelet_transform(zero, bank16) == 0)
    for _ in range(5):
        x = rng.standard_normal((16, 16))
        assert np.sum(x * adjoint_wavelet_transform(wavelet_transform(x, bank16), bank16)) >= 0


def test_linearity_translation_parseval(bank16, rng):
    x, y = rng.standard_normal((2, 16, 16))
    cx, cy = wavelet_transform(x, bank16), wavelet_transform(y, bank16)
    cxy = wavelet_transform(2 * x - 3 * y, bank16)
    np.testing.assert_allclose(cxy.band, 2 * cx.band - 3 * cy.band, atol=1e-12)
    shifted = wavelet_transform(np.roll(x, (3, -5), axis=(0, 1)), bank16)
    np.testing.assert_allclose(shifted.band, np.roll(cx.band, (3, -5), axis=(-2, -1)), atol=1e-10)
    xh = np.fft.fft2(x)
    for j in range(2):
        for t in range(4):
            space = np.sum(np.abs(cx.band[j, t]) ** 2)
            freq = np.sum(np.abs(xh * bank16.band_pass[j, t]) ** 2) / 16**2
            assert abs(space - freq) <= 1e-8 * freq


def test_batched_color_transform(rng):
    bank = build_filter_bank(16, 2, 2)
    x = rng.standard_normal((3, 16, 16))
    c = wavelet_transform(x, bank)
    assert c.band.shape == (3, 2, 2, 16, 16)
    np.testing.assert_allclose(c.band[1], wavelet_transform(x[1], bank).band)
