"""Image containers, seeded sampling, raster I/O and histogram matching.

Images are plain float64 numpy arrays: a gray plane has shape ``(n, n)`` and
a color image has shape ``(3, n, n)`` with channels ordered R, G, B.  The side
length must be a power of two no smaller than 8.  Pixel values read from disk
are scaled to ``[0, 1]``.
"""
from __future__ import annotations

import os

import numpy as np
from PIL import Image

__all__ = [
    "ImageSizeError",
    "check_image",
    "is_color",
    "make_rng",
    "sample_gaussian_image",
    "histogram_match",
    "load_image",
    "save_png",
    "to_uint8",
]

MIN_SIDE = 8


class ImageSizeError(ValueError):
    """Raised when an image is not square with a power-of-two side."""


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


def check_image(x, *, color=None):
    """Validate an image array and return it as float64.

    Parameters
    ----------
    x : array_like
        Array of shape ``(n, n)`` or ``(3, n, n)``.
    color : bool, optional
        If given, require a color (True) or gray (False) image.

    Returns
    -------
    ndarray
        The image as a float64 array (not copied when already float64).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3 and x.shape[0] == 3:
        side = x.shape[1:]
        is_col = True
    elif x.ndim == 2:
        side = x.shape
        is_col = False
    else:
        raise ImageSizeError(f"expected (n, n) or (3, n, n) array, got shape {x.shape}")
    if side[0] != side[1]:
        raise ImageSizeError(f"image must be square, got {side[0]}x{side[1]}")
    n = side[0]
    if n < MIN_SIDE or not _is_pow2(n):
        raise ImageSizeError(
            f"side length must be a power of two >= {MIN_SIDE}, got {n}; crop or resize upstream"
        )
    if color is not None and color != is_col:
        raise ImageSizeError("expected a color image" if color else "expected a gray image")
    if not np.all(np.isfinite(x)):
        raise ValueError("image contains NaN or Inf values")
    return x


def is_color(x):
    return np.ndim(x) == 3


def make_rng(seed):
    """Return a generator backed by the counter-based Philox4x64 bit generator.

    Philox output depends only on (key, counter), so a given seed produces the
    same stream on every platform numpy supports.
    """
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.Philox(seed))


def sample_gaussian_image(n, mean, std, seed, channels=None):
    """Draw an image of i.i.d. normal pixels.

    ``mean`` and ``std`` may be scalars, or length-3 sequences when
    ``channels=3`` (one value per color channel).
    """
    if not _is_pow2(int(n)) or n < MIN_SIDE:
        raise ImageSizeError(f"side length must be a power of two >= {MIN_SIDE}, got {n}")
    rng = make_rng(seed)
    shape = (n, n) if channels is None else (channels, n, n)
    mean = np.asarray(mean, dtype=np.float64)
    std = np.asarray(std, dtype=np.float64)
    if np.any(std < 0):
        raise ValueError("std must be non-negative")
    if channels is not None:
        mean = np.broadcast_to(mean, (channels,))[:, None, None]
        std = np.broadcast_to(std, (channels,))[:, None, None]
    return mean + std * rng.standard_normal(shape)


def _match_plane(synth, target):
    order = np.argsort(synth, axis=None, kind="stable")
    out = np.empty(synth.size, dtype=np.float64)
    out[order] = np.sort(target, axis=None)
    return out.reshape(synth.shape)


def histogram_match(synth, target):
    """Give ``synth`` the exact pixel-value multiset of ``target``.

    The k-th smallest pixel of ``synth`` receives the k-th smallest value of
    ``target``; ties in ``synth`` are ranked by raster-scan index.  Color
    images are matched channel by channel.
    """
    synth = np.asarray(synth, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if synth.shape != target.shape:
        raise ValueError(f"shape mismatch: {synth.shape} vs {target.shape}")
    if synth.ndim == 3:
        return np.stack([_match_plane(s, t) for s, t in zip(synth, target)])
    return _match_plane(synth, target)


def load_image(path, mode="gray"):
    """Read a PNG/PGM/PPM file into a float image scaled to [0, 1].

    In gray mode a color source is converted to the per-pixel mean of its
    R, G, B channels.  Raises ``ImageSizeError`` for non-square or
    non-power-of-two images and ``OSError`` for unreadable files.
    """
    if mode not in ("gray", "color"):
        raise ValueError(f"mode must be 'gray' or 'color', got {mode!r}")
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with Image.open(path) as im:
        im.load()
        arr = np.asarray(im)
        pil_mode = im.mode
    if pil_mode in ("I;16", "I;16B", "I;16L", "I"):
        scale = 65535.0
    elif arr.dtype == np.bool_:
        scale = 1.0
    else:
        scale = float(np.iinfo(arr.dtype).max) if np.issubdtype(arr.dtype, np.integer) else 1.0
    arr = arr.astype(np.float64) / scale
    if arr.ndim == 3:
        arr = arr[..., :3]  # drop alpha
        if arr.shape[-1] == 1:
            arr = arr[..., 0]
    if mode == "gray":
        if arr.ndim == 3:
            arr = arr.mean(axis=-1)
        return check_image(arr, color=False)
    if arr.ndim == 2:
        arr = np.stack([arr] * 3, axis=-1)
    return check_image(np.moveaxis(arr, -1, 0), color=True)


def to_uint8(x):
    """Clamp to [0, 1] and quantize by round(255 v)."""
    return np.round(255.0 * np.clip(x, 0.0, 1.0)).astype(np.uint8)


def save_png(path, x):
    """Write a gray ``(n, n)`` or color ``(3, n, n)`` image as 8-bit PNG."""
    q = to_uint8(np.asarray(x))
    if q.ndim == 3:
        q = np.moveaxis(q, 0, -1)
    Image.fromarray(q).save(path, format="PNG")
