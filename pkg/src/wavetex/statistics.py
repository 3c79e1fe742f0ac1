"""Index sets, covariance statistics and their adjoint.

A statistic vector has three sections, in this order:

1. first-order means of every rectified plane,
2. shifted covariances ``C(g, g', tau)`` over the index set,
3. shifted (uncentered) correlations of the low-pass plane.

Planes are indexed by ``g = (c, j, l, a)``: channel, scale, orientation and
phase.  Covariances are evaluated with one matrix product per group of
entries sharing a window and a shift.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import COLOR_VARIANTS, VARIANTS, ModelConfig
from .representation import phase_grid, rectify_planes
from .wavelets import WaveletCoefficients, adjoint_wavelet_transform, wavelet_transform

__all__ = [
    "build_shift_set",
    "nominal_shift_count",
    "IndexSet",
    "table1_legal",
    "build_index_set",
    "validate_index_set",
    "window_mask",
    "StatisticsVector",
    "StatisticsOperator",
    "compute_statistics",
    "statistics_distance",
]

# column layout of IndexSet.entries
C1, J1, T1, A1, C2, J2, T2, A2, TAU = range(9)


def build_shift_set(j_max, l_count):
    """Integer shifts ``{0} U round(2**j (cos t, sin t))``, ``t = k pi / L``, ``k < 2L``.

    Returns an ``(m, 2)`` int array whose first row is ``(0, 0)``.  Shifts
    that coincide after rounding are kept once, in order of first appearance.
    """
    out = [(0, 0)]
    seen = {(0, 0)}
    for j in range(j_max):
        for k in range(2 * l_count):
            t = np.pi * k / l_count
            s = (int(np.rint(2**j * np.cos(t))), int(np.rint(2**j * np.sin(t))))
            if s not in seen:
                seen.add(s)
                out.append(s)
    return np.array(out, dtype=np.int64)


def nominal_shift_count(j_max, l_count):
    """Size of the shift set before rounding, ``1 + 2 L J``."""
    return 1 + 2 * l_count * j_max


def table1_legal(variant, c, j, t, a, c2, j2, t2, a2, tau_zero):
    """Vectorized membership test for the per-variant constraints (no dedup)."""
    if variant == "S":
        ok = (np.abs(j2 - j) <= 1) & (a2 == 0)
        ok &= tau_zero | ((j == j2) & (t == t2))
        return ok & (c == 0) & (c2 == 0)
    if variant == "I":
        return (a2 == 0) & (c == 0) & (c2 == 0)
    if variant == "L":
        return (c == 0) & (c2 == 0) & np.ones_like(a2, dtype=bool)
    if variant == "C":
        return a2 == 0
    if variant == "C_reduced":
        return (a2 == 0) & (tau_zero | (c == c2))
    raise ValueError(f"unknown variant {variant!r}")


def _canonical(variant, c, j, t, a, c2, j2, t2, a2, tau_zero):
    """Keep ``j2 >= j``; at ``j == j2, tau == 0`` drop the larger of a symmetric pair."""
    later = (t > t2) | ((t == t2) & (a > a2)) | ((t == t2) & (a == a2) & (c > c2))
    twin = table1_legal(variant, c2, j2, t2, a2, c, j, t, a, tau_zero)
    return (j2 >= j) & ~((j == j2) & tau_zero & later & twin)


@dataclass(frozen=True, eq=False)
class IndexSet:
    """The covariance index set and the low-pass shift list.

    ``entries`` is an ``(m, 9)`` int array with columns
    ``c, j, l, a, c2, j2, l2, a2, tau_index``; ``lowpass`` is ``(k, 3)`` with
    columns ``c, c2, tau_index``.  Shift indices point into ``shifts``.
    """

    variant: str
    j_max: int
    l_count: int
    alpha_count: int
    channels: int
    shifts: np.ndarray
    entries: np.ndarray
    lowpass: np.ndarray

    def __len__(self):
        return len(self.entries)

    @property
    def plane_count(self):
        return self.channels * self.j_max * self.l_count * self.alpha_count

    def plane_ids(self, c, j, t, a):
        return ((c * self.j_max + j) * self.l_count + t) * self.alpha_count + a

    def plane_tuple(self, p):
        """Inverse of :meth:`plane_ids` for a single flat index."""
        return np.unravel_index(p, (self.channels, self.j_max, self.l_count, self.alpha_count))

    def key(self):
        return (self.variant, self.j_max, self.l_count, self.alpha_count, self.channels,
                len(self.entries), len(self.lowpass), self.shifts.tobytes())


def _variant_channels(variant):
    return 3 if variant in COLOR_VARIANTS else 1


def build_index_set(config=None, *, variant=None, j_max=None, l_count=None, alpha_count=None):
    """Enumerate the index set of a model variant.

    Accepts a :class:`ModelConfig` or the four parameters as keywords.
    """
    if config is not None:
        variant, j_max = config.variant, config.j_max
        l_count, alpha_count = config.l_count, config.alpha_count
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    channels = _variant_channels(variant)
    shifts = build_shift_set(j_max, l_count)
    grids = np.meshgrid(
        np.arange(j_max), np.arange(l_count), np.arange(alpha_count),
        np.arange(j_max), np.arange(l_count), np.arange(alpha_count),
        np.arange(len(shifts)), indexing="ij",
    )
    j, t, a, j2, t2, a2, tau = (g.ravel() for g in grids)
    tau_zero = tau == 0
    blocks = []
    for c in range(channels):
        for c2 in range(channels):
            cc = np.full_like(j, c)
            cc2 = np.full_like(j, c2)
            args = (variant, cc, j, t, a, cc2, j2, t2, a2, tau_zero)
            keep = table1_legal(*args) & _canonical(*args)
            blocks.append(np.stack([cc, j, t, a, cc2, j2, t2, a2, tau], axis=1)[keep])
    entries = np.concatenate(blocks)
    order = np.lexsort(entries.T[::-1])
    entries = np.ascontiguousarray(entries[order])
    low = [(c, c2, k) for c in range(channels) for c2 in range(c, channels)
           for k in range(len(shifts))]
    lowpass = np.array(low, dtype=np.int64).reshape(-1, 3)
    return IndexSet(variant, j_max, l_count, alpha_count, channels, shifts, entries, lowpass)


def validate_index_set(index_set):
    """Return True when every entry is legal for its variant and canonical."""
    e = index_set.entries
    if len(e) == 0:
        return True
    args = (index_set.variant, e[:, C1], e[:, J1], e[:, T1], e[:, A1], e[:, C2], e[:, J2],
            e[:, T2], e[:, A2], e[:, TAU] == 0)
    ok = table1_legal(*args) & _canonical(*args)
    uniq = len(np.unique(e, axis=0)) == len(e)
    return bool(np.all(ok)) and uniq


def window_mask(n, level):
    """Indicator of ``{u : 2**level <= u_i < n - 2**level}``."""
    m = np.zeros(n, dtype=bool)
    m[2**level: n - 2**level] = True
    return np.outer(m, m)


@dataclass(eq=False)
class StatisticsVector:
    """Flat statistic values with their layout.

    ``sizes`` gives the lengths of the first-order, covariance and low-pass
    sections.  ``index_set`` resolves positions to index descriptors.
    """

    values: np.ndarray
    sizes: tuple
    index_set: IndexSet = field(repr=False)
    boundary: str = "periodic"
    config_hash: str | None = None

    def __len__(self):
        return len(self.values)

    @property
    def first_order(self):
        return self.values[: self.sizes[0]]

    @property
    def second_order(self):
        return self.values[self.sizes[0]: self.sizes[0] + self.sizes[1]]

    @property
    def low_order(self):
        return self.values[self.sizes[0] + self.sizes[1]:]

    def layout_key(self):
        return (self.sizes, self.boundary, self.index_set.key())

    def descriptors(self):
        """One dict per value, in order, as written by :meth:`to_json_dict`."""
        iset = self.index_set
        out = []
        for p in range(self.sizes[0]):
            c, j, t, a = (int(v) for v in iset.plane_tuple(p))
            out.append({"section": "mean", "j": j, "theta_idx": t, "alpha_idx": a, "c": c})
        sh = iset.shifts
        for c, j, t, a, c2, j2, t2, a2, k in iset.entries.tolist():
            out.append({"section": "cov", "j": j, "theta_idx": t, "j2": j2, "theta2_idx": t2,
                        "alpha_idx": a, "alpha2_idx": a2, "c": c, "c2": c2,
                        "tau": [int(sh[k, 0]), int(sh[k, 1])]})
        for c, c2, k in iset.lowpass.tolist():
            out.append({"section": "lowpass", "c": c, "c2": c2,
                        "tau": [int(sh[k, 0]), int(sh[k, 1])]})
        return out

    def to_json_dict(self, config=None):
        entries = self.descriptors()
        for d, v in zip(entries, self.values.tolist()):
            d["value"] = v
        header = {
            "config_hash": self.config_hash,
            "variant": self.index_set.variant,
            "boundary": self.boundary,
            "sizes": list(self.sizes),
        }
        if config is not None:
            header["config"] = config.to_dict()
        return {"header": header, "entries": entries}


def statistics_distance(a, b):
    """Euclidean distance between two statistic vectors with identical layouts."""
    if isinstance(a, StatisticsVector) and isinstance(b, StatisticsVector):
        if a.layout_key() != b.layout_key():
            raise ValueError("statistic vectors have different layouts")
        a, b = a.values, b.values
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"layout mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


# stacked shifted planes per matrix product; bounds the temporary buffer
_MAX_STACK = 160


@dataclass
class _Chunk:
    shifts: list  # shifts applied to the column planes, in stacking order
    r_pos: np.ndarray  # row of each entry in the group's row block
    e_pos: np.ndarray  # column of each entry in the stacked shifted block
    out: np.ndarray  # positions in the covariance section


@dataclass
class _Group:
    window: int  # index into the operator's window list
    rows: object  # flat plane ids of g: a slice when contiguous, else an index array
    cols: object
    n_rows: int
    n_cols: int
    chunks: list


def _as_slice(ids):
    if ids[-1] - ids[0] + 1 == len(ids):
        return slice(int(ids[0]), int(ids[-1]) + 1)
    return ids


def _stop(ids):
    return ids.stop if isinstance(ids, slice) else int(ids[-1]) + 1


def _make_group(window, row_ids, col_ids, tau_ids, out, shifts):
    rows, r_pos = np.unique(row_ids, return_inverse=True)
    cols, c_pos = np.unique(col_ids, return_inverse=True)
    taus, t_pos = np.unique(tau_ids, return_inverse=True)
    r_pos, c_pos, t_pos = r_pos.ravel(), c_pos.ravel(), t_pos.ravel()
    per_chunk = max(1, _MAX_STACK // len(cols))
    chunks = []
    for start in range(0, len(taus), per_chunk):
        sel = (t_pos >= start) & (t_pos < start + per_chunk)
        chunk_shifts = [tuple(int(v) for v in shifts[k]) for k in taus[start:start + per_chunk]]
        e_pos = (t_pos[sel] - start) * len(cols) + c_pos[sel]
        chunks.append(_Chunk(chunk_shifts, r_pos[sel], e_pos, out[sel]))
    return _Group(window, _as_slice(rows), _as_slice(cols), len(rows), len(cols), chunks)


class StatisticsOperator:
    """Vectorized statistics of one model and the adjoint of their linearization.

    Parameters
    ----------
    bank : FilterBank
    index_set : IndexSet
    boundary : {"periodic", "windowed"}
    dtype : numpy dtype, optional
        Precision of the covariance matrix products.  ``float32`` roughly
        halves their cost; everything else stays in double precision.
    """

    def __init__(self, bank, index_set, boundary="periodic", dtype=np.float64):
        if boundary not in ("periodic", "windowed"):
            raise ValueError(f"unknown boundary mode {boundary!r}")
        if index_set.j_max != bank.j_max or index_set.l_count != bank.l_count:
            raise ValueError("index set references scales/orientations outside the filter bank")
        n = bank.n
        if boundary == "windowed" and not n > 2 ** (bank.j_max + 1) + 1:
            raise ValueError("windowed statistics need n > 2**(J+1) + 1")
        e = index_set.entries
        if len(e) and (e[:, [C1, C2]].max() >= index_set.channels
                       or e[:, [A1, A2]].max() >= index_set.alpha_count
                       or e[:, TAU].max() >= len(index_set.shifts)):
            raise ValueError("index set entry out of range")
        self.bank = bank
        self.dtype = np.dtype(dtype)
        self.index_set = index_set
        self.boundary = boundary
        self.n = n
        self.alphas = phase_grid(index_set.alpha_count)
        J, L, A, C = bank.j_max, bank.l_count, index_set.alpha_count, index_set.channels
        self.plane_shape = (C, J, L, A)
        self.n_planes = C * J * L * A
        self.sizes = (self.n_planes, len(e), len(index_set.lowpass))
        plane_scale = np.arange(self.n_planes) // (L * A) % J

        if boundary == "periodic":
            self.masks = [None]
            self.norms = [float(n * n)]
            entry_window = np.zeros(len(e), dtype=np.int64)
            self.first_window = np.zeros(self.n_planes, dtype=np.int64)
            self.low_window = 0
        else:
            # windows 0..J: window k covers 2**k <= u_i < n - 2**k
            self.masks = [window_mask(n, k) for k in range(J + 1)]
            self.norms = [float(m.sum()) for m in self.masks]
            entry_window = np.maximum(e[:, J1], e[:, J2])
            self.first_window = plane_scale
            self.low_window = J
        self.entry_window = entry_window

        rows_all = index_set.plane_ids(e[:, C1], e[:, J1], e[:, T1], e[:, A1])
        cols_all = index_set.plane_ids(e[:, C2], e[:, J2], e[:, T2], e[:, A2])
        self.groups = []
        # one group per (window, scale of g', channel of g', tau == 0); the
        # channel split only matters for color models
        color = index_set.channels > 1
        keys = np.stack([entry_window, e[:, J2],
                         e[:, C2] if color else np.zeros(len(e), dtype=np.int64),
                         (e[:, TAU] == 0) if color else np.zeros(len(e), dtype=np.int64)], axis=1)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.ravel()
        order = np.argsort(inv, kind="stable")
        bounds = np.searchsorted(inv[order], np.arange(len(uniq) + 1))
        for g in range(len(uniq)):
            idx = order[bounds[g]: bounds[g + 1]]
            self.groups.append(_make_group(int(uniq[g, 0]), rows_all[idx], cols_all[idx],
                                           e[idx, TAU], idx, index_set.shifts))
        # windows that actually occur, for computing observation means
        self.windows_used = sorted({g.window for g in self.groups})
        # planes [0, span) cover every row/column used in a window
        self.span = {}
        for g in self.groups:
            hi = max(_stop(g.rows), _stop(g.cols))
            self.span[g.window] = max(self.span.get(g.window, 0), hi)

    # -- representation -------------------------------------------------
    def _as_channels(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            x = x[None]
        if x.shape[0] != self.index_set.channels:
            raise ValueError(
                f"image has {x.shape[0]} channel(s), index set expects {self.index_set.channels}")
        if x.shape[-2:] != (self.n, self.n):
            raise ValueError(f"image is {x.shape[-2:]}, filter bank expects {(self.n, self.n)}")
        return x

    def planes(self, x):
        """Wavelet coefficients and flat rectified planes ``(P, n, n)``."""
        x = self._as_channels(x)
        coeffs = wavelet_transform(x, self.bank)
        r = rectify_planes(coeffs.band, self.alphas)
        return coeffs, r.reshape(self.n_planes, self.n, self.n)

    def _window_mean(self, r, w):
        m = self.masks[w]
        if m is None:
            return r.mean(axis=(-2, -1))
        return r[..., m].sum(axis=-1) / self.norms[w]

    def observation_means(self, x):
        """Centering means of ``x``, shape ``(W, P)``: one row per window."""
        _, r = self.planes(x)
        return np.stack([self._window_mean(r, w) for w in range(len(self.masks))])

    def _coerce_means(self, means):
        means = np.asarray(means, dtype=np.float64)
        if means.shape == self.plane_shape and len(self.masks) == 1:
            return means.reshape(1, self.n_planes)
        if means.shape == (len(self.masks), self.n_planes):
            return means
        if means.shape == (len(self.masks),) + self.plane_shape:
            return means.reshape(len(self.masks), self.n_planes)
        raise ValueError(f"means of shape {means.shape} do not fit this operator")

    def _centered(self, r, means, w):
        k = self.span[w]
        c = r[:k] - means[w][:k, None, None]
        m = self.masks[w]
        if m is not None:
            c *= m
        if self.dtype != np.float64:
            c = c.astype(self.dtype)
        return c

    # -- forward / adjoint ----------------------------------------------
    def forward(self, x, means=None):
        """Return ``(values, cache)``; ``cache`` feeds :meth:`backward`."""
        coeffs, r = self.planes(x)
        if means is None:
            means = np.stack([self._window_mean(r, w) for w in range(len(self.masks))])
        else:
            means = self._coerce_means(means)
        n_first, n_cov, n_low = self.sizes
        values = np.empty(n_first + n_cov + n_low)
        for w in sorted(set(self.first_window.tolist())):
            sel = self.first_window == w
            values[:n_first][sel] = self._window_mean(r[sel], w)
        cov = values[n_first: n_first + n_cov]
        for w in self.windows_used:
            cen = self._centered(r, means, w)
            for g in (g for g in self.groups if g.window == w):
                a = cen[g.rows].reshape(g.n_rows, -1)
                b = cen[g.cols]
                for ch in g.chunks:
                    gram = a @ self._stack(b, ch.shifts).T
                    cov[ch.out] = gram[ch.r_pos, ch.e_pos] / self.norms[w]
        low = self._lowpass_planes(coeffs)
        values[n_first + n_cov:] = self._lowpass_values(low)
        return values, (coeffs, r, means, low, np.ndim(x))

    def _stack(self, planes, shifts):
        """Rows ``roll(planes[i], s)`` for every shift ``s`` (outer) and plane ``i``."""
        out = np.empty((len(shifts),) + planes.shape, dtype=planes.dtype)
        for k, s in enumerate(shifts):
            out[k] = np.roll(planes, s, axis=(-2, -1))
        return out.reshape(len(shifts) * len(planes), -1)

    def _lowpass_planes(self, coeffs):
        low = coeffs.low.real
        m = self.masks[self.low_window]
        return low if m is None else low * m

    def _lowpass_values(self, low):
        sh = self.index_set.shifts
        lp = self.index_set.lowpass
        out = np.empty(len(lp))
        norm = self.norms[self.low_window]
        for i, (c, c2, k) in enumerate(lp):
            rolled = np.roll(low[c2], tuple(sh[k]), axis=(0, 1))
            out[i] = np.vdot(low[c], rolled) / norm
        return out

    def backward(self, cache, dvalues):
        """Gradient with respect to the image of ``dot(dvalues, values(x))``.

        The rectifier's derivative at exactly zero is taken as zero.
        """
        coeffs, r, means, low, ndim = cache
        dvalues = np.asarray(dvalues, dtype=np.float64)
        n_first, n_cov, _ = self.sizes
        dr = np.zeros_like(r)
        d_first = dvalues[:n_first]
        for w in sorted(set(self.first_window.tolist())):
            sel = self.first_window == w
            m = self.masks[w]
            scale = d_first[sel][:, None, None] / self.norms[w]
            dr[sel] += scale if m is None else scale * m
        d_cov = dvalues[n_first: n_first + n_cov]
        for w in self.windows_used:
            cen = self._centered(r, means, w)
            dcen = np.zeros(cen.shape)
            for g in (g for g in self.groups if g.window == w):
                a = cen[g.rows].reshape(g.n_rows, -1)
                b = cen[g.cols]
                da = np.zeros_like(a)
                db = np.zeros_like(b)
                for ch in g.chunks:
                    stacked = self._stack(b, ch.shifts)
                    gbar = np.zeros((g.n_rows, len(stacked)), dtype=self.dtype)
                    gbar[ch.r_pos, ch.e_pos] = d_cov[ch.out] / self.norms[w]
                    da += gbar @ stacked
                    dstack = (gbar.T @ a).reshape(len(ch.shifts), g.n_cols, self.n, self.n)
                    for s, d in zip(ch.shifts, dstack):
                        db += np.roll(d, (-s[0], -s[1]), axis=(-2, -1))
                dcen[g.rows] += da.reshape(g.n_rows, self.n, self.n)
                dcen[g.cols] += db
            m = self.masks[w]
            dr[: len(dcen)] += dcen if m is None else dcen * m
        # rectifier: d rho_a(z) = 1[rho > 0] Re(exp(i a) dz)
        C, J, L, A = self.plane_shape
        dr = np.where(r > 0, dr, 0.0).reshape(C, J, L, A, self.n, self.n)
        phase = np.exp(-1j * self.alphas)[:, None, None]
        dband = (dr * phase).sum(axis=3)
        dlow = self._lowpass_backward(low, dvalues[n_first + n_cov:])
        grad = adjoint_wavelet_transform(WaveletCoefficients(dband, dlow), self.bank)
        return grad[0] if ndim == 2 else grad

    def _lowpass_backward(self, low, dlow_vals):
        sh = self.index_set.shifts
        norm = self.norms[self.low_window]
        dlow = np.zeros_like(low)
        for (c, c2, k), dv in zip(self.index_set.lowpass, dlow_vals):
            s = tuple(sh[k])
            dlow[c] += dv / norm * np.roll(low[c2], s, axis=(0, 1))
            dlow[c2] += dv / norm * np.roll(low[c], tuple(-v for v in s), axis=(0, 1))
        m = self.masks[self.low_window]
        if m is not None:
            dlow = dlow * m
        return dlow.astype(np.complex128)

    def statistics(self, x, means=None, config_hash=None):
        values, _ = self.forward(x, means)
        return StatisticsVector(values, self.sizes, self.index_set, self.boundary, config_hash)


def compute_statistics(x, bank, index_set, means=None, boundary="periodic"):
    """Statistic vector of ``x``.

    ``means`` are the observation's centering means (see
    :meth:`StatisticsOperator.observation_means`); when None, ``x`` is
    centered with its own means.
    """
    op = StatisticsOperator(bank, index_set, boundary)
    return op.statistics(x, means)
