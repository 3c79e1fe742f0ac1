"""Closed-form statistic counts for the rectifier models and for Portilla-Simoncelli.

The rectifier counts are upper bounds on the number of second-order
covariances (first-order means and low-pass terms excluded).  The PS counts
reproduce the usual per-category bookkeeping, where two categories exist only
in the reference Matlab implementation.
"""
from __future__ import annotations

from dataclasses import dataclass

from .statistics import build_index_set, build_shift_set, nominal_shift_count

__all__ = [
    "CountBreakdown",
    "count_alpha_statistics",
    "count_ps_statistics",
    "alpha_breakdown",
    "ALPHA_MODELS",
    "PS_MODELS",
]

ALPHA_MODELS = {
    "alpha-s": "S",
    "alpha-i": "I",
    "alpha-l": "L",
    "alpha-c": "C",
    "alpha-c-reduced": "C_reduced",
}
PS_MODELS = {"ps-gray": "gray", "ps-color": "color"}


@dataclass(frozen=True)
class CountBreakdown:
    """Per-category counts.

    ``rows`` holds ``(label, count, counted)`` triples; ``counted`` is False
    for categories left out of ``paper_counted``.  ``bounds`` holds
    ``(label, value)`` pairs for closed-form bounds shown alongside.
    """

    model: str
    rows: tuple
    total: int
    paper_counted: int
    bounds: tuple = ()

    def as_dict(self):
        return {
            "model": self.model,
            "categories": [{"name": r[0], "count": r[1], "counted": r[2]} for r in self.rows],
            "total": self.total,
            "paper_counted": self.paper_counted,
            "bounds": {label: value for label, value in self.bounds},
        }

    def as_text(self):
        labels = [r[0] for r in self.rows] + [b[0] for b in self.bounds] + ["paper-counted"]
        width = max(map(len, labels))
        lines = [self.model]
        for label, value, counted in self.rows:
            mark = "" if counted else " *"
            lines.append(f"  {label:<{width}}  {value:>9d}{mark}")
        lines.append(f"  {'total':<{width}}  {self.total:>9d}")
        lines.append(f"  {'paper-counted':<{width}}  {self.paper_counted:>9d}")
        lines.append("  (* not part of paper-counted)")
        for label, value in self.bounds:
            lines.append(f"  {label:<{width}}  {value:>9d}")
        return "\n".join(lines)


def count_alpha_statistics(variant, j_max, l_count, alpha_count, shift_count):
    """Upper bound on the number of covariances of a rectifier model.

    Parameters
    ----------
    variant : {"S", "I", "L", "C", "C_reduced"}
    j_max, l_count, alpha_count : int
        ``J``, ``L`` and ``A``.
    shift_count : int
        Size of the shift set.

    Examples
    --------
    >>> count_alpha_statistics("I", 5, 4, 4, 41)
    39360
    """
    J, L, A, T = j_max, l_count, alpha_count, shift_count
    pairs = J * (J + 1) // 2
    if variant == "S":
        return (2 * J - 1) * L * L * A + J * L * A * T
    if variant == "I":
        return pairs * L * L * A * T
    if variant == "L":
        return pairs * L * L * A * A * T
    if variant == "C":
        return 9 * pairs * L * L * A * T
    if variant == "C_reduced":
        # 3 same-channel blocks with all shifts, 6 cross-channel blocks at tau = 0
        return 3 * pairs * L * L * A * T + 6 * pairs * L * L * A
    raise ValueError(f"unknown variant {variant!r}")


def count_ps_statistics(mode, j_max, l_count, delta):
    """Portilla-Simoncelli statistic counts for ``mode`` in {"gray", "color"}.

    Examples
    --------
    >>> b = count_ps_statistics("gray", 4, 4, 3)
    >>> b.total, b.paper_counted
    (792, 710)
    """
    J, L = j_max, l_count
    na2 = (2 * delta + 1) ** 2
    if mode == "gray":
        rows = (
            ("marginals of x", 6, True),
            ("wavelet marginals", 2 * (J + 1) + 1, True),
            ("raw autocorrelation", (J + 1) * (na2 + 1) // 2, True),
            ("magnitude autocorrelation",
             J * L * (na2 + 1) // 2 + J * L * (L - 1) // 2 + (J - 1) * L * L, True),
            ("magnitude means", J * L + 2, False),
            ("cross-scale phase", 2 * (J - 1) * L * L, True),
            ("real cousin correlation", J * L * L, False),
        )
    elif mode == "color":
        L3 = 3 * L
        rows = (
            ("marginals of x and PCA", 6 * 3 + 3 * 4, True),
            ("wavelet marginals", 6 * (J + 1) + 9, True),
            ("raw autocorrelation", 3 * (J + 2) * (na2 + 1) // 2, True),
            ("magnitude autocorrelation",
             3 * J * L * (na2 + 1) // 2 + J * L3 * (L3 - 1) // 2 + (J - 1) * L3 * L3, True),
            ("magnitude means", 3 * (J * L + 2), False),
            ("cross-scale phase", (J - 1) * L3 * 2 * L3, True),
            ("real cousin correlation", J * L3 * L3, False),
        )
    else:
        raise ValueError(f"mode must be 'gray' or 'color', got {mode!r}")
    total = sum(r[1] for r in rows)
    counted = sum(r[1] for r in rows if r[2])
    return CountBreakdown(f"ps-{mode}", rows, total, counted)


def alpha_breakdown(variant, j_max, l_count, alpha_count):
    """Counts for a rectifier model: formula bounds and the enumerated set.

    The bound is given both with the rounded, deduplicated shift set and
    with the nominal ``1 + 2 L J`` shifts.
    """
    shifts = len(build_shift_set(j_max, l_count))
    nominal = nominal_shift_count(j_max, l_count)
    index_set = build_index_set(variant=variant, j_max=j_max, l_count=l_count,
                                alpha_count=alpha_count)
    channels = index_set.channels
    first = channels * j_max * l_count * alpha_count
    low = len(index_set.lowpass)
    built = len(index_set)
    rows = (
        ("built covariances", built, True),
        ("first-order means", first, False),
        ("low-pass covariances", low, False),
    )
    bounds = (
        (f"upper bound, |T| = {shifts}",
         count_alpha_statistics(variant, j_max, l_count, alpha_count, shifts)),
        (f"upper bound, |T| = {nominal} (nominal)",
         count_alpha_statistics(variant, j_max, l_count, alpha_count, nominal)),
    )
    return CountBreakdown(f"alpha-{variant}", rows, built + first + low, built, bounds)
