from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace

VARIANTS = ("S", "I", "L", "C", "C_reduced")
COLOR_VARIANTS = ("C", "C_reduced")
BOUNDARIES = ("periodic", "windowed")


@dataclass(frozen=True)
class ModelConfig:
    """Everything that determines the statistics and the sampler.

    Defaults follow the published setting: Morlet wavelets, ``J = 5``,
    ``L = 4``, four phases, 10 restarts of 500 L-BFGS iterations with memory
    20, histogram matching at the end.
    """

    variant: str = "I"
    n: int = 256
    j_max: int = 5
    l_count: int = 4
    alpha_count: int = 4
    family: str = "morlet"
    boundary: str = "periodic"
    iterations_per_restart: int = 500
    restarts: int = 10
    lbfgs_memory: int = 20
    seed: int = 0
    histogram_match: bool = True
    histogram_match_between_restarts: bool = False
    # per-section loss weights: first-order means, covariances, low-pass
    weights: tuple = (1.0, 1.0, 1.0)
    grad_tol: float = 1e-10
    # "single" runs the covariance matrix products in float32
    precision: str = "double"
    jobs: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if self.alpha_count < 1 or self.l_count < 1 or self.j_max < 1:
            raise ValueError("j_max, l_count and alpha_count must be positive")
        if 2**self.j_max > self.n // 4:
            raise ValueError(f"j_max={self.j_max} too large for n={self.n} (need 2**J <= n/4)")
        if self.boundary == "windowed" and not self.n > 2 ** (self.j_max + 1) + 1:
            raise ValueError("windowed statistics need n > 2**(J+1) + 1")
        if self.lbfgs_memory < 1:
            raise ValueError("lbfgs_memory must be >= 1")
        if self.precision not in ("double", "single"):
            raise ValueError("precision must be 'double' or 'single'")
        if len(self.weights) != 3:
            raise ValueError("weights must hold three section weights")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @property
    def color(self):
        return self.variant in COLOR_VARIANTS

    @property
    def channels(self):
        return 3 if self.color else 1

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        d = asdict(self)
        d["weights"] = list(self.weights)
        d.pop("jobs")
        return d

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if "weights" in d:
            d["weights"] = tuple(d["weights"])
        return cls(**d)

    def statistics_hash(self):
        """Hash of the fields that fix the statistic layout and values."""
        keys = ("variant", "n", "j_max", "l_count", "alpha_count", "family", "boundary")
        payload = json.dumps({k: getattr(self, k) for k in keys}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]
