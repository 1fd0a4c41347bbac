"""Bounded reference-trajectory generators: logistic map, constants, files."""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class ReferenceSpec:
    """What to track and for how long.

    kind "logistic" iterates y_{k+1} = r y_k (1 - y_k) from y0 (r in (0,4),
    y0 in (0,1), so every iterate stays in [0,1]); "constant" repeats value;
    "file" reads one value per line.
    """

    kind: str
    horizon: int
    r: Optional[float] = None
    y0: Optional[float] = None
    value: Optional[float] = None
    path: Optional[str] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise DomainError("horizon must be positive")
        if self.kind == "logistic":
            if self.r is None or not (0.0 < self.r < 4.0):
                raise DomainError("logistic reference needs r in (0, 4)")
            y0 = 0.7 if self.y0 is None else self.y0
            if not (0.0 < y0 < 1.0):
                raise DomainError("logistic reference needs y0 in (0, 1)")
            object.__setattr__(self, "y0", y0)
        elif self.kind == "constant":
            if self.value is None or not math.isfinite(self.value):
                raise DomainError("constant reference needs a finite value")
        elif self.kind == "file":
            if not self.path:
                raise DomainError("file reference needs a path")
        else:
            raise DomainError(f"unknown reference kind {self.kind!r}")


def generate(spec):
    """Length-horizon array of reference values, index 0 first."""
    n = spec.horizon
    if spec.kind == "logistic":
        out = np.empty(n)
        y = spec.y0
        for k in range(n):
            out[k] = y
            y = spec.r * y * (1.0 - y)
        return out
    if spec.kind == "constant":
        return np.full(n, float(spec.value))
    vals = np.loadtxt(spec.path, dtype=float, ndmin=1)
    if vals.size < n:
        raise ConfigError(
            f"reference file {spec.path} has {vals.size} values, need {n}")
    vals = vals[:n]
    if not np.all(np.isfinite(vals)):
        raise ConfigError(f"reference file {spec.path} contains NaN/Inf")
    return vals
