"""Sensor-noise families and the derived floor/inverse/radius/gain quantities.

A noise model knows its density f and CDF F. Everything the estimator needs
is derived from those through four maps:

  g_floor(t)   infimum of f over |x| <= t + C, where C bounds the thresholds
  h_inverse(u) smallest t >= 0 with g_floor(t) = u
  radius(k)    slowly growing L1-ball radius d_k = sqrt(h(g(0)/alpha_k) + 1)
  beta_gain    per-step gain floor beta_k = g_floor(d_k * u_max)

Gaussian families use closed forms; any other unimodal family goes through
bisection on the strictly decreasing tail of g_floor.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)

# beta must stay strictly positive even when a density underflows
_BETA_FLOOR = float(np.finfo(np.float64).tiny)

_BISECT_TOL = 1e-10


@dataclass(frozen=True)
class GaussianNoise:
    """Zero-mean gaussian sensor noise with |threshold| bound C."""

    sigma: float = 1.0
    threshold_bound: float = 0.0

    def __post_init__(self):
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise DomainError("sigma must be a positive finite real")
        if not (self.threshold_bound >= 0.0 and math.isfinite(self.threshold_bound)):
            raise DomainError("threshold_bound must be a nonnegative finite real")

    def density(self, x):
        z = x / self.sigma
        return math.exp(-0.5 * z * z) / (self.sigma * _SQRT_2PI)

    def cdf(self, x):
        # same operation order as the compiled step kernel
        z = x / self.sigma
        return 0.5 * (1.0 + math.erf(z / _SQRT2))

    def g_floor(self, t):
        """inf of the density over |x| <= t + C; attained at the endpoints."""
        if t < 0.0:
            raise DomainError("g_floor needs t >= 0")
        return max(self.density(t + self.threshold_bound), _BETA_FLOOR)

    def h_inverse(self, u):
        """Smallest t >= 0 with g_floor(t) = u, in closed form."""
        g0 = self.g_floor(0.0)
        if not (0.0 < u <= g0 * (1.0 + 1e-12)):
            raise DomainError(f"h_inverse needs 0 < u <= g_floor(0) = {g0!r}")
        arg = -2.0 * math.log(min(u, g0) * self.sigma * _SQRT_2PI)
        s = self.sigma * math.sqrt(max(arg, 0.0))
        return max(0.0, s - self.threshold_bound)

    def sample(self, rng, n):
        return rng.normal(0.0, self.sigma, size=n)


@dataclass(frozen=True)
class UnimodalNoise:
    """User-supplied unimodal density/CDF pair with |threshold| bound C.

    h_inverse falls back to bisection on the decreasing map t -> g_floor(t);
    the interval upper end is doubled until it brackets the target.
    """

    density: Callable[[float], float]
    cdf: Callable[[float], float]
    mode: float = 0.0
    threshold_bound: float = 0.0
    sampler: Optional[Callable] = None

    def g_floor(self, t):
        if t < 0.0:
            raise DomainError("g_floor needs t >= 0")
        edge = t + self.threshold_bound
        lo = self.density(-edge)
        hi = self.density(edge)
        return max(min(lo, hi), _BETA_FLOOR)

    def h_inverse(self, u):
        g0 = self.g_floor(0.0)
        if not (0.0 < u <= g0 * (1.0 + 1e-12)):
            raise DomainError(f"h_inverse needs 0 < u <= g_floor(0) = {g0!r}")
        if u >= g0:
            return 0.0
        hi = 1.0
        for _ in range(1024):
            if self.g_floor(hi) < u:
                break
            hi *= 2.0
        else:
            raise DomainError("g_floor does not fall below u; density tail too heavy")
        lo = 0.0
        while hi - lo > _BISECT_TOL:
            mid = 0.5 * (lo + hi)
            if self.g_floor(mid) >= u:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def sample(self, rng, n):
        if self.sampler is None:
            raise DomainError("this noise family has no sampler attached")
        return self.sampler(rng, n)


class RadiusSchedule:
    """Cached ball radii d_k = sqrt(h(g(0)/alpha_k) + 1), alpha_k = (k+1)^a.

    The exponent must lie in (0, 1/4) so alpha_k grows without bound while
    alpha_k^2 / sqrt(k) still vanishes. The cache extends monotonically and
    is meant to be confined to a single run.
    """

    def __init__(self, noise, alpha_exponent=0.125):
        if not (0.0 < alpha_exponent < 0.25):
            raise DomainError("alpha_exponent must lie in (0, 1/4)")
        self.noise = noise
        self.alpha_exponent = alpha_exponent
        self._g0 = noise.g_floor(0.0)
        self._cache = []

    def alpha(self, k):
        if k < 0:
            raise DomainError("alpha is defined for k >= 0")
        return (k + 1.0) ** self.alpha_exponent

    def radius(self, k):
        """d_k, cached; extending the cache never changes earlier entries."""
        if k < 0:
            raise DomainError("radius is defined for k >= 0")
        cache = self._cache
        while len(cache) <= k:
            j = len(cache)
            u = self._g0 / self.alpha(j)
            cache.append(math.sqrt(self.noise.h_inverse(u) + 1.0))
        return cache[k]


def g_floor(model, t):
    return model.g_floor(t)


def h_inverse(model, u):
    return model.h_inverse(u)


def radius(schedule, k):
    return schedule.radius(k)


def beta_gain(model, d_k, u_max):
    """Gain floor beta_k = g_floor(d_k * u_max); strictly positive."""
    if d_k <= 0.0:
        raise DomainError("d_k must be positive")
    if u_max < 0.0:
        raise DomainError("u_max must be nonnegative")
    return model.g_floor(d_k * u_max)
