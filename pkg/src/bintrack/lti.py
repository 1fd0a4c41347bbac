"""Backward-shift polynomials, stability checks, impulse responses, and exact ARX simulation."""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidPolynomialError, UnstablePolynomialError

STABILITY_MARGIN = 1e-9
TAIL_MASS_CUTOFF = 1e-12


def _as_coeffs(poly):
    """Coerce a Polynomial or array-like to a 1-D float array, constant term first."""
    if isinstance(poly, Polynomial):
        return poly.coeffs
    c = np.atleast_1d(np.asarray(poly, dtype=float))
    if c.ndim != 1 or c.size == 0:
        raise InvalidPolynomialError("coefficients must be a nonempty 1-D sequence")
    if not np.all(np.isfinite(c)):
        raise InvalidPolynomialError("coefficients must be finite")
    return c


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial in the backward-shift operator, constant term first.

    Trailing zero coefficients are trimmed so that ``degree`` is the index
    of the last stored coefficient.
    """

    coeffs: np.ndarray

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if c.ndim != 1 or c.size == 0:
            raise InvalidPolynomialError("coefficients must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(c)):
            raise InvalidPolynomialError("coefficients must be finite")
        trimmed = np.trim_zeros(c, "b")
        if trimmed.size == 0:
            trimmed = c[:1]
        object.__setattr__(self, "coeffs", trimmed.copy())
        self.coeffs.setflags(write=False)

    @property
    def degree(self):
        return self.coeffs.size - 1

    def __len__(self):
        return self.coeffs.size


def is_stable(poly, margin=STABILITY_MARGIN):
    """True iff every root of the polynomial has modulus > 1 + margin.

    Degree-0 polynomials have no roots and are stable, except the zero
    constant, which is rejected.
    """
    c = _as_coeffs(poly)
    trimmed = np.trim_zeros(c, "b")
    if trimmed.size == 0:
        raise InvalidPolynomialError("the zero polynomial has no stability status")
    if trimmed.size == 1:
        return True
    roots = np.polynomial.polynomial.polyroots(trimmed)
    return bool(np.all(np.abs(roots) > 1.0 + margin))


@dataclass(frozen=True)
class ImpulseResponse:
    """Truncated coefficients G_1..G_m of B(z)/A(z) with a fitted decay rate."""

    coeffs: np.ndarray
    decay_rate_estimate: float

    def __post_init__(self):
        self.coeffs.setflags(write=False)

    def __len__(self):
        return self.coeffs.size


def _expand(a, b, m):
    p = a.size - 1
    q = b.size
    g = np.empty(m)
    for i in range(1, m + 1):
        acc = b[i - 1] if i <= q else 0.0
        jmax = min(i - 1, p)
        for j in range(1, jmax + 1):
            acc -= a[j] * g[i - 1 - j]
        g[i - 1] = acc
    return g


def _fit_decay(g):
    """Log-linear fit on the upper envelope of |G_i|; returns (K, r).

    r = inf when the envelope has fewer than two distinct nonzero points
    (FIR tails are exactly zero).
    """
    mag = np.abs(g)
    env = np.maximum.accumulate(mag[::-1])[::-1]
    idx = np.nonzero(env > 0.0)[0]
    if idx.size < 2:
        k0 = float(env[idx[0]]) if idx.size else 0.0
        return k0, math.inf
    i = idx.astype(float) + 1.0
    y = np.log(env[idx])
    slope, intercept = np.polyfit(i, y, 1)
    if slope >= 0.0:
        return float(np.exp(intercept)), math.inf
    return float(np.exp(intercept)), float(-slope)


def _default_truncation(a, b):
    """Shortest m with the fitted tail mass below TAIL_MASS_CUTOFF."""
    p = a.size - 1
    q = b.size
    m = max(4 * (p + q), 32)
    for _ in range(32):
        g = _expand(a, b, m)
        k_fit, r = _fit_decay(g)
        if math.isinf(r):
            return max(q, 1)
        # tail bound: sum_{i>m} K e^{-r i} = K e^{-r(m+1)} / (1 - e^{-r})
        decay = math.exp(-r)
        need = math.log(k_fit * decay / (TAIL_MASS_CUTOFF * (1.0 - decay))) / r
        need = max(int(math.ceil(need)), q, 1)
        if need <= m:
            return need
        m = max(need, 2 * m)
    return m


def impulse_response(a, b, m=None):
    """Expand B(z)/A(z) into G_1..G_m via the convolution recursion.

    a must be monic-normalizable only in the sense a[0] != 0; the recursion
    divides through by a[0] implicitly when a[0] == 1 (the plant convention).
    m = None picks the shortest truncation whose fitted tail mass is below
    1e-12.
    """
    a = _as_coeffs(a)
    b = _as_coeffs(b)
    if not is_stable(a):
        raise UnstablePolynomialError("denominator polynomial is not stable")
    if a[0] != 1.0:
        raise InvalidPolynomialError("denominator must be monic (constant term 1)")
    if m is None:
        m = _default_truncation(a, b)
    m = int(m)
    if m < 1:
        raise InvalidPolynomialError("truncation length must be at least 1")
    g = _expand(a, b, m)
    _, r = _fit_decay(g)
    return ImpulseResponse(coeffs=g, decay_rate_estimate=r)


@dataclass
class PlantModel:
    """Ground-truth ARX plant A(z) y_{n+1} = B(z) u_n, simulated exactly.

    Histories start at zero (inputs before time 0 are zero). plant_step
    mutates the instance; distinct instances are independent.
    """

    a_poly: Polynomial
    b_poly: Polynomial
    output_history: np.ndarray = field(init=False)
    input_history: np.ndarray = field(init=False)

    def __init__(self, a, b):
        a_poly = a if isinstance(a, Polynomial) else Polynomial(a)
        b_poly = b if isinstance(b, Polynomial) else Polynomial(b)
        if a_poly.coeffs[0] != 1.0:
            raise InvalidPolynomialError("A(z) must be monic (constant term 1)")
        if b_poly.coeffs[0] == 0.0:
            raise InvalidPolynomialError("B(z) must have b_1 != 0")
        if not is_stable(a_poly):
            raise UnstablePolynomialError("A(z) is not stable")
        if not is_stable(b_poly):
            raise UnstablePolynomialError("B(z) is not stable")
        self.a_poly = a_poly
        self.b_poly = b_poly
        self.output_history = np.zeros(a_poly.degree)
        self.input_history = np.zeros(b_poly.degree + 1)

    def reset(self):
        self.output_history[:] = 0.0
        self.input_history[:] = 0.0

    def plant_step(self, u, noise=0.0):
        """Advance one step with input u; returns y_{n+1}.

        noise is an optional additive disturbance inside the recursion (the
        process-noise experiment form); the default reproduces the exact
        deterministic difference equation.
        """
        uh = self.input_history
        if uh.size > 1:
            uh[1:] = uh[:-1]
        uh[0] = u
        y_next = float(np.dot(self.b_poly.coeffs, uh[: self.b_poly.degree + 1]))
        yh = self.output_history
        if yh.size:
            y_next -= float(np.dot(self.a_poly.coeffs[1:], yh))
            yh[1:] = yh[:-1]
            yh[0] = y_next + noise
        return y_next + noise


def plant_step(model, u, noise=0.0):
    return model.plant_step(u, noise)


def binary_sensor(y, w, c):
    """Threshold observation: 1 if y + w > c else 0 (strict)."""
    return 1 if y + w > c else 0
