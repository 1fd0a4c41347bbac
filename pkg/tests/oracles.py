"""Independent oracles the tests compare against.

Everything here is deliberately implemented through a different route than
the package: impulse responses via scipy's filter, projections via
exhaustive sign-pattern enumeration, the single estimator step via plain
scalar arithmetic, and h-inversion via bisection on the density.
"""
import itertools
import math

import numpy as np
from scipy.signal import lfilter


def long_division_g(a, b, m):
    """G_1..G_m of B(z)/A(z) as the filter response to a unit impulse."""
    imp = np.zeros(m)
    imp[0] = 1.0
    return lfilter(np.asarray(b, dtype=float), np.asarray(a, dtype=float), imp)


def orthant_qp_project(x, m, d):
    """Exhaustive active-set solve of min (w-x)'M(w-x) s.t. ||w||_1 <= d.

    Enumerates all 3^p sign patterns (p <= 4), solves the boundary
    stationarity system on each pattern's support, keeps KKT-consistent
    candidates, and returns the best. Exact up to linear-solve roundoff.
    """
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    n = x.size
    if n > 4:
        raise ValueError("oracle is exhaustive; dims above 4 are too slow")
    if np.abs(x).sum() <= d:
        return x.copy()
    best, bestval = np.zeros(n), float(x @ m @ x)
    for signs in itertools.product((-1, 0, 1), repeat=n):
        s = np.array(signs, dtype=float)
        idx = np.nonzero(s)[0]
        if idx.size == 0:
            continue
        ms = m[np.ix_(idx, idx)]
        ss = s[idx]
        try:
            mi = np.linalg.inv(ms)
        except np.linalg.LinAlgError:
            continue
        base = mi @ (m[np.ix_(idx, range(n))] @ x)
        mu = (ss @ base - d) / (ss @ (mi @ ss))
        if mu < -1e-9:
            continue
        w_s = base - mu * (mi @ ss)
        if np.any(np.sign(w_s) * ss < -1e-9):
            continue
        w = np.zeros(n)
        w[idx] = w_s
        if np.abs(w).sum() > d + 1e-7:
            continue
        v = float((w - x) @ m @ (w - x))
        if v < bestval:
            bestval, best = v, w
    return best


def scalar_hand_step():
    """First estimator step on the 1-D problem, by plain arithmetic.

    Setup: theta0 = 0, P0 = 1, u0 = 1, c0 = 0, s1 = 1, standard normal
    noise, no threshold offset; u_max at step 0 excludes u0, so beta0 is
    the density at 0. Returns (beta0, e1, a0, theta1).
    """
    beta0 = 1.0 / math.sqrt(2.0 * math.pi)
    e1 = 1.0 - 1.0 + 0.5 * (1.0 + math.erf(0.0))
    a0 = 1.0 / (1.0 + beta0 * beta0)
    theta1 = a0 * beta0 * e1
    return beta0, e1, a0, theta1


def bisect_h_inverse(density, u, c, tol=1e-12):
    """Smallest t >= 0 with density(t + c) = u, by bisection.

    Assumes density is strictly decreasing on [c, inf) (zero-mean unimodal
    family evaluated on the right tail).
    """
    if density(c) <= u:
        return 0.0
    hi = 1.0
    while density(hi + c) >= u:
        hi *= 2.0
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if density(mid + c) >= u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def logistic_sequence(r, y0, n):
    out = np.empty(n)
    y = y0
    for k in range(n):
        out[k] = y
        y = r * y * (1.0 - y)
    return out


def random_stable_poly(rng, degree, monic=True):
    """Random real polynomial (constant term first) with all roots of
    modulus in [1.2, 3], built from real roots and conjugate pairs."""
    roots = []
    deg = degree
    while deg > 0:
        if deg >= 2 and rng.random() < 0.5:
            rad = rng.uniform(1.2, 3.0)
            ang = rng.uniform(0.15, math.pi - 0.15)
            z = rad * complex(math.cos(ang), math.sin(ang))
            roots.extend([z, z.conjugate()])
            deg -= 2
        else:
            roots.append(complex(rng.uniform(1.2, 3.0) * rng.choice([-1.0, 1.0]), 0.0))
            deg -= 1
    coeffs = np.array([1.0])
    for z in roots:
        # multiply by (1 - x/z); keeps the constant term at 1
        coeffs = np.convolve(coeffs, np.array([1.0, -1.0 / z]))
    coeffs = np.real(coeffs)
    if not monic:
        coeffs = coeffs * rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
    return coeffs
