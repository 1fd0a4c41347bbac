"""Projection of a vector onto an L1 ball under a positive-definite quadratic metric."""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, MetricError

FIXED_POINT_TOL = 1e-9
MAX_ITERATIONS = 10_000


@dataclass(frozen=True)
class ProjectionProblem:
    """Point x, SPD metric M, and L1 radius d; validated on construction."""

    x: np.ndarray
    metric: np.ndarray
    d: float

    def __init__(self, x, metric, d):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        m = np.asarray(metric, dtype=float)
        if m.shape != (x.size, x.size):
            raise MetricError(f"metric must be {x.size}x{x.size}, got {m.shape}")
        scale = np.abs(m).max()
        if scale == 0.0 or np.abs(m - m.T).max() > 1e-10 * scale:
            raise MetricError("metric must be symmetric to 1e-10 relative")
        m = 0.5 * (m + m.T)
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            raise MetricError("metric must be positive definite") from None
        if not (d > 0.0):
            raise DomainError("radius d must be positive")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "metric", m)
        object.__setattr__(self, "d", float(d))


def project(prob):
    """Minimizer of (x - w)' M (x - w) over the L1 ball of radius d.

    Interior or boundary x is returned unchanged. Otherwise accelerated
    projected gradient from the Euclidean warm start, step 1/lambda_max(M),
    run until the fixed-point residual drops below FIXED_POINT_TOL.
    """
    x, m, d = prob.x, prob.metric, prob.d
    if np.abs(x).sum() <= d:
        return x.copy()
    lam_max = float(np.linalg.eigvalsh(m)[-1])
    return _kernels.project_weighted(x, m, d, lam_max, FIXED_POINT_TOL,
                                     MAX_ITERATIONS)


def project_euclidean(x, d):
    """Euclidean L1-ball projection via sort-based soft-thresholding."""
    if not (d > 0.0):
        raise DomainError("radius d must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return _kernels.project_l1(x, d)


def kkt_residual(prob, omega):
    """Fixed-point residual of the projected-gradient map at omega."""
    x, m, d = prob.x, prob.metric, prob.d
    omega = np.asarray(omega, dtype=float)
    lam_max = float(np.linalg.eigvalsh(m)[-1])
    z = omega - (m @ (omega - x)) / lam_max
    return float(np.abs(omega - _kernels.project_l1(z, d)).max())
