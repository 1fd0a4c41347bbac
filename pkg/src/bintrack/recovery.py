"""Map an impulse-response estimate back to ARX coefficients (a_1..a_p, b_1..b_q)."""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IdentifiabilityError
from .lti import ImpulseResponse, Polynomial

_COND_LIMIT = 1e6  # cond(L) bound; cond(L L') = cond(L)^2 <= 1e12


@dataclass(frozen=True)
class RecoveredParams:
    """Denominator tail a_1..a_p, numerator b_1..b_q, and the solve residual."""

    a_coeffs: np.ndarray
    b_coeffs: np.ndarray
    residual: float

    def as_polynomials(self):
        """(A, B) with A monic: A = 1 + a_1 z + ... , B = b_1 + b_2 z + ...."""
        return (Polynomial(np.concatenate(([1.0], self.a_coeffs))),
                Polynomial(self.b_coeffs))


def _g_at(g, i):
    """G_i with one-based indexing and G_i := 0 for i <= 0."""
    return g[i - 1] if i >= 1 else 0.0


def recover(g, p, q):
    """Recover (a, b) of given structural orders from impulse terms G_1..G_m.

    Solves the linear system expressing that the impulse recursion is
    homogeneous past index q (a Hankel-style p x p system solved through an
    orthogonal factorization, never by forming the normal equations), then
    reads b off the convolution identity.
    """
    if isinstance(g, ImpulseResponse):
        g = g.coeffs
    g = np.atleast_1d(np.asarray(g, dtype=float))
    p = int(p)
    q = int(q)
    if p < 0 or q < 1:
        raise DomainError("orders must satisfy p >= 0 and q >= 1")
    if g.size < p + q:
        raise DomainError(
            f"need at least p + q = {p + q} impulse terms, got {g.size}")
    if p == 0:
        return RecoveredParams(a_coeffs=np.zeros(0), b_coeffs=g[:q].copy(),
                               residual=0.0)
    ell = np.empty((p, p))
    for r in range(1, p + 1):
        for c in range(1, p + 1):
            ell[r - 1, c - 1] = _g_at(g, q + c - r)
    if np.linalg.cond(ell) > _COND_LIMIT:
        raise IdentifiabilityError(
            "impulse data does not pin down the denominator "
            "(system condition number too large)")
    rhs = g[q: q + p]
    a, *_ = np.linalg.lstsq(ell.T, rhs, rcond=None)
    a = -a
    residual = float(np.linalg.norm(ell.T @ a + rhs))
    a_full = np.concatenate(([1.0], a))
    b = np.empty(q)
    for i in range(1, q + 1):
        acc = 0.0
        for j in range(0, min(i, p) + 1):
            acc += a_full[j] * _g_at(g, i - j)
        b[i - 1] = acc
    return RecoveredParams(a_coeffs=a, b_coeffs=b, residual=residual)
