"""Certainty-equivalence feedback with a corrected estimate, bounded dither,
and the two-stopping-time switching state machine."""
import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import modified_gains
from .errors import DegenerateGainError, DomainError, MetricError, SequencingError
from .lti import ImpulseResponse
from .noise import beta_gain

_GAIN_EPS = 1e-300


@dataclass(frozen=True)
class ModifiedEstimate:
    """Corrected estimate ghat = theta + sqrt(a P) e_{i} and the chosen index.

    chosen_index = 0 means no correction was applied.
    """

    ghat: np.ndarray
    chosen_index: int


def modified_estimate(theta, P, a_scalar):
    """Correct theta so its leading entry stays usable as a divisor.

    The symmetric PSD square root S of P is taken by eigendecomposition;
    the index maximizes |theta[0] + S[0, i-1]| over i in {0 (bare theta[0]),
    1..p}, ties broken toward the smallest index, and the returned estimate
    adds sqrt(a_scalar) times the chosen column of S (nothing for i = 0).
    Note the argmax objective carries no a_scalar factor while the correction
    does; the asymmetry is deliberate.
    """
    theta = np.ascontiguousarray(theta, dtype=float)
    if not (0.0 < a_scalar <= 1.0):
        raise DomainError("a_scalar must lie in (0, 1]")
    if theta.ndim != 1:
        raise DomainError("theta must be a vector")
    P = np.ascontiguousarray(P, dtype=float)
    if P.shape != (theta.size, theta.size):
        raise DomainError("P must be square and match theta")
    ghat, i_n, status = modified_gains(theta, P, a_scalar)
    if status != 0:
        raise MetricError("P must be positive definite")
    return ModifiedEstimate(ghat=ghat, chosen_index=int(i_n))


def feedback_control(me, y_star_next, recent_u):
    """Certainty-equivalence input (y* - sum_{i>=2} ghat_i u_{n-i+1}) / ghat_1.

    recent_u is [u_{n-1}, u_{n-2}, ...], newest first.
    """
    g = me.ghat if isinstance(me, ModifiedEstimate) else np.asarray(me, dtype=float)
    g1 = float(g[0])
    if abs(g1) < _GAIN_EPS:
        raise DegenerateGainError(
            f"leading gain {g1!r} is numerically zero; correction failed")
    tail = g[1:]
    ru = np.asarray(recent_u, dtype=float)
    m = min(tail.size, ru.size)
    acc = float(np.dot(tail[:m], ru[:m])) if m else 0.0
    return (y_star_next - acc) / g1


def rademacher(rng, n):
    """n independent ±1 draws with mean 0 and variance 1."""
    return rng.integers(0, 2, size=n).astype(float) * 2.0 - 1.0


class DitherStream:
    """Seeded ±1 stream, addressable by time index or consumed in order."""

    def __init__(self, rng, chunk=4096):
        self._rng = rng
        self._chunk = int(chunk)
        self._vals = np.empty(0)
        self._cursor = 0

    def draw(self, t):
        """The stream's value at time index t (stable across calls)."""
        if t < 0:
            raise DomainError("time index must be nonnegative")
        while self._vals.size <= t:
            self._vals = np.concatenate(
                [self._vals, rademacher(self._rng, self._chunk)])
        return float(self._vals[t])

    def next(self):
        v = self.draw(self._cursor)
        self._cursor += 1
        return v


def dither_next(state):
    """Next ±1 draw from the controller's dither stream."""
    return state.dither.next()


def optimal_control_oracle(gains, y_star):
    """Exact tracking inputs for a known impulse response (test baseline).

    y_star[j] is the reference at time j (y_star[0] is never targeted);
    returns u_0..u_{len-2} with u_n = (y*_{n+1} - sum_{i>=2} G_i u_{n-i+1})/G_1.
    """
    g = gains.coeffs if isinstance(gains, ImpulseResponse) else np.asarray(gains, dtype=float)
    if abs(float(g[0])) < _GAIN_EPS:
        raise DegenerateGainError("G_1 must be nonzero")
    y_star = np.asarray(y_star, dtype=float)
    n = y_star.size - 1
    u = np.zeros(n)
    m = g.size
    for t in range(n):
        acc = 0.0
        jmax = min(m, t + 1)
        for i in range(2, jmax + 1):
            acc += g[i - 1] * u[t - i + 1]
        u[t] = (y_star[t + 1] - acc) / g[0]
    return u


class SwitchingController:
    """Switches between certainty-equivalence feedback and bounded dither.

    Starts in feedback. A sigma-switch fires at the first time the candidate
    input magnitude exceeds min(d_t, t^b) plus the cached magnitude of the
    very first candidate; that step already emits dither. Re-entry requires
    the information matrix's smallest eigenvalue to clear
    alpha_t^2 p_t (ln t)^(1+epsilon) and all of the last p_t inputs plus the
    fresh candidate to fit under min(sqrt(d_t), t^(b/2)).
    """

    def __init__(self, estimator, b_exponent=0.2, epsilon=0.5,
                 dither_stream=None, dither_rng=None):
        if not (0.0 < b_exponent < 0.25):
            raise DomainError("b_exponent must lie in (0, 1/4)")
        if not (epsilon > 0.0):
            raise DomainError("epsilon must be positive")
        self.estimator = estimator
        self.b_exponent = float(b_exponent)
        self.epsilon = float(epsilon)
        if dither_stream is None:
            dither_stream = DitherStream(dither_rng or np.random.default_rng())
        self.dither = dither_stream
        self.phase = "feedback"
        self.u0s_magnitude = None
        self.switch_log = []
        # lambda_min gate: cached exact value plus the Gram trace at that
        # moment; trace growth bounds how far lambda_min can have risen
        self._lam_value = None
        self._lam_trace = 0.0
        self._lam_dim = None
        self.last_lambda_min = None
        self.last_candidate = None

    def _candidate(self, t, y_star_next):
        """Certainty-equivalence candidate u_t^s from the corrected estimate."""
        est = self.estimator
        p = est.p
        d_t = est.radius_schedule.radius(t)
        beta_t = beta_gain(est.noise, d_t, est.u_max)
        recent = est.recent_inputs(p - 1)
        # a-scalar with the not-yet-chosen u_t slot of the regressor zeroed
        phi = np.zeros(p)
        phi[1:] = recent
        q = float(phi @ (est._P @ phi))
        a = 1.0 / (1.0 + beta_t * beta_t * q)
        me = modified_estimate(est._theta, est._P, a)
        u_s = feedback_control(me, y_star_next, recent)
        if self.u0s_magnitude is None:
            self.u0s_magnitude = abs(u_s)
        self.last_candidate = u_s
        return u_s

    def _lambda_gate(self, threshold):
        """(passes, value): exact lambda_min decision, eigensolving lazily.

        lambda_min grows by at most the trace added to the Gram since the
        last exact solve, so while cached value + added trace < threshold
        the gate fails without an eigensolve. Dimension changes invalidate
        the cache (new directions reset the floor).
        """
        est = self.estimator
        if self._lam_dim != est.p:
            self._lam_value = None
        if self._lam_value is not None:
            bound = self._lam_value + (est.gram_trace - self._lam_trace)
            if bound < threshold:
                return False, None
        lam = est.info_matrix_lambda_min()
        self._lam_value = lam
        self._lam_trace = est.gram_trace
        self._lam_dim = est.p
        return lam >= threshold, lam

    def _dither_value(self, t, cap):
        return self.dither.draw(t) * min(1.0, cap)

    def control_step(self, t, y_star_next):
        """Input for time t given the reference  y*_{t+1}; returns (u, phase).

        The returned phase is the one the emitted input belongs to (the
        sigma-violating step itself already counts as excitation).
        """
        est = self.estimator
        if t != est.k:
            raise SequencingError(
                f"controller at time {t} but estimator has consumed {est.k} steps")
        d_t = est.radius_schedule.radius(t)
        cap = min(d_t, float(t) ** self.b_exponent)
        self.last_lambda_min = None
        if self.phase == "feedback":
            u_s = self._candidate(t, y_star_next)
            if abs(u_s) > cap + self.u0s_magnitude:
                self.phase = "excitation"
                self.switch_log.append((t, "excitation"))
                u = self._dither_value(t, cap)
            else:
                u = u_s
        else:
            alpha_t = est.radius_schedule.alpha(t)
            threshold = alpha_t * alpha_t * est.p * math.log(t) ** (1.0 + self.epsilon)
            passes, lam = self._lambda_gate(threshold)
            self.last_lambda_min = lam
            re_enter = False
            u_s = None
            if passes:
                mag_cap = min(math.sqrt(d_t), float(t) ** (0.5 * self.b_exponent))
                recent = est.recent_inputs(est.p)
                if recent.size == 0 or float(np.abs(recent).max()) <= mag_cap:
                    u_s = self._candidate(t, y_star_next)
                    if abs(u_s) <= mag_cap:
                        re_enter = True
            if re_enter:
                self.phase = "feedback"
                self.switch_log.append((t, "feedback"))
                u = u_s
            else:
                u = self._dither_value(t, cap)
        return u, self.phase


def control_step(cs, est, y_star_next, t):
    if est is not cs.estimator:
        raise SequencingError("controller is bound to a different estimator")
    return cs.control_step(t, y_star_next)
