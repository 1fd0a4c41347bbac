"""Growing-dimension projected recursive estimator with exact epoch replay.

The estimator consumes one (input, threshold, bit) triple per step. Its
dimension follows a slowly growing schedule; on a dimension increase the
whole logged history is replayed from scratch at the new dimension, so the
state is exactly what the fixed-dimension recursion would have produced.
Replays reuse the per-step gains and radii recorded by the live run (both
are dimension-independent), and live and replayed updates share one
compiled kernel, so a replay at the current dimension is bit-identical.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, SequencingError
from .noise import GaussianNoise, RadiusSchedule, beta_gain

PROJECTION_TOL = 1e-9
PROJECTION_MAX_ITER = 10_000

_INITIAL_CAPACITY = 1024


@dataclass(frozen=True)
class DimensionSchedule:
    """Epoch dimension p_n = floor((ln n)^a_exponent), clamped below at 1."""

    a_exponent: float = 2.0

    def __post_init__(self):
        if not (self.a_exponent > 1.0 and math.isfinite(self.a_exponent)):
            raise DomainError("a_exponent must be a finite real > 1")


def dimension_at(sched, n):
    """Dimension in force at time index n (n >= 1)."""
    if n < 1:
        raise DomainError("dimension_at needs n >= 1")
    if n == 1:
        return 1
    return max(1, int(math.floor(math.log(n) ** sched.a_exponent)))


def innovation(s_next, c, phi_dot_theta, noise):
    """Prediction-error surrogate e = s - 1 + F(c - phi'theta); lies in (-1, 1)."""
    return s_next - 1.0 + noise.cdf(c - phi_dot_theta)


def regret_term(y_true, y_hat):
    """Squared one-step prediction error."""
    diff = y_true - y_hat
    return diff * diff


def _py_update(theta, pmat, pinv, phi, beta, d, c, s, noise):
    """Pure-numpy twin of the compiled step, for non-gaussian noise models.

    Mutates theta/pmat/pinv in place; returns (innovation, gain scalar).
    """
    m = float(phi @ theta)
    e = s - 1.0 + noise.cdf(c - m)
    w = pmat @ phi
    q = float(phi @ w)
    b2 = beta * beta
    a = 1.0 / (1.0 + b2 * q)
    pmat -= (b2 * a) * np.outer(w, w)
    pmat += pmat.T.copy()
    pmat *= 0.5
    pinv += b2 * np.outer(phi, phi)
    pinv += pinv.T.copy()
    pinv *= 0.5
    theta_prev = theta.copy()
    theta += (a * beta * e) * w
    l1 = float(np.abs(theta).sum())
    if l1 > d:
        lam = float(np.abs(pinv).sum(axis=1).max())
        wball = np.empty_like(theta)
        status = _kernels._ball_kkt_solve(theta, pmat, pinv, d, l1, lam,
                                          PROJECTION_TOL, wball)
        if status == 0:
            theta[:] = wball
        elif status == 1:
            theta[:] = _kernels._fista(theta, pinv, d, lam, PROJECTION_TOL,
                                       PROJECTION_MAX_ITER, wball)
        else:
            theta[:] = _kernels.project_weighted_from(theta, pinv, d, lam,
                                                      PROJECTION_TOL,
                                                      PROJECTION_MAX_ITER,
                                                      theta_prev)
    return e, a


class BinaryOutputEstimator:
    """Recursive estimator of the plant's impulse response from binary data.

    Parameters
    ----------
    noise : GaussianNoise or UnimodalNoise
        Sensor-noise family (known, per the model assumptions).
    radius_schedule : RadiusSchedule, optional
        Ball radii d_k; defaults to the noise model with exponent 1/8.
    dimension_schedule : DimensionSchedule, optional
        Epoch dimension growth; defaults to exponent 2.
    epoch_mode : {"replay", "zeropad"}
        "replay" recomputes the state from the logs on every dimension
        increase (exact). "zeropad" pads the state with fresh prior blocks
        (an approximation, kept for speed comparisons).
    P0_scale : float
        Initial gain matrix P_0 = P0_scale * I.
    """

    def __init__(self, noise, radius_schedule=None, dimension_schedule=None,
                 epoch_mode="replay", P0_scale=1.0):
        if epoch_mode not in ("replay", "zeropad"):
            raise DomainError("epoch_mode must be 'replay' or 'zeropad'")
        if not (P0_scale > 0.0 and math.isfinite(P0_scale)):
            raise DomainError("P0_scale must be a positive finite real")
        self.noise = noise
        self.radius_schedule = radius_schedule or RadiusSchedule(noise)
        self.dimension_schedule = dimension_schedule or DimensionSchedule()
        self.epoch_mode = epoch_mode
        self.P0_scale = float(P0_scale)
        self._gaussian = isinstance(noise, GaussianNoise)

        self._k = 0
        self._p = 1
        self._theta = np.zeros(1)
        self._P = np.eye(1) * self.P0_scale
        self._Pinv = np.eye(1) / self.P0_scale
        self._gram = np.zeros((1, 1))
        self._u_max = 0.0
        self.last_innovation = None
        self.last_gain = None

        cap = _INITIAL_CAPACITY
        self._u = np.zeros(cap)
        self._c = np.zeros(cap)
        self._s = np.zeros(cap)
        self._beta = np.zeros(cap)
        self._d = np.zeros(cap)

    # -- read-only views ---------------------------------------------------

    @property
    def k(self):
        return self._k

    @property
    def p(self):
        return self._p

    @property
    def theta(self):
        return self._theta.copy()

    @property
    def P(self):
        return self._P.copy()

    @property
    def P_inverse(self):
        return self._Pinv.copy()

    @property
    def u_max(self):
        return self._u_max

    @property
    def input_log(self):
        return self._u[: self._k].copy()

    @property
    def gram_trace(self):
        return float(np.trace(self._gram))

    def gain_floor_at(self, k):
        """beta_k recorded at a completed step k < self.k."""
        if not 0 <= k < self._k:
            raise IndexError(f"step {k} has not happened")
        return float(self._beta[k])

    def radius_at(self, k):
        return self.radius_schedule.radius(k)

    # -- core recursion ----------------------------------------------------

    def _ensure_capacity(self):
        if self._k < self._u.size:
            return
        for name in ("_u", "_c", "_s", "_beta", "_d"):
            old = getattr(self, name)
            new = np.zeros(old.size * 2)
            new[: old.size] = old
            setattr(self, name, new)

    def _gram_rows(self, gram, i_from, k):
        """Fill rows/cols i_from.. of gram from the first k logged inputs.

        Entry (i, j) is sum_t u_{t-i} u_{t-j} over logged t, which depends
        only on the input log, so grown dimensions never need a replay here.
        """
        u = self._u[:k]
        for i in range(i_from, gram.shape[0]):
            if k <= i:
                break
            for j in range(i + 1):
                val = float(np.dot(u[: k - i], u[i - j: k - j]))
                gram[i, j] = val
                gram[j, i] = val

    def _extend_gram(self, p_new):
        p, k = self._p, self._k
        gram = np.zeros((p_new, p_new))
        gram[:p, :p] = self._gram
        self._gram_rows(gram, p, k)
        self._gram = gram

    def _replay_arrays(self, k, p_new):
        """State after replaying the first k logged triples at dimension p_new."""
        if self._gaussian:
            return _kernels.gauss_replay(
                self._u[:k], self._c[:k], self._s[:k],
                self._beta[:k], self._d[:k], k, p_new,
                self.noise.sigma, self.P0_scale,
                PROJECTION_TOL, PROJECTION_MAX_ITER)
        theta = np.zeros(p_new)
        pmat = np.eye(p_new) * self.P0_scale
        pinv = np.eye(p_new) / self.P0_scale
        phi = np.empty(p_new)
        for t in range(k):
            _kernels.fill_regressor(self._u[:k], t, phi)
            _py_update(theta, pmat, pinv, phi, self._beta[t], self._d[t],
                       self._c[t], self._s[t], self.noise)
        return theta, pmat, pinv

    def _grow(self, p_new):
        if self.epoch_mode == "replay":
            self._theta, self._P, self._Pinv = self._replay_arrays(self._k, p_new)
        else:
            p = self._p
            theta = np.zeros(p_new)
            theta[:p] = self._theta
            pmat = np.eye(p_new) * self.P0_scale
            pmat[:p, :p] = self._P
            pinv = np.eye(p_new) / self.P0_scale
            pinv[:p, :p] = self._Pinv
            self._theta, self._P, self._Pinv = theta, pmat, pinv
        self._extend_gram(p_new)
        self._p = p_new

    def step(self, u_k, c_k, s_next):
        """Consume the input applied at time k and the resulting bit s_{k+1}.

        Grows the dimension first when the schedule calls for it, then runs
        one projected update, then logs the triple. Returns self.
        """
        u_k = float(u_k)
        c_k = float(c_k)
        if not (math.isfinite(u_k) and math.isfinite(c_k)):
            raise DomainError("u_k and c_k must be finite")
        s_val = float(s_next)
        if s_val not in (0.0, 1.0):
            raise DomainError("s_next must be the bit 0 or 1")
        k = self._k
        p_next = dimension_at(self.dimension_schedule, k + 1)
        if p_next > self._p:
            self._grow(p_next)
        if k >= 1 and abs(u_k) > self._u_max:
            self._u_max = abs(u_k)
        d_k = self.radius_schedule.radius(k)
        beta_k = beta_gain(self.noise, d_k, self._u_max)

        self._ensure_capacity()
        self._u[k] = u_k
        phi = np.empty(self._p)
        _kernels.fill_regressor(self._u[: k + 1], k, phi)
        if self._gaussian:
            e, a = _kernels.gauss_step(self._theta, self._P, self._Pinv, phi,
                                       beta_k, d_k, c_k, s_val,
                                       self.noise.sigma,
                                       PROJECTION_TOL, PROJECTION_MAX_ITER)
        else:
            e, a = _py_update(self._theta, self._P, self._Pinv, phi,
                              beta_k, d_k, c_k, s_val, self.noise)
        _kernels.sym_rank1_add(self._gram, phi)
        self._c[k] = c_k
        self._s[k] = s_val
        self._beta[k] = beta_k
        self._d[k] = d_k
        self._k = k + 1
        self.last_innovation = e
        self.last_gain = a
        return self

    def epoch_replay(self, p_new):
        """Fresh state from replaying every logged triple at dimension p_new.

        Pure with respect to self: returns a new estimator sharing the
        configuration and the logs, leaving this one untouched.
        """
        p_new = int(p_new)
        if p_new < 1:
            raise DomainError("replay dimension must be >= 1")
        other = BinaryOutputEstimator(
            self.noise, self.radius_schedule, self.dimension_schedule,
            self.epoch_mode, self.P0_scale)
        k = self._k
        for name in ("_u", "_c", "_s", "_beta", "_d"):
            arr = getattr(self, name)
            setattr(other, name, arr.copy())
        other._k = k
        other._u_max = self._u_max
        other._theta, other._P, other._Pinv = self._replay_arrays(k, p_new)
        other._p = p_new
        other._gram = np.zeros((p_new, p_new))
        other._gram_rows(other._gram, 0, k)
        return other

    # -- derived views -----------------------------------------------------

    def regressor(self, k, p=None):
        """[u_k, u_{k-1}, ..., u_{k-p+1}], zero-padded below index 0."""
        if not 0 <= k < self._k:
            raise IndexError(f"no input logged at time {k}")
        p = self._p if p is None else int(p)
        if p < 1:
            raise DomainError("regressor dimension must be >= 1")
        phi = np.empty(p)
        _kernels.fill_regressor(self._u[: self._k], k, phi)
        return phi

    def recent_inputs(self, m):
        """Last m logged inputs, newest first, zero-padded (empty log ok)."""
        m = int(m)
        if m < 0:
            raise DomainError("m must be nonnegative")
        out = np.zeros(m)
        if self._k == 0 or m == 0:
            return out
        _kernels.fill_regressor(self._u[: self._k], self._k - 1, out)
        return out

    def predict(self, u_k):
        """One-step-ahead predictor: regressor ending at u_k dotted with theta."""
        p = self._p
        phi = np.empty(p)
        phi[0] = u_k
        if p > 1:
            tail = self.recent_inputs(p - 1)
            phi[1:] = tail
        return float(phi @ self._theta)

    def info_matrix_lambda_min(self, t=None, dim=None):
        """Smallest eigenvalue of P0^{-1} + sum_{k<=t} phi_k phi_k' (unweighted).

        With default arguments this covers every logged input at the current
        dimension and is served from the incrementally maintained Gram
        matrix; explicit t/dim rebuild the sum from the logs.
        """
        if t is None and dim is None:
            m = self._gram + np.eye(self._p) / self.P0_scale
            return float(np.linalg.eigvalsh(m)[0])
        t = self._k - 1 if t is None else int(t)
        if not -1 <= t < self._k:
            raise IndexError(f"inputs through time {t} are not logged")
        dim = self._p if dim is None else int(dim)
        m = np.eye(dim) / self.P0_scale
        phi = np.empty(dim)
        for j in range(t + 1):
            _kernels.fill_regressor(self._u[: self._k], j, phi)
            m += np.outer(phi, phi)
        return float(np.linalg.eigvalsh(m)[0])


def step(state, u_k, c_k, s_next):
    return state.step(u_k, c_k, s_next)


def epoch_replay(state, p_new):
    return state.epoch_replay(p_new)


def regressor(state, k, p=None):
    return state.regressor(k, p)


def predict(state, u_k):
    return state.predict(u_k)


def info_matrix_lambda_min(state, t=None, dim=None):
    return state.info_matrix_lambda_min(t=t, dim=dim)
