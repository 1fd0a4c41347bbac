"""Closed-loop and open-loop experiment drivers with CSV/JSON reporting."""
import csv
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .controller import optimal_control_oracle
from .errors import BintrackError, ConfigError, DomainError
from .estimator import dimension_at, regret_term
from .lti import binary_sensor, impulse_response
from .noise import RadiusSchedule
from .references import generate

_CSV_COLUMNS = ("t", "y_star", "y", "u", "s", "phase", "p_t", "d_t",
                "beta_t", "lambda_min", "cum_regret", "cum_track_err")

_FEEDBACK_LAMBDA_EVERY = 100
_IDENT_LAMBDA_EVERY = 500


@dataclass(frozen=True)
class StepRecord:
    """One closed-loop step; field order matches the CSV column order."""

    t: int
    y_star: float
    y: float
    u: float
    s: int
    phase: str
    p_t: int
    d_t: float
    beta_t: float
    lambda_min: Optional[float]
    cum_regret: float
    cum_track_err: float


@dataclass
class IdentificationResult:
    checkpoint_errors: dict
    consistency_ratios: dict
    lambda_trajectory: list
    cum_regret: float
    estimator: object
    true_gains: np.ndarray


def _reraise(exc, t):
    raise type(exc)(f"step {t}: {exc}") from exc


def run_closed_loop(cfg, oracle_gains=None, output_path=None):
    """Run the switching controller against the configured plant.

    Per step t: the next reference value is read, the controller emits u_t
    (feedback or excitation), the one-step prediction is taken before the
    estimator sees anything new, the plant produces y_{t+1}, the sensor
    fires, and the estimator consumes (u_t, c_t, s_{t+1}).  lambda_min is
    sampled every 100 steps in feedback and reuses the controller's value
    (possibly None, see SwitchingController) during excitation.

    Parameters
    ----------
    cfg : ExperimentConfig
    oracle_gains : array_like, optional
        True impulse response; when given the control inputs are the
        noise-free optimal sequence and the switching logic is bypassed.
        The estimator still runs so its trajectory can be inspected.
    output_path : str, optional
        Where to write the per-step CSV; falls back to cfg.output_path.

    Returns
    -------
    list of StepRecord
    """
    plant = cfg.build_plant()
    noise = cfg.build_noise()
    est = cfg.build_estimator()
    noise_rng, dither_rng = cfg.rng_streams()
    n = cfg.horizon

    ref = generate(cfg.reference_spec(n + 1))
    thresholds = cfg.threshold_sequence(n)
    w = noise.sample(noise_rng, n)

    oracle_u = None
    ctrl = None
    if oracle_gains is not None:
        oracle_u = optimal_control_oracle(oracle_gains, ref)
    else:
        ctrl = cfg.build_controller(est, dither_rng)

    records = []
    cum_regret = 0.0
    cum_track = 0.0
    for t in range(n):
        try:
            target = float(ref[t + 1])
            if oracle_u is not None:
                u_t, phase = float(oracle_u[t]), "feedback"
            else:
                u_t, phase = ctrl.control_step(t, target)
            if phase == "feedback":
                lam = None
                if t % _FEEDBACK_LAMBDA_EVERY == 0:
                    lam = est.info_matrix_lambda_min()
            else:
                lam = ctrl.last_lambda_min
            p_t = est.p
            y_hat = est.predict(u_t)
            c_t = float(thresholds[t])
            if cfg.process_noise:
                y = plant.plant_step(u_t, noise=w[t])
                s = binary_sensor(y, 0.0, c_t)
            else:
                y = plant.plant_step(u_t)
                s = binary_sensor(y, w[t], c_t)
            est.step(u_t, c_t, s)
            cum_regret += regret_term(y, y_hat)
            err = target - y
            cum_track += err * err
            records.append(StepRecord(
                t=t, y_star=target, y=y, u=u_t, s=s, phase=phase, p_t=p_t,
                d_t=est.radius_at(t), beta_t=est.gain_floor_at(t),
                lambda_min=lam, cum_regret=cum_regret, cum_track_err=cum_track))
        except BintrackError as exc:
            _reraise(exc, t)

    path = output_path if output_path is not None else cfg.output_path
    if path is not None:
        write_records(records, path)
    return records


def run_identification(cfg, input_policy="dither", input_values=None):
    """Open-loop estimation run; inputs are dither or a supplied array.

    Checkpoint errors compare the estimate with the true leading impulse
    response coefficients at n in {1e3, 1e4, 5e4} (clipped to the horizon;
    the horizon itself is always included).  Consistency ratios divide the
    accumulated regret by alpha_n^2 p_n^2 ln n at the same checkpoints.
    """
    if input_policy not in ("dither", "file"):
        raise ConfigError(f"unknown input_policy {input_policy!r}")
    n = cfg.horizon
    if input_policy == "file":
        if input_values is None:
            raise ConfigError("input_policy='file' needs input_values")
        input_values = np.asarray(input_values, dtype=float)
        if input_values.size < n:
            raise ConfigError(
                f"need {n} input values, got {input_values.size}")

    plant = cfg.build_plant()
    noise = cfg.build_noise()
    est = cfg.build_estimator()
    noise_rng, dither_rng = cfg.rng_streams()

    thresholds = cfg.threshold_sequence(n)
    w = noise.sample(noise_rng, n)
    if input_policy == "dither":
        from .controller import DitherStream
        dither = DitherStream(dither_rng)

    p_final = dimension_at(est.dimension_schedule, max(n, 1))
    gains = impulse_response(cfg.a, cfg.b, m=max(p_final, len(cfg.b)))
    g_true = gains.coeffs

    checkpoints = sorted({c for c in (1000, 10000, 50000) if c <= n} | {n})
    radius = RadiusSchedule(noise, cfg.alpha_exponent)

    errors = {}
    ratios = {}
    lam_traj = []
    cum_regret = 0.0
    for t in range(n):
        try:
            if input_policy == "dither":
                u_t = dither.draw(t)
            else:
                u_t = float(input_values[t])
            y_hat = est.predict(u_t)
            c_t = float(thresholds[t])
            if cfg.process_noise:
                y = plant.plant_step(u_t, noise=w[t])
                s = binary_sensor(y, 0.0, c_t)
            else:
                y = plant.plant_step(u_t)
                s = binary_sensor(y, w[t], c_t)
            est.step(u_t, c_t, s)
            cum_regret += regret_term(y, y_hat)
        except BintrackError as exc:
            _reraise(exc, t)
        k = est.k
        if k % _IDENT_LAMBDA_EVERY == 0:
            lam_traj.append((k, est.info_matrix_lambda_min()))
        if k in checkpoints:
            p_k = est.p
            theta = est.theta
            errors[k] = float(np.linalg.norm(theta - g_true[:p_k]))
            denom = radius.alpha(k) ** 2 * p_k * p_k * math.log(k) if k > 1 \
                else float("nan")
            ratios[k] = cum_regret / denom if denom and denom > 0 \
                else float("nan")

    return IdentificationResult(
        checkpoint_errors=errors, consistency_ratios=ratios,
        lambda_trajectory=lam_traj, cum_regret=cum_regret,
        estimator=est, true_gains=g_true)


# -- reporting ----------------------------------------------------------------


def summarize(records):
    """Aggregate a closed-loop record list into the scalar report.

    Switch counts come from phase transitions in the records, so the same
    report can be produced from a CSV read back from disk.  Checkpoint m in
    the consistency table uses the dimension in force at the last step
    before m.
    """
    if not records:
        raise DomainError("summarize needs at least one record")
    n = len(records)
    sigma_times = []
    tau_times = []
    for t in range(1, n):
        prev, cur = records[t - 1].phase, records[t].phase
        if prev != cur:
            if cur == "excitation":
                sigma_times.append(t)
            else:
                tau_times.append(t)
    half = n // 2
    checkpoints = {n, max(1, n // 2)}
    decade = 10
    while decade <= n:
        checkpoints.add(decade)
        decade *= 10
    consistency = {}
    for m in sorted(checkpoints):
        r = records[m - 1]
        consistency[m] = r.cum_track_err / (m ** 0.95 * r.p_t)
    sq_err = [(r.y - r.y_star) ** 2 for r in records]
    if n >= 10:
        deciles = [float(np.mean(block))
                   for block in np.array_split(np.asarray(sq_err), 10)]
    else:
        deciles = [float(np.mean(sq_err))]
    last = records[-1]
    return {
        "n": n,
        "J_n": last.cum_track_err / n,
        "cum_regret": last.cum_regret,
        "cum_track_err": last.cum_track_err,
        "final_dimension": last.p_t,
        "sigma_switches": len(sigma_times),
        "tau_switches": len(tau_times),
        "sigma_switch_times": sigma_times,
        "tau_switch_times": tau_times,
        "second_half_sigma_switches": sum(1 for t in sigma_times if t >= half),
        "consistency_ratio": consistency,
        "decile_mse": deciles,
    }


def write_records(records, path):
    """Write records as CSV.  Floats are repr-formatted so a read back is
    bit-exact; an unsampled lambda_min becomes an empty cell."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for r in records:
            writer.writerow([
                str(r.t), repr(r.y_star), repr(r.y), repr(r.u), str(r.s),
                r.phase, str(r.p_t), repr(r.d_t), repr(r.beta_t),
                "" if r.lambda_min is None else repr(r.lambda_min),
                repr(r.cum_regret), repr(r.cum_track_err)])


def read_records(path):
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != _CSV_COLUMNS:
            raise ConfigError(f"unexpected CSV header in {path}")
        for row in reader:
            records.append(StepRecord(
                t=int(row[0]), y_star=float(row[1]), y=float(row[2]),
                u=float(row[3]), s=int(row[4]), phase=row[5],
                p_t=int(row[6]), d_t=float(row[7]), beta_t=float(row[8]),
                lambda_min=None if row[9] == "" else float(row[9]),
                cum_regret=float(row[10]), cum_track_err=float(row[11])))
    return records


def write_summary(summary, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
