"""Experiment configuration: JSON schema, validation, and object builders."""
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .controller import DitherStream, SwitchingController
from .errors import ConfigError
from .estimator import BinaryOutputEstimator, DimensionSchedule
from .lti import PlantModel
from .noise import GaussianNoise, RadiusSchedule
from .references import ReferenceSpec


def _require_keys(section, allowed, where):
    unknown = set(section) - set(allowed)
    if unknown:
        names = ", ".join(sorted(unknown))
        raise ConfigError(f"unknown key(s) in {where}: {names}")


def _get(section, key, default, where, types):
    val = section.get(key, default)
    if val is None:
        return None
    if not isinstance(val, types):
        raise ConfigError(f"{where}.{key} has the wrong type")
    return val


@dataclass
class ExperimentConfig:
    """Everything a run needs; construct via from_dict/load for validation."""

    a: list
    b: list
    horizon: int
    seed: int
    noise_family: str = "gaussian"
    sigma: float = 1.0
    threshold_bound: float = 0.0
    threshold_kind: str = "constant"
    threshold_value: float = 0.0
    threshold_path: Optional[str] = None
    reference_kind: str = "logistic"
    reference_r: Optional[float] = None
    reference_y0: Optional[float] = None
    reference_value: Optional[float] = None
    reference_path: Optional[str] = None
    a_exponent: float = 2.0
    alpha_exponent: float = 0.125
    epoch_mode: str = "replay"
    P0_scale: float = 1.0
    b_exponent: float = 0.2
    epsilon: float = 0.5
    dither_kind: str = "rademacher"
    dither_seed: Optional[int] = None
    output_path: Optional[str] = None
    process_noise: bool = False

    # -- parsing ------------------------------------------------------------

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        _require_keys(raw, ["plant", "noise", "thresholds", "reference",
                            "horizon", "estimator", "controller", "seed",
                            "dither_seed", "output_path", "process_noise"],
                      "config")
        for name in ("plant", "reference"):
            if name not in raw:
                raise ConfigError(f"config is missing required section {name!r}")
        for name in ("horizon", "seed"):
            if name not in raw:
                raise ConfigError(f"config is missing required field {name!r}")

        plant = raw["plant"]
        if not isinstance(plant, dict):
            raise ConfigError("plant must be an object")
        _require_keys(plant, ["a", "b"], "plant")
        if "a" not in plant or "b" not in plant:
            raise ConfigError("plant needs both 'a' and 'b' coefficient lists")

        noise = raw.get("noise", {})
        if not isinstance(noise, dict):
            raise ConfigError("noise must be an object")
        _require_keys(noise, ["family", "sigma", "threshold_bound"], "noise")
        family = _get(noise, "family", "gaussian", "noise", str)
        if family != "gaussian":
            raise ConfigError(
                f"noise.family {family!r} is not available in config files; "
                "custom families are API-only")

        thresholds = raw.get("thresholds", {"kind": "constant", "value": 0.0})
        if isinstance(thresholds, (int, float)) and not isinstance(thresholds, bool):
            thresholds = {"kind": "constant", "value": float(thresholds)}
        if not isinstance(thresholds, dict):
            raise ConfigError("thresholds must be an object or a number")
        _require_keys(thresholds, ["kind", "value", "path"], "thresholds")
        t_kind = _get(thresholds, "kind", "constant", "thresholds", str)
        if t_kind not in ("constant", "file"):
            raise ConfigError(f"thresholds.kind {t_kind!r} is not supported")

        reference = raw["reference"]
        if not isinstance(reference, dict):
            raise ConfigError("reference must be an object")
        _require_keys(reference, ["kind", "r", "y0", "value", "path"],
                      "reference")

        est = raw.get("estimator", {})
        if not isinstance(est, dict):
            raise ConfigError("estimator must be an object")
        _require_keys(est, ["a_exponent", "alpha_exponent", "epoch_mode",
                            "P0_scale"], "estimator")

        ctl = raw.get("controller", {})
        if not isinstance(ctl, dict):
            raise ConfigError("controller must be an object")
        _require_keys(ctl, ["b_exponent", "epsilon", "dither"], "controller")
        dither_kind = _get(ctl, "dither", "rademacher", "controller", str)
        if dither_kind != "rademacher":
            raise ConfigError(f"controller.dither {dither_kind!r} is not supported")

        horizon = raw["horizon"]
        if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 1:
            raise ConfigError("horizon must be a positive integer")
        seed = raw["seed"]
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError("seed must be an integer")
        dither_seed = raw.get("dither_seed")
        if dither_seed is not None and (not isinstance(dither_seed, int)
                                        or isinstance(dither_seed, bool)):
            raise ConfigError("dither_seed must be an integer when present")
        process_noise = raw.get("process_noise", False)
        if not isinstance(process_noise, bool):
            raise ConfigError("process_noise must be a boolean")

        cfg = cls(
            a=[float(v) for v in plant["a"]],
            b=[float(v) for v in plant["b"]],
            horizon=horizon,
            seed=seed,
            sigma=float(_get(noise, "sigma", 1.0, "noise", (int, float))),
            threshold_bound=float(_get(noise, "threshold_bound", 0.0, "noise",
                                       (int, float))),
            threshold_kind=t_kind,
            threshold_value=float(_get(thresholds, "value", 0.0, "thresholds",
                                       (int, float))),
            threshold_path=_get(thresholds, "path", None, "thresholds", str),
            reference_kind=_get(reference, "kind", "logistic", "reference", str),
            reference_r=_get(reference, "r", None, "reference", (int, float)),
            reference_y0=_get(reference, "y0", None, "reference", (int, float)),
            reference_value=_get(reference, "value", None, "reference",
                                 (int, float)),
            reference_path=_get(reference, "path", None, "reference", str),
            a_exponent=float(_get(est, "a_exponent", 2.0, "estimator",
                                  (int, float))),
            alpha_exponent=float(_get(est, "alpha_exponent", 0.125, "estimator",
                                      (int, float))),
            epoch_mode=_get(est, "epoch_mode", "replay", "estimator", str),
            P0_scale=float(_get(est, "P0_scale", 1.0, "estimator", (int, float))),
            b_exponent=float(_get(ctl, "b_exponent", 0.2, "controller",
                                  (int, float))),
            epsilon=float(_get(ctl, "epsilon", 0.5, "controller", (int, float))),
            dither_kind=dither_kind,
            dither_seed=dither_seed,
            output_path=raw.get("output_path"),
            process_noise=process_noise,
        )
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        out = {
            "plant": {"a": list(self.a), "b": list(self.b)},
            "noise": {"family": self.noise_family, "sigma": self.sigma,
                      "threshold_bound": self.threshold_bound},
            "thresholds": {"kind": self.threshold_kind},
            "reference": {"kind": self.reference_kind},
            "horizon": self.horizon,
            "estimator": {"a_exponent": self.a_exponent,
                          "alpha_exponent": self.alpha_exponent,
                          "epoch_mode": self.epoch_mode,
                          "P0_scale": self.P0_scale},
            "controller": {"b_exponent": self.b_exponent,
                           "epsilon": self.epsilon,
                           "dither": self.dither_kind},
            "seed": self.seed,
            "process_noise": self.process_noise,
        }
        if self.threshold_kind == "constant":
            out["thresholds"]["value"] = self.threshold_value
        else:
            out["thresholds"]["path"] = self.threshold_path
        ref = out["reference"]
        if self.reference_kind == "logistic":
            ref["r"] = self.reference_r
            ref["y0"] = self.reference_y0
        elif self.reference_kind == "constant":
            ref["value"] = self.reference_value
        else:
            ref["path"] = self.reference_path
        if self.dither_seed is not None:
            out["dither_seed"] = self.dither_seed
        if self.output_path is not None:
            out["output_path"] = self.output_path
        return out

    # -- validation and builders --------------------------------------------

    def validate(self):
        self.build_plant()
        noise = self.build_noise()
        if self.threshold_kind == "constant":
            if abs(self.threshold_value) > noise.threshold_bound + 1e-12:
                raise ConfigError(
                    "threshold magnitude exceeds noise.threshold_bound")
        self.reference_spec(1)
        DimensionSchedule(self.a_exponent)
        RadiusSchedule(noise, self.alpha_exponent)
        if self.epoch_mode not in ("replay", "zeropad"):
            raise ConfigError("estimator.epoch_mode must be replay or zeropad")
        if not (0.0 < self.b_exponent < 0.25):
            raise ConfigError("controller.b_exponent must lie in (0, 1/4)")
        if not (self.epsilon > 0.0):
            raise ConfigError("controller.epsilon must be positive")
        return self

    def build_plant(self):
        return PlantModel(self.a, self.b)

    def build_noise(self):
        return GaussianNoise(sigma=self.sigma,
                             threshold_bound=self.threshold_bound)

    def reference_spec(self, length):
        kwargs = {"kind": self.reference_kind, "horizon": length}
        if self.reference_kind == "logistic":
            kwargs["r"] = self.reference_r
            kwargs["y0"] = self.reference_y0
        elif self.reference_kind == "constant":
            kwargs["value"] = self.reference_value
        else:
            kwargs["path"] = self.reference_path
        return ReferenceSpec(**kwargs)

    def threshold_sequence(self, n):
        if self.threshold_kind == "constant":
            return np.full(n, self.threshold_value)
        vals = np.loadtxt(self.threshold_path, dtype=float, ndmin=1)
        if vals.size < n:
            raise ConfigError(
                f"threshold file {self.threshold_path} has {vals.size} "
                f"values, need {n}")
        vals = vals[:n]
        if not np.all(np.isfinite(vals)):
            raise ConfigError("threshold file contains NaN/Inf")
        if np.abs(vals).max() > self.threshold_bound + 1e-12:
            raise ConfigError("threshold magnitude exceeds noise.threshold_bound")
        return vals

    def rng_streams(self):
        """(sensor-noise rng, dither rng): substreams 0 and 1 of the seed.

        dither_seed, when given, replaces substream 1 so the dither can be
        varied with the sensor-noise realization held fixed.
        """
        children = np.random.SeedSequence(self.seed).spawn(2)
        noise_rng = np.random.Generator(np.random.PCG64(children[0]))
        if self.dither_seed is None:
            dither_rng = np.random.Generator(np.random.PCG64(children[1]))
        else:
            dither_rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence(self.dither_seed)))
        return noise_rng, dither_rng

    def build_estimator(self):
        noise = self.build_noise()
        return BinaryOutputEstimator(
            noise,
            radius_schedule=RadiusSchedule(noise, self.alpha_exponent),
            dimension_schedule=DimensionSchedule(self.a_exponent),
            epoch_mode=self.epoch_mode,
            P0_scale=self.P0_scale,
        )

    def build_controller(self, estimator, dither_rng):
        return SwitchingController(
            estimator,
            b_exponent=self.b_exponent,
            epsilon=self.epsilon,
            dither_stream=DitherStream(dither_rng),
        )
