"""Adaptive tracking control of ARX plants behind a binary threshold sensor.

The package splits into plant/sensor models (lti), noise models and the
gain/radius schedules derived from them (noise), the growing-dimension
projected estimator (estimator, projection), the switching certainty
equivalence controller (controller), parameter recovery from impulse
response estimates (recovery), reference generators (references), and the
experiment harness with its CLI (config, harness, cli).
"""
from .config import ExperimentConfig
from .controller import (DitherStream, ModifiedEstimate, SwitchingController,
                         dither_next, feedback_control, modified_estimate,
                         optimal_control_oracle, rademacher)
from .errors import (BintrackError, ConfigError, DegenerateGainError,
                     DomainError, IdentifiabilityError, InvalidPolynomialError,
                     MetricError, SequencingError, UnstablePolynomialError)
from .estimator import (BinaryOutputEstimator, DimensionSchedule, dimension_at,
                        epoch_replay, info_matrix_lambda_min, innovation,
                        predict, regressor, regret_term, step)
from .harness import (IdentificationResult, StepRecord, read_records,
                      run_closed_loop, run_identification, summarize,
                      write_records, write_summary)
from .lti import (ImpulseResponse, PlantModel, Polynomial, binary_sensor,
                  impulse_response, is_stable, plant_step)
from .noise import (GaussianNoise, RadiusSchedule, UnimodalNoise, beta_gain,
                    g_floor, h_inverse, radius)
from .projection import (ProjectionProblem, kkt_residual, project,
                         project_euclidean)
from .recovery import RecoveredParams, recover
from .references import ReferenceSpec, generate

__version__ = "0.1.0"

__all__ = [
    "BinaryOutputEstimator", "BintrackError", "ConfigError",
    "DegenerateGainError", "DimensionSchedule", "DitherStream", "DomainError",
    "ExperimentConfig", "GaussianNoise", "IdentifiabilityError",
    "IdentificationResult", "ImpulseResponse", "InvalidPolynomialError",
    "MetricError", "ModifiedEstimate", "PlantModel", "Polynomial",
    "ProjectionProblem", "RadiusSchedule", "RecoveredParams", "ReferenceSpec",
    "SequencingError", "StepRecord", "SwitchingController", "UnimodalNoise",
    "UnstablePolynomialError", "beta_gain", "binary_sensor", "dimension_at",
    "dither_next", "epoch_replay", "feedback_control", "g_floor", "generate",
    "h_inverse", "impulse_response", "info_matrix_lambda_min", "innovation",
    "is_stable", "kkt_residual", "modified_estimate",
    "optimal_control_oracle", "plant_step", "predict", "project",
    "project_euclidean", "rademacher", "radius", "read_records", "recover",
    "regressor", "regret_term", "run_closed_loop", "run_identification",
    "step", "summarize", "write_records", "write_summary",
]
