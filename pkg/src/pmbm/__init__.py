"""Poisson multi-Bernoulli mixture filter for point-target tracking."""

from .density import (
    BernoulliComponent,
    GlobalHypothesis,
    PmbmDensity,
    SingleTargetHypothesis,
    Track,
    cardinality_distribution,
    check_density,
    density_to_json,
    mbm_to_mbm01,
    normalize,
)
from .estimators import StateEstimate, estimate1, estimate2, estimate3
from .filter import (
    FilterParams,
    no_pruning_params,
    predict,
    prune,
    step,
    update,
    update_with_evidence,
)
from .gaussian import Gaussian, GaussianMixture, LinearGaussianModel, WeightedGaussian
from .metrics import OspaParams, ospa, rms_aggregate
from .scenario import (
    GroundTruth,
    MeasurementSet,
    ScenarioConfig,
    generate_measurements,
    generate_trajectories,
    read_records,
    reference_model,
    reference_scenario,
    write_records,
)

__all__ = [
    "BernoulliComponent",
    "FilterParams",
    "Gaussian",
    "GaussianMixture",
    "GlobalHypothesis",
    "GroundTruth",
    "LinearGaussianModel",
    "MeasurementSet",
    "OspaParams",
    "PmbmDensity",
    "ScenarioConfig",
    "SingleTargetHypothesis",
    "StateEstimate",
    "Track",
    "WeightedGaussian",
    "cardinality_distribution",
    "check_density",
    "density_to_json",
    "estimate1",
    "estimate2",
    "estimate3",
    "generate_measurements",
    "generate_trajectories",
    "mbm_to_mbm01",
    "no_pruning_params",
    "normalize",
    "ospa",
    "predict",
    "prune",
    "read_records",
    "reference_model",
    "reference_scenario",
    "rms_aggregate",
    "step",
    "update",
    "update_with_evidence",
    "write_records",
]
