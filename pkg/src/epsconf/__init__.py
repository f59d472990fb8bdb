"""Epsilon-confidence sets for binary classification with a reject option."""

from .cdf import EmpiricalCdf, build_cdf, dkw_delta, dkw_radius
from .confset import (
    REJECT,
    ConfidenceSet,
    EvaluationResult,
    OracleConfidenceSet,
    PluginConfidenceSet,
    RejectClassifier,
    build_plugin,
    evaluate,
    l_alpha_risk,
)
from .distributions import (
    GaussianMixture,
    Model1,
    Model2,
    Model3,
    gaussian_oracle_risk,
    gaussian_score_cdf,
    gaussian_score_quantile,
    make_model,
    model3_oracle,
)
from .estimators import (
    CartScore,
    ForestScore,
    FunctionScore,
    KernelScore,
    LogisticScore,
    OracleScore,
    make_estimator,
)
from .harness import ExperimentReport, ExperimentSpec, aggregate, convergence_sweep, run_experiment

__version__ = "0.1.0"

__all__ = [
    "EmpiricalCdf", "build_cdf", "dkw_delta", "dkw_radius",
    "REJECT", "ConfidenceSet", "EvaluationResult", "OracleConfidenceSet", "PluginConfidenceSet",
    "RejectClassifier", "build_plugin", "evaluate", "l_alpha_risk",
    "GaussianMixture", "Model1", "Model2", "Model3", "gaussian_oracle_risk", "gaussian_score_cdf",
    "gaussian_score_quantile", "make_model", "model3_oracle",
    "CartScore", "ForestScore", "FunctionScore", "KernelScore", "LogisticScore", "OracleScore",
    "make_estimator",
    "ExperimentReport", "ExperimentSpec", "aggregate", "convergence_sweep", "run_experiment",
]
