"""Seeded Monte Carlo experiments for oracle and plug-in confidence sets.

One repetition draws a training sample of size ``n`` (plug-in only), an
unlabeled calibration sample of size ``N`` and a labeled test sample of size
``K``, then evaluates the set at every epsilon with the same fitted model
and calibration. Each (repetition, stage) pair has its own random stream
derived from the master seed, so reports are bit-identical whatever the
number of workers.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .cdf import EmpiricalCdf
from .confset import evaluate_ranks
from .estimators import OracleScore, make_estimator

__all__ = [
    "ESTIMATOR_KINDS",
    "ExperimentSpec",
    "EpsilonSummary",
    "ExperimentReport",
    "stage_rng",
    "run_repetition",
    "run_experiment",
    "run_oracle_experiment",
    "run_plugin_experiment",
    "convergence_sweep",
    "aggregate",
]

logger = logging.getLogger(__name__)

ESTIMATOR_KINDS = ("oracle", "logistic", "kernel", "cart", "rforest")
STAGES = {"train": 0, "calibrate": 1, "test": 2}
DEFAULT_EPSILONS = tuple(k / 10 for k in range(1, 11))


def stage_rng(master_seed, rep, stage):
    """Independent generator addressed by ``(master_seed, rep, stage)``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(rep), STAGES[stage]))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything that determines an experiment's output."""

    model: object
    estimator: str = "oracle"
    n: int = 1000
    N: int = 1000
    K: int = 1000
    epsilons: tuple = DEFAULT_EPSILONS
    reps: int = 100
    master_seed: int = 0
    estimator_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.estimator not in ESTIMATOR_KINDS:
            raise ValueError(f"estimator must be one of {ESTIMATOR_KINDS}")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        for name in ("n", "N", "K"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        eps = tuple(sorted(float(e) for e in self.epsilons))
        if not eps or any(not 0 < e <= 1 for e in eps):
            raise ValueError("epsilons must be a non-empty list in (0, 1]")
        object.__setattr__(self, "epsilons", eps)


@dataclass(frozen=True)
class EpsilonSummary:
    epsilon: float
    mean_risk: float | None
    sd_risk: float | None
    mean_prop: float
    sd_prop: float
    undefined_count: int
    n_reps: int

    @property
    def risk_defined(self):
        return self.mean_risk is not None

    @property
    def single_rep(self):
        return self.n_reps == 1


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    summaries: list
    records: list
    dropped: int = 0

    def summary(self, epsilon):
        for s in self.summaries:
            if math.isclose(s.epsilon, epsilon):
                return s
        raise KeyError(epsilon)

    def to_dict(self):
        spec = self.spec
        return {
            "model": getattr(spec.model, "name", str(spec.model)),
            "model_repr": repr(spec.model),
            "estimator": spec.estimator,
            "n": spec.n,
            "N": spec.N,
            "K": spec.K,
            "B": spec.reps,
            "seed": spec.master_seed,
            "estimator_params": dict(spec.estimator_params),
            "dropped": self.dropped,
            "summaries": [dataclasses.asdict(s) for s in self.summaries],
            "records": [[r.as_dict() for r in rec] for rec in self.records],
        }


def _fit_score_model(spec, rep):
    if spec.estimator == "oracle":
        return OracleScore(spec.model)
    rng = stage_rng(spec.master_seed, rep, "train")
    X, y = spec.model.sample(spec.n, rng)
    seed = int(rng.integers(2**31 - 1))
    est = make_estimator(spec.estimator, random_state=seed, **spec.estimator_params)
    return est.fit(X, y)


def run_repetition(spec, rep):
    """Per-epsilon :class:`EvaluationResult` list for one repetition."""
    score_model = _fit_score_model(spec, rep)
    X_cal = spec.model.sample_features(spec.N, stage_rng(spec.master_seed, rep, "calibrate"))
    cdf = EmpiricalCdf(score_model.confidence(X_cal))
    X_test, y_test = spec.model.sample(spec.K, stage_rng(spec.master_seed, rep, "test"))
    ranks = cdf.evaluate(score_model.confidence(X_test))
    return evaluate_ranks(ranks, score_model.predict(X_test), y_test, spec.epsilons)


def _safe_repetition(spec, rep):
    try:
        return run_repetition(spec, rep)
    except (ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
        logger.warning("repetition %d dropped: %s", rep, exc)
        return None


def _mean_sd(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return None, None
    sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return float(values.mean()), sd


def aggregate(records, epsilons):
    """Per-epsilon mean and unbiased sd over repetitions.

    Repetitions where nothing was classified are left out of the risk
    statistics and counted in ``undefined_count``.
    """
    if not records:
        raise ValueError("no repetitions to aggregate")
    out = []
    for j, eps in enumerate(epsilons):
        results = [rec[j] for rec in records]
        risks = [r.risk for r in results if r.risk_defined]
        mean_risk, sd_risk = _mean_sd(risks)
        mean_prop, sd_prop = _mean_sd([r.prop for r in results])
        out.append(
            EpsilonSummary(
                epsilon=float(eps),
                mean_risk=mean_risk,
                sd_risk=sd_risk,
                mean_prop=mean_prop,
                sd_prop=sd_prop,
                undefined_count=len(results) - len(risks),
                n_reps=len(results),
            )
        )
    return out


def run_experiment(spec, workers=1):
    """Run all repetitions (in parallel when ``workers > 1``) and aggregate."""
    if workers is None or workers <= 1:
        raw = [_safe_repetition(spec, r) for r in range(spec.reps)]
    else:
        raw = Parallel(n_jobs=workers)(delayed(_safe_repetition)(spec, r) for r in range(spec.reps))
    records = [r for r in raw if r is not None]
    return ExperimentReport(
        spec=spec,
        summaries=aggregate(records, spec.epsilons),
        records=records,
        dropped=len(raw) - len(records),
    )


def run_oracle_experiment(spec, workers=1):
    if spec.estimator != "oracle":
        raise ValueError("run_oracle_experiment needs estimator='oracle'")
    return run_experiment(spec, workers)


def run_plugin_experiment(spec, workers=1):
    if spec.estimator == "oracle":
        raise ValueError("run_plugin_experiment needs a fitted estimator, not 'oracle'")
    return run_experiment(spec, workers)


def convergence_sweep(base_spec, n_values, workers=1):
    """One report per training size, all sharing the base master seed."""
    n_values = list(n_values)
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be increasing")
    return [run_experiment(dataclasses.replace(base_spec, n=n), workers) for n in n_values]


