"""Numerical property checks with pass/fail verdicts.

Each ``check_*`` function returns a list of :class:`Check` records; the CLI
``verify`` subcommand prints them and exits non-zero if any failed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .bounds import excess_risk_terms, prop5_bound_check
from .cdf import EmpiricalCdf
from .confset import OracleConfidenceSet, PluginConfidenceSet, calibration_level
from .distributions import GaussianMixture, Model1, Model2, gaussian_oracle_risk
from .estimators import FunctionScore
from .harness import ExperimentSpec, run_experiment

__all__ = [
    "Check",
    "competitor_scores",
    "perturbed_estimate",
    "check_prop2",
    "check_prop3",
    "check_prop5",
    "check_control",
    "SUITES",
]


@dataclass(frozen=True)
class Check:
    name: str
    lhs: float
    rhs: float
    tol: float
    passed: bool
    relation: str = "<="

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.name}: lhs={self.lhs:.6g} {self.relation} rhs={self.rhs:.6g} (tol {self.tol:.3g})"


def competitor_scores(model):
    """Three deliberately distorted versions of a Gaussian mixture's ``eta``."""
    dim = model.dim
    return {
        "shift+0.05": FunctionScore(lambda X: np.clip(model.eta_star(X) + 0.05, 0, 1), dim),
        "tempered": FunctionScore(lambda X: expit(0.5 * model.log_odds(X) + 0.3), dim),
        "wiggle": FunctionScore(lambda X: expit(model.log_odds(X) + np.sin(3 * model.log_odds(X))), dim),
    }


def perturbed_estimate(model, magnitude):
    """Continuous-score estimate ``expit(L(x) + m sin(2 sum(x)))`` of a mixture's ``eta``.

    The distortion depends on ``x`` directly rather than through ``L``, so the
    estimated score ranks points differently from the true one.
    """
    return FunctionScore(
        lambda X: expit(model.log_odds(X) + magnitude * np.sin(2 * X.sum(axis=1))), model.dim
    )


def check_prop2(delta=2.0, epsilons=(0.3, 0.5, 0.8), draws=10**6, seed=0, k=3.0):
    """Decomposition identity and oracle dominance against three competitors."""
    model = GaussianMixture.from_delta(delta)
    rng = np.random.default_rng(seed)
    out = []
    for eps in epsilons:
        ref = OracleConfidenceSet(model, eps, form="threshold").fit()
        for name, score in competitor_scores(model).items():
            comp = PluginConfidenceSet(score, eps, form="threshold")
            comp.calibrate(model.sample_features(draws, rng))
            res = excess_risk_terms(model, ref, comp, eps, draws, rng, calibration_size=draws)
            tol = k * res.combined_se
            out.append(
                Check(f"decomposition eps={eps} {name}", res.lhs, res.rhs, tol, res.agrees(k), "==")
            )
            out.append(
                Check(
                    f"dominance eps={eps} {name}",
                    res.risk_reference,
                    res.risk_competitor,
                    k * res.lhs_se,
                    res.risk_reference <= res.risk_competitor + k * res.lhs_se,
                )
            )
    return out


def _oracle_risk_grid(model, epsilons, draws, rng):
    X_cal = model.sample_features(draws, rng)
    eta_cal = model.eta_star(X_cal)
    cdf = EmpiricalCdf(np.maximum(eta_cal, 1 - eta_cal))
    X, y = model.sample(draws, rng)
    eta = model.eta_star(X)
    ranks = cdf.evaluate(np.maximum(eta, 1 - eta))
    wrong = (eta >= 0.5).astype(np.int64) != y
    risks, ses = [], []
    for eps in epsilons:
        keep = ranks >= calibration_level(eps)
        r = wrong[keep].mean()
        risks.append(float(r))
        ses.append(float(np.sqrt(r * (1 - r) / keep.sum())))
    return risks, ses


def check_prop3(delta=2.0, draws=10**6, seed=0, k=2.0):
    """Risk of the oracle set is non-decreasing in epsilon."""
    out = []
    grid = [j / 100 for j in range(1, 101)]
    closed = [gaussian_oracle_risk(delta, e) for e in grid]
    worst = min(b - a for a, b in zip(closed, closed[1:]))
    out.append(Check(f"closed form delta={delta} min step", worst, 0.0, 0.0, worst >= 0, ">="))
    rng = np.random.default_rng(seed)
    eps = [j / 10 for j in range(1, 11)]
    for model in (Model1(), Model2()):
        risks, ses = _oracle_risk_grid(model, eps, draws, rng)
        for (e0, r0, s0), (e1, r1, s1) in zip(zip(eps, risks, ses), zip(eps[1:], risks[1:], ses[1:])):
            tol = k * float(np.hypot(s0, s1))
            out.append(Check(f"{model.name} R({e0}) <= R({e1})", r0, r1, tol, r0 <= r1 + tol))
    return out


def check_prop5(delta=2.0, magnitudes=(0.5, 1.0), epsilon=0.5, draws=10**6, seed=0, k=3.0):
    """Oracle-vs-estimated-score excess risk stays below its bound."""
    model = GaussianMixture.from_delta(delta)
    rng = np.random.default_rng(seed)
    out = []
    for m in magnitudes:
        res = prop5_bound_check(model, perturbed_estimate(model, m), epsilon, draws, rng)
        tol = k * res.combined_se
        out.append(Check(f"bound m={m} eps={epsilon}", res.lhs, res.rhs, tol, res.holds(k)))
    res = prop5_bound_check(model, perturbed_estimate(model, 0.0), epsilon, max(draws // 10, 1000), rng)
    out.append(Check("exact zero when eta_hat = eta", abs(res.lhs) + abs(res.rhs), 0.0, 0.0,
                     res.lhs == 0 and res.rhs == 0, "=="))
    return out


def check_control(model=None, estimator="logistic", n=100, N=100, K=1000, reps=100, seed=0,
                  epsilons=tuple(j / 10 for j in range(1, 10)), tol=0.10, workers=1):
    """Plug-in classified proportions stay within ``tol`` of epsilon."""
    model = Model2() if model is None else model
    spec = ExperimentSpec(model, estimator, n=n, N=N, K=K, epsilons=epsilons, reps=reps, master_seed=seed)
    report = run_experiment(spec, workers=workers)
    return [
        Check(f"{estimator} |prop - eps| at eps={s.epsilon}", abs(s.mean_prop - s.epsilon), tol, 0.0,
              abs(s.mean_prop - s.epsilon) <= tol)
        for s in report.summaries
    ]


SUITES = {
    "prop2": check_prop2,
    "prop3": check_prop3,
    "prop5": check_prop5,
    "control": check_control,
}
