"""Monte Carlo checks of the excess-risk identities for confidence sets.

Both checks draw a large labeled sample from a model with known ``eta``.
Risk differences are estimated from the sampled labels; the theoretical
right-hand sides are estimated from ``eta`` itself, so the two sides share
features but not label noise. Standard errors use the delta method for
ratio estimators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cdf import EmpiricalCdf
from .confset import REJECT, calibration_level

__all__ = ["DecompositionResult", "BoundResult", "excess_risk_terms", "prop5_bound_check"]


def _risk_influence(errors, classified):
    """Conditional risk ``mean(errors)/mean(classified)`` and its influence values."""
    p = classified.mean()
    if p == 0:
        raise ValueError("set never classifies on the Monte Carlo sample")
    risk = errors.mean() / p
    return risk, (errors - risk * classified) / p


def _risk_difference(err_a, cls_a, err_b, cls_b):
    risk_a, infl_a = _risk_influence(err_a, cls_a)
    risk_b, infl_b = _risk_influence(err_b, cls_b)
    diff = infl_a - infl_b
    se = float(diff.std(ddof=1) / np.sqrt(diff.shape[0])) if diff.shape[0] > 1 else 0.0
    return float(risk_a), float(risk_b), float(risk_a - risk_b), se


@dataclass(frozen=True)
class DecompositionResult:
    """Left side ``R(competitor) - R(oracle)`` and the three right-side terms."""

    lhs: float
    lhs_se: float
    c_term: float
    a0b0_term: float
    a1b1_term: float
    rhs_se: float
    risk_reference: float
    risk_competitor: float
    prop_reference: float
    prop_competitor: float
    n: int

    @property
    def rhs(self):
        return self.c_term + self.a0b0_term + self.a1b1_term

    @property
    def combined_se(self):
        return float(np.hypot(self.lhs_se, self.rhs_se))

    def agrees(self, k=3.0):
        return abs(self.lhs - self.rhs) <= k * self.combined_se


def excess_risk_terms(model, reference, competitor, epsilon, mc_draws, rng, calibration_size=None):
    """Estimate both sides of the excess-risk decomposition.

    Parameters
    ----------
    model : GenerativeModel
        Supplies samples and the true ``eta``.
    reference : ConfidenceSet
        Oracle epsilon-confidence set; its ``threshold_`` is ``alpha_eps``.
    competitor : confidence set
        Any object with ``predict`` returning labels or ``REJECT``; its
        classification probability must equal ``epsilon``.
    epsilon : float
    mc_draws : int
    rng : numpy Generator
    calibration_size : int, optional
        Size of the sample the competitor was calibrated on; its sampling
        noise is added to the proportion check. None means exact calibration.

    Raises
    ------
    ValueError
        If the competitor's classified proportion is more than 3 binomial
        standard errors away from ``epsilon``.
    """
    X, y = model.sample(mc_draws, rng)
    eta = model.eta_star(X)
    f_star = np.maximum(eta, 1 - eta)
    s_star = (eta >= 0.5).astype(np.int64)
    alpha = reference.threshold_

    pred_ref = reference.predict(X)
    pred_cmp = competitor.predict(X)
    cls_ref = pred_ref != REJECT
    cls_cmp = pred_cmp != REJECT
    n = X.shape[0]
    inv_size = 1 / n + (1 / calibration_size if calibration_size else 0.0)
    tol = 3 * np.sqrt(epsilon * (1 - epsilon) * inv_size)
    if abs(cls_cmp.mean() - epsilon) > tol + 1e-12:
        raise ValueError(
            f"competitor classifies {cls_cmp.mean():.4f} of the sample, "
            f"not epsilon={epsilon} (tolerance {tol:.4f})"
        )

    risk_cmp, risk_ref, lhs, lhs_se = _risk_difference(
        (cls_cmp & (pred_cmp != y)).astype(float),
        cls_cmp.astype(float),
        (cls_ref & (pred_ref != y)).astype(float),
        cls_ref.astype(float),
    )

    above = f_star >= alpha
    s = np.where(cls_cmp, pred_cmp, -2)
    event_c = above & cls_cmp & (s_star != s)
    # A_y: oracle region but competitor rejects, s* != y;  B_y: below, classified, s != y
    a0b0 = (above & ~cls_cmp & (s_star != 0)) | (~above & cls_cmp & (s != 0))
    a1b1 = (above & ~cls_cmp & (s_star != 1)) | (~above & cls_cmp & (s != 1))
    c_vals = np.abs(2 * eta - 1) * event_c
    a0_vals = np.abs(eta - alpha) * a0b0
    a1_vals = np.abs(1 - eta - alpha) * a1b1
    total = (c_vals + a0_vals + a1_vals) / epsilon
    rhs_se = float(total.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0

    return DecompositionResult(
        lhs=lhs,
        lhs_se=lhs_se,
        c_term=float(c_vals.mean() / epsilon),
        a0b0_term=float(a0_vals.mean() / epsilon),
        a1b1_term=float(a1_vals.mean() / epsilon),
        rhs_se=rhs_se,
        risk_reference=risk_ref,
        risk_competitor=risk_cmp,
        prop_reference=float(cls_ref.mean()),
        prop_competitor=float(cls_cmp.mean()),
        n=n,
    )


@dataclass(frozen=True)
class BoundResult:
    """``lhs = R(tilde set) - R(oracle set)`` against its upper bound ``rhs``."""

    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    alpha: float
    estimation_term: float
    cdf_gap_term: float
    n: int

    @property
    def combined_se(self):
        return float(np.hypot(self.lhs_se, self.rhs_se))

    def holds(self, k=3.0):
        return self.lhs >= -k * self.lhs_se and self.lhs <= self.rhs + k * self.combined_se


def prop5_bound_check(model, eta_hat_model, epsilon, mc_draws, rng, cal_draws=None):
    """Estimate the oracle-vs-estimated-score excess risk and its bound.

    The oracle set thresholds ``f*`` at ``alpha_eps``; the comparison set
    thresholds ``f_hat`` at the ``(1 - epsilon)``-quantile of ``f_hat(X)``.
    Both quantiles and the CDF gap ``|F_fhat(alpha) - F_f*(alpha)|`` come from
    one independent calibration sample, so ``eta_hat == eta`` yields exactly
    zero on both sides.

    Raises
    ------
    ValueError
        If either score distribution is flagged as discontinuous.
    """
    if not (model.continuous_scores and eta_hat_model.continuous_scores):
        raise ValueError("both score distributions must be continuous")
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    cal_draws = mc_draws if cal_draws is None else cal_draws

    X_cal = model.sample_features(cal_draws, rng)
    cdf_star = EmpiricalCdf(np.maximum(model.eta_star(X_cal), 1 - model.eta_star(X_cal)))
    cdf_hat = EmpiricalCdf(eta_hat_model.confidence(X_cal))
    level = calibration_level(epsilon)
    if epsilon == 1:
        alpha = tau = 0.5
    else:
        alpha, tau = cdf_star.quantile(level), cdf_hat.quantile(level)

    X, y = model.sample(mc_draws, rng)
    eta = model.eta_star(X)
    eta_hat = eta_hat_model.eta(X)
    f_star = np.maximum(eta, 1 - eta)
    f_hat = np.maximum(eta_hat, 1 - eta_hat)
    cls_ref = f_star >= alpha
    cls_hat = f_hat >= tau
    err_ref = cls_ref & ((eta >= 0.5).astype(np.int64) != y)
    err_hat = cls_hat & ((eta_hat >= 0.5).astype(np.int64) != y)
    _, _, lhs, lhs_se = _risk_difference(
        err_hat.astype(float), cls_hat.astype(float), err_ref.astype(float), cls_ref.astype(float)
    )

    gap = np.abs(eta_hat - eta)
    w0 = np.abs(eta - alpha)
    w1 = np.abs(1 - eta - alpha)
    vals = (w0 * (gap >= w0) + w1 * (gap >= w1)) / epsilon
    n = X.shape[0]
    f_a_hat = cdf_hat.evaluate(alpha)
    f_a_star = cdf_star.evaluate(alpha)
    cdf_gap = alpha * abs(f_a_hat - f_a_star) / epsilon
    # the CDF gap is itself estimated on cal_draws points
    gap_se = alpha * np.sqrt((f_a_hat * (1 - f_a_hat) + f_a_star * (1 - f_a_star)) / cal_draws) / epsilon
    rhs_se = float(np.hypot(vals.std(ddof=1) / np.sqrt(n), gap_se))
    estimation = float(vals.mean())
    return BoundResult(
        lhs=lhs,
        lhs_se=lhs_se,
        rhs=estimation + cdf_gap,
        rhs_se=rhs_se,
        alpha=float(alpha),
        estimation_term=estimation,
        cdf_gap_term=float(cdf_gap),
        n=n,
    )
