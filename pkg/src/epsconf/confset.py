"""Confidence sets with a controlled classification probability.

A confidence set maps ``x`` to ``{0}``, ``{1}`` or ``{0, 1}`` (reject). Here
the output of ``predict`` encodes the singletons as labels 0 and 1 and the
full set as :data:`REJECT`.

Given a score model with score ``f = max(eta, 1 - eta)`` and a CDF ``F`` of
``f(X)``, the epsilon-confidence set classifies ``x`` with the label
``1{eta(x) >= 1/2}`` iff ``F(f(x)) >= 1 - epsilon``. When ``F`` is continuous
the probability of classifying is exactly ``epsilon``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, clone

from .cdf import EmpiricalCdf
from .estimators import OracleScore, check_labeled

__all__ = [
    "REJECT",
    "EvaluationResult",
    "ConfidenceSet",
    "PluginConfidenceSet",
    "OracleConfidenceSet",
    "RejectClassifier",
    "build_plugin",
    "evaluate",
    "evaluate_ranks",
    "l_alpha_risk",
    "calibration_level",
    "to_sets",
]

REJECT = -1


def calibration_level(epsilon):
    """``1 - epsilon`` rounded to 12 decimals.

    ``1 - 0.7`` is ``0.30000000000000004`` in binary; without rounding a
    calibration point with rank exactly 3/10 would be rejected.
    """
    return round(1.0 - float(epsilon), 12)


def _check_epsilon(epsilon):
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    return float(epsilon)


def to_sets(pred):
    """Decode ``predict`` output into frozensets of labels."""
    return [frozenset((0, 1)) if p == REJECT else frozenset((int(p),)) for p in np.asarray(pred)]


@dataclass(frozen=True)
class EvaluationResult:
    """Empirical risk and classified proportion on a test sample.

    ``risk`` is ``None`` when no test point was classified.
    """

    risk: float | None
    prop: float
    n_classified: int
    n_errors: int
    k: int

    @property
    def risk_defined(self):
        return self.risk is not None

    @classmethod
    def from_predictions(cls, pred, y):
        pred = np.asarray(pred)
        y = np.asarray(y)
        if pred.shape[0] == 0:
            raise ValueError("test set must be non-empty")
        classified = pred != REJECT
        n_cls = int(classified.sum())
        n_err = int(np.sum(classified & (pred != y)))
        risk = n_err / n_cls if n_cls else None
        return cls(risk=risk, prop=n_cls / pred.shape[0], n_classified=n_cls, n_errors=n_err, k=pred.shape[0])

    def as_dict(self):
        return {
            "risk": self.risk,
            "prop": self.prop,
            "n_classified": self.n_classified,
            "n_errors": self.n_errors,
            "k": self.k,
        }


class ConfidenceSet(BaseEstimator):
    """Epsilon-confidence set built on a score model and a score CDF.

    Parameters
    ----------
    estimator : score model
        Anything with ``confidence`` and ``predict`` methods (see
        :mod:`epsconf.estimators`). ``fit`` works on a clone; ``calibrate``
        alone uses the estimator as already fitted.
    epsilon : float in (0, 1], default=0.5
        Target probability of classifying.
    form : {"cdf", "threshold"}, default="cdf"
        ``"cdf"`` tests ``F(f(x)) >= 1 - epsilon``; ``"threshold"`` tests
        ``f(x) >= F^{-1}(1 - epsilon)``. They agree when ``F`` is continuous.
    """

    def __init__(self, estimator=None, epsilon=0.5, form="cdf"):
        self.estimator = estimator
        self.epsilon = epsilon
        self.form = form

    def fit(self, X, y, X_unlabeled):
        """Fit a clone of the estimator on labeled data, then calibrate."""
        X, y = check_labeled(X, y)
        self.estimator_ = clone(self.estimator).fit(X, y)
        return self.calibrate(X_unlabeled)

    def calibrate(self, X_unlabeled=None, score_cdf=None):
        """Set the score CDF, from unlabeled features or given explicitly."""
        if not hasattr(self, "estimator_"):
            self.estimator_ = self.estimator
        if score_cdf is None:
            if X_unlabeled is None:
                raise ValueError("need unlabeled features or an explicit score CDF")
            X_unlabeled = np.asarray(X_unlabeled, dtype=float)
            if X_unlabeled.shape[0] == 0:
                raise ValueError("unlabeled set must be non-empty")
            score_cdf = EmpiricalCdf(self.estimator_.confidence(X_unlabeled))
        self.cdf_ = score_cdf
        return self

    def _checked(self):
        if not hasattr(self, "cdf_"):
            raise AttributeError(f"{type(self).__name__} is not calibrated; call fit or calibrate")
        if self.form not in ("cdf", "threshold"):
            raise ValueError("form must be 'cdf' or 'threshold'")
        return _check_epsilon(self.epsilon)

    @property
    def threshold_(self):
        """Score threshold ``F^{-1}(1 - epsilon)``; exactly 1/2 at epsilon = 1."""
        eps = self._checked()
        if eps == 1:
            return 0.5
        return float(self.cdf_.quantile(calibration_level(eps)))

    def rank(self, X):
        """``F(f(x))``, the CDF value of each point's score."""
        self._checked()
        return np.asarray(self.cdf_.evaluate(self.estimator_.confidence(X)), dtype=float)

    def classified(self, X):
        eps = self._checked()
        if self.form == "threshold":
            return self.estimator_.confidence(X) >= self.threshold_
        return self.rank(X) >= calibration_level(eps)

    def predict(self, X):
        labels = self.estimator_.predict(X)
        return np.where(self.classified(X), labels, REJECT)

    def predict_sets(self, X):
        return to_sets(self.predict(X))

    def evaluate(self, X, y):
        return evaluate(self, X, y)


class PluginConfidenceSet(ConfidenceSet):
    """Confidence set from a fitted ``eta`` estimate and an unlabeled sample.

    The labeled data only trains the estimator; the score CDF is the
    empirical CDF of the estimated score over the unlabeled features.

    Examples
    --------
    >>> from epsconf.estimators import LogisticScore
    >>> conf = PluginConfidenceSet(LogisticScore(), epsilon=0.8)
    >>> conf.fit(X_train, y_train, X_unlabeled).predict(X_test)  # doctest: +SKIP
    """


class OracleConfidenceSet(ConfidenceSet):
    """Confidence set built on the true regression function of ``model``.

    Parameters
    ----------
    model : GenerativeModel
    epsilon : float in (0, 1]
    score_cdf : CDF object, optional
        Exact score CDF. Defaults to ``model.score_cdf()`` when available;
        otherwise pass unlabeled features to :meth:`fit`.
    form : {"cdf", "threshold"}
    """

    def __init__(self, model=None, epsilon=0.5, score_cdf=None, form="cdf"):
        self.model = model
        self.epsilon = epsilon
        self.score_cdf = score_cdf
        self.form = form

    def fit(self, X_unlabeled=None, y=None):
        self.estimator_ = OracleScore(self.model)
        if X_unlabeled is not None:
            return self.calibrate(X_unlabeled)
        cdf = self.score_cdf if self.score_cdf is not None else self.model.score_cdf()
        if cdf is None:
            raise ValueError("no closed-form score CDF for this model; pass unlabeled features")
        return self.calibrate(score_cdf=cdf)


def build_plugin(score_model, unlabeled_features, epsilon):
    """Calibrate an already fitted score model on unlabeled features."""
    return PluginConfidenceSet(score_model, epsilon=epsilon).calibrate(unlabeled_features)


def evaluate(conf_set, X, y):
    """Empirical conditional risk and classified proportion on ``(X, y)``."""
    return EvaluationResult.from_predictions(conf_set.predict(X), y)


def evaluate_ranks(ranks, labels, y, epsilons):
    """Evaluate one calibrated set at several epsilons in one pass.

    ``ranks`` are ``F(f(x))`` values of the test points and ``labels`` their
    plug-in labels.
    """
    ranks = np.asarray(ranks)
    labels = np.asarray(labels)
    out = []
    for eps in epsilons:
        keep = ranks >= calibration_level(_check_epsilon(eps))
        out.append(EvaluationResult.from_predictions(np.where(keep, labels, REJECT), y))
    return out


class RejectClassifier(BaseEstimator):
    """Classifier with reject option: label ``s(x)`` iff ``f(x) >= alpha``.

    With the true regression function this is the optimal rule for the
    risk ``P(s(X) != Y, classified) + (1 - alpha) P(rejected)``.
    """

    def __init__(self, estimator=None, alpha=0.5):
        self.estimator = estimator
        self.alpha = alpha

    def fit(self, X, y):
        self.estimator_ = clone(self.estimator).fit(X, y)
        return self

    def _score_model(self):
        if not 0.5 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [1/2, 1]")
        return getattr(self, "estimator_", self.estimator)

    def classified(self, X):
        return self._score_model().confidence(X) >= self.alpha

    def predict(self, X):
        model = self._score_model()
        return np.where(model.confidence(X) >= self.alpha, model.predict(X), REJECT)

    def predict_sets(self, X):
        return to_sets(self.predict(X))


def l_alpha_risk(classifier, X, y, alpha=None):
    """Empirical ``L_alpha``: classified errors plus ``(1 - alpha)`` per reject.

    ``alpha`` defaults to the classifier's own ``alpha``; pass it to score
    any rule with a ``predict`` method under a chosen reject cost.
    """
    alpha = classifier.alpha if alpha is None else alpha
    if not 0.5 <= alpha <= 1:
        raise ValueError("alpha must lie in [1/2, 1]")
    pred = classifier.predict(X)
    y = np.asarray(y)
    rejected = pred == REJECT
    errors = (~rejected) & (pred != y)
    return float(errors.mean() + (1 - alpha) * rejected.mean())
