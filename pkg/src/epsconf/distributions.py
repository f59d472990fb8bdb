"""Synthetic generative models with a known regression function.

Every model exposes ``sample``, ``sample_features`` and ``eta_star`` so the
harness can draw labeled and unlabeled data and build oracle scores. The
Gaussian mixture additionally has closed forms for the score distribution
and for the risk of the oracle confidence set.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit, ndtr, ndtri

__all__ = [
    "GenerativeModel",
    "Model1",
    "Model2",
    "Model3",
    "GaussianMixture",
    "GaussianScoreCdf",
    "gaussian_score_cdf",
    "gaussian_score_quantile",
    "gaussian_oracle_risk",
    "model3_oracle",
    "make_model",
]


class GenerativeModel:
    """Base class: a joint law of ``(X, Y)`` with ``Y`` binary.

    Subclasses implement ``sample_features`` and ``eta_star``; labels are
    drawn as ``Bernoulli(eta_star(x))`` unless ``sample`` is overridden.
    """

    name = "model"
    dim = 1
    continuous_scores = True

    def sample_features(self, count, rng):
        raise NotImplementedError

    def eta_star(self, X):
        raise NotImplementedError

    def sample(self, count, rng):
        """Draw ``count`` iid labeled pairs; returns ``(X, y)``."""
        X = self.sample_features(count, rng)
        y = (rng.random(X.shape[0]) < self.eta_star(X)).astype(np.int64)
        return X, y

    def _check_count(self, count):
        count = int(count)
        if count < 1:
            raise ValueError(f"count must be positive, got {count}")
        return count

    def _check_x(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1) if X.shape[0] == self.dim else X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ValueError(
                f"{self.name} expects features of dimension {self.dim}, got shape {X.shape}"
            )
        return X

    def score_cdf(self):
        """Closed-form CDF of the oracle score, or None when unavailable."""
        return None

    def __repr__(self):
        return f"{type(self).__name__}()"


class Model1(GenerativeModel):
    """Uniform features on ``[0, 1]^10``, ``logit(eta) = x1 - x2 - x3 + x9``."""

    name = "model1"
    dim = 10

    def sample_features(self, count, rng):
        return rng.random((self._check_count(count), self.dim))

    def eta_star(self, X):
        X = self._check_x(X)
        return expit(X[:, 0] - X[:, 1] - X[:, 2] + X[:, 8])


class Model2(GenerativeModel):
    """Gaussian features in R^3 with a nonlinear logit.

    ``logit(eta) = x1**2 + x2/2 + sin(x1 + x3) + 3*x3``.

    Parameters
    ----------
    feature_scale : float, default=0.5
        Standard deviation of each feature coordinate. The reference
        simulation risks (Bayes risk 0.22, P(eta in [0.4, 0.6]) ~ 0.15) are
        reproduced with 0.5; ``feature_scale=1`` gives standard normal
        features, whose Bayes risk is about 0.126.
    """

    name = "model2"
    dim = 3

    def __init__(self, feature_scale=0.5):
        if not feature_scale > 0:
            raise ValueError("feature_scale must be positive")
        self.feature_scale = float(feature_scale)

    def sample_features(self, count, rng):
        return self.feature_scale * rng.standard_normal((self._check_count(count), self.dim))

    def eta_star(self, X):
        X = self._check_x(X)
        x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
        return expit(x1**2 + x2 / 2 + np.sin(x1 + x3) + 3 * x3)

    def __repr__(self):
        return f"Model2(feature_scale={self.feature_scale})"


class Model3(GenerativeModel):
    """Uniform feature on ``[0, 1]`` with a four-step regression function.

    ``eta`` is 1/5, 2/5, 3/5, 4/5 on the quarters of the unit interval, so the
    score ``max(eta, 1 - eta)`` has two atoms and its CDF is not continuous.
    """

    name = "model3"
    dim = 1
    continuous_scores = False
    _levels = np.array([1 / 5, 2 / 5, 3 / 5, 4 / 5])

    def sample_features(self, count, rng):
        return rng.random((self._check_count(count), 1))

    def eta_star(self, X):
        x = self._check_x(X)[:, 0]
        # right-closed cells: (.., 1/4], (1/4, 1/2], (1/2, 3/4], (3/4, ..)
        cell = np.searchsorted(np.array([0.25, 0.5, 0.75]), x, side="left")
        return self._levels[cell]

    def score_cdf(self):
        from .cdf import EmpiricalCdf

        # f* is 4/5 on the outer quarters and 3/5 on the inner half
        return EmpiricalCdf([3 / 5, 4 / 5])


def _logit(p):
    return np.log(p) - np.log1p(-p)


class GaussianMixture(GenerativeModel):
    """Two Gaussian classes with a shared covariance and prior 1/2.

    Parameters
    ----------
    mu0, mu1 : array-like of shape (d,)
        Class means.
    sigma : array-like of shape (d, d), optional
        Common covariance, identity by default. Must be positive definite.
    """

    name = "gauss"

    def __init__(self, mu0, mu1, sigma=None):
        mu0 = np.atleast_1d(np.asarray(mu0, dtype=float))
        mu1 = np.atleast_1d(np.asarray(mu1, dtype=float))
        if mu0.ndim != 1 or mu0.shape != mu1.shape:
            raise ValueError("mu0 and mu1 must be vectors of the same length")
        d = mu0.shape[0]
        sigma = np.eye(d) if sigma is None else np.atleast_2d(np.asarray(sigma, dtype=float))
        if sigma.shape != (d, d):
            raise ValueError(f"sigma must have shape ({d}, {d}), got {sigma.shape}")
        if not np.allclose(sigma, sigma.T):
            raise ValueError("sigma must be symmetric")
        try:
            chol = np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError as exc:
            raise ValueError("sigma must be positive definite") from exc
        self.mu0, self.mu1, self.sigma = mu0, mu1, sigma
        self.dim = d
        self._chol = chol
        diff = mu1 - mu0
        # Sigma^{-1} (mu1 - mu0) and the Mahalanobis separation
        self._direction = np.linalg.solve(sigma, diff)
        self.delta = float(math.sqrt(max(diff @ self._direction, 0.0)))
        self._offset = float(self._direction @ (mu0 + mu1) / 2)

    @classmethod
    def from_delta(cls, delta):
        """Canonical 1-d mixture ``N(0, 1)`` vs ``N(delta, 1)``."""
        return cls([0.0], [float(delta)], [[1.0]])

    def sample(self, count, rng):
        count = self._check_count(count)
        y = (rng.random(count) < 0.5).astype(np.int64)
        noise = rng.standard_normal((count, self.dim)) @ self._chol.T
        X = np.where(y[:, None] == 1, self.mu1, self.mu0) + noise
        return X, y

    def sample_features(self, count, rng):
        return self.sample(count, rng)[0]

    def log_odds(self, X):
        """``log p1(x) - log p0(x)``, linear in ``x``."""
        X = self._check_x(X)
        return X @ self._direction - self._offset

    def eta_star(self, X):
        return expit(self.log_odds(X))

    def score_cdf(self):
        if self.delta == 0:
            return None
        return GaussianScoreCdf(self.delta)

    def __repr__(self):
        return f"GaussianMixture(mu0={self.mu0.tolist()}, mu1={self.mu1.tolist()}, delta={self.delta:.6g})"


def _delta_of(params):
    return float(params.delta if isinstance(params, GaussianMixture) else params)


def gaussian_score_cdf(params, alpha):
    """CDF of the oracle score ``max(eta, 1 - eta)`` under a Gaussian mixture.

    Parameters
    ----------
    params : GaussianMixture or float
        The mixture, or directly its Mahalanobis separation ``delta``.
    alpha : float or array-like
        Evaluation point(s) in ``[1/2, 1)``.
    """
    delta = _delta_of(params)
    if not delta > 0:
        raise ValueError("score CDF is degenerate at 1/2 when delta == 0")
    alpha = np.asarray(alpha, dtype=float)
    if np.any((alpha < 0.5) | (alpha >= 1)) or np.any(np.isnan(alpha)):
        raise ValueError("alpha must lie in [1/2, 1)")
    shift = _logit(alpha) / delta
    out = ndtr(delta / 2 + shift) - ndtr(delta / 2 - shift)
    return float(out) if out.ndim == 0 else out


def _bisect(fn, lo, hi, target):
    """Smallest float ``x`` in ``[lo, hi]`` with ``fn(x) >= target``, fn increasing."""
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return hi
        if fn(mid) >= target:
            hi = mid
        else:
            lo = mid


def gaussian_score_quantile(params, p):
    """Generalized inverse of :func:`gaussian_score_cdf` at level ``p``."""
    delta = _delta_of(params)
    if not delta > 0:
        raise ValueError("score CDF is degenerate at 1/2 when delta == 0")
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if p == 0:
        return 0.5
    if p == 1:
        return 1.0

    # F(alpha) = P(|Z - delta/2| <= v) - ... is increasing in v = logit(alpha)/delta
    def mass(v):
        return ndtr(delta / 2 + v) - ndtr(delta / 2 - v)

    hi = 1.0
    while mass(hi) < p:
        hi *= 2
    v = _bisect(mass, 0.0, hi, p)
    return float(expit(v * delta))


class GaussianScoreCdf:
    """Exact score CDF of a Gaussian mixture with the EmpiricalCdf interface."""

    def __init__(self, delta):
        if not delta > 0:
            raise ValueError("delta must be positive")
        self.delta = float(delta)

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        inner = np.clip(t, 0.5, np.nextafter(1.0, 0.0))
        out = ndtr(self.delta / 2 + _logit(inner) / self.delta) - ndtr(
            self.delta / 2 - _logit(inner) / self.delta
        )
        out = np.where(t < 0.5, 0.0, np.where(t >= 1.0, 1.0, out))
        return float(out) if out.ndim == 0 else out

    __call__ = evaluate

    def quantile(self, p):
        return gaussian_score_quantile(self.delta, p)

    def __repr__(self):
        return f"GaussianScoreCdf(delta={self.delta:.6g})"


def gaussian_oracle_risk(params, epsilon):
    """Conditional misclassification risk of the oracle epsilon-confidence set.

    Equals ``P(Phi(Z) + Phi(Z + delta) <= epsilon) / epsilon``. The map
    ``z -> Phi(z) + Phi(z + delta)`` is increasing, so the event is
    ``{Z <= z*}`` with ``z*`` found by bisection to machine precision.
    """
    delta = _delta_of(params)
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if delta == 0:
        return 0.5

    def h(z):
        return ndtr(z) + ndtr(z + delta)

    # h(hi) >= eps since Phi(hi) = eps/2; h(lo) <= eps since Phi(lo + delta) = eps/2
    hi = float(ndtri(epsilon / 2))
    lo = hi - delta
    if h(lo) >= epsilon:
        z = lo
    else:
        z = _bisect(h, lo, hi, epsilon)
    return float(ndtr(z) / epsilon)


def model3_oracle(epsilon):
    """``(classified_proportion, risk)`` of the oracle set under Model 3."""
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if epsilon >= 0.5:
        return 1.0, 0.3
    return 0.5, 0.2


def make_model(kind, **params):
    """Build a model from a short name: ``1``, ``2``, ``3`` or ``gauss``."""
    kind = str(kind).lower()
    if kind in ("1", "model1"):
        return Model1()
    if kind in ("2", "model2"):
        return Model2(**params)
    if kind in ("3", "model3"):
        return Model3()
    if kind in ("gauss", "gaussian"):
        if "delta" in params:
            return GaussianMixture.from_delta(params["delta"])
        return GaussianMixture(params["mu0"], params["mu1"], params.get("sigma"))
    raise ValueError(f"unknown model {kind!r}")
