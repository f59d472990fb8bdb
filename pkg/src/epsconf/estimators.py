"""Score models: estimators of the regression function ``eta(x) = P(Y=1|X=x)``.

All models follow the scikit-learn estimator API (``fit``, ``predict``,
``predict_proba``, ``get_params``) and add three methods used by the
confidence sets:

``eta(X)``
    estimated regression function, values in ``[0, 1]``;
``confidence(X)``
    the score ``max(eta, 1 - eta)``, values in ``[1/2, 1]``;
``predict(X)``
    the plug-in label ``1{eta >= 1/2}``.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.tree import DecisionTreeClassifier
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

__all__ = [
    "ScoreMixin",
    "LogisticScore",
    "KernelScore",
    "CartScore",
    "ForestScore",
    "OracleScore",
    "FunctionScore",
    "fit_logistic",
    "fit_kernel",
    "fit_cart",
    "fit_forest",
    "oracle_score_model",
    "make_estimator",
    "ESTIMATORS",
]

# tree leaf frequencies are clipped so pure leaves do not pile up at f = 1
TREE_CLIP = 1e-6


def check_labeled(X, y):
    X, y = check_X_y(X, y, dtype=float)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return X, y.astype(np.int64)


class ScoreMixin(ClassifierMixin):
    """Shared score/label logic on top of an ``eta`` method."""

    continuous_scores = True

    def _validate_features(self, X):
        X = check_array(X, dtype=float, ensure_2d=False)
        if X.ndim == 1:
            X = X.reshape(1, -1) if X.shape[0] == self.n_features_in_ else X.reshape(-1, 1)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but {type(self).__name__} "
                f"was fitted with {self.n_features_in_}"
            )
        return X

    def eta(self, X):
        raise NotImplementedError

    def confidence(self, X):
        e = self.eta(X)
        return np.maximum(e, 1 - e)

    def predict(self, X):
        return (self.eta(X) >= 0.5).astype(np.int64)

    def predict_proba(self, X):
        e = self.eta(X)
        return np.column_stack([1 - e, e])

    @property
    def classes_(self):
        return np.array([0, 1])


class LogisticScore(ScoreMixin, BaseEstimator):
    """Ridge-penalized logistic regression fitted by damped Newton steps.

    Minimizes ``mean(log(1 + exp(z)) - y z) + ridge/2 * (|w|^2 + b^2)`` with
    ``z = X w + b``. Each step is a Newton direction (gradient direction if
    the Hessian solve fails) with Armijo backtracking, so the objective is
    non-increasing along ``loss_path_``.

    Parameters
    ----------
    ridge : float, default=1e-6
    max_iter : int, default=100
    tol : float, default=1e-8
        Stop once the gradient norm falls below ``tol``.
    """

    def __init__(self, ridge=1e-6, max_iter=100, tol=1e-8):
        self.ridge = ridge
        self.max_iter = max_iter
        self.tol = tol

    def _loss(self, Xa, y, theta):
        z = Xa @ theta
        return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * self.ridge * theta @ theta)

    def fit(self, X, y):
        X, y = check_labeled(X, y)
        n, d = X.shape
        Xa = np.column_stack([X, np.ones(n)])
        theta = np.zeros(d + 1)
        loss = self._loss(Xa, y, theta)
        path = [loss]
        converged = False
        for _ in range(self.max_iter):
            p = expit(Xa @ theta)
            grad = Xa.T @ (p - y) / n + self.ridge * theta
            if np.linalg.norm(grad) <= self.tol:
                converged = True
                break
            hess = (Xa * (p * (1 - p))[:, None]).T @ Xa / n + self.ridge * np.eye(d + 1)
            try:
                step = -np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                step = -grad
            if not np.all(np.isfinite(step)) or grad @ step >= 0:
                step = -grad
            slope = grad @ step
            t = 1.0
            for _ in range(60):
                candidate = self._loss(Xa, y, theta + t * step)
                if candidate <= loss + 1e-4 * t * slope:
                    break
                t *= 0.5
            else:
                converged = True  # no further decrease representable
                break
            theta = theta + t * step
            loss = candidate
            path.append(loss)
        if not converged:
            warnings.warn(
                f"LogisticScore did not converge in {self.max_iter} iterations",
                ConvergenceWarning,
            )
        self.coef_ = theta[:-1]
        self.intercept_ = float(theta[-1])
        self.converged_ = converged
        self.loss_path_ = np.array(path)
        self.n_features_in_ = d
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        return self._validate_features(X) @ self.coef_ + self.intercept_

    def eta(self, X):
        return expit(self.decision_function(X))


class KernelScore(ScoreMixin, BaseEstimator):
    """Nadaraya-Watson kernel rule with the Gaussian kernel.

    ``eta(x) = sum_i K((x - X_i)/h) Y_i / sum_i K((x - X_i)/h)`` with
    ``K(u) = exp(-|u|^2 / 2)``.

    Training points are stored in a canonical (lexicographic) order so that
    predictions do not depend on the order of the training rows.
    """

    def __init__(self, bandwidth=1.0):
        self.bandwidth = bandwidth

    def fit(self, X, y):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        X, y = check_labeled(X, y)
        order = np.lexsort(np.column_stack([y, X])[:, ::-1].T)
        self.X_ = X[order]
        self.y_ = y[order].astype(float)
        self.n_features_in_ = X.shape[1]
        return self

    def eta(self, X, chunk_size=2048):
        check_is_fitted(self, "X_")
        X = self._validate_features(X)
        out = np.empty(X.shape[0])
        scale = 2.0 * self.bandwidth**2
        for start in range(0, X.shape[0], chunk_size):
            block = X[start : start + chunk_size]
            logw = -cdist(block, self.X_, "sqeuclidean") / scale
            # shift by the row max: the ratio is unchanged and never 0/0
            w = np.exp(logw - logw.max(axis=1, keepdims=True))
            # row-wise reductions, not BLAS, so results do not depend on chunking
            out[start : start + chunk_size] = (w * self.y_).sum(axis=1) / w.sum(axis=1)
        return np.clip(out, 0.0, 1.0)


class CartScore(ScoreMixin, BaseEstimator):
    """Gini CART tree; ``eta`` is the training label frequency of the leaf.

    Defaults mimic a classic pruned CART (leaves of at least 7 points, nodes
    of at least 20 points split, cost-complexity pruning). The score
    distribution is discrete, so ``continuous_scores`` is False.

    Parameters
    ----------
    max_depth : int, default=30
    min_leaf : int, default=7
    min_split : int, default=20
    ccp_alpha : float, default=0.02
        Minimal cost-complexity pruning strength; 0 disables pruning.
    max_features : int or None, default=None
        Features tried per split; None tries all of them.
    random_state : int or None
    """

    continuous_scores = False

    def __init__(
        self,
        max_depth=30,
        min_leaf=7,
        min_split=20,
        ccp_alpha=0.02,
        max_features=None,
        random_state=None,
    ):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.min_split = min_split
        self.ccp_alpha = ccp_alpha
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_labeled(X, y)
        if X.shape[0] < self.min_leaf:
            raise ValueError(f"need at least min_leaf={self.min_leaf} samples")
        self.n_features_in_ = X.shape[1]
        self.tree_ = DecisionTreeClassifier(
            criterion="gini",
            max_depth=self.max_depth,
            min_samples_leaf=self.min_leaf,
            min_samples_split=max(self.min_split, 2),
            ccp_alpha=self.ccp_alpha,
            max_features=self.max_features,
            random_state=self.random_state,
        ).fit(X, y)
        return self

    def _leaf_frequency(self, X):
        tree = self.tree_
        if tree.classes_.shape[0] == 1:
            return np.full(X.shape[0], float(tree.classes_[0]))
        return tree.predict_proba(X)[:, 1]

    def eta(self, X):
        check_is_fitted(self, "tree_")
        X = self._validate_features(X)
        return np.clip(self._leaf_frequency(X), TREE_CLIP, 1 - TREE_CLIP)


class ForestScore(ScoreMixin, BaseEstimator):
    """Bagged CART trees with per-split feature subsampling.

    Trees are grown without pruning. ``eta`` is the average of the trees' leaf frequencies. Tree seeds and
    bootstrap indices derive from ``random_state`` only, so a fixed seed gives
    a fully deterministic forest.

    Parameters
    ----------
    n_trees : int, default=100
    max_depth : int, default=10
    min_leaf : int, default=5
    feature_fraction : float or None, default=None
        Fraction of features tried at each split; ``None`` means
        ``ceil(sqrt(d)) / d``.
    bootstrap : bool, default=True
    random_state : int, Generator or None
    """

    continuous_scores = False

    def __init__(
        self,
        n_trees=100,
        max_depth=10,
        min_leaf=5,
        feature_fraction=None,
        bootstrap=True,
        random_state=None,
    ):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.feature_fraction = feature_fraction
        self.bootstrap = bootstrap
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_labeled(X, y)
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        n, d = X.shape
        if n < self.min_leaf:
            raise ValueError(f"need at least min_leaf={self.min_leaf} samples")
        if self.feature_fraction is None:
            n_feat = math.ceil(math.sqrt(d))
        else:
            if not 0 < self.feature_fraction <= 1:
                raise ValueError("feature_fraction must lie in (0, 1]")
            n_feat = max(1, math.ceil(self.feature_fraction * d - 1e-12))
        rng = np.random.default_rng(self.random_state)
        trees = []
        for _ in range(self.n_trees):
            seed = int(rng.integers(2**31 - 1))
            idx = rng.integers(0, n, n) if self.bootstrap else np.arange(n)
            trees.append(
                CartScore(
                    max_depth=self.max_depth,
                    min_leaf=self.min_leaf,
                    min_split=2,
                    ccp_alpha=0.0,
                    max_features=None if n_feat == d else n_feat,
                    random_state=seed,
                ).fit(X[idx], y[idx])
            )
        self.trees_ = trees
        self.n_features_in_ = d
        return self

    def eta(self, X):
        check_is_fitted(self, "trees_")
        X = self._validate_features(X)
        freq = np.mean([t._leaf_frequency(X) for t in self.trees_], axis=0)
        return np.clip(freq, TREE_CLIP, 1 - TREE_CLIP)


class OracleScore(ScoreMixin, BaseEstimator):
    """The true regression function of a generative model.

    ``fit`` is a no-op; the model is usable immediately.
    """

    def __init__(self, model):
        self.model = model

    @property
    def n_features_in_(self):
        return self.model.dim

    @property
    def continuous_scores(self):
        return self.model.continuous_scores

    def fit(self, X=None, y=None):
        return self

    def eta(self, X):
        return self.model.eta_star(self._validate_features(X))


class FunctionScore(ScoreMixin, BaseEstimator):
    """Wrap an arbitrary vectorized ``eta`` callable as a score model."""

    def __init__(self, func, n_features=1, continuous=True):
        self.func = func
        self.n_features = n_features
        self.continuous = continuous

    @property
    def n_features_in_(self):
        return self.n_features

    @property
    def continuous_scores(self):
        return self.continuous

    def fit(self, X=None, y=None):
        return self

    def eta(self, X):
        out = np.asarray(self.func(self._validate_features(X)), dtype=float)
        return np.clip(out, 0.0, 1.0)


def fit_logistic(X, y, **config):
    return LogisticScore(**config).fit(X, y)


def fit_kernel(X, y, bandwidth=1.0):
    return KernelScore(bandwidth=bandwidth).fit(X, y)


def fit_cart(X, y, **config):
    return CartScore(**config).fit(X, y)


def fit_forest(X, y, **config):
    return ForestScore(**config).fit(X, y)


def oracle_score_model(model):
    return OracleScore(model)


ESTIMATORS = {
    "logistic": LogisticScore,
    "kernel": KernelScore,
    "cart": CartScore,
    "rforest": ForestScore,
}


def make_estimator(name, random_state=None, **params):
    """Unfitted estimator by short name; seeds only the tree-based ones."""
    try:
        cls = ESTIMATORS[name]
    except KeyError:
        raise ValueError(f"unknown estimator {name!r}; choose from {sorted(ESTIMATORS)}") from None
    if name in ("cart", "rforest"):
        params.setdefault("random_state", random_state)
    return cls(**params)
