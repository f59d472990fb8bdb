"""Empirical CDF of a score sample, its generalized inverse, and DKW radii."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["EmpiricalCdf", "build_cdf", "dkw_radius", "dkw_delta"]


class EmpiricalCdf:
    """Step-function CDF ``F(t) = #{i : s_i <= t} / N`` of a finite sample.

    Parameters
    ----------
    scores : array-like of shape (N,)
        Finite values; order is irrelevant, a sorted copy is kept.

    Examples
    --------
    >>> cdf = EmpiricalCdf([0.9, 0.6, 0.6])
    >>> cdf.evaluate(0.6)
    0.6666666666666666
    >>> cdf.quantile(0.5)
    0.6
    """

    def __init__(self, scores):
        scores = np.asarray(scores, dtype=float).ravel()
        if scores.size == 0:
            raise ValueError("cannot build an empirical CDF from an empty sample")
        if not np.all(np.isfinite(scores)):
            raise ValueError("scores must be finite")
        self.sorted_scores = np.sort(scores, kind="stable")
        self.sorted_scores.setflags(write=False)

    @property
    def n(self):
        return self.sorted_scores.shape[0]

    def count(self, t):
        """Number of sample points ``<= t`` (ties included)."""
        out = np.searchsorted(self.sorted_scores, t, side="right")
        return int(out) if np.ndim(out) == 0 else out

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        out = self.count(t) / self.n
        return float(out) if np.ndim(out) == 0 else out

    __call__ = evaluate

    def quantile(self, p):
        """Smallest sample value ``t`` with ``evaluate(t) >= p``.

        ``p = 0`` returns the sample minimum.
        """
        if not 0 <= p <= 1:
            raise ValueError("p must lie in [0, 1]")
        # smallest k with k/N >= p as evaluated in floating point, so that
        # evaluate(t) >= p  <=>  t >= quantile(p) holds bit-for-bit
        n = self.n
        k = min(max(math.ceil(p * n), 1), n)
        while k > 1 and (k - 1) / n >= p:
            k -= 1
        while k < n and k / n < p:
            k += 1
        return float(self.sorted_scores[k - 1])

    def sup_distance(self, cdf):
        """Kolmogorov distance to a continuous CDF callable."""
        s = self.sorted_scores
        ranks = np.arange(1, self.n + 1) / self.n
        true = np.asarray(cdf(s), dtype=float)
        return float(max(np.max(np.abs(ranks - true)), np.max(np.abs(ranks - 1 / self.n - true))))

    def __repr__(self):
        return f"EmpiricalCdf(n={self.n})"


def build_cdf(scores):
    return EmpiricalCdf(scores)


def dkw_radius(n, delta):
    """Radius ``gamma`` with ``P(sup|F_N - F| >= gamma) <= delta``.

    Dvoretzky-Kiefer-Wolfowitz with Massart's constant:
    ``delta = 2 exp(-2 N gamma**2)``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return math.sqrt(math.log(2 / delta) / (2 * n))


def dkw_delta(n, radius):
    """Inverse of :func:`dkw_radius` in ``delta``."""
    return 2 * math.exp(-2 * n * radius**2)
