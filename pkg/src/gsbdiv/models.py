"""Discrete parametric model families on the support {0, 1, 2, ...}."""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, TruncationError

DOMAIN_MARGIN = 1e-10
MAX_SUPPORT = 1_000_000


class ModelFamily:
    """One-parameter discrete family with pmf, score and curvature.

    Custom families plug in via callbacks; when score/curvature callbacks are
    omitted they fall back to central finite differences of log pmf (accuracy
    drops to roughly 1e-6 relative).
    """

    def __init__(self, name, logpmf, domain, score=None, curvature=None,
                 sampler=None, mean=None):
        self.name = name
        self.param_dim = 1
        self.domain = (float(domain[0]), float(domain[1]))
        self._logpmf = logpmf
        self._score = score
        self._curvature = curvature
        self._sampler = sampler
        self._mean = mean

    def check_theta(self, theta):
        lo, hi = self.domain
        t = float(theta)
        if not (lo + DOMAIN_MARGIN <= t <= hi - DOMAIN_MARGIN) or not np.isfinite(t):
            raise DomainError(
                f"{self.name}: parameter {theta!r} outside open domain ({lo:g}, {hi:g})"
            )
        return t

    def logpmf(self, theta, x):
        theta = self.check_theta(theta)
        return self._logpmf(theta, np.asarray(x))

    def pmf(self, theta, x):
        return np.exp(self.logpmf(theta, x))

    def score(self, theta, x):
        """Likelihood score u(x) = d/dtheta log pmf."""
        theta = self.check_theta(theta)
        x = np.asarray(x)
        if self._score is not None:
            return self._score(theta, x)
        h = 1e-6 * max(1.0, abs(theta))
        return (self._logpmf(theta + h, x) - self._logpmf(theta - h, x)) / (2 * h)

    def curvature(self, theta, x):
        """i(x) = -d/dtheta u(x)."""
        theta = self.check_theta(theta)
        x = np.asarray(x)
        if self._curvature is not None:
            return self._curvature(theta, x)
        h = 1e-5 * max(1.0, abs(theta))
        return -(self.score(theta + h, x) - self.score(theta - h, x)) / (2 * h)

    def score_bundle(self, theta, x):
        return ScoreBundle(u=self.score(theta, x), i=self.curvature(theta, x))

    def sample(self, theta, n, rng):
        theta = self.check_theta(theta)
        n = int(n)
        if n < 1:
            raise DomainError("sample size must be at least 1")
        if self._sampler is not None:
            return self._sampler(theta, n, rng)
        # Inversion through the truncated cdf; adequate for custom families.
        x_max = self.truncation_point(theta, 1e-14)
        cdf = np.cumsum(self.pmf(theta, np.arange(x_max + 1)))
        return np.searchsorted(cdf, rng.random(n), side="right").astype(np.int64)

    def mean(self, theta):
        theta = self.check_theta(theta)
        if self._mean is not None:
            return self._mean(theta)
        x_max = self.truncation_point(theta, 1e-14)
        xs = np.arange(x_max + 1)
        return float(np.sum(xs * self.pmf(theta, xs)))

    def truncation_point(self, theta, tol=1e-12):
        """Smallest X_max with cumulative tail mass below tol."""
        theta = self.check_theta(theta)
        block, start, acc = 256, 0, 0.0
        while start < MAX_SUPPORT:
            xs = np.arange(start, start + block)
            cum = acc + np.cumsum(self.pmf(theta, xs))
            hit = np.nonzero(cum >= 1.0 - tol)[0]
            if hit.size:
                return start + int(hit[0])
            acc = float(cum[-1])
            start += block
            block *= 2
        raise TruncationError(
            f"{self.name}: support exceeds {MAX_SUPPORT} before reaching tail {tol:g}"
        )

    def moment_estimate(self, sample_mean):
        """Method-of-moments start, or None when the family provides none."""
        return None

    def __repr__(self):
        return f"ModelFamily({self.name!r})"


class ScoreBundle:
    """Score and curvature values over a set of support points."""

    def __init__(self, u, i):
        self.u = np.asarray(u, dtype=float)
        self.i = np.asarray(i, dtype=float)


class _Poisson(ModelFamily):
    def __init__(self):
        super().__init__(
            name="poisson",
            logpmf=lambda t, x: -t + x * np.log(t) - gammaln(x + 1.0),
            domain=(0.0, np.inf),
            score=lambda t, x: x / t - 1.0,
            curvature=lambda t, x: x / t**2,
            sampler=lambda t, n, rng: rng.poisson(t, n).astype(np.int64),
            mean=lambda t: t,
        )

    def moment_estimate(self, sample_mean):
        return max(sample_mean, DOMAIN_MARGIN * 10)

    def truncation_point(self, theta, tol=1e-12):
        theta = self.check_theta(theta)
        # Gaussian-tail guess, then refine by exact summation.
        guess = int(theta + 10.0 * np.sqrt(theta) + 20.0)
        xs = np.arange(guess + 1)
        cum = np.cumsum(self.pmf(theta, xs))
        hit = np.nonzero(cum >= 1.0 - tol)[0]
        if hit.size:
            return int(hit[0])
        return super().truncation_point(theta, tol)


class _Geometric(ModelFamily):
    """Number of failures before the first success: f(x) = theta (1-theta)^x."""

    def __init__(self):
        super().__init__(
            name="geometric",
            logpmf=lambda t, x: np.log(t) + x * np.log1p(-t),
            domain=(0.0, 1.0),
            score=lambda t, x: 1.0 / t - x / (1.0 - t),
            curvature=lambda t, x: 1.0 / t**2 + x / (1.0 - t) ** 2,
            sampler=lambda t, n, rng: (rng.geometric(t, n) - 1).astype(np.int64),
            mean=lambda t: (1.0 - t) / t,
        )

    def moment_estimate(self, sample_mean):
        return min(max(1.0 / (1.0 + sample_mean), 1e-6), 1.0 - 1e-6)

    def truncation_point(self, theta, tol=1e-12):
        theta = self.check_theta(theta)
        # Tail mass beyond x is (1-theta)^(x+1).
        return max(0, int(np.ceil(np.log(tol) / np.log1p(-theta))) )


POISSON = _Poisson()
GEOMETRIC = _Geometric()

_BUILTINS = {"poisson": POISSON, "geometric": GEOMETRIC}


def get_family(name) -> ModelFamily:
    try:
        return _BUILTINS[name.lower()]
    except KeyError:
        raise DomainError(f"unknown model family {name!r}; built-ins: poisson, geometric")


def custom_family(name, pmf=None, logpmf=None, domain=(0.0, np.inf),
                  score=None, curvature=None, sampler=None, mean=None) -> ModelFamily:
    """Build a ModelFamily from user callbacks.

    Exactly one of pmf / logpmf is required; score and curvature default to
    finite-difference fallbacks.
    """
    if (pmf is None) == (logpmf is None):
        raise DomainError("provide exactly one of pmf or logpmf")
    if logpmf is None:
        def logpmf(t, x, _pmf=pmf):
            with np.errstate(divide="ignore"):
                return np.log(_pmf(t, x))
    return ModelFamily(name, logpmf, domain, score=score, curvature=curvature,
                       sampler=sampler, mean=mean)
