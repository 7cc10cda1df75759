"""Sandwich asymptotics of the minimum GSB divergence estimator.

All matrices are stored dimension-generically as (p, p) arrays; the shipped
families are one-parameter, so p = 1 is what gets exercised. Exponents are
written through A + B, which equals 1 + alpha up to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .densities import DiscreteDensity
from .divergences import dpow
from .errors import SingularMatrixError
from .models import ModelFamily
from .triplet import TuningTriplet

COND_LIMIT = 1e12
V_SUMMAND_TOL = 1e-14


@dataclass
class AsymptoticCovariance:
    J: np.ndarray
    V: np.ndarray
    sandwich: np.ndarray | None
    zeta: np.ndarray
    condition_number: float

    def require_sandwich(self) -> np.ndarray:
        if self.sandwich is None:
            raise SingularMatrixError(
                f"J is singular or ill-conditioned (cond = {self.condition_number:.3e})",
                self.condition_number,
            )
        return self.sandwich


def _sandwich_of(J, V):
    cond = float(np.linalg.cond(J))
    if not np.isfinite(cond) or cond > COND_LIMIT or not np.all(np.isfinite(J)):
        return None, cond
    Jinv = np.linalg.inv(J)
    return Jinv @ V @ Jinv, cond


def _exp_factor(t: TuningTriplet, lf, extra_exponent, beta_scale=1.0):
    """exp(beta_scale * beta * f^A) * f^extra_exponent, stable at tiny f."""
    with np.errstate(over="ignore"):
        fA = np.exp(t.A * lf) if t.A != 0.0 else np.ones_like(lf)
        return np.exp(beta_scale * t.beta * fA + extra_exponent * lf), fA


def _model_support(t: TuningTriplet, family: ModelFamily, theta, tol=1e-12):
    """Support 0..X_max, extended until the V summand falls below tolerance."""
    x_max = family.truncation_point(theta, tol)
    while True:
        xs = np.arange(x_max + 1)
        lf = family.logpmf(theta, xs)
        u = family.score(theta, xs)
        m = _influence_summand(t, lf, u)
        tail = m[-8:] ** 2 * np.exp(lf[-8:])
        if not np.all(np.isfinite(tail)):
            # The variance summand diverges; summation will surface inf.
            return xs, lf, u
        if np.all(tail < V_SUMMAND_TOL) or x_max > 100_000:
            return xs, lf, u
        x_max *= 2


def _influence_summand(t: TuningTriplet, lf, u):
    """m(x) = u ((A+B) f^alpha + A^2 beta^2 e^{beta f^A} f^{2A-1})."""
    apb = t.a_plus_b
    w = apb * np.exp((apb - 1.0) * lf)
    if t.beta != 0.0 and t.A != 0.0:
        e, _ = _exp_factor(t, lf, 2.0 * t.A - 1.0)
        w = w + t.A**2 * t.beta**2 * e
    return u * w


def model_weights(t: TuningTriplet, lf):
    """w(x) = (A+B) f^(A+B) + A^2 beta^2 e^{beta f^A} f^{2A}, used by J and zeta."""
    apb = t.a_plus_b
    w = apb * np.exp(apb * lf)
    if t.beta != 0.0 and t.A != 0.0:
        e, _ = _exp_factor(t, lf, 2.0 * t.A)
        w = w + t.A**2 * t.beta**2 * e
    return w


def model_JV(t: TuningTriplet, family: ModelFamily, theta) -> AsymptoticCovariance:
    """J, V and the sandwich J^-1 V J^-1 at the model g = f_theta."""
    theta = family.check_theta(theta)
    xs, lf, u = _model_support(t, family, theta)
    apb = t.a_plus_b

    w = model_weights(t, lf)
    J = float(np.sum(u * u * w))
    zeta = float(np.sum(u * w))

    V = apb**2 * float(np.sum(np.exp((2.0 * apb - 1.0) * lf) * u * u))
    if t.beta != 0.0 and t.A != 0.0:
        e2, _ = _exp_factor(t, lf, 4.0 * t.A - 1.0, beta_scale=2.0)
        e1, _ = _exp_factor(t, lf, 2.0 * t.A + apb - 1.0)
        V += t.A**4 * t.beta**4 * float(np.sum(e2 * u * u))
        V += 2.0 * apb * t.A**2 * t.beta**2 * float(np.sum(e1 * u * u))
    V -= zeta * zeta

    Jm = np.array([[J]])
    Vm = np.array([[V]])
    sandwich, cond = _sandwich_of(Jm, Vm)
    return AsymptoticCovariance(Jm, Vm, sandwich, np.array([zeta]), cond)


def general_JV(t: TuningTriplet, family: ModelFamily, theta_g, g: DiscreteDensity
               ) -> AsymptoticCovariance:
    """J_g and V_g for a general true density g with best-fit parameter theta_g.

    J_g carries the expectation term, the K * curvature term and the K * u u'
    correction term; V_g is the variance under g of the influence summand.
    """
    theta_g = family.check_theta(theta_g)
    xs, lf, u = _model_support(t, family, theta_g)
    gm = g.extended(xs[-1]) if g.x_max <= xs[-1] else g.masses
    if gm.size > xs.size:
        xs = np.arange(gm.size)
        lf = family.logpmf(theta_g, xs)
        u = family.score(theta_g, xs)
    i = family.curvature(theta_g, xs)
    apb = t.a_plus_b

    if t.A < 1e-6 and np.any(gm == 0.0):
        raise SingularMatrixError("A <= 0 requires strictly positive g")
    f = np.exp(lf)
    if abs(t.A) < 1e-6:
        # K(delta) -> log(delta + 1) as A -> 0.
        gA = np.ones_like(gm)
        K = np.log(gm) - lf
    else:
        gA = dpow(gm, t.A)
        K = (gA / dpow(f, t.A) - 1.0) / t.A

    # Expectation term: u u' K'(delta) ((A+B) f^alpha + ...) under g.
    fB = np.exp(t.B * lf)
    term1 = apb * gA * fB
    wK = apb * np.exp(apb * lf)
    corr = apb**2 * np.exp(apb * lf)
    if t.beta != 0.0 and t.A != 0.0:
        eA, fA = _exp_factor(t, lf, t.A)
        e2A, _ = _exp_factor(t, lf, 2.0 * t.A)
        term1 = term1 + t.A**2 * t.beta**2 * eA * gA
        wK = wK + t.A**2 * t.beta**2 * e2A
        corr = corr + t.A**3 * t.beta**2 * e2A * (2.0 + t.beta * fA)
    J = float(np.sum(u * u * term1) + np.sum(K * wK * i) - np.sum(K * corr * u * u))

    # V_g: variance under g of the influence summand s(x).
    pos = gm > 0.0
    s = np.zeros_like(gm)
    kp = np.exp((t.A - 1.0) * (np.log(gm[pos]) - lf[pos]))
    s[pos] = _influence_summand(t, lf[pos], u[pos]) * kp
    mean_s = float(np.sum(s * gm))
    V = float(np.sum(s * s * gm)) - mean_s**2

    Jm = np.array([[J]])
    Vm = np.array([[V]])
    sandwich, cond = _sandwich_of(Jm, Vm)
    return AsymptoticCovariance(Jm, Vm, sandwich, np.array([mean_s]), cond)


def std_error(cov: AsymptoticCovariance, n) -> np.ndarray:
    """sqrt(diag(sandwich) / n)."""
    if n < 1:
        raise SingularMatrixError("sample size must be at least 1")
    s = cov.require_sandwich()
    d = np.diag(s)
    if np.any(~np.isfinite(d)) or np.any(d < 0):
        raise SingularMatrixError("sandwich diagonal is not finite and nonnegative")
    return np.sqrt(d / float(n))
