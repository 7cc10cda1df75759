"""Influence functions of the minimum GSB estimator and boundedness regions.

The off-model J_G here is the theta-derivative of the estimating functional in
the same normalization as the general J_g of the asymptotics module, so the
general influence function collapses exactly to the at-model one when g is a
model density. The boundedness classifier is purely algebraic on the triplet;
model-specific pathologies are outside its contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .asymptotics import general_JV, model_JV
from .densities import DiscreteDensity
from .divergences import dpow
from .errors import DomainError, SingularMatrixError
from .models import ModelFamily
from .triplet import TuningTriplet

BETA_ZERO_TOL = 1e-12
A_ZERO_TOL = 1e-12


@dataclass
class InfluenceEvaluation:
    contamination_point: int
    value: np.ndarray
    at_model: bool
    numerator: np.ndarray
    denominator_matrix: np.ndarray


@dataclass
class BoundednessVerdict:
    bounded: bool
    region: str
    witness: str | None = None


def _pointwise_numerator(t: TuningTriplet, lf_y, u_y):
    """phi(y) = A^2 b^2 e^{b f^A} f^(2A-1) u + (A+B) f^(A+B-1) u at one point."""
    apb = t.a_plus_b
    val = 0.0
    if apb != 0.0:
        val += apb * np.exp((apb - 1.0) * lf_y) * u_y
    if t.beta != 0.0 and t.A != 0.0:
        with np.errstate(over="ignore"):
            fA = np.exp(t.A * lf_y)
            val += t.A**2 * t.beta**2 * np.exp(t.beta * fA + (2.0 * t.A - 1.0) * lf_y) * u_y
    return val


def influence_at_model(t: TuningTriplet, family: ModelFamily, theta, y
                       ) -> InfluenceEvaluation:
    """IF(y) = J_F^-1 N_F(y) when the true distribution is f_theta."""
    theta = family.check_theta(theta)
    cov = model_JV(t, family, theta)
    J = cov.J
    y = int(y)
    lf_y = float(family.logpmf(theta, np.asarray([y]))[0])
    u_y = float(family.score(theta, np.asarray([y]))[0])
    n_val = _pointwise_numerator(t, lf_y, u_y) - cov.zeta[0]
    cond = float(np.linalg.cond(J))
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularMatrixError("J_F is singular", cond)
    value = np.linalg.solve(J, np.array([n_val]))
    return InfluenceEvaluation(y, value, True, np.array([n_val]), J)


def influence_general(t: TuningTriplet, family: ModelFamily, theta_g,
                      g: DiscreteDensity, y) -> InfluenceEvaluation:
    """IF(y) = J_G^-1 N_G(y) for a general true density g."""
    theta_g = family.check_theta(theta_g)
    y = int(y)
    g_y = g.mass(y)
    if t.A < 1.0 and g_y == 0.0:
        raise DomainError(
            f"g^(A-1) undefined at y={y}: A = {t.A:g} < 1 and g(y) = 0"
        )
    cov = general_JV(t, family, theta_g, g)
    J = cov.J
    cond = float(np.linalg.cond(J))
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularMatrixError("J_G is singular", cond)

    x_max = max(g.x_max, family.truncation_point(theta_g), y)
    xs = np.arange(x_max + 1)
    lf = family.logpmf(theta_g, xs)
    u = family.score(theta_g, xs)
    gm = g.extended(x_max)
    apb = t.a_plus_b

    # w(f) = A^2 b^2 e^{b f^A} f^A + (A+B) f^B, applied at y and in centering.
    w = apb * np.exp(t.B * lf)
    if t.beta != 0.0 and t.A != 0.0:
        with np.errstate(over="ignore"):
            fA = np.exp(t.A * lf)
            w = w + t.A**2 * t.beta**2 * np.exp(t.beta * fA + t.A * lf)
    centering = float(np.sum(w * dpow(gm, t.A) * u))
    n_val = w[y] * dpow(np.asarray([g_y]), t.A - 1.0)[0] * u[y] - centering
    value = np.linalg.solve(J, np.array([n_val]))
    return InfluenceEvaluation(y, value, False, np.array([n_val]), J)


def classify_boundedness(t: TuningTriplet) -> BoundednessVerdict:
    """Algebraic region test for influence-function boundedness.

    Regions are checked in order S1 -> S4; they are pairwise disjoint. The
    boundary of S3 is taken strict (lambda > -1/4): at lambda = -1/4 the
    exponent 2A - 1 vanishes and the score is left uncontrolled.
    """
    alpha, lam, beta, A = t.alpha, t.lam, t.beta, t.A
    beta_nonzero = abs(beta) > BETA_ZERO_TOL
    if alpha > 0.0 and not beta_nonzero:
        return BoundednessVerdict(True, "S1")
    if alpha > 0.0 and beta_nonzero and abs(A) <= A_ZERO_TOL:
        return BoundednessVerdict(True, "S2")
    if abs(alpha + 1.0) <= A_ZERO_TOL and beta_nonzero and lam > -0.25:
        return BoundednessVerdict(True, "S3")
    if (alpha > 0.0 and beta_nonzero and lam * (1.0 - alpha) > -0.5
            and abs(A) > A_ZERO_TOL and abs(t.a_plus_b) > A_ZERO_TOL):
        return BoundednessVerdict(True, "S4")
    if alpha <= 0.0 and abs(alpha + 1.0) > A_ZERO_TOL:
        witness = "f^alpha u grows along y -> infinity (alpha <= 0)"
    elif not beta_nonzero:
        witness = "beta = 0 with alpha <= 0 leaves the score uncontrolled"
    else:
        witness = "e^{beta f^A} f^(2A-1) u grows along y -> infinity (2A - 1 <= 0)"
    return BoundednessVerdict(False, "none", witness)


@dataclass
class ScanResult:
    y: np.ndarray
    abs_if: np.ndarray
    running_sup: np.ndarray
    stabilized: bool


def boundedness_scan(t: TuningTriplet, family: ModelFamily, theta, y_max
                     ) -> ScanResult:
    """|IF(y)| profile for y = 0..y_max with its running supremum.

    The scan is judged stabilized when the running supremum gains less than
    1e-6 (relative to max(1, sup)) over the last tenth of the range.
    """
    if y_max < 50:
        raise DomainError("y_max must be at least 50")
    theta = family.check_theta(theta)
    cov = model_JV(t, family, theta)
    J = cov.J[0, 0]
    if J == 0.0 or not np.isfinite(J):
        raise SingularMatrixError("J_F is singular over the scan", np.inf)
    ys = np.arange(int(y_max) + 1)
    lf = family.logpmf(theta, ys)
    u = family.score(theta, ys)
    n_vals = _pointwise_numerator(t, lf, u) - cov.zeta[0]
    abs_if = np.abs(n_vals / J)
    sup = np.maximum.accumulate(abs_if)
    if not np.all(np.isfinite(sup)):
        stabilized = False
    else:
        cut = int(0.9 * y_max)
        stabilized = (sup[-1] - sup[cut]) < 1e-6 * max(1.0, sup[-1])
    return ScanResult(ys, abs_if, sup, bool(stabilized))
