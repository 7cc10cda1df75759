"""Extended Bregman divergences, the GSB family, and the named catalog.

All divergences act on discrete densities given either as DiscreteDensity
objects or as plain mass arrays over a shared 0..X_max enumeration.

Conventions: 0**p = 0 for p > 0 and 0**0 = 1, which keeps g**A continuous in
g at zero for the A > 0 regime used in estimation. Terms of the form
g**p * log(g) are taken as 0 at g = 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .densities import DiscreteDensity, common_support
from .errors import DomainError
from .triplet import TuningTriplet

# Below this, the direct GSB formula loses six or more digits to cancellation
# and the analytic limit branch is used instead.
BRANCH_TOL = 1e-6


@dataclass(frozen=True)
class ConvexGenerator:
    """Strictly convex scalar generator with its derivative."""

    psi: callable
    grad_psi: callable
    label: str


@dataclass(frozen=True)
class ExtendedBregmanSpec:
    """Generator plus the positive exponent applied to both densities."""

    generator: ConvexGenerator
    exponent_k: float

    def __post_init__(self):
        if not self.exponent_k > 0:
            raise DomainError("exponent_k must be positive")


def _masses(d):
    if isinstance(d, DiscreteDensity):
        return d.masses
    return np.asarray(d, dtype=float)


def _aligned(g, f):
    if isinstance(g, DiscreteDensity) and isinstance(f, DiscreteDensity):
        return common_support(g, f)
    gm, fm = _masses(g), _masses(f)
    if gm.size != fm.size:
        n = max(gm.size, fm.size)
        gm = np.pad(gm, (0, n - gm.size))
        fm = np.pad(fm, (0, n - fm.size))
    return gm, fm


def dpow(x, p):
    """x**p under the 0**0 = 1, 0**p = 0 (p > 0) convention."""
    x = np.asarray(x, dtype=float)
    if p == 0.0:
        return np.ones_like(x)
    if p < 0.0 and np.any(x == 0.0):
        raise DomainError(f"0.0**{p:g} is undefined (negative exponent at a zero mass)")
    with np.errstate(over="ignore"):
        return np.power(x, p)


def _xlogy(x, y):
    # x * log(y) with the 0 * log(.) = 0 convention at x == 0.
    out = np.zeros_like(x)
    pos = x > 0.0
    if np.any(y[pos] == 0.0):
        raise DomainError("log of a zero mass where the leading factor is positive")
    out[pos] = x[pos] * np.log(y[pos])
    return out


def extended_bregman(g, f, spec: ExtendedBregmanSpec) -> float:
    """Extended Bregman divergence between densities g and f.

    Sums psi(g**k) - psi(f**k) - (g**k - f**k) * grad_psi(f**k) over the
    common truncated support.
    """
    gm, fm = _aligned(g, f)
    gk = dpow(gm, spec.exponent_k)
    fk = dpow(fm, spec.exponent_k)
    psi, dpsi = spec.generator.psi, spec.generator.grad_psi
    with np.errstate(invalid="raise", divide="raise"):
        try:
            terms = psi(gk) - psi(fk) - (gk - fk) * dpsi(fk)
        except FloatingPointError as exc:
            raise DomainError(
                f"generator {spec.generator.label!r} undefined on the support: {exc}"
            ) from exc
    if np.any(np.isnan(terms)):
        raise DomainError(f"generator {spec.generator.label!r} produced NaN terms")
    return float(np.sum(terms))


def _gsb_exp_terms(gA, fA, beta):
    # e^{b f^A}(b f^A - b g^A - 1) + e^{b g^A}, written through expm1 so the
    # leading-order cancellation at small beta never happens.
    with np.errstate(over="ignore"):
        bd = beta * (gA - fA)
        return np.exp(beta * fA) * (np.expm1(bd) - bd)


def _gsb_power_terms(gm, fm, t: TuningTriplet):
    A, B, apb = t.A, t.B, t.a_plus_b
    if apb == 0.0:
        # alpha = -1: both power pieces vanish identically.
        return np.zeros_like(gm)
    if abs(B) < BRANCH_TOL:
        # Limit of the S-divergence part as B -> 0 (A -> 1 + alpha).
        gp = dpow(gm, apb)
        return _xlogy(gp, gm) - _xlogy(gp, fm) - (gp - dpow(fm, apb)) / apb
    if abs(A) < BRANCH_TOL:
        # Limit as A -> 0 (B -> 1 + alpha); requires strictly positive g.
        if np.any(gm == 0.0):
            raise DomainError("A ~ 0 limit requires strictly positive first density")
        gp, fp = dpow(gm, apb), dpow(fm, apb)
        return (gp - fp) / apb - _xlogy(fp, gm) + _xlogy(fp, fm)
    gA, fA = dpow(gm, A), dpow(fm, A)
    with np.errstate(over="ignore"):
        return (dpow(gm, apb) - dpow(fm, apb)) / B - (gA - fA) * (apb / (A * B)) * dpow(fm, B)


def gsb_divergence(g, f, t: TuningTriplet) -> float:
    """GSB divergence D*(g, f) for the tuning triplet t.

    The exponential part vanishes identically at beta = 0, and analytic limit
    branches replace the power part when |A| or |B| falls below BRANCH_TOL.
    """
    gm, fm = _aligned(g, f)
    if t.A <= 0.0 and abs(t.A) >= BRANCH_TOL and np.any(gm == 0.0):
        raise DomainError("A <= 0 requires the first density to be strictly positive")
    total = _gsb_power_terms(gm, fm, t)
    if t.beta != 0.0 and abs(t.A) >= BRANCH_TOL:
        # As A -> 0 the exponential part tends to 0 pointwise (second order
        # in A for positive masses), so the limit branch drops it.
        total = total + _gsb_exp_terms(dpow(gm, t.A), dpow(fm, t.A), t.beta)
    return float(np.sum(total))


# ---------------------------------------------------------------------------
# Named divergences, evaluated by their own direct formulas. These serve as
# oracles for the extended Bregman / GSB reductions.
# ---------------------------------------------------------------------------

def _ld(gm, fm):
    return float(np.sum(_xlogy(gm, gm) - _xlogy(gm, fm)))


def _kld(gm, fm):
    return _ld(fm, gm)


def _hd(gm, fm):
    return 0.5 * float(np.sum((np.sqrt(fm) - np.sqrt(gm)) ** 2))


def _l2(gm, fm):
    return float(np.sum((gm - fm) ** 2))


def _pd(gm, fm, lam):
    if abs(lam) < BRANCH_TOL:
        return _ld(gm, fm)
    if abs(lam + 1.0) < BRANCH_TOL:
        return _kld(gm, fm)
    with np.errstate(over="ignore"):
        ratio_pow = dpow(gm, 1.0 + lam) * dpow(fm, -lam)
    return float(np.sum(ratio_pow - gm)) / (lam * (lam + 1.0))


def _dpd(gm, fm, alpha):
    if alpha < 0.0:
        raise DomainError("DPD requires alpha >= 0")
    if abs(alpha) < BRANCH_TOL:
        return _ld(gm, fm)
    a1 = 1.0 + alpha
    return float(np.sum(dpow(fm, a1) - a1 / alpha * gm * dpow(fm, alpha)
                        + dpow(gm, a1) / alpha))


def _bed(gm, fm, beta):
    if abs(beta) < BRANCH_TOL:
        return _l2(gm, fm)
    return 2.0 / beta**2 * float(np.sum(_gsb_exp_terms(gm, fm, beta)))


def extended_bed(g, f, beta, k) -> float:
    """Extended BED family: the exp-generator Bregman divergence of g**k, f**k.

    Tends to ((1 + alpha)/2) * SHD_alpha as beta -> 0 when k = (1 + alpha)/2.
    """
    if beta == 0.0:
        raise DomainError("extended BED needs beta != 0; take the limit instead")
    if k <= 0.0:
        raise DomainError("exponent k must be positive")
    gm, fm = _aligned(g, f)
    return 2.0 / beta**2 * float(np.sum(_gsb_exp_terms(dpow(gm, k), dpow(fm, k), beta)))


def _shd(gm, fm, alpha):
    if not (0.0 < alpha < 1.0):
        warnings.warn(
            f"SHD evaluated at alpha={alpha:g}, outside the published range (0, 1)",
            stacklevel=3,
        )
    k = (1.0 + alpha) / 2.0
    return 2.0 / (1.0 + alpha) * float(np.sum((dpow(gm, k) - dpow(fm, k)) ** 2))


def _sd(gm, fm, alpha, lam):
    if alpha < 0.0:
        warnings.warn(
            f"S-divergence evaluated at alpha={alpha:g}, outside the published range "
            "alpha >= 0",
            stacklevel=3,
        )
    return float(np.sum(_gsb_power_terms(gm, fm, TuningTriplet(alpha, lam, 0.0))))


def _itakura_saito(gm, fm):
    if np.any(gm == 0.0) or np.any(fm == 0.0):
        raise DomainError("Itakura-Saito requires strictly positive densities")
    r = gm / fm
    return float(np.sum(r - np.log(r) - 1.0)) / (2.0 * np.pi)


_NAMED = {
    "ld": (_ld, 0),
    "kld": (_kld, 0),
    "hd": (_hd, 0),
    "l2": (_l2, 0),
    "pd": (_pd, 1),
    "dpd": (_dpd, 1),
    "bed": (_bed, 1),
    "shd": (_shd, 1),
    "sd": (_sd, 2),
    "itakurasaito": (_itakura_saito, 0),
}


def named_divergence(name, g, f, *params) -> float:
    """Evaluate a catalog divergence by its direct formula.

    Members: LD, KLD, HD, L2, PD(lambda), DPD(alpha), BED(beta), SHD(alpha),
    SD(alpha, lambda), ItakuraSaito. Parameters outside a family's published
    range are flagged with a warning rather than rejected.
    """
    key = name.replace("-", "").replace("_", "").lower()
    if key not in _NAMED:
        raise DomainError(f"unknown divergence {name!r}; choices: {sorted(_NAMED)}")
    fn, nparams = _NAMED[key]
    if len(params) != nparams:
        raise DomainError(f"{name} takes {nparams} parameter(s), got {len(params)}")
    gm, fm = _aligned(g, f)
    return fn(gm, fm, *params)


# Generator catalog for the ordinary (k = 1) Bregman form.

def squared_generator():
    return ConvexGenerator(lambda x: x**2, lambda x: 2.0 * x, "x^2")


def xlogx_generator():
    def psi(x):
        return _xlogy(np.asarray(x, dtype=float), np.asarray(x, dtype=float))

    return ConvexGenerator(psi, lambda x: np.log(x) + 1.0, "x log x")


def dpd_generator(alpha):
    if alpha <= 0:
        raise DomainError("DPD generator needs alpha > 0")
    return ConvexGenerator(
        lambda x: (dpow(x, 1.0 + alpha) - x) / alpha,
        lambda x: ((1.0 + alpha) * dpow(x, alpha) - 1.0) / alpha,
        f"(x^(1+{alpha:g}) - x)/{alpha:g}",
    )


def itakura_saito_generator():
    return ConvexGenerator(
        lambda x: -np.log(x) / (2.0 * np.pi),
        lambda x: -1.0 / (2.0 * np.pi * x),
        "-log(x)/(2 pi)",
    )


def bed_generator(beta):
    if beta == 0:
        raise DomainError("BED generator needs beta != 0")
    return ConvexGenerator(
        lambda x: 2.0 * (np.exp(beta * x) - beta * x - 1.0) / beta**2,
        lambda x: 2.0 * (np.exp(beta * x) - 1.0) / beta,
        f"2(e^({beta:g}x) - {beta:g}x - 1)/{beta:g}^2",
    )


def exp_generator(beta):
    """2 e^(beta x) / beta^2, the pure-exponential generator."""
    if beta == 0:
        raise DomainError("exp generator needs beta != 0")
    return ConvexGenerator(
        lambda x: 2.0 * np.exp(beta * x) / beta**2,
        lambda x: 2.0 * np.exp(beta * x) / beta,
        f"2 e^({beta:g}x)/{beta:g}^2",
    )
