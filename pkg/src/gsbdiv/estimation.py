"""Minimum GSB divergence estimation from discrete data.

The estimating function exposed here is the exact theta-gradient of the GSB
objective; it is the published estimating expression rescaled by the positive
constant 1/A, so it has identical roots and makes the gradient/objective
consistency checks exact.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .densities import DiscreteDensity
from .divergences import BRANCH_TOL, _gsb_exp_terms, _gsb_power_terms, dpow
from .errors import DomainError, EstimationError
from .models import ModelFamily
from .triplet import TuningTriplet

THETA_TOL = 1e-10
ESTEQ_TOL = 1e-8
L2_TRIPLET = TuningTriplet(1.0, 0.0, 0.0)


class EmpiricalDensity:
    """Relative frequencies of a sample of nonnegative integers."""

    def __init__(self, counts):
        counts = {int(x): int(c) for x, c in counts.items() if c != 0}
        if not counts:
            raise DomainError("empty sample")
        if min(counts) < 0:
            raise DomainError("sample values must be nonnegative integers")
        if min(counts.values()) < 0:
            raise DomainError("counts must be nonnegative")
        self.counts = dict(sorted(counts.items()))
        self.n = sum(counts.values())
        self.r = {x: c / self.n for x, c in self.counts.items()}

    @property
    def max_value(self) -> int:
        return max(self.counts)

    @property
    def mean(self) -> float:
        return sum(x * c for x, c in self.counts.items()) / self.n

    def masses_to(self, x_max: int) -> np.ndarray:
        out = np.zeros(max(x_max, self.max_value) + 1)
        for x, rx in self.r.items():
            out[x] = rx
        return out

    def density(self) -> DiscreteDensity:
        return DiscreteDensity(self.masses_to(self.max_value), 0.0)


def empirical_density(sample) -> EmpiricalDensity:
    """Relative-frequency vector of a raw sample."""
    arr = np.asarray(list(sample) if isinstance(sample, Iterable) else sample)
    if arr.size == 0:
        raise DomainError("empty sample")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.floor(arr)):
            raise DomainError("sample values must be integers")
        arr = arr.astype(np.int64)
    if arr.min() < 0:
        raise DomainError("sample values must be nonnegative")
    values, counts = np.unique(arr, return_counts=True)
    return EmpiricalDensity(dict(zip(values.tolist(), counts.tolist())))


def k_of_delta(delta, A):
    """K(delta) = ((delta + 1)**A - 1) / A, so K(0) = 0."""
    return (dpow(np.asarray(delta, dtype=float) + 1.0, A) - 1.0) / A


def k_prime(delta, A):
    """K'(delta) = (delta + 1)**(A - 1), so K'(0) = 1."""
    return dpow(np.asarray(delta, dtype=float) + 1.0, A - 1.0)


@dataclass
class EstimationResult:
    theta_hat: float
    objective_at_min: float
    std_error: float | None
    iterations: int
    converged: bool
    triplet: TuningTriplet
    esteq_at_min: float
    message: str = ""


def _require_estimable(t: TuningTriplet):
    if t.A <= 0.0:
        raise DomainError(
            f"estimation requires A = 1 + lambda(1 - alpha) > 0; triplet {t.label()} "
            f"has A = {t.A:g}"
        )
    if t.A < BRANCH_TOL:
        raise DomainError(
            f"A = {t.A:g} is too close to 0 for empirical data with unobserved "
            "support points"
        )


def _as_ghat(data):
    """Normalize data to (ghat masses from 0, n or None, mean, max support)."""
    if isinstance(data, EmpiricalDensity):
        emp = data
        return emp.masses_to(emp.max_value), emp.n, emp.mean, emp.max_value
    if isinstance(data, DiscreteDensity):
        m = data.masses
        mean = float(np.sum(np.arange(m.size) * m))
        return m, None, mean, data.x_max
    emp = empirical_density(data)
    return emp.masses_to(emp.max_value), emp.n, emp.mean, emp.max_value


def _search_box(family: ModelFamily, mean: float):
    if family.name == "poisson":
        return 1e-6, max(10.0 * mean, 50.0)
    if family.name == "geometric":
        return 1e-6, 1.0 - 1e-6
    lo, hi = family.domain
    if np.isfinite(hi):
        return lo + 1e-6, hi - 1e-6
    return lo + 1e-6, max(10.0 * mean, 50.0)


def _support_size(family: ModelFamily, mean: float, data_max: int, lo: float, hi: float):
    """Theta-independent truncation for one estimation call.

    Covers the data range and the model tail over the plausible fit region;
    probes far outside it see a truncated sub-density, which only raises the
    objective away from the fit.
    """
    ref = family.moment_estimate(mean)
    if family.name == "poisson":
        x_max = family.truncation_point(hi, 1e-12)
    elif family.name == "geometric":
        theta_low = max((ref or 0.5) / 4.0, 0.01)
        x_max = family.truncation_point(theta_low, 1e-12)
    else:
        x_max = family.truncation_point(ref if ref is not None else (lo + hi) / 2, 1e-12)
    return max(int(x_max), int(data_max), 30)


class _Workspace:
    """Per-call arrays shared by objective and estimating-function evals."""

    def __init__(self, t, family, ghat, n, mean, data_max):
        self.t = t
        self.family = family
        self.n = n
        self.mean = mean
        self.lo, self.hi = _search_box(family, mean)
        x_max = _support_size(family, mean, data_max, self.lo, self.hi)
        self.xs = np.arange(x_max + 1)
        gm = np.zeros(x_max + 1)
        gm[: ghat.size] = ghat
        self.gm = gm
        self.gA = dpow(gm, t.A)
        self.evals = 0

    def logpmf(self, theta):
        return self.family._logpmf(theta, self.xs)

    def objective(self, theta, full=True):
        self.evals += 1
        t = self.t
        fm = np.exp(self.logpmf(theta))
        total = _gsb_power_terms(self.gm, fm, t)
        if t.beta != 0.0:
            total = total + _gsb_exp_terms(self.gA, dpow(fm, t.A), t.beta)
        val = float(np.sum(total))
        if not full:
            val -= self._g_only_constant()
        return val

    def _g_only_constant(self):
        # The reduced variant drops the theta-free e^{beta g^A} and
        # g^(A+B)/B terms; both diverge as B -> 0, so inside the limit
        # branch the reduced and full variants coincide.
        t = self.t
        if abs(t.B) < BRANCH_TOL:
            return 0.0
        const = float(np.sum(dpow(self.gm, t.a_plus_b))) / t.B
        if t.beta != 0.0:
            const += float(np.sum(np.exp(t.beta * self.gA)))
        return const

    def esteq(self, theta):
        """d/dtheta of the full objective at theta."""
        t = self.t
        lf = self.logpmf(theta)
        u = self.family.score(theta, self.xs)
        fA = np.exp(t.A * lf)
        with np.errstate(over="ignore"):
            w = (t.a_plus_b / t.A) * np.exp(t.B * lf)
            if t.beta != 0.0:
                w = w + t.A * t.beta**2 * np.exp(t.beta * fA + t.A * lf)
        return float(np.sum(w * (fA - self.gA) * u))


def gsb_objective(t: TuningTriplet, family: ModelFamily, theta, data, *, full=True) -> float:
    """GSB divergence between the data density and f_theta.

    With full=False the theta-free data-only terms are dropped (the reduced
    objective); the argmin is unchanged.
    """
    _require_estimable(t)
    ghat, n, mean, data_max = _as_ghat(data)
    ws = _Workspace(t, family, ghat, n, mean, data_max)
    return ws.objective(family.check_theta(theta), full=full)


def estimating_function(t: TuningTriplet, family: ModelFamily, theta, data) -> float:
    """Gradient of the full GSB objective in theta (zero at the estimate)."""
    _require_estimable(t)
    ghat, n, mean, data_max = _as_ghat(data)
    ws = _Workspace(t, family, ghat, n, mean, data_max)
    return ws.esteq(family.check_theta(theta))


def _bracket_downhill(fun, x0, lo, hi):
    """Expand from x0 to an interval [a, b] that contains a local minimum.

    The interval may end on a search bound when the descent runs into it; the
    bounded minimizer then lands there and the result is flagged non-interior.
    """
    h = max(1e-3 * (hi - lo), 1e-8)
    x0 = min(max(x0, lo), hi)
    xp, xm = min(x0 + h, hi), max(x0 - h, lo)
    f0, fp, fm = fun(x0), fun(xp), fun(xm)
    if f0 <= fp and f0 <= fm:
        return xm, xp
    if fp < fm:
        prev, cur, fcur = x0, xp, fp
    else:
        prev, cur, fcur = x0, xm, fm
    while lo < cur < hi:
        nxt = min(max(cur + 1.618 * (cur - prev), lo), hi)
        fn = fun(nxt)
        if fn > fcur:
            a, b = sorted((prev, nxt))
            return a, b
        prev, cur, fcur = cur, nxt, fn
    a, b = sorted((prev, cur))
    return a, b


def estimate(t: TuningTriplet, family: ModelFamily, data, *, compute_se=True,
             se_n=None, extra_starts=(), theta_tol=THETA_TOL,
             esteq_tol=ESTEQ_TOL) -> EstimationResult:
    """Minimum GSB divergence estimate by multi-start bounded minimization.

    Starts are the moment estimate, the minimum-L2 estimate and the domain
    midpoint; the lowest converged objective wins, ties broken toward the
    smaller theta. The root of the estimating function is then polished and
    verified.
    """
    _require_estimable(t)
    ghat, n, mean, data_max = _as_ghat(data)
    ws = _Workspace(t, family, ghat, n, mean, data_max)
    lo, hi = ws.lo, ws.hi

    starts = []
    moment = family.moment_estimate(mean)
    if moment is not None:
        starts.append(min(max(moment, lo), hi))
    if extra_starts:
        # Caller-supplied pilot (typically a shared minimum-L2 fit).
        starts.extend(extra_starts)
    elif t.astuple() != L2_TRIPLET.astuple():
        try:
            l2 = _minimize_once(_Workspace(L2_TRIPLET, family, ghat, n, mean, data_max),
                                starts=[s for s in (moment,) if s is not None]
                                       + [0.5 * (lo + hi)],
                                theta_tol=theta_tol)
            starts.append(l2)
        except EstimationError:
            pass
    starts.append(0.5 * (lo + hi))

    theta_hat = _minimize_once(ws, starts, theta_tol)
    theta_hat = _polish_root(ws, theta_hat, lo, hi)

    esteq_val = ws.esteq(theta_hat)
    span = hi - lo
    interior = (theta_hat - lo) > 1e-6 * span and (hi - theta_hat) > 1e-6 * span
    converged = abs(esteq_val) <= esteq_tol and interior
    message = "" if converged else (
        "estimate on the search boundary" if not interior
        else f"estimating function {esteq_val:.3e} above tolerance {esteq_tol:g}"
    )

    se = None
    if compute_se and converged:
        n_eff = se_n if se_n is not None else n
        if n_eff is not None:
            from .asymptotics import model_JV, std_error

            try:
                se = float(std_error(model_JV(t, family, theta_hat), n_eff)[0])
            except Exception:
                se = None

    return EstimationResult(
        theta_hat=theta_hat,
        objective_at_min=ws.objective(theta_hat),
        std_error=se,
        iterations=ws.evals,
        converged=converged,
        triplet=t,
        esteq_at_min=esteq_val,
        message=message,
    )


def _minimize_once(ws: _Workspace, starts, theta_tol):
    lo, hi = ws.lo, ws.hi
    best = None
    for s in starts:
        s = min(max(s, lo), hi)
        a, b = _bracket_downhill(ws.objective, s, lo, hi)
        if b - a < 4 * theta_tol:
            cand = 0.5 * (a + b)
        else:
            res = minimize_scalar(ws.objective, bounds=(a, b), method="bounded",
                                  options={"xatol": theta_tol})
            cand = float(res.x)
        val = ws.objective(cand)
        if best is None or val < best[1] - 1e-15 or (abs(val - best[1]) <= 1e-15 and cand < best[0]):
            best = (cand, val)
    if best is None:
        raise EstimationError("no start produced a candidate minimum")
    return best[0]


def _polish_root(ws: _Workspace, theta, lo, hi):
    """Newton-polish the estimating-function root near the minimizer."""
    f = ws.esteq(theta)
    for _ in range(6):
        if abs(f) < 1e-13:
            break
        h = 1e-6 * max(1.0, abs(theta))
        lo_h, hi_h = max(theta - h, lo), min(theta + h, hi)
        df = (ws.esteq(hi_h) - ws.esteq(lo_h)) / (hi_h - lo_h)
        if not np.isfinite(df) or df == 0.0:
            break
        step = f / df
        if abs(step) > 0.1 * (hi - lo):
            break
        cand = min(max(theta - step, lo), hi)
        fc = ws.esteq(cand)
        if not np.isfinite(fc) or abs(fc) >= abs(f):
            break
        theta, f = cand, fc
    return theta
