"""Data-driven tuning-parameter selection over a triplet grid.

The criterion is the usual empirical mean-square-error surrogate: squared
distance of the candidate estimate to a pilot estimate plus the estimated
asymptotic variance over n. The HK variant keeps only the variance term; the
one-step selector (OWJ) fixes the minimum-L2 pilot; the iterated selector
(IWJ) feeds each stage's estimate back as the next pilot until a fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .asymptotics import model_JV
from .errors import DomainError, EstimationError
from .estimation import L2_TRIPLET, _as_ghat, estimate
from .models import ModelFamily
from .triplet import TuningTriplet

PILOT_TOL = 1e-8
MAX_ITER = 50


@dataclass
class TuningGrid:
    alphas: list
    lambdas: list
    betas: list
    triplets: list = field(init=False)
    excluded: list = field(init=False)

    def __post_init__(self):
        self.triplets, self.excluded = [], []
        for a, l, b in product(self.alphas, self.lambdas, self.betas):
            t = TuningTriplet(a, l, b)
            if t.A > 0.0:
                self.triplets.append(t)
            else:
                self.excluded.append(t)
        if not self.triplets:
            raise DomainError("grid contains no estimable triplet (A > 0)")

    @classmethod
    def default(cls) -> "TuningGrid":
        # Coarse 11 x 9 x 9 grid; pair with refine() passes around the incumbent.
        return cls(
            alphas=[0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            lambdas=[-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0],
            betas=[-8.0, -6.0, -4.0, -3.0, -2.0, -1.0, -0.5, 0.0, 1.0],
        )

    def refine(self, incumbent: TuningTriplet) -> "TuningGrid":
        """Halved-spacing grid spanning one coarse step around the incumbent."""

        def local(values, center):
            vals = sorted(set(values))
            if len(vals) < 2:
                return vals
            i = int(np.argmin([abs(v - center) for v in vals]))
            lo = vals[max(i - 1, 0)]
            hi = vals[min(i + 1, len(vals) - 1)]
            out = {lo, hi, vals[i]}
            out.update({(lo + vals[i]) / 2.0, (hi + vals[i]) / 2.0})
            return sorted(out)

        return TuningGrid(local(self.alphas, incumbent.alpha),
                          local(self.lambdas, incumbent.lam),
                          local(self.betas, incumbent.beta))


@dataclass
class TuningSelection:
    triplet: TuningTriplet
    theta_hat: float
    criterion_value: float
    pilot_trace: list
    converged: bool
    variant: str
    grid_size: int
    infeasible: list


class GridEvaluator:
    """Caches the per-triplet fit and variance term over one dataset.

    The candidate estimate and its variance do not depend on the pilot, so
    iterated selection only recomputes the cheap bias term.
    """

    def __init__(self, grid: TuningGrid, family: ModelFamily, data):
        self.grid = grid
        self.family = family
        self.data = data
        _, n, _, _ = _as_ghat(data)
        if n is None:
            raise DomainError("tuning needs sample data with a known size n")
        self.n = n
        self._cache = {}
        self.infeasible = []

    def fit(self, t: TuningTriplet):
        key = t.astuple()
        if key not in self._cache:
            try:
                res = estimate(t, self.family, self.data, compute_se=False)
                if not res.converged:
                    raise EstimationError(res.message or "non-convergence")
                var = float(model_JV(t, self.family, res.theta_hat)
                            .require_sandwich()[0, 0]) / self.n
                if not np.isfinite(var) or var < 0.0:
                    raise EstimationError("non-finite variance term")
                self._cache[key] = (res.theta_hat, var)
            except Exception as exc:
                self._cache[key] = exc
                self.infeasible.append((key, str(exc)))
        out = self._cache[key]
        if isinstance(out, Exception):
            raise EstimationError(str(out))
        return out

    def criterion(self, t: TuningTriplet, pilot_theta, variant):
        theta_hat, var = self.fit(t)
        if variant == "hk":
            return var, theta_hat
        return (theta_hat - pilot_theta) ** 2 + var, theta_hat

    def best(self, pilot_theta, variant):
        best = None
        for t in self.grid.triplets:
            try:
                crit, theta_hat = self.criterion(t, pilot_theta, variant)
            except EstimationError:
                continue
            key = (crit, t.alpha, -abs(t.beta), t.lam)
            if best is None or key < best[0]:
                best = (key, t, crit, theta_hat)
        if best is None:
            raise EstimationError("every grid point is infeasible")
        return best[1], best[2], best[3]


def mse_criterion(t: TuningTriplet, family: ModelFamily, data, pilot_theta,
                  variant="wj") -> float:
    """Criterion value at one triplet: bias-to-pilot squared plus variance/n.

    variant "hk" drops the bias term.
    """
    if variant not in ("wj", "hk"):
        raise DomainError(f"unknown criterion variant {variant!r}")
    ev = GridEvaluator(TuningGrid([t.alpha], [t.lam], [t.beta]), family, data)
    return ev.criterion(t, pilot_theta, variant)[0]


def _l2_pilot(family, data):
    res = estimate(L2_TRIPLET, family, data, compute_se=False)
    if not res.converged:
        raise EstimationError("minimum-L2 pilot did not converge")
    return res.theta_hat


def select_hk(grid: TuningGrid, family: ModelFamily, data) -> TuningSelection:
    """Variance-only selection (no pilot)."""
    ev = GridEvaluator(grid, family, data)
    t, crit, theta_hat = ev.best(pilot_theta=None, variant="hk")
    return TuningSelection(t, theta_hat, crit, [], True, "hk",
                           len(grid.triplets), ev.infeasible)


def select_owj(grid: TuningGrid, family: ModelFamily, data, pilot=None
               ) -> TuningSelection:
    """One-step selection with the minimum-L2 estimate as the fixed pilot."""
    ev = GridEvaluator(grid, family, data)
    pilot_theta = _l2_pilot(family, data) if pilot is None else float(pilot)
    t, crit, theta_hat = ev.best(pilot_theta, "wj")
    return TuningSelection(t, theta_hat, crit, [(pilot_theta, t.astuple())], True,
                           "owj", len(grid.triplets), ev.infeasible)


def select_iwj(grid: TuningGrid, family: ModelFamily, data, max_iter=MAX_ITER,
               tol=PILOT_TOL, pilot=None) -> TuningSelection:
    """Iterated selection: each stage's estimate becomes the next pilot.

    Stops at a repeated triplet or a pilot change below tol; longer cycles are
    reported as non-converged, returning the lower-criterion cycle member.
    """
    ev = GridEvaluator(grid, family, data)
    pilot_theta = _l2_pilot(family, data) if pilot is None else float(pilot)
    trace, seen = [], {}
    converged = False
    best_in_cycle = None
    t = crit = theta_hat = None
    for it in range(int(max_iter)):
        t, crit, theta_hat = ev.best(pilot_theta, "wj")
        trace.append((pilot_theta, t.astuple()))
        key = t.astuple()
        if trace and len(trace) >= 2 and trace[-2][1] == key:
            converged = True
            break
        if abs(theta_hat - pilot_theta) < tol:
            converged = True
            break
        if key in seen:
            # Cycle of length > 1: keep the lower-criterion member.
            cycle = [(c, tt, th) for (c, tt, th) in seen.values()]
            cycle.append((crit, t, theta_hat))
            best_in_cycle = min(cycle, key=lambda e: e[0])
            break
        seen[key] = (crit, t, theta_hat)
        pilot_theta = theta_hat
    if best_in_cycle is not None:
        crit, t, theta_hat = best_in_cycle
    return TuningSelection(t, theta_hat, crit, trace, converged, "iwj",
                           len(grid.triplets), ev.infeasible)


def select_with_refinement(method, grid, family, data, passes=1, **kw):
    """Run a selector, then re-run on halved-spacing grids around the incumbent."""
    selectors = {"hk": select_hk, "owj": select_owj, "iwj": select_iwj}
    if method not in selectors:
        raise DomainError(f"unknown method {method!r}; choices: hk, owj, iwj")
    sel = selectors[method](grid, family, data, **kw)
    for _ in range(int(passes)):
        grid = grid.refine(sel.triplet)
        nxt = selectors[method](grid, family, data, **kw)
        if nxt.criterion_value <= sel.criterion_value:
            sel = nxt
    return sel
