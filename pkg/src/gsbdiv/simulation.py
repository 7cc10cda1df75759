"""Monte Carlo robustness harness for contaminated discrete data.

Replications are independent work units. Each (epsilon index, replication)
pair owns a deterministic RNG stream derived from the master seed, and the
same sample is reused for every triplet at that pair (common random numbers),
so results are bit-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .densities import DiscreteDensity
from .errors import DomainError
from .estimation import L2_TRIPLET, estimate
from .models import ModelFamily, get_family
from .triplet import TuningTriplet

FAILURE_FRACTION_LIMIT = 0.01


@dataclass
class ContaminationScheme:
    base_family: ModelFamily
    base_theta: float
    contaminant_family: ModelFamily
    contaminant_theta: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise DomainError(f"epsilon must lie in [0, 1); got {self.epsilon!r}")
        self.base_family.check_theta(self.base_theta)
        self.contaminant_family.check_theta(self.contaminant_theta)

    def mixture_density(self, tol=1e-12) -> DiscreteDensity:
        base = DiscreteDensity.from_model(self.base_family, self.base_theta, tol)
        cont = DiscreteDensity.from_model(self.contaminant_family,
                                          self.contaminant_theta, tol)
        return DiscreteDensity.mixture([base, cont],
                                       [1.0 - self.epsilon, self.epsilon], tol=tol)


def sample_mixture(scheme: ContaminationScheme, n, rng) -> np.ndarray:
    """n i.i.d. draws; each picks the contaminant with probability epsilon.

    Draw order (base block, contaminant block, selector block) is fixed so a
    given stream always yields the same sample.
    """
    n = int(n)
    if n < 1:
        raise DomainError("sample size must be at least 1")
    base = scheme.base_family.sample(scheme.base_theta, n, rng)
    cont = scheme.contaminant_family.sample(scheme.contaminant_theta, n, rng)
    take = rng.random(n) < scheme.epsilon
    return np.where(take, cont, base)


@dataclass
class MseGrid:
    triplets: list
    epsilons: list
    n: int
    reps: int
    target: float
    seed: int
    mse: dict = field(default_factory=dict)
    mc_se: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    invalid_cells: list = field(default_factory=list)
    sq_errors: dict = field(default_factory=dict)

    def cell_key(self, triplet, eps):
        trip = triplet.astuple() if isinstance(triplet, TuningTriplet) else tuple(triplet)
        return (trip, float(eps))

    def monotonicity_violations(self):
        """(triplet, eps_lo, eps_hi) cells where MSE drops beyond 2 pooled SEs."""
        out = []
        eps_sorted = sorted(self.epsilons)
        for trip in self.triplets:
            for lo, hi in zip(eps_sorted, eps_sorted[1:]):
                a, b = self.cell_key(trip, lo), self.cell_key(trip, hi)
                pooled = np.hypot(self.mc_se[a], self.mc_se[b])
                if self.mse[b] < self.mse[a] - 2.0 * pooled:
                    out.append((tuple(trip.astuple() if isinstance(trip, TuningTriplet)
                                      else trip), lo, hi))
        return out


def _unit_seed(master_seed, eps_idx, rep):
    return np.random.SeedSequence([int(master_seed), int(eps_idx), int(rep)])


def _run_unit(args):
    """One (epsilon, replication) unit: sample once, fit every triplet."""
    (master_seed, eps_idx, rep, eps, n, base_name, base_theta, cont_name,
     cont_theta, fit_name, triplets, target) = args
    scheme = ContaminationScheme(get_family(base_name), base_theta,
                                 get_family(cont_name), cont_theta, eps)
    rng = np.random.Generator(np.random.PCG64(_unit_seed(master_seed, eps_idx, rep)))
    sample = sample_mixture(scheme, n, rng)
    family = get_family(fit_name)

    # The L2 fit doubles as a shared extra start for every triplet.
    l2_start = ()
    try:
        l2_fit = estimate(L2_TRIPLET, family, sample, compute_se=False)
        l2_start = (l2_fit.theta_hat,)
    except Exception:
        pass

    out = []
    for trip in triplets:
        t = TuningTriplet(*trip)
        try:
            if t.astuple() == L2_TRIPLET.astuple() and l2_start:
                theta_hat = l2_start[0]
            else:
                theta_hat = estimate(t, family, sample, compute_se=False,
                                     extra_starts=l2_start).theta_hat
            out.append((theta_hat - target) ** 2)
        except Exception:
            out.append(np.nan)
    return eps_idx, rep, out


def run_mse_grid(triplets, epsilons, n, reps, target, seed, *,
                 base=("poisson", 3.0), contaminant=("poisson", 10.0),
                 fit_family="poisson", workers=1) -> MseGrid:
    """Empirical MSE of each triplet's estimate over replicated mixtures.

    Failed replications are excluded from their cell and counted; a cell with
    more than 1% failures is flagged invalid.
    """
    reps = int(reps)
    if reps < 2:
        raise DomainError("reps must be at least 2")
    triplets = [t if isinstance(t, TuningTriplet) else TuningTriplet(*t)
                for t in triplets]
    for t in triplets:
        if t.A <= 0.0:
            raise DomainError(f"triplet {t.label()} is not estimable (A <= 0)")
    epsilons = [float(e) for e in epsilons]

    tasks = [
        (seed, eps_idx, rep, eps, int(n), base[0], float(base[1]), contaminant[0],
         float(contaminant[1]), fit_family, [t.astuple() for t in triplets], target)
        for eps_idx, eps in enumerate(epsilons)
        for rep in range(reps)
    ]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=int(workers)) as pool:
            results = list(pool.map(_run_unit, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        results = [_run_unit(task) for task in tasks]

    sq = {(ti, ei): np.full(reps, np.nan) for ti in range(len(triplets))
          for ei in range(len(epsilons))}
    for eps_idx, rep, values in results:
        for ti, v in enumerate(values):
            sq[(ti, eps_idx)][rep] = v

    grid = MseGrid(triplets=triplets, epsilons=epsilons, n=int(n), reps=reps,
                   target=float(target), seed=int(seed))
    for ti, t in enumerate(triplets):
        for ei, eps in enumerate(epsilons):
            errs = sq[(ti, ei)]
            ok = errs[np.isfinite(errs)]
            key = grid.cell_key(t, eps)
            nfail = int(reps - ok.size)
            grid.failures[key] = nfail
            grid.sq_errors[key] = errs
            if ok.size == 0:
                grid.mse[key] = np.nan
                grid.mc_se[key] = np.nan
            else:
                grid.mse[key] = float(np.mean(ok))
                grid.mc_se[key] = (float(np.std(ok, ddof=1) / np.sqrt(ok.size))
                                   if ok.size > 1 else np.nan)
            if nfail > FAILURE_FRACTION_LIMIT * reps:
                grid.invalid_cells.append(key)
    return grid


@dataclass
class CellComparison:
    improved: bool
    equal: bool
    mse_a: list
    mse_b: list
    sign_test_p: list


def compare_cells(grid_a: MseGrid, triplet_a, grid_b: MseGrid, triplet_b,
                  paired=True) -> CellComparison:
    """Did triplet_b improve (reduce) every epsilon-level MSE of triplet_a?

    Paired comparisons require common random numbers (same protocol and seed)
    and add a per-epsilon sign test on replication-level squared errors.
    """
    if (grid_a.epsilons != grid_b.epsilons or grid_a.n != grid_b.n
            or grid_a.reps != grid_b.reps or grid_a.target != grid_b.target):
        raise DomainError("cells come from different protocols")
    if paired and grid_a.seed != grid_b.seed:
        raise DomainError("paired comparison requires a common seed")

    mse_a, mse_b, pvals = [], [], []
    for eps in grid_a.epsilons:
        ka = grid_a.cell_key(triplet_a, eps)
        kb = grid_b.cell_key(triplet_b, eps)
        mse_a.append(grid_a.mse[ka])
        mse_b.append(grid_b.mse[kb])
        if paired:
            d = grid_b.sq_errors[kb] - grid_a.sq_errors[ka]
            d = d[np.isfinite(d)]
            nz = d[d != 0.0]
            if nz.size == 0:
                pvals.append(1.0)
            else:
                pvals.append(float(binomtest(int(np.sum(nz < 0)), nz.size).pvalue))
        else:
            pvals.append(None)

    equal = all(a == b for a, b in zip(mse_a, mse_b))
    improved = (not equal) and all(b <= a for a, b in zip(mse_a, mse_b))
    return CellComparison(improved, equal, mse_a, mse_b, pvals)
