"""Discrete probability densities on the support {0, 1, 2, ...}.

Densities are stored densely from 0 up to a truncation point X_max together
with an upper bound on the omitted tail mass.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, TruncationError

TRUNCATION_TOL = 1e-12


class DiscreteDensity:
    """A (possibly truncated) probability mass function on {0, 1, 2, ...}.

    Args:
        masses: mass at x = 0, 1, ..., len(masses) - 1.
        tail_bound: upper bound on the probability mass beyond the stored
            support.
    """

    def __init__(self, masses, tail_bound=0.0, *, tol=TRUNCATION_TOL):
        m = np.asarray(masses, dtype=float)
        if m.ndim != 1 or m.size == 0:
            raise DomainError("masses must be a nonempty 1-D array")
        if np.any(m < 0.0) or not np.all(np.isfinite(m)):
            raise DomainError("masses must be finite and nonnegative")
        if tail_bound < 0.0:
            raise DomainError("tail_bound must be nonnegative")
        if tail_bound > tol:
            raise TruncationError(
                f"tail bound {tail_bound:.3e} exceeds truncation tolerance {tol:.1e}"
            )
        total = float(m.sum())
        if total < 1.0 - tail_bound - 1e-9:
            raise DomainError(
                f"stored mass {total:.12f} is below 1 - tail_bound = {1.0 - tail_bound:.12f}"
            )
        self.masses = m
        self.tail_bound = float(tail_bound)

    @property
    def x_max(self) -> int:
        return self.masses.size - 1

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.masses.size)

    def mass(self, x: int) -> float:
        if x < 0:
            return 0.0
        return float(self.masses[x]) if x < self.masses.size else 0.0

    def extended(self, x_max: int) -> np.ndarray:
        """Masses padded with zeros up to support point x_max."""
        if x_max < self.x_max:
            raise DomainError("cannot shrink a density's stored support")
        out = np.zeros(x_max + 1)
        out[: self.masses.size] = self.masses
        return out

    def strictly_positive(self) -> bool:
        return bool(np.all(self.masses > 0.0))

    @classmethod
    def from_dict(cls, mapping, tail_bound=0.0, **kw) -> "DiscreteDensity":
        xs = sorted(int(x) for x in mapping)
        if xs and xs[0] < 0:
            raise DomainError("support points must be nonnegative integers")
        m = np.zeros((xs[-1] + 1) if xs else 1)
        for x, p in mapping.items():
            m[int(x)] = p
        return cls(m, tail_bound, **kw)

    @classmethod
    def from_model(cls, family, theta, tol=TRUNCATION_TOL, min_support=0) -> "DiscreteDensity":
        """Truncated model pmf, keeping the smallest X_max with tail < tol."""
        x_max = family.truncation_point(theta, tol)
        x_max = max(x_max, int(min_support))
        m = family.pmf(theta, np.arange(x_max + 1))
        tail = max(0.0, 1.0 - float(m.sum()))
        return cls(m, tail, tol=tol)

    @classmethod
    def mixture(cls, components, weights, tol=TRUNCATION_TOL) -> "DiscreteDensity":
        """Finite mixture of DiscreteDensity components."""
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("mixture weights must be nonnegative and sum to 1")
        x_max = max(c.x_max for c in components)
        m = sum(wi * c.extended(x_max) for wi, c in zip(w, components))
        tail = float(sum(wi * c.tail_bound for wi, c in zip(w, components)))
        return cls(m, tail, tol=tol)


def common_support(g: DiscreteDensity, f: DiscreteDensity):
    """Masses of g and f on their shared 0..X_max enumeration."""
    x_max = max(g.x_max, f.x_max)
    return g.extended(x_max), f.extended(x_max)
