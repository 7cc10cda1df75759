"""Tuning triplet (alpha, lambda, beta) and its derived exponents."""

from dataclasses import dataclass, field


@dataclass(frozen=True)
class TuningTriplet:
    """Indexes one member of the GSB divergence family.

    The exponents A and B are always derived from (alpha, lambda); they are
    never set independently, so A + B == 1 + alpha up to round-off.
    """

    alpha: float
    lam: float
    beta: float
    A: float = field(init=False, repr=False)
    B: float = field(init=False, repr=False)

    def __post_init__(self):
        a = float(self.alpha)
        l = float(self.lam)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "lam", l)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "A", 1.0 + l * (1.0 - a))
        object.__setattr__(self, "B", a - l * (1.0 - a))

    @property
    def a_plus_b(self) -> float:
        # 1 + alpha is exact; A + B may carry one rounding step.
        return 1.0 + self.alpha

    def label(self) -> str:
        return f"({self.alpha:g}, {self.lam:g}, {self.beta:g})"

    def astuple(self):
        return (self.alpha, self.lam, self.beta)
