"""Minimum GSB divergence estimation for discrete parametric models."""

from .asymptotics import AsymptoticCovariance, general_JV, model_JV, std_error
from .densities import DiscreteDensity
from .divergences import (
    ConvexGenerator,
    ExtendedBregmanSpec,
    extended_bregman,
    gsb_divergence,
    named_divergence,
)
from .errors import (
    DomainError,
    EstimationError,
    GsbError,
    InputError,
    SingularMatrixError,
    TruncationError,
)
from .estimation import (
    EmpiricalDensity,
    EstimationResult,
    empirical_density,
    estimate,
    estimating_function,
    gsb_objective,
)
from .influence import (
    BoundednessVerdict,
    InfluenceEvaluation,
    boundedness_scan,
    classify_boundedness,
    influence_at_model,
    influence_general,
)
from .models import GEOMETRIC, POISSON, ModelFamily, custom_family, get_family
from .simulation import (
    ContaminationScheme,
    MseGrid,
    compare_cells,
    run_mse_grid,
    sample_mixture,
)
from .triplet import TuningTriplet
from .tuning import (
    GridEvaluator,
    TuningGrid,
    TuningSelection,
    mse_criterion,
    select_hk,
    select_iwj,
    select_owj,
    select_with_refinement,
)

__version__ = "0.1.0"
