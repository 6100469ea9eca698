"""Scenario-based cash sub-additive risk statistics: axioms, lift and dual representation."""

__version__ = "0.1.0"

from .core import (
    RiskStatisticSpec,
    SpecError,
    DimensionError,
    clip_losses,
    evaluate,
    worst_case,
    neg_expectation,
    entropic,
    discounted,
    loss_based,
    scaled_worst_case,
)
from .axioms import AxiomReport, ReportGroup, check_axioms
from .embedding import ExtendedVector, embed, lift_eval, verify_lift
from .duality import (
    SearchConfig,
    PenaltySurface,
    penalty_min,
    conjugate_unconstrained,
    penalty_surface,
    reconstruct,
    duality_gap_report,
)
