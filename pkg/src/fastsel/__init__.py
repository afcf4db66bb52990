"""Trait-structured population dynamics in fast time-periodic environments."""

__version__ = "0.1.0"

from .errors import (
    BlowUpError,
    ConfigurationError,
    DomainError,
    FastselError,
    ModelDefinitionError,
    SolverError,
)
from .grid import TraitGrid
from .model import (
    GrowthModel,
    InitialDatum,
    concave_quadratic_model,
    custom_model,
    eval_rate,
    figure1_model,
    fluctuation_model,
    initial_field,
    make_preset,
    separable_model,
    validate_assumptions,
)
from .cell import (
    EffectiveFitness,
    PeriodicOrbit,
    boundary_decay_check,
    effective_fitness,
    effective_fitness_d1,
    in_x,
    solve_f_orbit,
    solve_orbit,
    viability_margin,
)

__all__ = [
    "BlowUpError", "ConfigurationError", "DomainError", "FastselError",
    "ModelDefinitionError", "SolverError", "TraitGrid", "GrowthModel",
    "InitialDatum", "concave_quadratic_model", "custom_model", "eval_rate",
    "figure1_model", "fluctuation_model", "initial_field", "make_preset",
    "separable_model", "validate_assumptions", "EffectiveFitness",
    "PeriodicOrbit", "boundary_decay_check", "effective_fitness",
    "effective_fitness_d1", "in_x", "solve_f_orbit", "solve_orbit",
    "viability_margin",
]
