"""Exception hierarchy shared by all solver modules."""


class FastselError(Exception):
    """Base class for all package errors."""


class ConfigurationError(FastselError):
    """Invalid user input: grids, time steps, experiment configs."""


class ModelDefinitionError(FastselError):
    """A growth model produced a non-finite or contract-violating value."""


class DomainError(FastselError):
    """A query left the admissible region (viability set, box, family)."""


class SolverError(FastselError):
    """An iteration failed to converge or a run-time check tripped."""


class BlowUpError(SolverError):
    """The simulated field became non-finite."""
