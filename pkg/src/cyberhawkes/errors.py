"""Exception hierarchy shared by the library and the CLI."""


class CyberHawkesError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class DomainError(CyberHawkesError, ValueError):
    """An argument lies outside the domain of an operation."""

    exit_code = 3


class SupercriticalError(DomainError):
    """A quantity only defined for ||phi|| < 1 was requested."""


class ExplosionError(CyberHawkesError, RuntimeError):
    """Simulation exceeded the event cap (likely supercritical input)."""

    exit_code = 4


class ConvergenceError(CyberHawkesError, RuntimeError):
    """Optimizer could not find any finite objective value."""

    exit_code = 4


class InfeasibleScenarioError(CyberHawkesError, ValueError):
    """No reaction can keep expected daily load under capacity."""

    exit_code = 4


class SchemaError(CyberHawkesError, ValueError):
    """Input file lacks a required column or field."""

    exit_code = 3


class UndefinedCorrelationError(CyberHawkesError, ValueError):
    """Correlation requested on a series with zero variance or too few points."""

    exit_code = 3
