"""Exception hierarchy shared by every stage of the design/assessment chain."""

from __future__ import annotations


class RoadCarbonError(Exception):
    """Base class for all package errors."""


class DomainError(RoadCarbonError, ValueError):
    """An argument lies outside the domain of an operation."""


class InfeasibleDesignError(RoadCarbonError):
    """No design in the admissible search space satisfies the constraints."""

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class SchemaError(RoadCarbonError, ValueError):
    """Inconsistent units or malformed records."""


class LoadError(RoadCarbonError, ValueError):
    """A tabular input could not be loaded; the message names the row."""


class AssessmentError(RoadCarbonError):
    """Impact assessment could not be completed (e.g. missing factors)."""

    def __init__(self, message: str, missing: tuple[str, ...] = ()):
        super().__init__(message)
        self.missing = missing


class ConfigError(RoadCarbonError, ValueError):
    """Invalid configuration value."""


class DegenerateInputError(RoadCarbonError, ValueError):
    """A statistic is undefined for the given data (zero variance, constant column)."""


class RankDeficiencyError(DegenerateInputError):
    """Design matrix is rank deficient."""

    def __init__(self, message: str, dependent: tuple[str, ...] = ()):
        super().__init__(message)
        self.dependent = dependent


class CorpusFormatError(RoadCarbonError, ValueError):
    """A persisted project or corpus file is malformed."""
