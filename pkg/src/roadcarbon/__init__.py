"""Design-to-emissions pipeline for aggregate-surfaced low-volume roads."""

from .errors import (
    AssessmentError,
    ConfigError,
    CorpusFormatError,
    DegenerateInputError,
    DomainError,
    InfeasibleDesignError,
    LoadError,
    RankDeficiencyError,
    RoadCarbonError,
    SchemaError,
)

__version__ = "0.1.0"

__all__ = [
    "AssessmentError",
    "ConfigError",
    "CorpusFormatError",
    "DegenerateInputError",
    "DomainError",
    "InfeasibleDesignError",
    "LoadError",
    "RankDeficiencyError",
    "RoadCarbonError",
    "SchemaError",
    "__version__",
]
