"""PCA-based association testing for correlated quantitative traits."""

from .errors import (
    DegenerateInputError,
    DomainError,
    NumericalError,
    PcgwasError,
    ScenarioError,
    TsvFormatError,
)

__version__ = "0.1.0"
