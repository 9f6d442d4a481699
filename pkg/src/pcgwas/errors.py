"""Exception types raised across the package."""


class PcgwasError(Exception):
    """Base class; ``kind`` is the machine-readable tag the CLI prints."""

    kind = "error"


class DomainError(PcgwasError, ValueError):
    kind = "domain"


class DegenerateInputError(PcgwasError, ValueError):
    kind = "degenerate-input"


class NumericalError(PcgwasError, ArithmeticError):
    kind = "numeric"


class TsvFormatError(PcgwasError, ValueError):
    kind = "tsv-format"


class ScenarioError(PcgwasError, ValueError):
    """Every schema violation found in a scenario file, not just the first.

    ``issues`` is a list of ``(line_number, message)``; line 0 means the
    problem is not tied to a single line (e.g. a missing required key).
    """

    kind = "scenario"

    def __init__(self, issues):
        self.issues = list(issues)
        text = "; ".join(
            f"line {line}: {msg}" if line else msg for line, msg in self.issues
        )
        super().__init__(text)
