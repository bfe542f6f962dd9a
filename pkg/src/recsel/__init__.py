"""recsel: inference for the parameter of the population behind the current
record value in a sequence of independently parameterized observations."""

from . import asymptotics, datasets, estimators, families, montecarlo, records, stationarity
from .errors import DataError, DomainError, NumericError, RecselError, UsageError

__version__ = "0.1.0"

__all__ = [
    "asymptotics",
    "datasets",
    "estimators",
    "families",
    "montecarlo",
    "records",
    "stationarity",
    "RecselError",
    "UsageError",
    "DataError",
    "DomainError",
    "NumericError",
    "__version__",
]
