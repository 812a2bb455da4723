"""Numerics for the pure-loss bosonic channel: photon-number combinatorics,
converse bounds, coherent-state codebooks and small exact oracles."""

from pureloss.errors import DomainError, PreconditionError, UnsupportedRepresentationError

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "PreconditionError",
    "UnsupportedRepresentationError",
    "__version__",
]
