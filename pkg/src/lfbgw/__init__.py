"""Linear-fractional multi-type branching processes.

Exact generation laws, CMJ-based classification, limit laws and Monte-Carlo
cross-checks for BGW processes with linear-fractional reproduction.
"""

from .cmj import LifeLaw, MalthusResult, life_law, malthus
from .errors import (
    ConditioningError,
    DecodeError,
    DomainError,
    InvalidArgumentError,
    LFError,
    ModelParseError,
    PreconditionError,
    SeriesDivergenceError,
)
from .lf_law import LFLaw
from .model import (
    GenerationLaw,
    ModelTriplet,
    generation_law,
    mean_matrix,
    survival_probability,
)
from .spectral import SpectralSummary, classify

__version__ = "0.1.0"

__all__ = [
    "ConditioningError",
    "DecodeError",
    "DomainError",
    "GenerationLaw",
    "InvalidArgumentError",
    "LFError",
    "LFLaw",
    "LifeLaw",
    "MalthusResult",
    "ModelParseError",
    "ModelTriplet",
    "PreconditionError",
    "SeriesDivergenceError",
    "SpectralSummary",
    "classify",
    "generation_law",
    "life_law",
    "malthus",
    "mean_matrix",
    "survival_probability",
]
