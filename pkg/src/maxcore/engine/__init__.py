"""Assumption-based CDCL engine with pluggable propagators.

Two interchangeable search kernels exist: a Cython one (maxcore.engine._search)
and a pure-Python twin (_search_py).  The compiled kernel is preferred when it
imported cleanly; set MAXCORE_PURE=1 to force the Python one.
"""

from .core import (
    Engine,
    Propagator,
    SolveOutcome,
    ClauseRec,
    available_kernels,
    default_kernel,
    ORIGIN_USER,
    ORIGIN_EXPLANATION,
    ORIGIN_RELAXATION,
    ORIGIN_OBJECTIVE,
)
from .errors import EngineError, EngineIntegrityError, MidSearchMutationError

__all__ = [
    "Engine",
    "Propagator",
    "SolveOutcome",
    "ClauseRec",
    "available_kernels",
    "default_kernel",
    "ORIGIN_USER",
    "ORIGIN_EXPLANATION",
    "ORIGIN_RELAXATION",
    "ORIGIN_OBJECTIVE",
    "EngineError",
    "EngineIntegrityError",
    "MidSearchMutationError",
]
