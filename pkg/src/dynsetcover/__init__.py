"""Dynamic set cover with worst-case bounded work per update.

Engines:

* :class:`GreedyEngine` -- level-based greedy cover, approximation
  ``(1+eps) ln n`` (via :class:`WindowedEngine` for large cost ranges);
* :class:`PDEngine` -- primal-dual tight-set cover, approximation ``(1+eps) f``;
* :class:`DominatingSetAdapter` -- dynamic dominating set on top of either.

:mod:`dynsetcover.oracle_verify` holds the static reference algorithms and
the invariant auditor; :mod:`dynsetcover.cli` the command line.
"""

from .core_model import (CoverError, DuplicateError, FrequencyError, InfeasibleError,
                         NotFoundError, Params, ParameterError, ProtocolError,
                         SizeGuardError, StaleInstanceError, UnknownSetError, derive_params)
from .dominating_adapter import DominatingSetAdapter, GraphError
from .oracle_verify import Auditor, EngineAuditor, exact_opt, static_greedy
from .primal_dual import PDEngine
from .scheduler import GreedyEngine, UpdateReport
from .window_engine import WindowedEngine

__all__ = [
    "Auditor", "CoverError", "DominatingSetAdapter", "DuplicateError", "EngineAuditor",
    "FrequencyError", "GraphError", "GreedyEngine", "InfeasibleError", "NotFoundError",
    "PDEngine", "Params", "ParameterError", "ProtocolError", "SizeGuardError",
    "StaleInstanceError", "UnknownSetError", "UpdateReport", "WindowedEngine",
    "derive_params", "exact_opt", "static_greedy",
]

__version__ = "0.1.0"
