"""Normalizing constants of G-Wishart distributions.

Exact closed forms on chordal graphs and at D = I, hypergeometric series for
general D, and Monte Carlo / quadrature oracles.
"""

from .errors import (
    GWNormError, NonConvergenceError, ParseError, PreconditionError,
    UnsupportedStructureError,
)
from .graph import Graph, Ordering, parse_graph, read_graph
from .special import LogValue
from .exact import ExactConstant, SPDMatrix, identity_constant, log_i_exact, c_from_i
from .kernels import BACKEND
from .series import SeriesValue, general_D_driver
from .mc import McEstimate, estimate

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ExactConstant", "GWNormError", "Graph", "LogValue",
    "NonConvergenceError", "Ordering", "ParseError", "PreconditionError",
    "McEstimate", "SPDMatrix", "SeriesValue", "UnsupportedStructureError", "c_from_i",
    "estimate", "general_D_driver", "identity_constant", "log_i_exact", "parse_graph",
    "read_graph",
]
