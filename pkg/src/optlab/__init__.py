"""First-order optimization laboratory.

Deterministic and stochastic gradient methods, test problems with known
minimizers, spectral analysis of momentum iterations and a harness that
audits empirical runs against closed-form rates and bounds.
"""

__version__ = "0.1.0"

from .errors import ConfigError, ContractError, ConvergenceError  # noqa: E402
from . import problems, oracles, optimizers, linesearch, spectral  # noqa: E402

__all__ = [
    "__version__",
    "ConfigError",
    "ContractError",
    "ConvergenceError",
    "problems",
    "oracles",
    "optimizers",
    "linesearch",
    "spectral",
]
