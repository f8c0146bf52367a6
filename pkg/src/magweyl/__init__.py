# magweyl/__init__.py

"""
magweyl: magnetic Weyl asymptotics near saddle points of V/F.

Predicts the localized eigenvalue count of a 2D magnetic Schrödinger operator
(Weyl integral plus saddle-point corrections) and checks it against a
discretized-operator oracle.
"""

__version__ = "0.1.0"

from .errors import GuardViolation, MagWeylError, ScenarioLoadError, ValidationError

# Primary programmatic entry points.
from .config import load_config
from .runner import run_scenario, sweep_and_fit

__all__ = [
    "load_config",
    "run_scenario",
    "sweep_and_fit",
    "MagWeylError",
    "ValidationError",
    "ScenarioLoadError",
    "GuardViolation",
]
