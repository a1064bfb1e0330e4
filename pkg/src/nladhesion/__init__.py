"""Quasistatic viscoelastic adhesive contact with nonlocal surface damage."""

__version__ = "0.1.0"

from .config import SolverConfig, parse_config, parse_config_text  # noqa: E402
from .coupler import (Simulator, Trajectory, epsilon_continuation,  # noqa: E402
                      restart_equivalence, run_simulation)

__all__ = [
    "SolverConfig",
    "parse_config",
    "parse_config_text",
    "Simulator",
    "Trajectory",
    "run_simulation",
    "epsilon_continuation",
    "restart_equivalence",
]
