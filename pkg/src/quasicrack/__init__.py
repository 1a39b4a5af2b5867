"""Discrete variational brittle fracture on bond lattices.

Quasistatic crack growth by incremental global energy minimisation over
sets of broken bonds, with audits of stability, irreversibility and
energy balance.
"""

__version__ = "0.1.0"

from .config import ConfigError, ProblemSpec, canonical_spec, load_spec, spec_from_dict  # noqa: E402
from .energy import EnergyBreakdown, total_energy  # noqa: E402
from .equilibrium import SolverError, UnboundedEnergyError, minimize_displacement  # noqa: E402
from .evolution import EvolutionTrace, incremental_step, run_evolution  # noqa: E402
from .lattice import CrackSet, Lattice, build_lattice, crack_set  # noqa: E402
from .problem import Problem, TimeGrid, build_problem  # noqa: E402

__all__ = [
    "__version__",
    "ConfigError",
    "ProblemSpec",
    "canonical_spec",
    "load_spec",
    "spec_from_dict",
    "EnergyBreakdown",
    "total_energy",
    "SolverError",
    "UnboundedEnergyError",
    "minimize_displacement",
    "EvolutionTrace",
    "incremental_step",
    "run_evolution",
    "CrackSet",
    "Lattice",
    "build_lattice",
    "crack_set",
    "Problem",
    "TimeGrid",
    "build_problem",
]
