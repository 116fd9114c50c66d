"""Multi-agent coverage control simulation.

Implements the annealed rank-weighted coverage controller (globally optimal
for known densities), its distributed adaptive variant for unknown densities
(basis-coefficient estimation with projection and graph consensus) and the
classical Lloyd/centroidal-Voronoi baseline, plus a scenario engine, metrics
and a CLI.
"""

from .adaptive import (DataWeight, EstimatorState, accumulate_data, compute_F,
                       estimated_control, pre_adaptation, project_and_step)
from .config import ConfigError, ScenarioConfig, load_scenario, shipped_scenarios
from .controller import (control_w, cost_conventional, cost_proposed,
                         grad_w_diag)
from .engine import Simulation, SimulationError, run
from .environment import BasisSet, DensityField, Domain
from .estimators import AnnealedCoverage, LloydCoverage
from .lloyd import (calibrate_gain, cell_centroids, cell_mass_moment,
                    lloyd_control, voronoi_assign)
from .metrics import match_positions, path_length, rcov, rcov_series
from .network import NetworkGraph
from .ranking import LambdaSchedule, compute_ranks, h_lambda, lambda_at, rank_weights
from .trace import SimulationTrace, write_summary
from .validation import DomainError, ValidationError

__version__ = "0.1.0"

__all__ = [
    "AnnealedCoverage", "BasisSet", "ConfigError", "DataWeight", "DensityField",
    "Domain", "DomainError", "EstimatorState", "LambdaSchedule", "LloydCoverage",
    "NetworkGraph", "ScenarioConfig", "Simulation", "SimulationError",
    "SimulationTrace", "ValidationError", "accumulate_data", "calibrate_gain",
    "cell_centroids", "cell_mass_moment", "compute_F", "compute_ranks",
    "control_w", "cost_conventional", "cost_proposed", "estimated_control",
    "grad_w_diag", "h_lambda", "lambda_at", "lloyd_control", "load_scenario",
    "match_positions", "path_length", "pre_adaptation", "project_and_step",
    "rank_weights", "rcov", "rcov_series", "run", "shipped_scenarios",
    "voronoi_assign", "write_summary",
]
