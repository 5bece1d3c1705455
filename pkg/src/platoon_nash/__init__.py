"""Open-loop Nash equilibrium trajectories for vehicle platoon formation games.

Closed forms for predecessor-following (PF) and two-predecessor-following
(TPF) topologies, a semi-analytic solver for arbitrary rearward topologies,
a brute-force shooting oracle, stability metrics and an MPC baseline.
"""
__version__ = "0.1.0"

from .closed_form import PfSolution, TpfSolution, assemble_P, solve_pf, solve_tpf
from .general_game import GeneralSolution, InfoMatrix, build_info_matrix, eval_trajectory, solve_general
from .matfun import (
    EigenFactorization,
    NearDegenerateSpectrum,
    eig_lower_triangular,
    hyp_pair,
    scalar_alpha,
    tri_inverse,
)
from .model import (
    RelativeState,
    Scenario,
    ScenarioError,
    TopologyGraph,
    TopologyKind,
    TrajectoryTable,
    build_scenario,
    relative_initial,
)
from .solve import solve

__all__ = [
    "EigenFactorization",
    "GeneralSolution",
    "InfoMatrix",
    "NearDegenerateSpectrum",
    "PfSolution",
    "RelativeState",
    "Scenario",
    "ScenarioError",
    "TopologyGraph",
    "TopologyKind",
    "TpfSolution",
    "TrajectoryTable",
    "assemble_P",
    "build_info_matrix",
    "build_scenario",
    "eig_lower_triangular",
    "eval_trajectory",
    "hyp_pair",
    "relative_initial",
    "scalar_alpha",
    "solve",
    "solve_general",
    "solve_pf",
    "solve_tpf",
    "tri_inverse",
]
