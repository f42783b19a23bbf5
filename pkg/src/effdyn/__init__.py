"""Wave-packet dynamics in a double well against classical motion in the
quantum effective potential V_eff, with and without the kinetic factor Z_eff."""

from .config import ScenarioConfig, default_config, load_config
from .effective import EffectiveTable, build_effective_table, eval_effective, solve_tilt_for_mean
from .errors import EffdynError
from .rgflow import compare_to_spectral, integrate_flow, rg_effective_potential
from .scenarios import compare_phase_space, run_scenario
from .spectral import PotentialSpec, assemble_hamiltonian, lowest_eigenpairs, make_grid
from .tdse import dominant_period, gaussian_packet, propagate
from .classical import EAModel, integrate_trajectory

__version__ = "0.1.0"

__all__ = [
    "EAModel", "EffdynError", "EffectiveTable", "PotentialSpec", "ScenarioConfig",
    "assemble_hamiltonian", "build_effective_table", "compare_phase_space", "compare_to_spectral",
    "default_config", "dominant_period", "eval_effective", "gaussian_packet", "integrate_flow",
    "integrate_trajectory", "load_config", "lowest_eigenpairs", "make_grid", "propagate",
    "rg_effective_potential", "run_scenario", "solve_tilt_for_mean",
]
