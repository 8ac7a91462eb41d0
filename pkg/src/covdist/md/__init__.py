"""Desk-scale Lennard-Jones molecular dynamics."""

from .diffusion import (DiffusionResult, DiffusionWarning, diffusion_msd, diffusion_vacf,
                        msd_curve, vacf_curve)
from .integrators import (SimConfig, SimState, langevin_step, make_state, maxwell_boltzmann,
                          velocity_verlet_step)
from .potential import compute_forces, fcc_init, lj_pair, lj_potential, total_potential
from .simulate import (SimulationResult, energy_drift, read_energy_log, run_simulation,
                       windowed_drift)

__all__ = [
    "DiffusionResult", "DiffusionWarning", "SimConfig", "SimState", "SimulationResult",
    "compute_forces", "diffusion_msd", "diffusion_vacf", "energy_drift", "fcc_init",
    "langevin_step", "lj_pair", "lj_potential", "make_state", "maxwell_boltzmann", "msd_curve",
    "read_energy_log", "run_simulation", "total_potential", "vacf_curve", "velocity_verlet_step",
    "windowed_drift",
]
