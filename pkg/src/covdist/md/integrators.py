"""Simulation configuration, state, and the velocity-Verlet / BAOAB steppers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from ..errors import IntegrationError, ValidationError
from .potential import compute_forces, fcc_cells_for

HANDOFF_POLICIES = ("calibrate", "energy-match", "none")
FORCE_METHODS = ("auto", "cell", "allpairs", "none")


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one Lennard-Jones run, reduced units.

    ``sample_stride`` sets the velocity frame interval and ``position_stride``
    (default: same) the interval of the unwrapped-position frames. ``handoff``
    controls the Langevin-to-NVE switch: ``energy-match`` rescales velocities so
    the NVE total energy equals the mean total energy over the second half of
    equilibration; ``calibrate`` (default) follows that with
    ``calibration_rounds`` short NVE runs of ``calibration_steps`` steps, each
    ending with a rescale that moves the total energy by ``c_v * n * (T - T_mean)``,
    with the heat capacity ``c_v`` estimated from the canonical energy
    fluctuations of the Langevin phase. ``init="given"`` skips the lattice and leaves positions to
    the caller (:func:`make_state`); ``force_method="none"`` switches the
    interaction off, giving an ideal gas.
    """

    n_particles: int
    box_length: float
    temperature: float
    dt: float = 0.005
    n_steps_equil: int = 10_000
    n_steps_prod: int = 20_000
    cutoff_radius: float = 2.5
    langevin_gamma: float = 1.0
    seed: int = 0
    sample_stride: int = 1
    position_stride: int | None = None
    init: str = "fcc"
    handoff: str = "calibrate"
    calibration_rounds: int = 3
    calibration_steps: int = 2000
    force_method: str = "auto"

    def __post_init__(self):
        def bad(name, why):
            raise ValidationError(f"{name}: {why}", field=name)

        for name in ("box_length", "temperature", "dt", "cutoff_radius", "langevin_gamma"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                bad(name, f"must be a positive finite number, got {v!r}")
        for name in ("n_particles", "sample_stride"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 1):
                bad(name, f"must be a positive integer, got {v!r}")
        for name in ("n_steps_equil", "n_steps_prod", "seed", "calibration_rounds", "calibration_steps"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v >= 0):
                bad(name, f"must be a non-negative integer, got {v!r}")
        if self.position_stride is not None and not (
                isinstance(self.position_stride, int) and self.position_stride >= 1):
            bad("position_stride", f"must be a positive integer, got {self.position_stride!r}")
        if self.cutoff_radius > self.box_length / 2:
            bad("cutoff_radius", f"{self.cutoff_radius} exceeds half the box length {self.box_length / 2}")
        if self.init not in ("fcc", "given"):
            bad("init", f"must be 'fcc' or 'given', got {self.init!r}")
        if self.init == "fcc":
            fcc_cells_for(self.n_particles)
        if self.handoff not in HANDOFF_POLICIES:
            bad("handoff", f"must be one of {HANDOFF_POLICIES}")
        if self.force_method not in FORCE_METHODS:
            bad("force_method", f"must be one of {FORCE_METHODS}")

    @classmethod
    def from_density(cls, n_particles: int, density: float, temperature: float, **kw) -> "SimConfig":
        return cls(n_particles=n_particles, box_length=(n_particles / density) ** (1 / 3),
                   temperature=temperature, **kw)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @property
    def density(self) -> float:
        return self.n_particles / self.box_length ** 3

    @property
    def positions_every(self) -> int:
        return self.position_stride or self.sample_stride


@dataclass
class SimState:
    """Particle data at one step. ``unwrapped`` accumulates displacements across images."""

    positions: np.ndarray
    velocities: np.ndarray
    forces: np.ndarray
    potential_energy: float
    step: int = 0
    unwrapped: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.unwrapped is None:
            self.unwrapped = self.positions.copy()

    @property
    def kinetic_energy(self) -> float:
        return 0.5 * float(np.sum(self.velocities * self.velocities))

    @property
    def total_energy(self) -> float:
        return self.kinetic_energy + self.potential_energy

    @property
    def temperature(self) -> float:
        """Instantaneous kinetic temperature with 3n degrees of freedom."""
        return 2.0 * self.kinetic_energy / (3 * len(self.velocities))

    @property
    def momentum(self) -> np.ndarray:
        return self.velocities.sum(axis=0)


def make_state(positions, velocities, config: SimConfig, step: int = 0) -> SimState:
    pos = np.mod(np.asarray(positions, dtype=np.float64), config.box_length)
    f, u = compute_forces(pos, config.box_length, config.cutoff_radius, config.force_method)
    return SimState(pos, np.array(velocities, dtype=np.float64), f, u, step)


def maxwell_boltzmann(n: int, temperature: float, rng: np.random.Generator) -> np.ndarray:
    """Gaussian velocities with zero net momentum, rescaled to exactly ``temperature``."""
    v = rng.standard_normal((n, 3)) * math.sqrt(temperature)
    v -= v.mean(axis=0)
    t_now = float(np.sum(v * v)) / (3 * n)
    if t_now > 0:
        v *= math.sqrt(temperature / t_now)
    return v


def _finish(state, pos, unwrapped, v_half, config):
    if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(v_half))):
        raise IntegrationError(f"integration blow-up at step {state.step + 1}")
    box = config.box_length
    pos = pos - box * np.floor(pos / box)
    pos[pos >= box] = 0.0  # floor rounding can land exactly on the upper face
    f, u = compute_forces(pos, box, config.cutoff_radius, config.force_method)
    v = v_half + 0.5 * config.dt * f
    if not np.all(np.isfinite(v)):
        raise IntegrationError(f"integration blow-up at step {state.step + 1}")
    return SimState(pos, v, f, u, state.step + 1, unwrapped)


def velocity_verlet_step(state: SimState, config: SimConfig) -> SimState:
    """One kick-drift-kick step of length ``config.dt``."""
    dt = config.dt
    v_half = state.velocities + 0.5 * dt * state.forces
    disp = dt * v_half
    return _finish(state, state.positions + disp, state.unwrapped + disp, v_half, config)


def langevin_step(state: SimState, config: SimConfig, rng: np.random.Generator) -> SimState:
    """One BAOAB Langevin step at ``config.temperature`` with friction ``langevin_gamma``."""
    dt = config.dt
    c1 = math.exp(-config.langevin_gamma * dt)
    c2 = math.sqrt(-math.expm1(-2.0 * config.langevin_gamma * dt) * config.temperature)
    v = state.velocities + 0.5 * dt * state.forces
    disp = 0.5 * dt * v
    v = c1 * v + c2 * rng.standard_normal(v.shape)
    disp = disp + 0.5 * dt * v
    return _finish(state, state.positions + disp, state.unwrapped + disp, v, config)


def with_velocities(state: SimState, velocities) -> SimState:
    return replace(state, velocities=np.asarray(velocities, dtype=np.float64))
