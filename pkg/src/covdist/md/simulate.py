"""Equilibrate under Langevin dynamics, then record an NVE production run."""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..timeseries import Channel
from ..trajio import TrajectoryWriter
from .integrators import (SimConfig, SimState, langevin_step, make_state, maxwell_boltzmann,
                          velocity_verlet_step)
from .potential import fcc_cells_for, fcc_init

log = logging.getLogger(__name__)

ENERGY_COLUMNS = ("step", "kinetic", "potential", "total", "temperature")


@dataclass(frozen=True)
class SimulationResult:
    velocity_path: str | None
    position_path: str | None
    energy_log_path: str | None
    energy_drift: float
    drift_per_10k_steps: float
    max_energy_deviation: float
    mean_temperature: float
    n_velocity_frames: int
    n_position_frames: int
    final_state: SimState


def energy_drift(total_energy, block: float = 0.1) -> float:
    """Relative change between the mean total energy of the first and last blocks.

    Block means suppress the bounded oscillation of a symplectic integrator
    so that only secular drift is measured.
    """
    e = np.asarray(total_energy, dtype=np.float64)
    n = max(1, int(len(e) * block))
    first, last = e[:n].mean(), e[-n:].mean()
    return float(abs(last - first) / abs(first))


def windowed_drift(total_energy, window: int = 10_000, block: float = 0.1) -> float:
    """Largest :func:`energy_drift` over consecutive ``window``-step stretches.

    ``total_energy`` holds one value per step, starting at step 0. Runs
    shorter than one window are measured whole.
    """
    e = np.asarray(total_energy, dtype=np.float64)
    if len(e) <= window + 1:
        return energy_drift(e, block)
    return max(energy_drift(e[s:s + window + 1], block) for s in range(0, len(e) - window, window))


def initial_state(config: SimConfig) -> tuple[SimState, np.random.Generator]:
    if config.init != "fcc":
        raise ValidationError(f"init={config.init!r}: a full run needs lattice initialisation", field="init")
    rng = np.random.default_rng(config.seed)
    pos = fcc_init(fcc_cells_for(config.n_particles), config.box_length)
    vel = maxwell_boltzmann(config.n_particles, config.temperature, rng)
    return make_state(pos, vel, config), rng


def _set_total_energy(state: SimState, target: float) -> SimState:
    v = state.velocities - state.velocities.mean(axis=0)
    target_ke = target - state.potential_energy
    ke = 0.5 * float(np.sum(v * v))
    if target_ke > 0 and ke > 0:
        v = v * math.sqrt(target_ke / ke)
    else:
        log.warning("handoff rescale skipped: target kinetic energy %.4g", target_ke)
    return SimState(state.positions, v, state.forces, state.potential_energy, state.step, state.unwrapped)


def equilibrate(state: SimState, config: SimConfig, rng: np.random.Generator) -> SimState:
    """Langevin phase followed by the NVE handoff adjustment."""
    n = config.n_steps_equil
    tail = []
    for i in range(n):
        state = langevin_step(state, config, rng)
        if i >= n // 2:
            tail.append(state.total_energy)
    state = SimState(state.positions, state.velocities - state.velocities.mean(axis=0), state.forces,
                     state.potential_energy, 0, state.positions.copy())
    if config.handoff == "none" or not tail:
        return state
    state = _set_total_energy(state, float(np.mean(tail)))
    if config.handoff == "calibrate":
        T, n_p = config.temperature, config.n_particles
        # canonical fluctuations: Var(E) = c_v n T^2; clipped to a plausible range
        c_v = float(np.clip(np.var(tail) / (n_p * T * T), 1.5, 6.0)) if len(tail) > 1 else 1.5
        for _ in range(config.calibration_rounds):
            temps = np.empty(config.calibration_steps)
            for k in range(config.calibration_steps):
                state = velocity_verlet_step(state, config)
                temps[k] = state.temperature
            if config.calibration_steps:
                target = state.total_energy + c_v * n_p * (T - float(temps.mean()))
                state = _set_total_energy(state, target)
        state = SimState(state.positions, state.velocities, state.forces, state.potential_energy, 0,
                         state.positions.copy())
    return state


def run_simulation(config: SimConfig, out_dir=None, prefix: str = "traj",
                   keep_in_memory: bool = False, progress=None):
    """Run the full protocol.

    With ``out_dir`` set, writes ``<prefix>.vel.cvtj`` (velocities every
    ``sample_stride`` steps), ``<prefix>.pos.cvtj`` (unwrapped positions every
    ``position_stride`` steps) and ``<prefix>.energy.txt``. Frames are taken
    after production steps ``stride, 2*stride, ...``. With ``keep_in_memory``
    the frame arrays are returned as well, as ``(result, velocities, positions)``.
    """
    state, rng = initial_state(config)
    state = equilibrate(state, config, rng)
    vs, ps = config.sample_stride, config.positions_every
    paths = (None, None, None)
    writers = []
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        paths = tuple(os.path.join(out_dir, f"{prefix}.{ext}")
                      for ext in ("vel.cvtj", "pos.cvtj", "energy.txt"))
        writers = [TrajectoryWriter(paths[0], Channel.VELOCITY, config.n_particles, config.dt, vs),
                   TrajectoryWriter(paths[1], Channel.POSITION, config.n_particles, config.dt, ps)]
        elog = open(paths[2], "w")
        elog.write(f"# n_particles: {config.n_particles}\n# box_length: {config.box_length!r}\n"
                   f"# temperature: {config.temperature!r}\n# dt: {config.dt!r}\n# seed: {config.seed}\n")
        elog.write(" ".join(ENERGY_COLUMNS) + "\n")
    else:
        elog = None
    vel_mem, pos_mem = [], []
    n = config.n_steps_prod
    energies = np.empty(n + 1)
    temps = np.empty(n)
    energies[0] = state.total_energy

    def record(s):
        if elog is not None:
            elog.write(f"{s.step} {s.kinetic_energy!r} {s.potential_energy!r} "
                       f"{s.total_energy!r} {s.temperature!r}\n")

    record(state)
    try:
        for i in range(1, n + 1):
            state = velocity_verlet_step(state, config)
            energies[i] = state.total_energy
            temps[i - 1] = state.temperature
            if i % vs == 0:
                record(state)
                if writers:
                    writers[0].write(state.velocities)
                if keep_in_memory:
                    vel_mem.append(state.velocities)
            if i % ps == 0:
                if writers:
                    writers[1].write(state.unwrapped)
                if keep_in_memory:
                    pos_mem.append(state.unwrapped.copy())
            if progress is not None and i % 1000 == 0:
                progress(i, n)
    finally:
        for w in writers:
            w.close()
        if elog is not None:
            elog.close()
    drift = energy_drift(energies) if n else 0.0
    result = SimulationResult(
        *paths,
        energy_drift=drift,
        drift_per_10k_steps=windowed_drift(energies) if n else 0.0,
        max_energy_deviation=float(np.max(np.abs(energies - energies[0])) / abs(energies[0])),
        mean_temperature=float(temps.mean()) if n else state.temperature,
        n_velocity_frames=n // vs,
        n_position_frames=n // ps,
        final_state=state,
    )
    if keep_in_memory:
        empty = np.empty((0, config.n_particles, 3))
        return (result, np.array(vel_mem) if vel_mem else empty,
                np.array(pos_mem) if pos_mem else empty)
    return result


def read_energy_log(path) -> np.ndarray:
    """Return the energy log as a structured array with :data:`ENERGY_COLUMNS`."""
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    names = lines[0].split()
    data = np.loadtxt(lines[1:], ndmin=2)
    out = np.empty(len(data), dtype=[(n, np.int64 if n == "step" else np.float64) for n in names])
    for k, n in enumerate(names):
        out[n] = data[:, k]
    return out
