import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covdist.errors import IntegrationError, OverlapError, ValidationError
from covdist.md import (DiffusionWarning, SimConfig, compute_forces, diffusion_msd, diffusion_vacf,
                        energy_drift, fcc_init, langevin_step, lj_pair, lj_potential, make_state,
                        maxwell_boltzmann, read_energy_log, run_simulation, total_potential,
                        vacf_curve, velocity_verlet_step)
from covdist.md.potential import minimum_image
from covdist.trajio import read_trajectory

RMIN = 2 ** (1 / 6)


def pair_config(**kw):
    kw.setdefault("box_length", 10.0)
    kw.setdefault("force_method", "allpairs")
    return SimConfig(n_particles=2, temperature=1.0, init="given", **kw)


def small_liquid(T=0.9, seed=0, **kw):
    return SimConfig.from_density(108, 0.8, T, seed=seed, **kw)


def jittered_state(config, seed=0, amp=0.05):
    rng = np.random.default_rng(seed)
    c = round((config.n_particles / 4) ** (1 / 3))
    pos = fcc_init(c, config.box_length) + rng.uniform(-amp, amp, (config.n_particles, 3))
    return make_state(pos, maxwell_boltzmann(config.n_particles, config.temperature, rng), config)


# --- pair potential -----------------------------------------------------------

def test_lj_pair_at_sigma():
    u, f = lj_pair(1.0)
    assert u == 0.0 and f == pytest.approx(24.0)


def test_lj_pair_minimum():
    u, f = lj_pair(RMIN)
    assert u == pytest.approx(-1.0, abs=1e-14) and f == pytest.approx(0.0, abs=1e-12)


def test_lj_pair_shift_cancels_at_cutoff():
    assert lj_pair(2.5, cutoff=2.5) == (0.0, 0.0)
    u, _ = lj_pair(2.5 - 1e-9, cutoff=2.5)
    assert abs(u) < 1e-9
    u_plain = 4 * (2.5 ** -12 - 2.5 ** -6)
    assert lj_pair(2.0, cutoff=2.5)[0] == pytest.approx(4 * (2.0 ** -12 - 2.0 ** -6) - u_plain, abs=1e-15)


@pytest.mark.parametrize("r", [0.0, -1.0])
def test_lj_pair_rejects_nonpositive(r):
    with pytest.raises(ValidationError):
        lj_pair(r)


@given(st.floats(0.85, 2.45))
def test_lj_force_is_minus_derivative(r):
    h = 1e-6
    fd = -(lj_potential(r + h) - lj_potential(r - h)) / (2 * h)
    assert lj_pair(r, cutoff=2.5)[1] == pytest.approx(fd, rel=1e-6, abs=1e-6)


# --- lattice ------------------------------------------------------------------

def test_fcc_basis():
    np.testing.assert_array_equal(
        sorted(map(tuple, fcc_init(1, 1.0))),
        [(0, 0, 0), (0, 0.5, 0.5), (0.5, 0, 0.5), (0.5, 0.5, 0)])


def test_fcc_density():
    pos = fcc_init(10, 17.1)
    assert len(pos) == 4000
    assert 4000 / 17.1 ** 3 == pytest.approx(0.80, abs=5e-3)


def test_fcc_nearest_neighbour_distance():
    box = 8.55
    pos = fcc_init(5, box)
    assert len(pos) == 500
    i, j = np.triu_indices(500, 1)
    d = np.linalg.norm(minimum_image(pos[i] - pos[j], box), axis=1)
    assert d.min() >= (box / 5) * math.sqrt(2) / 2 - 1e-12


def test_fcc_rejects_bad_counts():
    with pytest.raises(ValidationError):
        fcc_init(0, 1.0)
    with pytest.raises(ValidationError, match="n_particles"):
        SimConfig(n_particles=100, box_length=10.0, temperature=1.0)


# --- forces -------------------------------------------------------------------

def test_two_particles_at_minimum():
    f, u = compute_forces([[1, 1, 1], [1 + RMIN, 1, 1]], 10.0, 5.0, "allpairs")
    np.testing.assert_allclose(f, 0, atol=1e-12)
    assert u == pytest.approx(-1.0 - lj_potential(5.0))


def test_two_particles_finite_difference():
    f, _ = compute_forces([[1, 1, 1], [2.5, 1, 1]], 10.0, 2.5, "allpairs")
    h = 1e-5
    fd = -(lj_potential(1.5 + h) - lj_potential(1.5 - h)) / (2 * h)
    assert f[0, 0] == -f[1, 0]
    assert f[1, 0] == pytest.approx(fd, abs=1e-6)
    np.testing.assert_array_equal(f[:, 1:], 0)


def test_overlap_detected():
    with pytest.raises(OverlapError, match="pair overlap"):
        compute_forces([[1, 1, 1], [1 + 1e-7, 1, 1]], 10.0, 2.5, "allpairs")


def random_config(seed, n=16, box=6.0, rmin=0.9):
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        p = rng.uniform(0, box, 3)
        if all(np.linalg.norm(minimum_image(p - q, box)) > rmin for q in pts):
            pts.append(p)
    return np.array(pts)


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["allpairs", "cell"]))
def test_forces_are_gradient_of_total_potential(seed, method):
    box, rc = 6.0, 2.5
    pos = random_config(seed, box=box)
    f, u = compute_forces(pos, box, rc, method)
    assert u == pytest.approx(total_potential(pos, box, rc), rel=1e-12, abs=1e-12)
    np.testing.assert_allclose(f.sum(axis=0), 0, atol=1e-9)
    h = 1e-5
    for i in range(3):
        for k in range(3):
            p, m = pos.copy(), pos.copy()
            p[i, k] += h
            m[i, k] -= h
            fd = -(total_potential(p, box, rc) - total_potential(m, box, rc)) / (2 * h)
            assert abs(f[i, k] - fd) <= 1e-6 * max(1.0, abs(fd))


@pytest.mark.parametrize("cells,seed", [(5, 0), (5, 1), (6, 2)])
def test_cell_list_matches_all_pairs(cells, seed):
    box = cells * (4 / 0.8) ** (1 / 3)
    pos = fcc_init(cells, box) + np.random.default_rng(seed).uniform(-0.1, 0.1, (4 * cells**3, 3))
    fa, ua = compute_forces(pos, box, 2.5, "allpairs")
    fc, uc = compute_forces(pos, box, 2.5, "cell")
    np.testing.assert_allclose(fc, fa, rtol=0, atol=1e-10)
    assert uc == pytest.approx(ua, rel=1e-12)


# --- integrators --------------------------------------------------------------

def test_free_flight():
    cfg = pair_config(force_method="none")
    s = make_state([[1, 1, 1], [5, 5, 5]], [[1, 0, 0], [0, 0, 0]], cfg)
    s2 = velocity_verlet_step(s, cfg)
    assert s2.positions[0, 0] == pytest.approx(1.005, abs=1e-15)
    np.testing.assert_array_equal(s2.positions[1], [5, 5, 5])
    assert s2.step == 1


def test_positions_rewrapped_and_unwrapped_tracked():
    cfg = pair_config(force_method="none", dt=0.1)
    s = make_state([[9.99, 1, 1], [5, 5, 5]], [[1, 0, 0], [0, 0, 0]], cfg)
    s = velocity_verlet_step(s, cfg)
    assert s.positions[0, 0] == pytest.approx(0.09)
    assert s.unwrapped[0, 0] == pytest.approx(10.09)
    assert np.all((s.positions >= 0) & (s.positions < cfg.box_length))


def test_bound_pair_conserves_energy():
    cfg = pair_config()
    s = make_state([[4, 5, 5], [4 + 1.15, 5, 5]], np.zeros((2, 3)), cfg)
    e = [s.total_energy]
    for _ in range(10_000):
        s = velocity_verlet_step(s, cfg)
        e.append(s.total_energy)
    assert energy_drift(e) < 1e-5
    assert max(abs(x - e[0]) for x in e) / abs(e[0]) < 1e-4


def test_time_reversal():
    cfg = small_liquid(force_method="allpairs")
    s0 = jittered_state(cfg)
    s = s0
    for _ in range(10):
        s = velocity_verlet_step(s, cfg)
    s = make_state(s.positions, -s.velocities, cfg)
    for _ in range(10):
        s = velocity_verlet_step(s, cfg)
    np.testing.assert_allclose(minimum_image(s.positions - s0.positions, cfg.box_length), 0, atol=1e-12)
    np.testing.assert_allclose(-s.velocities, s0.velocities, atol=1e-10)


def test_blow_up_detected():
    cfg = pair_config()
    s = make_state([[4, 5, 5], [6, 5, 5]], [[np.inf, 0, 0], [0, 0, 0]], cfg)
    with pytest.raises(IntegrationError, match="blow-up"):
        velocity_verlet_step(s, cfg)


def test_langevin_vanishing_friction_reduces_to_verlet():
    cfg = small_liquid(langevin_gamma=1e-12)
    s0 = jittered_state(cfg)
    a = velocity_verlet_step(s0, cfg)
    b = langevin_step(s0, cfg, np.random.default_rng(5))
    np.testing.assert_allclose(b.positions, a.positions, rtol=0, atol=1e-8)
    # the velocity kick carries noise of size sqrt(2 gamma dt T)
    noise = math.sqrt(2e-12 * cfg.dt * cfg.temperature)
    np.testing.assert_allclose(b.velocities, a.velocities, rtol=0, atol=6 * noise)


def test_langevin_deterministic_given_seed():
    cfg = small_liquid()
    s0 = jittered_state(cfg)
    a = langevin_step(s0, cfg, np.random.default_rng(9))
    b = langevin_step(s0, cfg, np.random.default_rng(9))
    np.testing.assert_array_equal(a.velocities, b.velocities)


def test_maxwell_boltzmann_exact_temperature():
    v = maxwell_boltzmann(500, 0.85, np.random.default_rng(0))
    np.testing.assert_allclose(v.sum(axis=0), 0, atol=1e-12)
    assert float(np.sum(v * v)) / 1500 == pytest.approx(0.85, rel=1e-14)


def test_kinetic_energy_definition():
    cfg = small_liquid()
    s = jittered_state(cfg)
    assert s.kinetic_energy == pytest.approx(0.5 * sum(float(v @ v) for v in s.velocities), rel=1e-12)


@pytest.fixture(scope="module")
def free_langevin():
    """1000 non-interacting particles under Langevin dynamics, gamma = T = 1."""
    cfg = SimConfig(n_particles=1000, box_length=20.0, temperature=1.0, dt=0.005, init="given",
                    force_method="none", seed=4)
    rng = np.random.default_rng(cfg.seed)
    s = make_state(rng.uniform(0, 20, (1000, 3)), maxwell_boltzmann(1000, 1.0, rng), cfg)
    vel, pos, temps = [], [], []
    for i in range(1, 20_001):
        s = langevin_step(s, cfg, rng)
        temps.append(s.temperature)
        if i % 5 == 0:
            vel.append(s.velocities)
        if i % 20 == 0:
            pos.append(s.unwrapped.copy())
    return cfg, np.array(vel), np.array(pos), np.array(temps)


@pytest.mark.slow
def test_ideal_gas_temperature(free_langevin):
    _, _, _, temps = free_langevin
    assert temps.mean() == pytest.approx(1.0, rel=0.02)


@pytest.mark.slow
def test_free_particle_diffusion(free_langevin):
    cfg, vel, pos, _ = free_langevin
    expected = cfg.temperature / cfg.langevin_gamma
    d_msd = diffusion_msd(pos, 20 * cfg.dt)
    d_vacf = diffusion_vacf(vel, 5 * cfg.dt)
    assert d_msd.reliable and d_vacf.reliable
    assert d_msd.coefficient == pytest.approx(expected, rel=0.10)
    assert d_vacf.coefficient == pytest.approx(expected, rel=0.10)
    c = vacf_curve(vel, 200) / 3
    t = np.arange(200) * 5 * cfg.dt
    np.testing.assert_allclose(c, cfg.temperature * np.exp(-cfg.langevin_gamma * t), atol=0.03)


def test_thermostat_and_nve_on_small_liquid():
    cfg = small_liquid(T=0.9, seed=3)
    rng = np.random.default_rng(cfg.seed)
    s = jittered_state(cfg, seed=3)
    temps = []
    for _ in range(2000):
        s = langevin_step(s, cfg, rng)
    for _ in range(10_000):
        s = langevin_step(s, cfg, rng)
        temps.append(s.temperature)
    assert np.mean(temps) == pytest.approx(0.9, rel=0.02)
    s = make_state(s.positions, s.velocities - s.velocities.mean(axis=0), cfg)
    p0 = s.momentum
    e = [s.total_energy]
    worst = 0.0
    for _ in range(10_000):
        s = velocity_verlet_step(s, cfg)
        e.append(s.total_energy)
        worst = max(worst, float(np.abs(s.momentum - p0).max()))
    assert worst <= 1e-9
    assert energy_drift(e) <= 1e-4


# --- full protocol ------------------------------------------------------------

def test_stride_consistency():
    base = dict(n_steps_equil=50, n_steps_prod=100, seed=2)
    _, v1, p1 = run_simulation(small_liquid(sample_stride=1, **base), keep_in_memory=True)
    _, v10, p10 = run_simulation(small_liquid(sample_stride=10, **base), keep_in_memory=True)
    assert len(v1) == 100 and len(v10) == 10
    for k in range(1, 11):
        np.testing.assert_array_equal(v1[10 * k - 1], v10[k - 1])
        np.testing.assert_array_equal(p1[10 * k - 1], p10[k - 1])


def test_run_writes_files(tmp_path):
    cfg = small_liquid(n_steps_equil=100, n_steps_prod=200, sample_stride=4, position_stride=20)
    res, vel, pos = run_simulation(cfg, out_dir=tmp_path, prefix="run", keep_in_memory=True)
    hv, fv = read_trajectory(res.velocity_path)
    hp, fp = read_trajectory(res.position_path)
    assert hv.n_frames == 50 and hp.n_frames == 10
    assert hv.frame_interval == pytest.approx(0.02) and hp.frame_interval == pytest.approx(0.1)
    np.testing.assert_array_equal(fv, vel)
    np.testing.assert_array_equal(fp, pos)
    log = read_energy_log(res.energy_log_path)
    assert log.dtype.names == ("step", "kinetic", "potential", "total", "temperature")
    assert log["step"].tolist() == list(range(0, 201, 4))
    np.testing.assert_allclose(log["total"], log["kinetic"] + log["potential"], rtol=1e-12)
    assert res.energy_drift < 1e-3


def test_run_is_reproducible(tmp_path):
    cfg = small_liquid(n_steps_equil=50, n_steps_prod=50)
    a = run_simulation(cfg, out_dir=tmp_path / "a")
    b = run_simulation(cfg, out_dir=tmp_path / "b")
    for x, y in [(a.velocity_path, b.velocity_path), (a.position_path, b.position_path),
                 (a.energy_log_path, b.energy_log_path)]:
        assert open(x, "rb").read() == open(y, "rb").read()


def test_config_validation_messages():
    with pytest.raises(ValidationError, match="^dt:"):
        small_liquid(dt=-1.0)
    with pytest.raises(ValidationError, match="cutoff_radius"):
        small_liquid(cutoff_radius=4.0)
    with pytest.raises(ValidationError, match="sample_stride"):
        small_liquid(sample_stride=0)
    with pytest.raises(ValidationError, match="init"):
        run_simulation(pair_config())


# --- diffusion estimators -----------------------------------------------------

def test_stationary_particles():
    pos = np.tile(np.random.default_rng(0).uniform(size=(1, 10, 3)), (40, 1, 1))
    assert diffusion_msd(pos, 0.1).coefficient == pytest.approx(0.0, abs=1e-14)


def test_ballistic_motion_flagged():
    v = np.random.default_rng(1).normal(size=(20, 3))
    t = np.arange(200)[:, None, None] * 0.05
    with pytest.warns(DiffusionWarning):
        res = diffusion_msd(v[None] * t, 0.05)
    assert not res.reliable and res.exponent == pytest.approx(2.0, abs=0.05)


def test_constant_velocity_vacf_diverges():
    v = np.tile(np.random.default_rng(2).normal(size=(1, 20, 3)), (100, 1, 1))
    with pytest.warns(DiffusionWarning, match="does not decay"):
        res = diffusion_vacf(v, 0.01)
    assert not res.reliable


def test_vacf_zero_lag_is_temperature():
    v = maxwell_boltzmann(300, 0.9, np.random.default_rng(3))[None].repeat(4, axis=0)
    assert vacf_curve(v)[0] / 3 == pytest.approx(0.9, rel=1e-12)


def test_msd_matches_direct_average():
    rng = np.random.default_rng(4)
    r = np.cumsum(rng.normal(size=(30, 5, 3)), axis=0)
    from covdist.md import msd_curve
    got = msd_curve(r)
    for m in range(30):
        d = r[m:] - r[: 30 - m]
        assert got[m] == pytest.approx(np.mean(np.sum(d * d, axis=-1)), abs=1e-10)


def test_too_few_frames():
    with pytest.raises(ValidationError):
        diffusion_msd(np.zeros((1, 3, 3)), 0.1)
    with pytest.raises(ValidationError):
        diffusion_vacf(np.zeros((1, 3, 3)), 0.1)
