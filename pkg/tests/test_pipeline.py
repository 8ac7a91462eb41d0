import json

import numpy as np
import pytest

from covdist.covariance import build_block_toeplitz, euclidean_mean
from covdist.errors import ValidationError
from covdist.pipeline import (dense_descriptors, load_series, particle_lag_tables, state_descriptor)
from covdist.timeseries import Channel, ParticleSeries, normalize, segment, write_series_csv
from covdist.trajio import write_trajectory


def per_series_route(frames, N, policy):
    """Descriptor of each particle via the one-series-at-a-time functions."""
    out = []
    for p in range(frames.shape[1]):
        s, _ = normalize(ParticleSeries(p, 0.1, "velocity", frames[:, p]), policy)
        out.append(euclidean_mean(build_block_toeplitz(seg) for seg in segment(s, N)).matrix)
    return np.array(out)


@pytest.mark.parametrize("policy", ["none", "zscore-per-component"])
def test_trajectory_route_matches_series_route(policy, rng):
    frames = rng.normal(size=(83, 6, 3)) * [1.0, 2.0, 0.5] + 0.3
    got = dense_descriptors(particle_lag_tables(frames, 8, policy))
    np.testing.assert_allclose(got, per_series_route(frames, 8, policy), rtol=0, atol=1e-12)


def test_state_descriptor_modes(rng):
    r = particle_lag_tables(rng.normal(size=(40, 5, 3)), 4)
    mean = state_descriptor("a", r, "state-mean", scalar_tag=1.5)
    assert mean.scalar_tag == 1.5
    np.testing.assert_allclose(mean.matrix.matrix, dense_descriptors(r).mean(axis=0), atol=1e-14)
    one = state_descriptor("a", r, "single-particle", particle_index=3)
    np.testing.assert_array_equal(one.matrix.lags, r[3])
    with pytest.raises(ValidationError):
        state_descriptor("a", r, "single-particle", particle_index=5)
    with pytest.raises(ValidationError):
        state_descriptor("a", r, "median")


def test_segment_length_checks(rng):
    with pytest.raises(ValidationError, match="shorter than one segment"):
        particle_lag_tables(rng.normal(size=(5, 2, 3)), 8)
    with pytest.raises(ValidationError):
        particle_lag_tables(rng.normal(size=(5, 2, 3)), 0)


def test_constant_component_rejected_under_zscore():
    frames = np.zeros((16, 2, 3))
    frames[:, :, 0] = np.arange(16)[:, None]
    frames[:, :, 2] = np.arange(16)[:, None] ** 2
    with pytest.raises(ValidationError, match="component y"):
        particle_lag_tables(frames, 4, "zscore-per-component")


def test_load_binary_and_csv(tmp_path, rng):
    frames = rng.normal(size=(12, 3, 3))
    write_trajectory(tmp_path / "v.cvtj", frames, Channel.VELOCITY, 0.005, 2)
    b = load_series(tmp_path / "v.cvtj")
    assert b.channel == Channel.VELOCITY and b.dt == pytest.approx(0.01)
    np.testing.assert_array_equal(b.frames, frames)

    write_series_csv(tmp_path / "d.csv", frames)
    with pytest.raises(ValidationError, match="dt"):
        load_series(tmp_path / "d.csv")
    (tmp_path / "d.csv.json").write_text(json.dumps({"dt": 0.01, "channel": "dipole"}))
    c = load_series(tmp_path / "d.csv")
    assert c.channel == Channel.DIPOLE and c.dt == 0.01
    np.testing.assert_array_equal(c.frames, frames)
    assert load_series(tmp_path / "d.csv", dt=0.5).dt == 0.5
