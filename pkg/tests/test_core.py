import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uavswarm.core import (ConfigError, Obstacle, RngStream, ScenarioConfig, SwarmState, TargetTrack,
                           build_scenario, jammer_position, surface_distance, target_position)


def _cfg(**kw):
    base = dict(n_uavs=10, targets=[TargetTrack((0, 0, 0), (1, 0, 0), 2.0)], jammer_offset=(0, 5, 0))
    base.update(kw)
    return ScenarioConfig(**base)


def test_build_hundred_uavs_five_targets():
    targets = [TargetTrack((100, 20 * m, 5), (1, 0, 0), 2.0) for m in range(5)]
    obstacles = [Obstacle((50, 20 * k + 10, 5), 2.0) for k in range(4)]
    cfg = ScenarioConfig(n_uavs=100, targets=targets, obstacles=obstacles, seed=7,
                         start_box_hi=(40.0, 100.0, 10.0))
    sc = build_scenario(cfg)
    assert sc.uav_start.shape == (100, 3)
    assert sc.n_targets == 5
    assert sc.jammer_positions(0.0).shape == (5, 3)
    assert len(sc.obstacles) == 4


def test_more_targets_than_uavs_rejected():
    targets = [TargetTrack((0, m, 0), (1, 0, 0), 1.0) for m in range(3)]
    with pytest.raises(ConfigError) as exc:
        build_scenario(_cfg(n_uavs=2, targets=targets))
    assert exc.value.field == "targets"


@pytest.mark.parametrize("kw, field", [
    (dict(n_uavs=1), "n_uavs"),
    (dict(targets=[]), "targets"),
    (dict(v_max=0.0), "v_max"),
    (dict(d_max=-1.0), "d_max"),
    (dict(jammer_offset=(0, 0, 0)), "jammer_offset"),
    (dict(horizon=99.0), "horizon"),
])
def test_invariants_rejected_with_field_name(kw, field):
    with pytest.raises(ConfigError) as exc:
        build_scenario(_cfg(**kw))
    assert exc.value.field == field


def test_obstacle_radius_must_be_positive():
    with pytest.raises(ConfigError):
        Obstacle((0, 0, 0), 0.0)


def test_same_seed_bit_identical():
    a = build_scenario(_cfg(seed=3))
    b = build_scenario(_cfg(seed=3))
    assert a.uav_start.tobytes() == b.uav_start.tobytes()
    c = build_scenario(_cfg(seed=4))
    assert not np.array_equal(a.uav_start, c.uav_start)


def test_starts_respect_separation_and_box():
    cfg = _cfg(n_uavs=40, min_start_separation=1.0)
    sc = build_scenario(cfg)
    d = np.linalg.norm(sc.uav_start[:, None] - sc.uav_start[None], axis=-1)
    np.fill_diagonal(d, np.inf)
    assert d.min() >= 1.0
    assert np.all(sc.uav_start >= 0) and np.all(sc.uav_start <= np.array(cfg.start_box_hi))


def test_target_linear_motion():
    sc = build_scenario(_cfg())
    np.testing.assert_allclose(target_position(sc, 0, 3.0), [6, 0, 0])
    np.testing.assert_allclose(target_position(sc, 0, 0.0), [0, 0, 0])
    np.testing.assert_allclose(jammer_position(sc, 0, 3.0), [6, 5, 0])
    with pytest.raises(IndexError):
        target_position(sc, 1, 0.0)


@given(st.floats(0, 30), st.floats(1e-3, 1.0))
def test_jammer_rigidly_follows_target(t, h):
    sc = build_scenario(_cfg())
    off = jammer_position(sc, 0, t) - target_position(sc, 0, t)
    np.testing.assert_allclose(off, sc.jammer_offset, atol=1e-12)
    v_t = (target_position(sc, 0, t + h) - target_position(sc, 0, t)) / h
    v_j = (jammer_position(sc, 0, t + h) - jammer_position(sc, 0, t)) / h
    np.testing.assert_allclose(v_t, v_j, atol=1e-9)
    assert np.linalg.norm(v_t) == pytest.approx(2.0, rel=1e-6)


def test_surface_distance():
    ob = Obstacle((1, 1, 1), 2.0)
    assert surface_distance((1, 1, 1), ob) == -2.0
    assert surface_distance((1, 6, 1), ob) == pytest.approx(3.0)
    assert surface_distance((3, 1, 1), ob) == pytest.approx(0.0)


def test_rng_streams_reproducible_and_independent():
    a = RngStream.named(5, "fading").generator().random(4)
    b = RngStream.named(5, "fading").generator().random(4)
    c = RngStream.named(5, "wiener").generator().random(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_swarm_state_initial():
    sc = build_scenario(_cfg())
    s = SwarmState.initial(sc, 1.0)
    assert np.all(s.energies == 1.0) and np.all(s.powers == 0.0)
    assert s.positions.shape == (10, 3)
