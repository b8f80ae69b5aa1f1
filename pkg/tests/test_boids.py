import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from alpham.context import make_rng
from alpham.scenarios.boids import (Flock, FlockParams, boids_run, boids_step, connected,
                                    min_pairwise_distance, spawn, tangent_velocity)

from oracles import angle_to

OPEN = FlockParams(obstacles=())


def _flock(pos, vel):
    pos, vel = np.asarray(pos, float), np.asarray(vel, float)
    return Flock(pos, vel, np.zeros(len(pos), dtype=bool))


def test_lone_boid_flies_straight_at_cruise_speed():
    f = _flock([[50, 50]], [[0.6, 0.8]])
    rng = make_rng(0)
    for k in range(1, 20):
        f = boids_step(f, OPEN, rng)
        assert np.allclose(f.pos[0], [50 + 0.6 * k, 50 + 0.8 * k])
        assert math.isclose(np.linalg.norm(f.vel[0]), OPEN.cruise_speed)


def test_close_pair_moves_apart():
    f = _flock([[50, 50], [51, 50]], [[1, 0], [-1, 0]])
    before = np.linalg.norm(f.pos[0] - f.pos[1])
    after = boids_step(f, OPEN, make_rng(0))
    assert np.linalg.norm(after.pos[0] - after.pos[1]) > before


def test_heading_into_obstacle_turns_onto_tangent():
    params = FlockParams(obstacles=((50.0, 50.0),))
    f = _flock([[44, 50.3]], [[1, 0]])
    out = boids_step(f, params, make_rng(0))
    radial = np.array([50.0, 50.0]) - f.pos[0]
    assert abs(angle_to(out.vel[0], radial) - math.pi / 2) < 1e-6


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10))
def test_tangent_is_perpendicular_and_keeps_speed(vx, vy, rx, ry):
    v, r = np.array([vx, vy]), np.array([rx, ry])
    if np.linalg.norm(v) < 1e-3 or np.linalg.norm(r) < 1e-3:
        return
    t = tangent_velocity(v, r)
    assert abs(np.dot(t, r)) <= 1e-9 * np.linalg.norm(v) * np.linalg.norm(r) + 1e-12
    assert math.isclose(np.linalg.norm(t), np.linalg.norm(v), rel_tol=1e-9)
    assert np.dot(t, v) >= -1e-9


def test_zero_steps_is_the_initial_state():
    run = boids_run(12, 0, seed=4)
    ref = spawn(12, FlockParams(), make_rng(4))
    assert len(run.frames) == 1
    assert np.array_equal(run.frames[0].pos, ref.pos)
    assert np.array_equal(run.frames[0].vel, ref.vel)


def test_same_seed_same_trace(tmp_path):
    a, b = boids_run(15, 120, seed=9), boids_run(15, 120, seed=9)
    a.write_trace(tmp_path / "a.csv")
    b.write_trace(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_trace_and_metrics_files(tmp_path):
    run = boids_run(5, 3, seed=1)
    run.write_trace(tmp_path / "t.csv")
    run.write_metrics(tmp_path / "m.csv")
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["step", "id", "x", "y", "vx", "vy"] and len(rows) == 1 + 4 * 5
    metrics = list(csv.reader(open(tmp_path / "m.csv")))
    assert metrics[0] == ["step", "mean_dist_barycenter", "min_pair_distance"]
    assert len(metrics) == 1 + 4


@pytest.mark.parametrize("seed", range(5))
def test_spawn_is_spread_and_connected(seed):
    p = FlockParams()
    f = spawn(30, p, make_rng(seed))
    assert min_pairwise_distance(f.pos) >= p.min_distance
    assert connected(f.pos, p.perception_radius)
    assert np.all((f.pos >= 0) & (f.pos <= 100))


def test_parameter_checks():
    with pytest.raises(ValueError):
        FlockParams(min_distance=20)
    with pytest.raises(ValueError):
        FlockParams(cruise_speed=3)


@pytest.mark.parametrize("seed", range(3))
def test_no_pair_stays_too_close_for_long(seed):
    """With v < d_min / 2, no pair stays below d_min for more than two steps in a row."""
    p = FlockParams(cruise_speed=0.9)
    run = boids_run(30, 300, params=p, seed=seed)
    iu = np.triu_indices(30, 1)
    streak = np.zeros(len(iu[0]), dtype=int)
    for f in run.frames:
        d = np.linalg.norm(f.pos[:, None, :] - f.pos[None, :, :], axis=-1)[iu]
        streak = np.where(d < p.min_distance, streak + 1, 0)
        assert streak.max() <= 2


def test_boids_stay_in_the_arena():
    run = boids_run(30, 300, seed=2)
    for f in run.frames:
        assert np.all((f.pos >= 0) & (f.pos <= 100))
