"""Flocking with four local rules.

Per boid, in priority order when rules compete:

1. separation: if any boid is closer than ``d_min``, move straight away;
2. obstacle ahead: turn onto the tangent of the obstacle;
3. after a collision: fly back toward the flock at ``v_boost`` until within
   ``R`` of its barycenter;
4. cohesion: head for the barycenter of the boids within ``R``, stopping
   short of crowding them.

A boid with no neighbors and nothing ahead keeps its velocity.  All boids
update synchronously from the same snapshot.
"""
from __future__ import annotations

import csv
import functools
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..context import make_rng


@dataclass(frozen=True)
class FlockParams:
    perception_radius: float = 10.0
    min_distance: float = 2.0
    cruise_speed: float = 1.0
    boost_speed: float = 2.0
    obstacles: Tuple[Tuple[float, float], ...] = ((20.0, 80.0), (80.0, 20.0))
    arena: Tuple[float, float] = (100.0, 100.0)
    obstacle_radius: float = 1.5
    cohesion_gain: float = 0.2
    spacing: float = 1.05         # cohesion stops at spacing * min_distance
    spawn_sigma: float = 10.0     # initial positions: isotropic Gaussian around the arena center

    def __post_init__(self):
        if not (0 < self.min_distance < self.perception_radius):
            raise ValueError("need 0 < min_distance < perception_radius")
        if not (self.cruise_speed < self.boost_speed):
            raise ValueError("need cruise_speed < boost_speed")

    @property
    def max_speed(self) -> float:
        return self.boost_speed


@dataclass
class Flock:
    pos: np.ndarray              # (n, 2)
    vel: np.ndarray              # (n, 2)
    boosted: np.ndarray          # (n,) bool, set by a collision
    ids: np.ndarray = None

    def __post_init__(self):
        if self.ids is None:
            self.ids = np.arange(len(self.pos))

    def copy(self) -> "Flock":
        return Flock(self.pos.copy(), self.vel.copy(), self.boosted.copy(), self.ids.copy())

    def __len__(self) -> int:
        return len(self.pos)


_SPAWN_TRIES = 1000


def connected(pos: np.ndarray, radius: float) -> bool:
    """Whether the graph linking boids closer than ``radius`` is connected."""
    n = len(pos)
    adj = _norm(pos[:, None, :] - pos[None, :, :]) < radius
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    frontier = seen.copy()
    while frontier.any():
        frontier = adj[frontier].any(axis=0) & ~seen
        seen |= frontier
    return bool(seen.all())


def spawn(n: int, params: FlockParams, rng: np.random.Generator) -> Flock:
    if n < 1:
        raise ValueError("need at least one boid")
    center = np.asarray(params.arena) / 2
    # boids start apart from each other and within sight of the group
    for _ in range(_SPAWN_TRIES):
        pos = np.empty((n, 2))
        for i in range(n):
            while True:
                p = np.clip(center + rng.normal(0.0, params.spawn_sigma, 2), 0.0,
                            np.asarray(params.arena))
                if i == 0 or _norm(pos[:i] - p).min() >= params.min_distance:
                    break
            pos[i] = p
        if connected(pos, params.perception_radius):
            break
    angle = rng.random(n) * 2 * np.pi
    vel = params.cruise_speed * np.stack([np.cos(angle), np.sin(angle)], axis=1)
    return Flock(pos, vel, np.zeros(n, dtype=bool))


def _norm(v: np.ndarray) -> np.ndarray:
    return np.hypot(v[..., 0], v[..., 1])


def _unit(v: np.ndarray) -> np.ndarray:
    norm = _norm(v)[..., None]
    return np.divide(v, norm, out=np.zeros_like(v), where=norm > 0)


def tangent_velocity(vel: np.ndarray, radial: np.ndarray) -> np.ndarray:
    """Rotate ``vel`` onto the line perpendicular to ``radial``, on the side it already leans."""
    r = _unit(radial)
    t = np.stack([-r[..., 1], r[..., 0]], axis=-1)
    sign = np.where(np.sum(t * vel, axis=-1, keepdims=True) < 0, -1.0, 1.0)
    return sign * t * _norm(vel)[..., None]


def _obstacle_ahead(pos, vel, params: FlockParams):
    """Index of the nearest obstacle on each boid's path within R, or -1."""
    n = len(pos)
    hit = np.full(n, -1)
    if not params.obstacles:
        return hit
    obs = np.asarray(params.obstacles, dtype=float)
    rel = obs[None, :, :] - pos[:, None, :]                    # (n, k, 2)
    dist = _norm(rel)
    heading = _unit(vel)[:, None, :]
    along = np.sum(rel * heading, axis=-1)
    lateral = np.abs(rel[..., 0] * heading[..., 1] - rel[..., 1] * heading[..., 0])
    ahead = (along > 0) & (dist < params.perception_radius) & (lateral < 2 * params.obstacle_radius)
    dist = np.where(ahead, dist, np.inf)
    best = np.argmin(dist, axis=1)
    hit[np.isfinite(dist[np.arange(n), best])] = best[np.isfinite(dist[np.arange(n), best])]
    return hit


_SLIDE_PASSES = 3
_KEEP_IN_SIGHT = 0.9
_BRIDGE = 0.6


def _cohesion_steps(pos, diff, dist, nbr, params: FlockParams) -> np.ndarray:
    """Step toward the perceived barycenter, shortened so no neighbor gets crowded."""
    counts = nbr.sum(axis=1)
    has = counts > 0
    w = nbr.astype(float)
    bary = np.where(has[:, None], (w @ pos) / np.maximum(counts, 1)[:, None], pos)
    step = params.cohesion_gain * (bary - pos)
    speed = np.hypot(step[:, 0], step[:, 1])[:, None]
    step = np.where(speed > params.cruise_speed, step * params.cruise_speed / np.maximum(speed, 1e-12),
                    step)
    # slide along neighbors the step would crowd, then shorten what is left
    margin = params.spacing * params.min_distance
    px, py = diff[..., 0], diff[..., 1]                        # pos_i - pos_j
    ux, uy = px / dist, py / dist                              # zero on the diagonal
    sx, sy = step[:, 0:1], step[:, 1:2]
    for _ in range(_SLIDE_PASSES):
        after = np.hypot(px + sx, py + sy)
        inward = ux * sx + uy * sy
        crowd = nbr & (after < margin) & (inward < 0)
        if not crowd.any():
            break
        k = np.where(crowd, inward, 0.0)
        sx = sx - (k * ux).sum(axis=1, keepdims=True)
        sy = sy - (k * uy).sum(axis=1, keepdims=True)
    ss = sx * sx + sy * sy
    ps = px * sx + py * sy
    with np.errstate(divide="ignore", invalid="ignore"):
        c = dist ** 2 - margin ** 2
        disc = ps ** 2 - ss * c
        root = (-ps - np.sqrt(np.maximum(disc, 0))) / ss
    # largest a in [0, 1] with |p_ij + a*step_i| >= margin for every neighbor j
    limit = np.ones_like(dist)
    approaching = (ps < 0) & nbr
    limit = np.where(approaching & (c <= 0), 0.0, limit)
    crossing = approaching & (c > 0) & (disc >= 0)
    limit = np.where(crossing, np.clip(root, 0.0, 1.0), limit)
    # and never so far that a neighbor now in sight drops out of it, unless
    # some third boid close to both keeps the two in touch
    near = (dist < _BRIDGE * params.perception_radius).astype(float)
    guarded = nbr & ((near @ near) == 0)
    leaving = guarded & (ps > 0)
    if leaving.any():
        d_in = np.where(nbr, dist, 0.0)
        reach = np.maximum(d_in, _KEEP_IN_SIGHT * params.perception_radius)
        c_out = d_in ** 2 - reach ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            root_out = (-ps + np.sqrt(np.maximum(ps ** 2 - ss * c_out, 0.0))) / ss
        limit = np.where(leaving, np.minimum(limit, np.clip(np.nan_to_num(root_out, nan=1.0), 0.0, 1.0)),
                         limit)
    alpha = limit.min(axis=1)
    step = np.hstack([sx, sy])
    return np.where(has[:, None], step * alpha[:, None], np.nan)


def boids_step(flock: Flock, params: FlockParams, rng: np.random.Generator) -> Flock:
    pos, vel = flock.pos, flock.vel
    n = len(pos)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = _norm(diff)
    np.fill_diagonal(dist, np.inf)
    nbr = dist < params.perception_radius
    close = dist < params.min_distance

    new_vel = vel.copy()
    done = np.zeros(n, dtype=bool)

    # 1. separation
    sep = close.any(axis=1)
    if sep.any():
        away = np.where(close[:, :, None], _unit(diff), 0.0).sum(axis=1)
        degenerate = sep & (_norm(away) == 0)
        if degenerate.any():
            ang = rng.random(int(degenerate.sum())) * 2 * np.pi
            away[degenerate] = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        new_vel[sep] = _unit(away[sep]) * params.cruise_speed
        done |= sep

    # 2. obstacle ahead: take the tangent
    hit = _obstacle_ahead(pos, vel, params)
    turn = (hit >= 0) & ~done
    if turn.any():
        obs = np.asarray(params.obstacles, dtype=float)
        radial = obs[hit[turn]] - pos[turn]
        speed_vec = vel[turn]
        if flock.boosted[turn].any():
            speed_vec = _unit(speed_vec) * np.where(flock.boosted[turn], params.boost_speed,
                                                    params.cruise_speed)[:, None]
        new_vel[turn] = tangent_velocity(speed_vec, radial)
        done |= turn

    # 3. after a collision: rejoin the flock fast while far from it
    boosted = flock.boosted.copy()
    center = pos.mean(axis=0)
    far = _norm(pos - center) > params.perception_radius
    boosted &= far
    rush = boosted & ~done
    if rush.any():
        new_vel[rush] = _unit(center - pos[rush]) * params.boost_speed
        done |= rush

    # 4. cohesion
    coh = nbr.any(axis=1) & ~done
    if coh.any():
        steps = _cohesion_steps(pos, diff, dist, nbr, params)
        new_vel[coh] = steps[coh]

    # a lone boid with nothing to react to cruises on at v
    idle = ~done & ~coh
    if idle.any():
        new_vel[idle] = _unit(new_vel[idle]) * params.cruise_speed

    new_vel = _keep_apart(diff, dist, new_vel, params.min_distance)
    new_pos = pos + new_vel
    new_pos, new_vel, collided = _collide(new_pos, new_vel, params)
    boosted |= collided
    return Flock(new_pos, new_vel, boosted, flock.ids)


def _keep_apart(diff, dist, vel, d_min, passes: int = 8) -> np.ndarray:
    """Shorten simultaneous steps so no pair ends closer than ``d_min``.

    A pair offends if its new distance is below ``d_min`` and below its old
    one.  Each pass scales every offending boid to the largest safe
    fraction of its step; boids still offending after the last pass stand
    still, which is always safe.
    """
    vel = vel.copy()
    n = len(vel)
    off = ~np.eye(n, dtype=bool)
    old = np.where(off, dist, d_min)
    floor = np.minimum(d_min, old)
    for k in range(passes + n):
        rel = vel[:, None, :] - vel[None, :, :]
        after = _norm(diff + rel)
        bad = off & (after < d_min) & (after < dist)
        if not bad.any():
            return vel
        who = bad.any(axis=1)
        if k >= passes:
            vel[who] = 0.0
            continue
        # largest t with |diff + t*rel| >= floor, per offending pair
        a = np.sum(rel * rel, axis=-1)
        b = np.sum(diff * rel, axis=-1)
        c = old ** 2 - floor ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (-b - np.sqrt(np.maximum(b * b - a * c, 0.0))) / a
        t = np.where(bad, np.clip(np.nan_to_num(t, nan=0.0), 0.0, 1.0), 1.0)
        scale = t.min(axis=1)
        vel[who] *= scale[who, None] * 0.999
    return vel


def _collide(pos, vel, params: FlockParams):
    collided = np.zeros(len(pos), dtype=bool)
    w, h = params.arena
    for axis, size in ((0, w), (1, h)):
        low, high = pos[:, axis] < 0, pos[:, axis] > size
        pos[low, axis] = -pos[low, axis]
        pos[high, axis] = 2 * size - pos[high, axis]
        vel[low | high, axis] *= -1
        collided |= low | high
    if params.obstacles:
        obs = np.asarray(params.obstacles, dtype=float)
        rel = pos[:, None, :] - obs[None, :, :]
        d = _norm(rel)
        inside = d < params.obstacle_radius
        for i, k in zip(*np.nonzero(inside)):
            out = rel[i, k] / d[i, k] if d[i, k] > 0 else np.array([1.0, 0.0])
            pos[i] = obs[k] + out * params.obstacle_radius
            vel[i] = out * np.linalg.norm(vel[i])
            collided[i] = True
    return pos, vel, collided


# -- runs and metrics ---------------------------------------------------------------

def mean_distance_to_barycenter(pos: np.ndarray) -> float:
    return float(_norm(pos - pos.mean(axis=0)).mean())


@functools.lru_cache(maxsize=8)
def _pairs(n: int):
    return np.triu_indices(n, 1)


def min_pairwise_distance(pos: np.ndarray) -> float:
    if len(pos) < 2:
        return float("inf")
    i, j = _pairs(len(pos))
    return float(_norm(pos[i] - pos[j]).min())


@dataclass
class BoidsRun:
    frames: List[Flock]
    mean_dist: np.ndarray       # per frame, frame 0 = initial
    min_pair: np.ndarray

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "id", "x", "y", "vx", "vy"])
            for t, f in enumerate(self.frames):
                for i in range(len(f)):
                    w.writerow([t, int(f.ids[i]), *(f"{x:.6f}" for x in (*f.pos[i], *f.vel[i]))])

    def write_metrics(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "mean_dist_barycenter", "min_pair_distance"])
            for t, (a, b) in enumerate(zip(self.mean_dist, self.min_pair)):
                w.writerow([t, f"{a:.6f}", f"{b:.6f}"])


def _same(a: Flock, b: Flock) -> bool:
    return (np.array_equal(a.pos, b.pos) and np.array_equal(a.vel, b.vel)
            and np.array_equal(a.boosted, b.boosted))


def boids_run(n: int, steps: int, params: Optional[FlockParams] = None, seed: int = 0,
              keep_frames: bool = True) -> BoidsRun:
    params = params or FlockParams()
    rng = make_rng(seed)
    flock = spawn(n, params, rng)
    frames = [flock]
    mean_d = [mean_distance_to_barycenter(flock.pos)]
    min_p = [min_pairwise_distance(flock.pos)]
    for t in range(steps):
        nxt = boids_step(flock, params, rng)
        # a state that maps to itself without drawing randomness stays put for good
        if min_p[-1] >= params.min_distance and _same(nxt, flock):
            rest = steps - t
            if keep_frames:
                frames.extend([nxt] * rest)
            mean_d.extend([mean_d[-1]] * rest)
            min_p.extend([min_p[-1]] * rest)
            flock = nxt
            break
        flock = nxt
        if keep_frames:
            frames.append(flock)
        mean_d.append(mean_distance_to_barycenter(flock.pos))
        min_p.append(min_pairwise_distance(flock.pos))
    if not keep_frames:
        frames = [frames[0], flock]
    return BoidsRun(frames, np.asarray(mean_d), np.asarray(min_p))
