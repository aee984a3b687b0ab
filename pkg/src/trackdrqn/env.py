"""Deterministic 2D track-driving world with forward-facing pixel views.

The car follows first-order lag kinematics on a polyline corridor. The
agent only ever sees an egocentric grayscale window of the region ahead
of the car (the rear half is never rendered), so the world is genuinely
partially observable from pixels alone.

Tuning constants (world units, 1 tick = 1 time step):

* ``K_TURN`` 0.08 rad/tick of heading change at full speed and full steer
* ``S_GAIN`` 0.05 units/tick of speed per selector unit (selector 40 -> 2.0)
* ``SPEED_LAG`` 0.2 first-order approach rate toward the target speed
* ``BRAKE_FACTOR`` 0.5 speed multiplier per braked tick
* ``OFFTRACK_FRICTION`` 0.4 displacement multiplier while off the corridor
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .track import TrackSpec

__all__ = [
    "ActionVector",
    "CarState",
    "ObservationFrame",
    "StepResult",
    "TrackEnv",
    "decode_action",
    "landmark_reward",
    "render_observation",
    "ACTION_NAMES",
    "ACTION_COUNT",
    "PRESETS",
]

ACTION_COUNT = 5
ACTION_NAMES = ("left", "right", "straight", "backward", "brake")

# observation presets, width x height
PRESETS = {"64x64": (64, 64), "160x120": (160, 120), "320x240": (320, 240)}

DT = 1.0
K_TURN = 0.08
S_GAIN = 0.05
SPEED_LAG = 0.2
BRAKE_FACTOR = 0.5
OFFTRACK_FRICTION = 0.4

VIEW_DEPTH = 16.0  # world units visible ahead of the car
VIEW_SPAN = 16.0  # world units across the view
BAR_HALF = 0.5  # landmark bar half-thickness along the track

TRACK_SHADE = 200
BAR_SHADE = 0
SPECKLE_LO, SPECKLE_HI = 40, 80

# grayscale conversion weights for any future color source; the simulator
# renders single-channel directly so no RGB frame is ever materialized
GRAY_WEIGHTS = (0.299, 0.587, 0.114)

DEFAULT_STEP_PENALTY = -0.01
DEFAULT_R_LAND = 10.0
DEFAULT_R_FINISH = 100.0
DEFAULT_STEP_LIMIT = 2000


@dataclass
class ActionVector:
    """Five-component control: [steer, speed_sel, forward, backward, brake]."""

    steer: float
    speed_sel: float
    forward: int
    backward: int
    brake: int

    def as_tuple(self):
        return (self.steer, self.speed_sel, self.forward, self.backward, self.brake)


_CANONICAL = (
    ActionVector(-40.0, 0.0, 1, 0, 0),  # left
    ActionVector(40.0, 0.0, 1, 0, 0),  # right
    ActionVector(0.0, 0.0, 1, 0, 0),  # straight
    ActionVector(0.0, 0.0, 0, 1, 0),  # backward
    ActionVector(0.0, 0.0, 0, 0, 1),  # brake
)


def decode_action(index: int) -> ActionVector:
    """Map a discrete action index to its canonical control vector."""
    if not 0 <= index < ACTION_COUNT:
        raise ValueError(f"action index {index} outside [0, {ACTION_COUNT})")
    a = _CANONICAL[index]
    return ActionVector(*a.as_tuple())


@dataclass
class CarState:
    position: np.ndarray  # (2,) world coordinates
    heading: float  # radians
    speed: float  # world units per tick, signed
    progress: float  # arc length of the nearest centerline projection
    landmarks_passed: int
    progress_high: float = 0.0  # credit high-water mark, see TrackEnv

    def copy(self) -> "CarState":
        return CarState(self.position.copy(), self.heading, self.speed,
                        self.progress, self.landmarks_passed, self.progress_high)


@dataclass
class ObservationFrame:
    width: int
    height: int
    pixels: np.ndarray  # (height, width) uint8, row-major

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width):
            raise ValueError(f"pixels shape {px.shape} != ({self.height}, {self.width})")
        self.pixels = px


@dataclass
class StepResult:
    observation: ObservationFrame
    reward: float
    done: bool
    info: dict


def landmark_reward(prev_passed: int, new_passed: int, m: int,
                    r_land: float = DEFAULT_R_LAND,
                    r_finish: float = DEFAULT_R_FINISH) -> float:
    """Phased bonus for newly crossed landmarks.

    Landmark i of m (1-based) pays ``r_land * i / m``; the final landmark
    additionally pays ``r_finish``. Zero when nothing was crossed.
    """
    if not 0 <= prev_passed <= new_passed <= m:
        raise ValueError(
            f"landmark ordering violated: prev={prev_passed}, new={new_passed}, m={m}")
    total = 0.0
    for i in range(prev_passed + 1, new_passed + 1):
        total += r_land * i / m
    if new_passed == m and prev_passed < m:
        total += r_finish
    return total


# ---------------------------------------------------------------------------
# rendering


def _speckle(cx: np.ndarray, cy: np.ndarray, seed: int) -> np.ndarray:
    """Deterministic per-cell byte in the off-track band, from a 64-bit mix."""
    with np.errstate(over="ignore"):
        z = (cx.astype(np.int64).astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15)
             ^ cy.astype(np.int64).astype(np.uint64) * np.uint64(0xC2B2AE3D27D4EB4F)
             ^ np.uint64((seed * 0x165667B19E3779F9) & 0xFFFFFFFFFFFFFFFF))
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    band = SPECKLE_HI - SPECKLE_LO + 1
    return (SPECKLE_LO + (z % np.uint64(band))).astype(np.uint8)


def render_observation(track: TrackSpec, car: CarState,
                       preset: tuple[int, int] = (64, 64)) -> ObservationFrame:
    """Egocentric forward view: rows sweep from far ahead (top) to the car
    (bottom), columns from the car's left to its right. Only the region in
    front of the car is sampled; everything behind it is occluded."""
    w, h = preset
    ahead = (np.arange(h, dtype=np.float64)[::-1] + 0.5) * (VIEW_DEPTH / h)
    lat = (np.arange(w, dtype=np.float64) + 0.5 - w / 2.0) * (VIEW_SPAN / w)
    fwd = np.array([np.cos(car.heading), np.sin(car.heading)])
    right = np.array([np.sin(car.heading), -np.cos(car.heading)])
    px = car.position[0] + ahead[:, None] * fwd[0] + lat[None, :] * right[0]
    py = car.position[1] + ahead[:, None] * fwd[1] + lat[None, :] * right[1]

    img = _speckle(np.floor(px), np.floor(py), track.texture_seed)

    # corridor surface: distance to the nearby centerline segments
    cull = VIEW_DEPTH + VIEW_SPAN + track.seg_len.max() + track.half_width + 2.0
    mid = track.seg_start + 0.5 * track.seg_vec
    near = np.flatnonzero(((mid - car.position) ** 2).sum(axis=1) <= cull * cull)
    if near.size:
        hw2 = track.half_width * track.half_width
        on = np.zeros((h, w), dtype=bool)
        for i in near:
            ax, ay = track.seg_start[i]
            dx, dy = track.seg_vec[i]
            ll = track.seg_len[i] * track.seg_len[i]
            t = ((px - ax) * dx + (py - ay) * dy) / ll
            np.clip(t, 0.0, 1.0, out=t)
            ex = px - (ax + t * dx)
            ey = py - (ay + t * dy)
            on |= ex * ex + ey * ey <= hw2
        img[on] = TRACK_SHADE

    # landmark bars across the corridor
    for s in track.landmarks:
        center, tangent = track.point_at(float(s))
        if ((center - car.position) ** 2).sum() > cull * cull:
            continue
        nx, ny = -tangent[1], tangent[0]
        d_along = (px - center[0]) * tangent[0] + (py - center[1]) * tangent[1]
        d_across = (px - center[0]) * nx + (py - center[1]) * ny
        bar = (np.abs(d_along) <= BAR_HALF) & (np.abs(d_across) <= track.half_width)
        img[bar] = BAR_SHADE

    return ObservationFrame(w, h, img)


# ---------------------------------------------------------------------------
# environment


class TrackEnv:
    """Stateful wrapper around the track world.

    ``step`` advances one tick; ``frame_skip_step`` repeats one action over
    ``k + 1`` ticks and renders only the final frame. Both count as a single
    agent step toward the episode step limit.
    """

    def __init__(self, track: TrackSpec, preset=(64, 64),
                 step_limit: int = DEFAULT_STEP_LIMIT,
                 step_penalty: float = DEFAULT_STEP_PENALTY,
                 r_land: float = DEFAULT_R_LAND,
                 r_finish: float = DEFAULT_R_FINISH,
                 forward_speed: float = 40.0,
                 backward_speed: float = 20.0):
        if isinstance(preset, str):
            preset = PRESETS[preset]
        self.track = track
        self.preset = tuple(preset)
        self.step_limit = int(step_limit)
        self.step_penalty = float(step_penalty)
        self.r_land = float(r_land)
        self.r_finish = float(r_finish)
        self.forward_speed = float(forward_speed)
        self.backward_speed = float(backward_speed)
        self.v_max = self.forward_speed * S_GAIN
        # progress jumps beyond this per tick are projection artifacts
        # (shortcuts across unrelated track sections), not real driving
        self.progress_window = 3.0 * self.v_max
        self._car: CarState | None = None
        self._offtrack = False
        self._ticks = 0
        self._agent_steps = 0
        self._finished = False

    @property
    def ticks(self) -> int:
        return self._ticks

    @property
    def agent_steps(self) -> int:
        return self._agent_steps

    @property
    def state(self) -> CarState:
        return self._car

    def reset(self, seed: int = 0) -> tuple[CarState, ObservationFrame]:
        """Place the car at the track start. Identical (track, seed) pairs
        produce byte-identical observations; the seed is accepted for
        interface stability and future randomized starts."""
        del seed
        pos, heading = self.track.start_pose()
        self._car = CarState(pos, heading, 0.0, 0.0, 0, 0.0)
        self._offtrack = False
        self._ticks = 0
        self._agent_steps = 0
        self._finished = False
        return self._car.copy(), self.render()

    def render(self) -> ObservationFrame:
        return render_observation(self.track, self._car, self.preset)

    def _advance(self, action: ActionVector) -> tuple[float, bool]:
        """One physics tick: returns (reward, finished)."""
        car = self._car
        car.heading += K_TURN * (action.steer / 40.0) * (abs(car.speed) / self.v_max)
        if action.brake:
            car.speed *= BRAKE_FACTOR
        elif action.forward:
            selector = action.speed_sel if action.speed_sel > 0 else self.forward_speed
            car.speed += SPEED_LAG * (selector * S_GAIN - car.speed)
        elif action.backward:
            selector = action.speed_sel if action.speed_sel > 0 else self.backward_speed
            car.speed += SPEED_LAG * (-selector * S_GAIN - car.speed)
        effective = car.speed * (OFFTRACK_FRICTION if self._offtrack else 1.0)
        car.position[0] += effective * DT * np.cos(car.heading)
        car.position[1] += effective * DT * np.sin(car.heading)

        arc, dist = self.track.project(car.position)
        car.progress = arc
        if car.progress_high < arc <= car.progress_high + self.progress_window:
            car.progress_high = arc
        self._offtrack = dist > self.track.half_width

        m = self.track.landmark_count
        prev = car.landmarks_passed
        while (car.landmarks_passed < m
               and car.progress_high >= self.track.landmarks[car.landmarks_passed]):
            car.landmarks_passed += 1
        reward = self.step_penalty + landmark_reward(
            prev, car.landmarks_passed, m, self.r_land, self.r_finish)
        finished = car.landmarks_passed >= m
        if finished:
            self._finished = True
        return reward, finished

    def _result(self, reward: float) -> StepResult:
        done = self._finished or self._agent_steps >= self.step_limit
        return StepResult(self.render(), reward, done, {
            "landmarks_passed": self._car.landmarks_passed,
            "progress": self._car.progress,
        })

    def step(self, action: ActionVector) -> StepResult:
        if self._car is None:
            raise RuntimeError("step() before reset()")
        reward, _ = self._advance(action)
        self._ticks += 1
        self._agent_steps += 1
        return self._result(reward)

    def frame_skip_step(self, action: ActionVector, k: int) -> StepResult:
        """Repeat ``action`` over k + 1 ticks, summing their rewards; the
        observation is the final tick's frame and the loop stops early when
        the finish landmark is crossed."""
        if self._car is None:
            raise RuntimeError("frame_skip_step() before reset()")
        if k < 0:
            raise ValueError(f"frame skip must be >= 0, got {k}")
        total = 0.0
        for _ in range(k + 1):
            reward, finished = self._advance(action)
            self._ticks += 1
            total += reward
            if finished:
                break
        self._agent_steps += 1
        return self._result(total)
