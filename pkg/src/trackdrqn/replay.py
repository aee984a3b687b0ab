"""Bounded FIFO experience memory with reward-proportional duplication.

High-reward transitions are stored multiple times; uniform sampling then
recalls them proportionally more often. Duplicates share one underlying
record but count as independent entries for capacity and eviction.
Sampled windows are contiguous single-episode runs for recurrent training
and never cross an episode boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import ObservationFrame

__all__ = [
    "Transition",
    "TransitionWindow",
    "ReplayMemory",
    "ReplayEmptyError",
    "NoEligibleWindowError",
]


class ReplayEmptyError(RuntimeError):
    """Sampling from an empty memory."""


class NoEligibleWindowError(RuntimeError):
    """Memory holds transitions but no run long enough to train on."""


@dataclass
class Transition:
    observation: ObservationFrame
    action_index: int
    reward: float
    done: bool
    episode_id: int
    step_index: int
    live: int = 0  # copies currently occupying ring slots


@dataclass
class TransitionWindow:
    """Consecutive same-episode transitions; done may appear only last."""

    transitions: tuple

    def __post_init__(self):
        self.transitions = tuple(self.transitions)

    def __len__(self) -> int:
        return len(self.transitions)

    def __iter__(self):
        return iter(self.transitions)

    def __getitem__(self, i):
        return self.transitions[i]

    @property
    def episode_id(self) -> int:
        return self.transitions[0].episode_id

    @property
    def ends_done(self) -> bool:
        return bool(self.transitions[-1].done)


class _Run:
    """Stored suffix of one episode, in step order, with lazy front trim."""

    __slots__ = ("records", "offset")

    def __init__(self):
        self.records: list[Transition] = []
        self.offset = 0

    def __len__(self) -> int:
        return len(self.records) - self.offset

    def append(self, rec: Transition) -> None:
        live = len(self)
        if live and self.records[-1].step_index + 1 != rec.step_index:
            raise ValueError(
                f"episode {rec.episode_id} steps must be pushed consecutively: "
                f"{self.records[-1].step_index} then {rec.step_index}")
        self.records.append(rec)

    def pop_front(self) -> Transition:
        rec = self.records[self.offset]
        self.offset += 1
        if self.offset > 256 and self.offset * 2 > len(self.records):
            del self.records[: self.offset]
            self.offset = 0
        return rec

    def first_step(self) -> int:
        return self.records[self.offset].step_index

    def last_step(self) -> int:
        return self.records[-1].step_index

    def slice_steps(self, start_step: int, end_step: int) -> list[Transition]:
        base = self.first_step()
        a = self.offset + (start_step - base)
        b = self.offset + (end_step - base) + 1
        return self.records[a:b]


class ReplayMemory:
    """Ring of transition references with O(1) uniform slot access.

    ``capacity`` counts stored entries including duplicates. ``dup_c`` and
    ``dup_r_scale`` set the duplication rule: a transition with reward r is
    stored ``1 + floor(dup_c * max(0, r) / dup_r_scale)`` times.
    ``min_window`` is the shortest run worth training on (burn-in plus a
    trainable and a bootstrap position).
    """

    def __init__(self, capacity: int, dup_c: float = 3.0,
                 dup_r_scale: float = 10.0, min_window: int = 6):
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        if dup_r_scale <= 0:
            raise ValueError(f"dup_r_scale must be positive, got {dup_r_scale}")
        self.capacity = int(capacity)
        self.dup_c = float(dup_c)
        self.dup_r_scale = float(dup_r_scale)
        self.min_window = int(min_window)
        self._slots: list = [None] * self.capacity
        self._head = 0
        self._count = 0
        self._runs: dict[int, _Run] = {}
        self._eligible_runs = 0

    def __len__(self) -> int:
        return self._count

    def clear(self) -> None:
        self._slots = [None] * self.capacity
        self._head = 0
        self._count = 0
        self._runs = {}
        self._eligible_runs = 0

    def _slot(self, i: int) -> Transition:
        return self._slots[(self._head + i) % self.capacity]

    def copies_for(self, reward: float) -> int:
        return 1 + math.floor(self.dup_c * max(0.0, reward) / self.dup_r_scale)

    def _evict_one(self) -> None:
        rec = self._slots[self._head]
        self._slots[self._head] = None
        self._head = (self._head + 1) % self.capacity
        self._count -= 1
        rec.live -= 1
        if rec.live == 0:
            run = self._runs[rec.episode_id]
            if len(run) == self.min_window:
                self._eligible_runs -= 1
            front = run.pop_front()
            if front is not rec:
                raise AssertionError("FIFO eviction out of episode order")
            if len(run) == 0:
                del self._runs[rec.episode_id]

    def push(self, t: Transition) -> int:
        """Store ``t`` with reward-proportional duplication; returns the
        number of copies stored (capacity-capped)."""
        copies = min(self.copies_for(t.reward), self.capacity)
        run = self._runs.get(t.episode_id)
        if run is None:
            run = self._runs[t.episode_id] = _Run()
        run.append(t)
        for _ in range(copies):
            if self._count == self.capacity:
                self._evict_one()
            self._slots[(self._head + self._count) % self.capacity] = t
            self._count += 1
        t.live += copies
        if len(run) == self.min_window:
            self._eligible_runs += 1
        return copies

    def _window_for(self, rec: Transition, window_len: int) -> list[Transition]:
        run = self._runs[rec.episode_id]
        lo, hi = run.first_step(), run.last_step()
        start = max(lo, min(rec.step_index, hi - window_len + 1))
        end = min(hi, start + window_len - 1)
        return run.slice_steps(start, end)

    def sample_windows(self, batch: int, window_len: int, rng) -> list[TransitionWindow]:
        """Draw ``batch`` windows of up to ``window_len`` consecutive
        same-episode transitions, each anchored at a uniformly chosen stored
        entry (duplicates weight the draw). A window always ends at or after
        its anchor; windows shorter than ``window_len`` occur only when the
        stored episode run is itself shorter."""
        if self._count == 0:
            raise ReplayEmptyError("replay memory is empty")
        if window_len < self.min_window:
            raise ValueError(f"window_len {window_len} < minimum {self.min_window}")
        if self._eligible_runs == 0:
            raise NoEligibleWindowError(
                f"no stored episode run reaches {self.min_window} transitions")
        out = []
        guard = 0
        while len(out) < batch:
            rec = self._slot(int(rng.integers(self._count)))
            window = self._window_for(rec, window_len)
            if len(window) >= self.min_window:
                out.append(TransitionWindow(window))
            else:
                guard += 1
                if guard > 10000 * (batch + 1):
                    raise NoEligibleWindowError("sampling stalled on ineligible runs")
        return out

    # -- serialization support (used by training checkpoints) ---------------

    def export_state(self):
        """Unique records (chronological) plus the ring as ordinal refs."""
        ordinals: dict[int, int] = {}
        records: list[Transition] = []
        refs = np.empty(self._count, dtype=np.uint32)
        for i in range(self._count):
            rec = self._slot(i)
            key = id(rec)
            if key not in ordinals:
                ordinals[key] = len(records)
                records.append(rec)
            refs[i] = ordinals[key]
        return records, refs

    def load_state(self, records: list[Transition], refs) -> None:
        """Rebuild the ring and episode index from exported state."""
        refs = np.asarray(refs, dtype=np.uint32)
        if len(refs) > self.capacity:
            raise ValueError(f"{len(refs)} refs exceed capacity {self.capacity}")
        self.clear()
        for rec in records:
            rec.live = 0
            run = self._runs.get(rec.episode_id)
            if run is None:
                run = self._runs[rec.episode_id] = _Run()
            run.append(rec)
            if len(run) == self.min_window:
                self._eligible_runs += 1
        for i, r in enumerate(refs):
            rec = records[int(r)]
            self._slots[i] = rec
            rec.live += 1
        self._head = 0
        self._count = len(refs)
