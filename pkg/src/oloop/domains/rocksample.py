"""RockSample(n, k): grid navigation with noisy rock sensing.

An agent on an n x n grid knows the k rock locations but not their quality.
Sampling a good rock pays +10 (and spoils it), sampling a bad one costs 10,
and exiting past the east edge pays +10 and ends the episode.  A long-range
sensor checks any rock, with accuracy decaying exponentially in distance.

States are (position, quality bitmask, collected bitmask) tuples; position
-1 marks the exited terminal state.  Only position and quality span the
canonical state space of n^2 * 2^k states.
"""
from __future__ import annotations

import numpy as np

from ..pomdp import BeliefParticles, GenerativeModel, History, IllegalActionError, Step

__all__ = ["RockSample", "OBS_NONE", "OBS_GOOD", "OBS_BAD"]

OBS_NONE = 0
OBS_GOOD = 1
OBS_BAD = 2

# action ids: 4 moves, then sample, then one check per rock
NORTH, EAST, SOUTH, WEST, SAMPLE = 0, 1, 2, 3, 4
_MOVES = {NORTH: (0, 1), EAST: (1, 0), SOUTH: (0, -1), WEST: (-1, 0)}

EXITED = -1

# fixed rock layouts for the registry presets
_LAYOUTS = {
    (11, 11): (
        (0, 2), (1, 4), (1, 6), (1, 7), (5, 6), (7, 6),
        (8, 0), (8, 8), (9, 5), (10, 8), (10, 9),
    ),
    (15, 15): (
        (0, 13), (1, 5), (1, 13), (2, 3), (4, 8), (5, 2), (5, 4), (6, 7),
        (7, 4), (8, 3), (8, 13), (11, 7), (12, 3), (13, 2), (14, 9),
    ),
}


class RockSample(GenerativeModel):
    """Generic (n, k) instance; rock coordinates default to fixed layouts."""

    def __init__(
        self,
        n: int,
        k: int,
        rocks: tuple | None = None,
        half_efficiency_distance: float = 20.0,
    ) -> None:
        if n < 2 or k < 1:
            raise ValueError(f"need n >= 2 and k >= 1, got n={n}, k={k}")
        if rocks is None:
            rocks = _LAYOUTS.get((n, k))
            if rocks is None:
                raise ValueError(f"no preset rock layout for ({n}, {k}); pass rocks=")
        rocks = tuple(tuple(r) for r in rocks)
        if len(rocks) != k or len(set(rocks)) != k:
            raise ValueError(f"need {k} distinct rock cells, got {rocks}")
        for x, y in rocks:
            if not (0 <= x < n and 0 <= y < n):
                raise ValueError(f"rock {(x, y)} outside the {n}x{n} grid")
        self.n = n
        self.k = k
        self.rocks = rocks
        self.start = (0, n // 2)

        n_cells = n * n
        self._rock_at = np.full(n_cells, -1, dtype=np.int64)
        for i, (x, y) in enumerate(rocks):
            self._rock_at[y * n + x] = i

        # sensor accuracy per (cell, rock): 0.5 * (1 + 2^(-d / d0))
        xs, ys = np.meshgrid(np.arange(n), np.arange(n))
        cx, cy = xs.ravel(), ys.ravel()
        rx = np.array([r[0] for r in rocks])
        ry = np.array([r[1] for r in rocks])
        dist = np.sqrt(
            (cx[:, None] - rx[None, :]) ** 2 + (cy[:, None] - ry[None, :]) ** 2
        )
        self._accuracy = 0.5 * (1.0 + np.exp2(-dist / half_efficiency_distance))

        legal: list[np.ndarray] = []
        checks = list(range(SAMPLE + 1, SAMPLE + 1 + k))
        for pos in range(n_cells):
            x, y = pos % n, pos // n
            acts = []
            if y + 1 < n:
                acts.append(NORTH)
            acts.append(EAST)  # east always legal: off-edge east is the exit
            if y > 0:
                acts.append(SOUTH)
            if x > 0:
                acts.append(WEST)
            if self._rock_at[pos] >= 0:
                acts.append(SAMPLE)
            acts.extend(checks)
            legal.append(np.array(acts, dtype=np.int64))
        self._legal = legal
        self._no_actions = np.empty(0, dtype=np.int64)

    @property
    def action_count(self) -> int:
        return 5 + self.k

    @property
    def observation_count(self) -> int:
        return 3

    @property
    def discount(self) -> float:
        return 0.95

    @property
    def reward_range(self) -> float:
        return 20.0

    @property
    def state_space_size(self) -> int:
        return self.n * self.n * 2**self.k

    def sample_initial(self, rng: np.random.Generator) -> tuple:
        x, y = self.start
        quality = int(rng.integers(0, 1 << self.k))
        return (y * self.n + x, quality, 0)

    def legal_actions(self, state: tuple) -> np.ndarray:
        pos = state[0]
        if pos == EXITED:
            return self._no_actions
        return self._legal[pos]

    def step(self, state: tuple, action: int, rng: np.random.Generator) -> Step:
        pos, quality, collected = state
        if pos == EXITED:
            raise IllegalActionError("the agent has already exited")
        n = self.n
        if action < SAMPLE:
            x, y = pos % n, pos // n
            dx, dy = _MOVES[action]
            x, y = x + dx, y + dy
            if x >= n:
                return (EXITED, quality, collected), OBS_NONE, 10.0, True
            if not (0 <= x < n and 0 <= y < n):
                raise IllegalActionError(f"move {action} leaves the grid at {(x, y)}")
            return (y * n + x, quality, collected), OBS_NONE, 0.0, False
        if action == SAMPLE:
            rock = self._rock_at[pos]
            if rock < 0:
                raise IllegalActionError(f"no rock at cell {pos}")
            bit = 1 << int(rock)
            good = quality & bit
            reward = 10.0 if good else -10.0
            return (pos, quality & ~bit, collected | bit), OBS_NONE, reward, False
        rock = action - SAMPLE - 1
        if not 0 <= rock < self.k:
            raise IllegalActionError(f"unknown action {action}")
        good = quality & (1 << rock)
        accurate = rng.random() < self._accuracy[pos, rock]
        if accurate:
            obs = OBS_GOOD if good else OBS_BAD
        else:
            obs = OBS_BAD if good else OBS_GOOD
        return state, obs, 0.0, False

    def recover_belief(
        self, history: History, capacity: int, rng: np.random.Generator
    ) -> BeliefParticles:
        """Resample rock qualities, keeping everything the history pins down.

        Position follows deterministically from the moves, and every sampled
        rock is bad afterwards whatever it was before; unsampled qualities
        are redrawn from b0.
        """
        x, y = self.start
        collected = 0
        for action, _ in history:
            if action < SAMPLE:
                dx, dy = _MOVES[action]
                x, y = x + dx, y + dy
            elif action == SAMPLE:
                rock = self._rock_at[y * self.n + x]
                if rock >= 0:
                    collected |= 1 << int(rock)
        pos = y * self.n + x
        states = [
            (pos, int(rng.integers(0, 1 << self.k)) & ~collected, collected)
            for _ in range(capacity)
        ]
        return BeliefParticles(states, capacity)
