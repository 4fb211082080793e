"""Two-state tiger-behind-a-door domain.

Small enough to enumerate, so it doubles as the exact-inference oracle for
the particle filter and for planner sanity checks.  States: 0 = tiger left,
1 = tiger right.  Actions: listen (noisy hint), open left, open right.
"""
from __future__ import annotations

import numpy as np

from ..pomdp import GenerativeModel, PomdpTables, Step

__all__ = ["Tiger", "LISTEN", "OPEN_LEFT", "OPEN_RIGHT"]

LISTEN = 0
OPEN_LEFT = 1
OPEN_RIGHT = 2

_ALL_ACTIONS = np.array([LISTEN, OPEN_LEFT, OPEN_RIGHT])


class Tiger(GenerativeModel):
    """Listen costs 1; opening pays +10 past the empty door, -100 at the tiger."""

    def __init__(self, accuracy: float = 0.85, discount: float = 0.95) -> None:
        if not 0.5 <= accuracy <= 1.0:
            raise ValueError(f"listen accuracy must lie in [0.5, 1], got {accuracy}")
        self.accuracy = accuracy
        self._discount = discount

    @property
    def action_count(self) -> int:
        return 3

    @property
    def observation_count(self) -> int:
        return 2

    @property
    def discount(self) -> float:
        return self._discount

    @property
    def reward_range(self) -> float:
        return 110.0

    def sample_initial(self, rng: np.random.Generator) -> int:
        return int(rng.integers(2))

    def legal_actions(self, state: int) -> np.ndarray:
        return _ALL_ACTIONS

    def step(self, state: int, action: int, rng: np.random.Generator) -> Step:
        if action == LISTEN:
            heard = state if rng.random() < self.accuracy else 1 - state
            return state, int(heard), -1.0, False
        if action not in (OPEN_LEFT, OPEN_RIGHT):
            raise ValueError(f"unknown action {action}")
        tiger_there = state == (0 if action == OPEN_LEFT else 1)
        reward = -100.0 if tiger_there else 10.0
        # opening reveals nothing; the episode is over anyway
        return state, int(rng.integers(2)), reward, True

    def tables(self) -> PomdpTables:
        """Explicit tables for the exact Bayes filter.

        Opening is modeled as an identity transition with a uniform
        observation, matching the generative step up to the terminal flag
        (which a belief filter never sees).
        """
        acc = self.accuracy
        transition = np.zeros((2, 3, 2))
        for a in range(3):
            transition[:, a, :] = np.eye(2)
        observation = np.zeros((3, 2, 2))
        for s in range(2):
            for o in range(2):
                observation[LISTEN, s, o] = acc if o == s else 1.0 - acc
        observation[OPEN_LEFT] = 0.5
        observation[OPEN_RIGHT] = 0.5
        reward = np.array(
            [
                [-1.0, -100.0, 10.0],
                [-1.0, 10.0, -100.0],
            ]
        )
        return PomdpTables(transition, observation, reward)
