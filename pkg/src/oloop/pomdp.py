"""Generic POMDP abstractions.

A domain is exposed to the planners as a black-box generative model: given a
state and an action it samples (next state, observation, reward, terminal).
Beliefs over the hidden state are tracked either as particle sets updated by
rejection sampling (benchmark domains) or as exact distributions updated by
Bayes rule on explicit tables (small oracle domains used in tests).
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterator, Sequence, Tuple

import numpy as np

__all__ = [
    "GenerativeModel",
    "History",
    "BeliefParticles",
    "ExactBelief",
    "PomdpTables",
    "ParticleDeprivationError",
    "IllegalActionError",
    "discounted_return",
    "particle_update",
    "exact_belief_update",
]

State = Hashable
Step = Tuple[Any, int, float, bool]


class ParticleDeprivationError(RuntimeError):
    """No particle produced the observed observation within the attempt cap."""


class IllegalActionError(ValueError):
    """An action was executed in a state where it is not legal."""


class GenerativeModel(ABC):
    """Black-box simulator contract shared by all domains.

    States are opaque hashable values owned by the domain.  Observations are
    integer ids in [0, observation_count).  Actions are integer ids in
    [0, action_count); legality may depend on the state, but legal_actions
    is never empty for a non-terminal state.
    """

    @property
    @abstractmethod
    def action_count(self) -> int:
        """Number of global actions |A|."""

    @property
    @abstractmethod
    def observation_count(self) -> int:
        """Number of observation ids |O|."""

    @property
    @abstractmethod
    def discount(self) -> float:
        """Discount factor gamma used when planning in this domain."""

    @property
    @abstractmethod
    def reward_range(self) -> float:
        """Width of the single-step reward envelope (max - min)."""

    @abstractmethod
    def sample_initial(self, rng: np.random.Generator) -> State:
        """Draw a hidden state from the initial belief b0."""

    @abstractmethod
    def legal_actions(self, state: State) -> np.ndarray:
        """Action ids legal in ``state``, as a non-empty int array."""

    @abstractmethod
    def step(self, state: State, action: int, rng: np.random.Generator) -> Step:
        """Simulate one transition; returns (next_state, observation, reward, terminal)."""

    def recover_belief(
        self, history: "History", capacity: int, rng: np.random.Generator
    ) -> "BeliefParticles":
        """Rebuild a belief after particle deprivation.

        The default draws fresh states from b0, ignoring the history.
        Domains override this to condition on whatever parts of the state
        the history pins down.
        """
        states = [self.sample_initial(rng) for _ in range(capacity)]
        return BeliefParticles(states, capacity)

    def rollout_return(
        self,
        state: State,
        depth_remaining: int,
        discount: float,
        rng: np.random.Generator,
    ) -> float:
        """Discounted return of a uniform-random-legal playout from ``state``.

        Plays until terminal or ``depth_remaining`` steps; an entry state
        with no legal actions is terminal and returns 0.  Domains may
        override with an exact sampler of the same playout distribution.
        """
        total = 0.0
        weight = 1.0
        step = self.step
        legal_actions = self.legal_actions
        # One generator call covers every action pick of the playout; the
        # per-step float-scaling pick is uniform over the legal set.
        draws = rng.random(depth_remaining) if depth_remaining > 0 else None
        for i in range(depth_remaining):
            legal = legal_actions(state)
            k = len(legal)
            if k == 0:
                break
            action = int(legal[int(draws[i] * k)]) if k > 1 else int(legal[0])
            state, _, reward, terminal = step(state, action, rng)
            total += weight * reward
            weight *= discount
            if terminal:
                break
        return total


class History:
    """Append-only record of (action, observation) pairs."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Sequence[Tuple[int, int]] = ()) -> None:
        self._entries: list[Tuple[int, int]] = list(entries)

    def append(self, action: int, observation: int) -> None:
        self._entries.append((action, observation))

    @property
    def entries(self) -> Tuple[Tuple[int, int], ...]:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        return iter(self._entries)

    def __getitem__(self, idx):
        return self._entries[idx]

    def __repr__(self) -> str:
        return f"History({self._entries!r})"


@dataclass(slots=True)
class BeliefParticles:
    """Fixed-capacity multiset of sampled states approximating a belief."""

    states: list
    capacity: int

    def __post_init__(self) -> None:
        if self.capacity <= 0:
            raise ValueError(f"capacity must be positive, got {self.capacity}")
        if not self.states:
            raise ValueError("a particle belief must hold at least one state")
        if len(self.states) > self.capacity:
            raise ValueError(
                f"{len(self.states)} particles exceed capacity {self.capacity}"
            )

    def __len__(self) -> int:
        return len(self.states)

    def sample(self, rng: np.random.Generator) -> State:
        return self.states[int(rng.integers(len(self.states)))]

    @classmethod
    def from_initial(
        cls, model: GenerativeModel, capacity: int, rng: np.random.Generator
    ) -> "BeliefParticles":
        return cls([model.sample_initial(rng) for _ in range(capacity)], capacity)


@dataclass(frozen=True)
class ExactBelief:
    """Explicit distribution over an enumerable state space (ids 0..S-1)."""

    probabilities: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probabilities, dtype=np.float64)
        object.__setattr__(self, "probabilities", probs)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probabilities must be a non-empty vector")
        if np.any(probs < 0.0):
            raise ValueError("probabilities must be non-negative")
        if abs(float(probs.sum()) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {probs.sum()}, expected 1")


@dataclass(frozen=True)
class PomdpTables:
    """Explicit transition/observation/reward tables for oracle domains.

    transition[s, a, s'] = P(s' | s, a); observation[a, s', o] = O(o | s', a);
    reward[s, a] = expected immediate reward.
    """

    transition: np.ndarray
    observation: np.ndarray
    reward: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.transition, dtype=np.float64)
        o = np.asarray(self.observation, dtype=np.float64)
        r = np.asarray(self.reward, dtype=np.float64)
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "observation", o)
        object.__setattr__(self, "reward", r)
        if t.ndim != 3 or t.shape[0] != t.shape[2]:
            raise ValueError(f"transition must be (S, A, S), got {t.shape}")
        if o.ndim != 3 or o.shape[:2] != (t.shape[1], t.shape[0]):
            raise ValueError(f"observation must be (A, S, O), got {o.shape}")
        if r.shape != t.shape[:2]:
            raise ValueError(f"reward must be (S, A), got {r.shape}")
        if not np.allclose(t.sum(axis=2), 1.0, atol=1e-9):
            raise ValueError("transition rows must sum to 1")
        if not np.allclose(o.sum(axis=2), 1.0, atol=1e-9):
            raise ValueError("observation rows must sum to 1")


def discounted_return(rewards: Sequence[float], discount: float) -> float:
    """Sum of gamma^k * r_k over the reward sequence; empty list gives 0."""
    if not 0.0 <= discount <= 1.0:
        raise ValueError(f"discount must lie in [0, 1], got {discount}")
    total = 0.0
    weight = 1.0
    for r in rewards:
        total += weight * r
        weight *= discount
    return total


def particle_update(
    belief: BeliefParticles,
    action: int,
    observed: int,
    model: GenerativeModel,
    rng: np.random.Generator,
    max_attempts: int | None = None,
) -> BeliefParticles:
    """Advance a particle belief through (action, observed) by rejection.

    Samples a particle, simulates the action, and keeps the successor state
    exactly when the simulated observation matches the observed one.  Stops
    after ``capacity`` acceptances or ``max_attempts`` simulations
    (default 100 * capacity); zero acceptances raise
    :class:`ParticleDeprivationError`.
    """
    if max_attempts is None:
        max_attempts = 100 * belief.capacity
    states = belief.states
    n = len(states)
    accepted: list = []
    capacity = belief.capacity
    for _ in range(max_attempts):
        state = states[int(rng.integers(n))]
        successor, observation, _, _ = model.step(state, action, rng)
        if observation == observed:
            accepted.append(successor)
            if len(accepted) >= capacity:
                break
    if not accepted:
        raise ParticleDeprivationError(
            f"no particle reproduced observation {observed} after action {action} "
            f"in {max_attempts} attempts"
        )
    return BeliefParticles(accepted, capacity)


def exact_belief_update(
    belief: ExactBelief, action: int, observed: int, tables: PomdpTables
) -> ExactBelief:
    """Bayes-filter update b'(s') prop. to O(o|s',a) * sum_s P(s'|s,a) b(s)."""
    predicted = belief.probabilities @ tables.transition[:, action, :]
    unnormalized = tables.observation[action, :, observed] * predicted
    normalizer = float(unnormalized.sum())
    if normalizer <= 0.0:
        raise ValueError(
            f"observation {observed} has probability 0 after action {action}"
        )
    return ExactBelief(unnormalized / normalizer)
