"""Anytime online planners over a generative model.

All four planners share the same anytime contract: spend exactly ``budget``
simulations from the root belief, never allocate more than ``memory_cap``
nodes (node creation stops at the cap; simulation continues through the
existing structure), and finally recommend the most promising root action
among those legal under the root belief.

- posts_plan: a fixed stack of per-depth Thompson Sampling bandits; no tree.
- poolts_plan: open-loop tree over action sequences, Thompson Sampling at
  every node.
- pooluct_plan: the same open-loop tree with UCB1 selection.
- pomcp_plan: closed-loop history tree (o-nodes and a-nodes) with UCB1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np

from .bandits import ArmArray, NormalGammaParams, PriorSampleStream
from .pomdp import BeliefParticles, GenerativeModel

__all__ = [
    "PlannerConfig",
    "PlanNode",
    "PlanResult",
    "PLANNERS",
    "posts_plan",
    "poolts_plan",
    "pooluct_plan",
    "pomcp_plan",
    "random_plan",
    "rollout",
]

_TINY = float(np.finfo(np.float64).tiny)


@dataclass(frozen=True)
class PlannerConfig:
    """Shared planner knobs.

    ``discount`` and ``exploration`` default to the domain's discount and
    reward range when left as None.  ``memory_cap`` of None means unlimited.
    """

    budget: int
    horizon: int
    memory_cap: int | None = None
    discount: float | None = None
    prior: NormalGammaParams = field(default_factory=NormalGammaParams)
    exploration: float | None = None
    particle_capacity: int = 10_000

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.memory_cap is not None and self.memory_cap < 1:
            raise ValueError(f"memory_cap must be >= 1, got {self.memory_cap}")
        if self.discount is not None and not 0.0 <= self.discount <= 1.0:
            raise ValueError(f"discount must lie in [0, 1], got {self.discount}")
        if self.particle_capacity < 1:
            raise ValueError(
                f"particle_capacity must be >= 1, got {self.particle_capacity}"
            )

    def resolved_discount(self, model: GenerativeModel) -> float:
        return model.discount if self.discount is None else self.discount

    def resolved_exploration(self, model: GenerativeModel) -> float:
        return model.reward_range if self.exploration is None else self.exploration


class PlanNode:
    """Bandit-bearing search node.

    Open-loop trees key children by action id; the history tree keys them
    by (action id, observation id).
    """

    __slots__ = ("arms", "children", "visits")

    def __init__(self, n_actions: int, prior: NormalGammaParams | None = None) -> None:
        self.arms = ArmArray(n_actions, prior)
        self.children: dict = {}
        self.visits = 0

    def subtree_size(self) -> int:
        return 1 + sum(child.subtree_size() for child in self.children.values())


@dataclass(frozen=True)
class PlanResult:
    chosen_action: int
    nodes_used: int
    simulations_run: int
    root_action_values: Dict[int, Tuple[float, int]]


def rollout(
    state,
    model: GenerativeModel,
    depth_remaining: int,
    discount: float,
    rng: np.random.Generator,
) -> float:
    """Uniform-random-legal playout value; 0 at depth 0 or a terminal state."""
    if depth_remaining < 0:
        raise ValueError(f"depth_remaining must be >= 0, got {depth_remaining}")
    if not 0.0 <= discount <= 1.0:
        raise ValueError(f"discount must lie in [0, 1], got {discount}")
    return model.rollout_return(state, depth_remaining, discount, rng)


def _root_states(belief: BeliefParticles) -> list:
    states = belief.states
    if not states:
        raise ValueError("cannot plan from an empty belief")
    return states


def majority_legal_actions(
    model: GenerativeModel, belief: BeliefParticles
) -> np.ndarray:
    """Actions legal in a strict majority of the belief's particles.

    Falls back to actions legal in at least one particle if no action
    clears the majority bar (possible only with badly split beliefs).
    """
    votes = np.zeros(model.action_count)
    # legality usually depends only on observable state components, so most
    # particles share one cached legal array; bucketing by object identity
    # avoids K redundant scatter-adds
    buckets: dict = {}
    for state in _root_states(belief):
        legal = model.legal_actions(state)
        key = id(legal)
        entry = buckets.get(key)
        if entry is None:
            buckets[key] = [legal, 1]
        else:
            entry[1] += 1
    for legal, weight in buckets.values():
        votes[legal] += weight
    majority = np.flatnonzero(votes * 2 > len(belief))
    if majority.size == 0:
        majority = np.flatnonzero(votes > 0)
    if majority.size == 0:
        raise ValueError("no action is legal in any root particle (domain bug?)")
    return majority


def _final_action(
    counts: np.ndarray,
    means: np.ndarray,
    legal: np.ndarray,
    rng: np.random.Generator,
) -> int:
    """Argmax of the root mean over visited legal arms.

    With no visited legal arm (tiny budgets or tiny memory caps) the choice
    falls back to a uniform-random legal action.
    """
    visited = legal[counts[legal] > 0.0]
    if visited.size == 0:
        return int(legal[rng.integers(legal.size)])
    return int(visited[np.argmax(means[visited])])


def _root_values(counts: np.ndarray, means: np.ndarray) -> Dict[int, Tuple[float, int]]:
    return {
        int(a): (float(means[a]), int(counts[a]))
        for a in np.flatnonzero(counts > 0.0)
    }


class _BanditStack:
    """Per-depth bandit statistics for the stacked planner, matrix-backed.

    Equivalent to one ArmArray per depth; kept as (depth, action) matrices
    so a whole simulated path backs up in a handful of vector operations.
    """

    __slots__ = (
        "prior", "counts", "means", "m2", "mu1", "lam1", "alpha1", "beta1",
    )

    def __init__(self, depth: int, n_actions: int, prior: NormalGammaParams) -> None:
        shape = (depth, n_actions)
        self.prior = prior
        self.counts = np.zeros(shape)
        self.means = np.zeros(shape)
        self.m2 = np.zeros(shape)
        self.mu1 = np.full(shape, prior.mu)
        self.lam1 = np.full(shape, prior.lam)
        self.alpha1 = np.full(shape, prior.alpha)
        self.beta1 = np.full(shape, prior.beta)

    def draw_samples(
        self, lo: int, hi: int, rng: np.random.Generator, out: np.ndarray
    ) -> None:
        """Fill rows lo:hi of ``out`` with one posterior-mean sample per arm.

        The stack's parameters stay fixed for the duration of one simulated
        path (backups happen after the path completes), so the whole block
        of depths can be drawn in two generator calls.
        """
        rows = slice(lo, hi)
        tau = rng.standard_gamma(self.alpha1[rows])
        tau /= self.beta1[rows]
        np.maximum(tau, _TINY, out=tau)
        tau *= self.lam1[rows]
        np.sqrt(tau, out=tau)
        block = out[rows]
        rng.standard_normal(out=block)
        block /= tau
        block += self.mu1[rows]

    def update_path(
        self, actions: np.ndarray, rewards: np.ndarray, discount: float, tail: float
    ) -> None:
        """Back up G_d = r_d + discount * G_{d+1} into depths 0..len-1.

        ``tail`` is the value beyond the last recorded depth.  Each depth
        appears once per path, so the scatter updates never collide.
        """
        n_steps = actions.size
        if n_steps == 0:
            return
        if discount == 0.0:
            returns = rewards.copy()
        elif discount == 1.0:
            returns = np.cumsum(rewards[::-1])[::-1]
            returns += tail
        else:
            powers = discount ** np.arange(n_steps + 1)
            weighted = rewards * powers[:n_steps]
            returns = np.cumsum(weighted[::-1])[::-1] / powers[:n_steps]
            returns += tail * powers[n_steps:0:-1]
        depths = np.arange(n_steps)
        p = self.prior
        n = self.counts[depths, actions] + 1.0
        delta = returns - self.means[depths, actions]
        mean = self.means[depths, actions] + delta / n
        self.counts[depths, actions] = n
        self.means[depths, actions] = mean
        m2 = self.m2[depths, actions] + delta * (returns - mean)
        self.m2[depths, actions] = m2
        lam1 = p.lam + n
        dev = mean - p.mu
        self.lam1[depths, actions] = lam1
        self.mu1[depths, actions] = (p.lam * p.mu + n * mean) / lam1
        self.alpha1[depths, actions] = p.alpha + 0.5 * n
        self.beta1[depths, actions] = p.beta + 0.5 * (m2 + p.lam * n * dev * dev / lam1)


def posts_plan(
    belief: BeliefParticles,
    model: GenerativeModel,
    config: PlannerConfig,
    rng: np.random.Generator,
) -> PlanResult:
    """Stacked Thompson Sampling: one bandit per depth, no tree.

    The stack holds min(memory_cap, horizon) bandits.  Depths beyond the
    stack are played with the uniform-random rollout policy and learn
    nothing.
    """
    states = _root_states(belief)
    n_particles = len(states)
    discount = config.resolved_discount(model)
    horizon = config.horizon
    stack_size = (
        horizon if config.memory_cap is None else min(config.memory_cap, horizon)
    )
    stack = _BanditStack(stack_size, model.action_count, config.prior)
    actions_buf = np.empty(stack_size, dtype=np.intp)
    rewards_buf = np.empty(stack_size)
    samples = np.empty((stack_size, model.action_count))
    chunk = 32
    legal_actions = model.legal_actions
    step = model.step
    for _ in range(config.budget):
        state = states[int(rng.integers(n_particles))]
        depth = 0
        drawn = 0
        tail = 0.0
        terminal = False
        while depth < stack_size:
            legal = legal_actions(state)
            if len(legal) == 0:
                terminal = True
                break
            if depth >= drawn:
                upper = min(drawn + chunk, stack_size)
                stack.draw_samples(drawn, upper, rng, samples)
                drawn = upper
            row = samples[depth]
            action = int(legal[row[legal].argmax()])
            state, _, reward, terminal = step(state, action, rng)
            actions_buf[depth] = action
            rewards_buf[depth] = reward
            depth += 1
            if terminal:
                break
        if not terminal and depth < horizon:
            tail = model.rollout_return(state, horizon - depth, discount, rng)
        stack.update_path(actions_buf[:depth], rewards_buf[:depth], discount, tail)
    legal = majority_legal_actions(model, belief)
    chosen = _final_action(stack.counts[0], stack.means[0], legal, rng)
    return PlanResult(
        chosen_action=chosen,
        nodes_used=stack_size,
        simulations_run=config.budget,
        root_action_values=_root_values(stack.counts[0], stack.means[0]),
    )


def _open_loop_plan(
    belief: BeliefParticles,
    model: GenerativeModel,
    config: PlannerConfig,
    rng: np.random.Generator,
    thompson: bool,
) -> PlanResult:
    """Open-loop tree search: one bandit per node, children keyed by action.

    Each simulation descends by bandit selection until it steps through a
    missing child edge; that child is created (unless the cap forbids it)
    and the remaining depth is played by the rollout policy.  Returns back
    up into every node that selected an action.
    """
    states = _root_states(belief)
    n_particles = len(states)
    discount = config.resolved_discount(model)
    horizon = config.horizon
    cap = config.memory_cap
    exploration = config.resolved_exploration(model)
    prior = config.prior if thompson else None
    root = PlanNode(model.action_count, prior)
    nodes = 1
    stream = PriorSampleStream(config.prior, rng) if thompson else None
    legal_actions = model.legal_actions
    step = model.step
    path_nodes: list = []
    path_actions: list = []
    path_rewards: list = []
    for _ in range(config.budget):
        state = states[int(rng.integers(n_particles))]
        node = root
        depth = 0
        tail = 0.0
        del path_nodes[:], path_actions[:], path_rewards[:]
        while True:
            legal = legal_actions(state)
            if len(legal) == 0:
                break
            if thompson:
                action = node.arms.thompson_pick(legal, prior, rng, stream)
            else:
                action = node.arms.ucb_pick(
                    legal, exploration, max(node.visits, 1), rng
                )
            state, _, reward, terminal = step(state, action, rng)
            path_nodes.append(node)
            path_actions.append(action)
            path_rewards.append(reward)
            depth += 1
            if terminal or depth >= horizon:
                break
            child = node.children.get(action)
            if child is None:
                if cap is None or nodes < cap:
                    node.children[action] = PlanNode(model.action_count, prior)
                    nodes += 1
                tail = model.rollout_return(state, horizon - depth, discount, rng)
                break
            node = child
        value = tail
        for i in range(depth - 1, -1, -1):
            value = path_rewards[i] + discount * value
            path_nodes[i].arms.update(path_actions[i], value)
            path_nodes[i].visits += 1
    legal = majority_legal_actions(model, belief)
    chosen = _final_action(root.arms.counts, root.arms.means, legal, rng)
    return PlanResult(
        chosen_action=chosen,
        nodes_used=nodes,
        simulations_run=config.budget,
        root_action_values=_root_values(root.arms.counts, root.arms.means),
    )


def poolts_plan(
    belief: BeliefParticles,
    model: GenerativeModel,
    config: PlannerConfig,
    rng: np.random.Generator,
) -> PlanResult:
    return _open_loop_plan(belief, model, config, rng, thompson=True)


def pooluct_plan(
    belief: BeliefParticles,
    model: GenerativeModel,
    config: PlannerConfig,
    rng: np.random.Generator,
) -> PlanResult:
    return _open_loop_plan(belief, model, config, rng, thompson=False)


def pomcp_plan(
    belief: BeliefParticles,
    model: GenerativeModel,
    config: PlannerConfig,
    rng: np.random.Generator,
) -> PlanResult:
    """Closed-loop UCT over the history tree.

    o-nodes hold the per-action value estimates; an a-node exists once its
    action has been expanded (its count turns positive).  Each simulation
    allocates at most one new node: either the a-node of a first-tried
    action, or the o-node reached through a first-seen observation.  Both
    kinds count against the memory cap.
    """
    states = _root_states(belief)
    n_particles = len(states)
    discount = config.resolved_discount(model)
    horizon = config.horizon
    cap = config.memory_cap
    exploration = config.resolved_exploration(model)
    root = PlanNode(model.action_count)
    nodes = 1
    legal_actions = model.legal_actions
    step = model.step
    path_nodes: list = []
    path_actions: list = []
    path_rewards: list = []
    for _ in range(config.budget):
        state = states[int(rng.integers(n_particles))]
        node = root
        depth = 0
        tail = 0.0
        del path_nodes[:], path_actions[:], path_rewards[:]
        while True:
            legal = legal_actions(state)
            if len(legal) == 0:
                break
            action = node.arms.ucb_pick(legal, exploration, max(node.visits, 1), rng)
            if node.arms.counts[action] == 0.0:
                # first try of this action here: allocate its a-node if the
                # cap allows, then estimate it with a rollout
                allocated = cap is None or nodes < cap
                if allocated:
                    nodes += 1
                state, _, reward, terminal = step(state, action, rng)
                path_nodes.append(node if allocated else None)
                path_actions.append(action)
                path_rewards.append(reward)
                depth += 1
                if not terminal and depth < horizon:
                    tail = model.rollout_return(state, horizon - depth, discount, rng)
                break
            state, observation, reward, terminal = step(state, action, rng)
            path_nodes.append(node)
            path_actions.append(action)
            path_rewards.append(reward)
            depth += 1
            if terminal or depth >= horizon:
                break
            child = node.children.get((action, observation))
            if child is None:
                if cap is None or nodes < cap:
                    node.children[(action, observation)] = PlanNode(model.action_count)
                    nodes += 1
                tail = model.rollout_return(state, horizon - depth, discount, rng)
                break
            node = child
        value = tail
        for i in range(depth - 1, -1, -1):
            value = path_rewards[i] + discount * value
            if path_nodes[i] is not None:
                path_nodes[i].arms.update(path_actions[i], value)
                path_nodes[i].visits += 1
    legal = majority_legal_actions(model, belief)
    chosen = _final_action(root.arms.counts, root.arms.means, legal, rng)
    return PlanResult(
        chosen_action=chosen,
        nodes_used=nodes,
        simulations_run=config.budget,
        root_action_values=_root_values(root.arms.counts, root.arms.means),
    )


def random_plan(
    belief: BeliefParticles,
    model: GenerativeModel,
    config: PlannerConfig,
    rng: np.random.Generator,
) -> PlanResult:
    """Uniform-random legal action; the no-search baseline."""
    legal = majority_legal_actions(model, belief)
    action = int(legal[rng.integers(legal.size)])
    return PlanResult(
        chosen_action=action,
        nodes_used=0,
        simulations_run=0,
        root_action_values={},
    )


PLANNERS: Dict[str, Callable] = {
    "posts": posts_plan,
    "poolts": poolts_plan,
    "pooluct": pooluct_plan,
    "pomcp": pomcp_plan,
    "random": random_plan,
}