"""Planner tests: enumeration oracles, budget/memory accounting, legality."""
import itertools
import math

import numpy as np
import pytest

from oloop.bandits import NormalGammaParams
from oloop.domains import Tiger
from oloop.planners import (
    PLANNERS,
    PlannerConfig,
    PlanResult,
    majority_legal_actions,
    pomcp_plan,
    pooluct_plan,
    poolts_plan,
    posts_plan,
    random_plan,
    rollout,
)
from oloop.pomdp import BeliefParticles, GenerativeModel

SEARCH_PLANNERS = [posts_plan, poolts_plan, pooluct_plan, pomcp_plan]
TREE_PLANNERS = [poolts_plan, pooluct_plan, pomcp_plan]

# prior scaled to unit-range rewards; the library default targets returns
# two orders of magnitude larger
UNIT_PRIOR = NormalGammaParams(mu=0.0, lam=0.01, alpha=1.0, beta=1.0)


# ---------------------------------------------------------------------------
# deterministic test domains


class ChainDomain(GenerativeModel):
    """Deterministic chain paying 1 exactly when one target plan is played.

    Observations identify the successor state (fully observable), so the
    closed-loop planner faces the same problem as the open-loop ones.
    """

    def __init__(self, n_actions: int, plan: tuple) -> None:
        self._n_actions = int(n_actions)
        self._plan = tuple(int(a) for a in plan)
        self._length = len(self._plan)
        self._all = np.arange(self._n_actions)
        self._none = np.empty(0, dtype=np.intp)

    @property
    def action_count(self) -> int:
        return self._n_actions

    @property
    def observation_count(self) -> int:
        return 2 * (self._length + 1)

    @property
    def discount(self) -> float:
        return 1.0

    @property
    def reward_range(self) -> float:
        return 1.0

    def sample_initial(self, rng):
        return (0, True)

    def legal_actions(self, state):
        depth, _ = state
        return self._all if depth < self._length else self._none

    def step(self, state, action, rng):
        depth, on_track = state
        on_track = on_track and action == self._plan[depth]
        depth += 1
        done = depth >= self._length
        reward = 1.0 if done and on_track else 0.0
        return (depth, on_track), 2 * depth + int(on_track), reward, done


class ImmediateRewardDomain(GenerativeModel):
    """Single decision: action a pays rewards[a] and the episode ends."""

    def __init__(self, rewards, legal=None) -> None:
        self._rewards = tuple(float(r) for r in rewards)
        if legal is None:
            self._legal = np.arange(len(self._rewards))
        else:
            self._legal = np.asarray(legal, dtype=np.intp)
        self._none = np.empty(0, dtype=np.intp)

    @property
    def action_count(self) -> int:
        return len(self._rewards)

    @property
    def observation_count(self) -> int:
        return 1

    @property
    def discount(self) -> float:
        return 1.0

    @property
    def reward_range(self) -> float:
        spread = max(self._rewards) - min(self._rewards)
        return spread if spread > 0.0 else 1.0

    def sample_initial(self, rng):
        return 0

    def legal_actions(self, state):
        return self._legal if state == 0 else self._none

    def step(self, state, action, rng):
        return 1, 0, self._rewards[action], True


class UnitRewardDomain(GenerativeModel):
    """Every action pays 1 and the episode never ends."""

    def __init__(self, discount: float = 1.0) -> None:
        self._discount = float(discount)
        self._legal = np.arange(2)

    @property
    def action_count(self) -> int:
        return 2

    @property
    def observation_count(self) -> int:
        return 1

    @property
    def discount(self) -> float:
        return self._discount

    @property
    def reward_range(self) -> float:
        return 1.0

    def sample_initial(self, rng):
        return 0

    def legal_actions(self, state):
        return self._legal

    def step(self, state, action, rng):
        return 0, 0, 1.0, False


class SplitLegalDomain(GenerativeModel):
    """Legality depends on the particle: states 0/1 allow {0,1}, state 2 {2}.

    Action 2 pays far more than the others, so a planner that ignored the
    majority-legal rule would recommend it.
    """

    def __init__(self) -> None:
        self._low = np.arange(2)
        self._high = np.array([2])
        self._none = np.empty(0, dtype=np.intp)
        self._rewards = (1.0, 0.0, 100.0)

    @property
    def action_count(self) -> int:
        return 3

    @property
    def observation_count(self) -> int:
        return 1

    @property
    def discount(self) -> float:
        return 1.0

    @property
    def reward_range(self) -> float:
        return 100.0

    def sample_initial(self, rng):
        return int(rng.integers(3))

    def legal_actions(self, state):
        if state < 2:
            return self._low
        if state == 2:
            return self._high
        return self._none

    def step(self, state, action, rng):
        return 3, 0, self._rewards[action], True


class RandomTabularDomain(GenerativeModel):
    """Small random tabular POMDP with per-state legal subsets."""

    def __init__(self, seed: int, n_states: int = 6, n_actions: int = 4) -> None:
        g = np.random.default_rng(seed)
        self._n_actions = n_actions
        self._legal = [
            np.sort(g.choice(n_actions, size=int(g.integers(1, n_actions + 1)), replace=False))
            for _ in range(n_states)
        ]
        self._next = g.integers(0, n_states, size=(n_states, n_actions))
        self._obs = g.integers(0, 3, size=(n_states, n_actions))
        self._reward = np.round(g.normal(size=(n_states, n_actions)) * 3.0, 3)
        self._terminal = g.random(size=(n_states, n_actions)) < 0.15
        self._n_states = n_states

    @property
    def action_count(self) -> int:
        return self._n_actions

    @property
    def observation_count(self) -> int:
        return 3

    @property
    def discount(self) -> float:
        return 0.9

    @property
    def reward_range(self) -> float:
        return float(self._reward.max() - self._reward.min()) or 1.0

    def sample_initial(self, rng):
        return int(rng.integers(self._n_states))

    def legal_actions(self, state):
        return self._legal[state]

    def step(self, state, action, rng):
        return (
            int(self._next[state, action]),
            int(self._obs[state, action]),
            float(self._reward[state, action]),
            bool(self._terminal[state, action]),
        )


def point_belief(state, k: int = 1) -> BeliefParticles:
    return BeliefParticles([state] * k, max(k, 1))


def best_first_actions(model: GenerativeModel, horizon: int) -> set:
    """Exhaustively evaluate every open-loop plan of a deterministic model."""
    rng = np.random.default_rng(0)
    best = -math.inf
    firsts: set = set()
    for plan in itertools.product(range(model.action_count), repeat=horizon):
        state = model.sample_initial(rng)
        total, weight = 0.0, 1.0
        for action in plan:
            if len(model.legal_actions(state)) == 0:
                break
            state, _, reward, done = model.step(state, action, rng)
            total += weight * reward
            weight *= model.discount
            if done:
                break
        if total > best + 1e-12:
            best, firsts = total, {plan[0]}
        elif total >= best - 1e-12:
            firsts.add(plan[0])
    return firsts


def tiger_optimal_first_action(
    horizon: int, accuracy: float = 0.85, discount: float = 0.95
) -> int:
    """Finite-horizon value iteration over Tiger's reachable beliefs.

    From the uniform belief, every reachable belief is indexed by the net
    count of "heard left" minus "heard right" observations, so the value
    function is exactly computable on that integer lattice.
    """
    ratio = accuracy / (1.0 - accuracy)

    def b_left(diff: int) -> float:
        w = ratio**diff
        return w / (w + 1.0)

    values: dict = {}

    def value(diff: int, steps: int) -> float:
        if steps == 0:
            return 0.0
        key = (diff, steps)
        if key in values:
            return values[key]
        b = b_left(diff)
        open_left = b * -100.0 + (1.0 - b) * 10.0
        open_right = b * 10.0 + (1.0 - b) * -100.0
        p_hear_left = b * accuracy + (1.0 - b) * (1.0 - accuracy)
        listen = -1.0 + discount * (
            p_hear_left * value(diff + 1, steps - 1)
            + (1.0 - p_hear_left) * value(diff - 1, steps - 1)
        )
        values[key] = max(listen, open_left, open_right)
        return values[key]

    b = b_left(0)
    action_values = [
        -1.0
        + discount
        * (
            (b * accuracy + (1.0 - b) * (1.0 - accuracy)) * value(1, horizon - 1)
            + (b * (1.0 - accuracy) + (1.0 - b) * accuracy) * value(-1, horizon - 1)
        ),
        b * -100.0 + (1.0 - b) * 10.0,
        b * 10.0 + (1.0 - b) * -100.0,
    ]
    return int(np.argmax(action_values))


# ---------------------------------------------------------------------------
# enumeration oracles


def test_enumeration_oracle_unique_plan() -> None:
    model = ChainDomain(2, (1, 0, 1))
    assert best_first_actions(model, 3) == {1}
    model = ChainDomain(3, (2, 0, 1, 2))
    assert best_first_actions(model, 4) == {2}


def test_enumeration_oracle_ties() -> None:
    # no rewarding plan at this horizon: every first action ties at 0
    model = ChainDomain(2, (1, 0, 1))
    assert best_first_actions(model, 2) == {0, 1}


@pytest.mark.parametrize("plan_fn", SEARCH_PLANNERS)
def test_one_step_two_arms(plan_fn) -> None:
    model = ImmediateRewardDomain((10.0, 0.0))
    config = PlannerConfig(budget=100, horizon=1)
    result = plan_fn(point_belief(0), model, config, np.random.default_rng(3))
    assert result.chosen_action == 0
    assert result.simulations_run == 100


@pytest.mark.parametrize("plan_fn", SEARCH_PLANNERS)
def test_chain_matches_enumeration(plan_fn) -> None:
    model = ChainDomain(2, (1, 0, 1))
    optimal = best_first_actions(model, 3)
    config = PlannerConfig(budget=2000, horizon=3, prior=UNIT_PRIOR)
    hits = 0
    for seed in range(20):
        result = plan_fn(point_belief((0, True)), model, config, np.random.default_rng(seed))
        hits += result.chosen_action in optimal
    assert hits >= 19


def test_pomcp_tiger_prefers_listening() -> None:
    assert tiger_optimal_first_action(10) == 0
    model = Tiger()
    belief = BeliefParticles.from_initial(model, 400, np.random.default_rng(11))
    config = PlannerConfig(budget=2**14, horizon=10)
    result = pomcp_plan(belief, model, config, np.random.default_rng(12))
    assert result.chosen_action == 0


# ---------------------------------------------------------------------------
# budget and memory accounting


def test_posts_stack_size_unlimited() -> None:
    model = ChainDomain(2, tuple([0] * 100))
    config = PlannerConfig(budget=4, horizon=100)
    result = posts_plan(point_belief((0, True)), model, config, np.random.default_rng(0))
    assert result.nodes_used == 100


@pytest.mark.parametrize("cap,expected", [(7, 7), (100, 100), (200, 100)])
def test_posts_stack_size_capped(cap, expected) -> None:
    model = ChainDomain(2, tuple([0] * 100))
    config = PlannerConfig(budget=4, horizon=100, memory_cap=cap)
    result = posts_plan(point_belief((0, True)), model, config, np.random.default_rng(0))
    assert result.nodes_used == expected


@pytest.mark.parametrize("plan_fn", SEARCH_PLANNERS)
def test_budget_one_returns_single_sampled_plan(plan_fn) -> None:
    model = ChainDomain(3, (2, 0, 1))
    config = PlannerConfig(budget=1, horizon=3, prior=UNIT_PRIOR)
    result = plan_fn(point_belief((0, True)), model, config, np.random.default_rng(9))
    assert result.simulations_run == 1
    visited = {a: (m, c) for a, (m, c) in result.root_action_values.items() if c > 0}
    assert len(visited) == 1
    (action, (_, count)), = visited.items()
    assert count == 1
    assert result.chosen_action == action


@pytest.mark.parametrize("plan_fn", TREE_PLANNERS)
def test_memory_cap_floor(plan_fn) -> None:
    model = ChainDomain(2, (1, 0, 1))
    config = PlannerConfig(budget=500, horizon=3, memory_cap=1, prior=UNIT_PRIOR)
    result = plan_fn(point_belief((0, True)), model, config, np.random.default_rng(4))
    assert result.nodes_used == 1
    assert result.simulations_run == 500
    assert result.chosen_action in (0, 1)


@pytest.mark.parametrize("plan_fn", TREE_PLANNERS)
def test_node_growth_at_most_one_per_simulation(plan_fn) -> None:
    model = RandomTabularDomain(2)
    rng = np.random.default_rng(5)
    belief = BeliefParticles.from_initial(model, 32, rng)
    for budget in (1, 3, 10, 40):
        config = PlannerConfig(budget=budget, horizon=4, prior=UNIT_PRIOR)
        result = plan_fn(belief, model, config, np.random.default_rng(6))
        assert result.nodes_used <= 1 + budget


@pytest.mark.parametrize("plan_fn", TREE_PLANNERS)
@pytest.mark.parametrize("cap", [1, 2, 5, 17])
def test_memory_cap_never_exceeded(plan_fn, cap) -> None:
    model = RandomTabularDomain(3)
    rng = np.random.default_rng(7)
    belief = BeliefParticles.from_initial(model, 32, rng)
    config = PlannerConfig(budget=200, horizon=5, memory_cap=cap, prior=UNIT_PRIOR)
    result = plan_fn(belief, model, config, np.random.default_rng(8))
    assert result.nodes_used <= cap


# ---------------------------------------------------------------------------
# legality and the majority rule


def test_majority_legal_requires_strict_majority() -> None:
    model = SplitLegalDomain()
    majority = majority_legal_actions(model, BeliefParticles([0, 1, 2], 3))
    assert majority.tolist() == [0, 1]
    # an even split has no strict majority: fall back to any-particle legality
    fallback = majority_legal_actions(model, BeliefParticles([0, 2], 2))
    assert fallback.tolist() == [0, 1, 2]


@pytest.mark.parametrize("plan_fn", SEARCH_PLANNERS)
def test_final_action_respects_majority_legality(plan_fn) -> None:
    model = SplitLegalDomain()
    belief = BeliefParticles([0, 0, 1, 1, 2], 5)
    config = PlannerConfig(budget=600, horizon=1, prior=UNIT_PRIOR)
    result = plan_fn(belief, model, config, np.random.default_rng(10))
    # action 2 pays 100 but is legal in a minority of particles
    assert result.chosen_action == 0


@pytest.mark.parametrize("plan_fn", SEARCH_PLANNERS + [random_plan])
def test_single_legal_action_everywhere(plan_fn) -> None:
    model = ImmediateRewardDomain((0.0, 5.0, 1.0), legal=[1])
    for budget in (1, 33):
        config = PlannerConfig(budget=budget, horizon=1, prior=UNIT_PRIOR)
        result = plan_fn(point_belief(0, 5), model, config, np.random.default_rng(1))
        assert result.chosen_action == 1


def test_legality_property_over_random_domains() -> None:
    for seed in range(12):
        model = RandomTabularDomain(seed)
        rng = np.random.default_rng(100 + seed)
        belief = BeliefParticles.from_initial(model, 16, rng)
        legal_anywhere = set()
        for state in belief.states:
            legal_anywhere.update(model.legal_actions(state).tolist())
        for plan_fn in SEARCH_PLANNERS + [random_plan]:
            for budget, cap in ((1, None), (2, 1), (19, 3), (50, None)):
                config = PlannerConfig(
                    budget=budget, horizon=3, memory_cap=cap, prior=UNIT_PRIOR
                )
                result = plan_fn(belief, model, config, np.random.default_rng(seed))
                assert result.chosen_action in legal_anywhere
                if plan_fn is not random_plan:
                    assert result.simulations_run == budget


def test_empty_belief_rejected() -> None:
    with pytest.raises(ValueError):
        BeliefParticles([], 4)


# ---------------------------------------------------------------------------
# value sanity and determinism


@pytest.mark.parametrize("plan_fn", SEARCH_PLANNERS)
def test_root_values_within_achievable_range(plan_fn) -> None:
    model = ChainDomain(2, (1, 0, 1))
    config = PlannerConfig(budget=300, horizon=3, prior=UNIT_PRIOR)
    result = plan_fn(point_belief((0, True)), model, config, np.random.default_rng(2))
    assert result.root_action_values
    for mean, count in result.root_action_values.values():
        assert count >= 1
        assert -1e-9 <= mean <= 1.0 + 1e-9


@pytest.mark.parametrize("plan_fn", SEARCH_PLANNERS + [random_plan])
def test_determinism_same_seed_same_result(plan_fn) -> None:
    model = Tiger()
    belief = BeliefParticles.from_initial(model, 64, np.random.default_rng(20))
    config = PlannerConfig(budget=128, horizon=6)
    first = plan_fn(belief, model, config, np.random.default_rng(21))
    second = plan_fn(belief, model, config, np.random.default_rng(21))
    assert first == second
    assert isinstance(first, PlanResult)


# ---------------------------------------------------------------------------
# rollout and UCB corner cases


def test_rollout_depth_zero_is_zero() -> None:
    model = UnitRewardDomain()
    assert rollout(0, model, 0, 1.0, np.random.default_rng(0)) == 0.0


def test_rollout_terminal_state_is_zero() -> None:
    model = ChainDomain(2, (0, 1))
    terminal_state = (2, False)
    assert rollout(terminal_state, model, 5, 1.0, np.random.default_rng(0)) == 0.0


def test_rollout_unit_rewards_sum_to_depth() -> None:
    model = UnitRewardDomain()
    assert rollout(0, model, 5, 1.0, np.random.default_rng(0)) == 5.0


def test_rollout_discounted_unit_rewards() -> None:
    model = UnitRewardDomain(discount=0.5)
    value = rollout(0, model, 4, 0.5, np.random.default_rng(0))
    assert value == pytest.approx(1.0 + 0.5 + 0.25 + 0.125)


def test_rollout_validation() -> None:
    model = UnitRewardDomain()
    with pytest.raises(ValueError):
        rollout(0, model, -1, 1.0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        rollout(0, model, 3, 1.5, np.random.default_rng(0))


def test_pooluct_zero_exploration_goes_greedy() -> None:
    model = ImmediateRewardDomain((10.0, 0.0))
    config = PlannerConfig(budget=50, horizon=1, exploration=0.0)
    result = pooluct_plan(point_belief(0), model, config, np.random.default_rng(0))
    assert result.chosen_action == 0
    # both arms were forced once; afterwards the zero bonus keeps arm 0
    assert result.root_action_values[0][1] == 49
    assert result.root_action_values[1][1] == 1


def test_random_plan_uses_no_simulations() -> None:
    model = ImmediateRewardDomain((1.0, 2.0))
    config = PlannerConfig(budget=1000, horizon=1)
    result = random_plan(point_belief(0), model, config, np.random.default_rng(0))
    assert result.simulations_run == 0
    assert result.nodes_used == 0
    assert result.root_action_values == {}


# ---------------------------------------------------------------------------
# config validation


def test_planner_config_validation() -> None:
    with pytest.raises(ValueError):
        PlannerConfig(budget=0, horizon=5)
    with pytest.raises(ValueError):
        PlannerConfig(budget=5, horizon=0)
    with pytest.raises(ValueError):
        PlannerConfig(budget=5, horizon=5, memory_cap=0)
    with pytest.raises(ValueError):
        PlannerConfig(budget=5, horizon=5, discount=1.5)
    with pytest.raises(ValueError):
        PlannerConfig(budget=5, horizon=5, particle_capacity=0)


def test_planner_registry_keys() -> None:
    assert set(PLANNERS) == {"posts", "poolts", "pooluct", "pomcp", "random"}
