"""PocMan: partially observable PacMan on a 17 x 19 maze.

The agent only perceives a 10-bit local percept per step: four
wall-adjacency bits, four line-of-sight ghost bits, one food-adjacency bit,
and one ghost-hearing bit, giving 2^10 = 1024 observations.  Four ghosts
chase the agent within a Manhattan radius of 5, flee instead while a power
pill is active, and otherwise wander uniformly.  Food pellets are scattered
independently with probability one half at reset.
"""
from __future__ import annotations

from typing import List, NamedTuple, Tuple

import numpy as np

from ..pomdp import BeliefParticles, GenerativeModel, History, IllegalActionError, Step

__all__ = [
    "PocMan",
    "PocManState",
    "encode_percept",
    "decode_percept",
    "NORTH",
    "EAST",
    "SOUTH",
    "WEST",
]

NORTH, EAST, SOUTH, WEST = 0, 1, 2, 3
_STEPS = ((0, -1), (1, 0), (0, 1), (-1, 0))

_WIDTH = 17
_HEIGHT = 19

# interior cells are open when either coordinate is odd (a pillar lattice);
# these extra wall cells carve longer corridors and a central tunnel row
_EXTRA_WALLS = frozenset(
    {
        (2, 3), (14, 3), (2, 15), (14, 15),
        (5, 2), (11, 2), (5, 16), (11, 16),
        (8, 3), (8, 15),
        (5, 8), (7, 8), (9, 8), (11, 8),
        (5, 10), (7, 10), (9, 10), (11, 10),
    }
)

_AGENT_START = (8, 13)
_GHOST_HOMES = ((6, 9), (7, 9), (9, 9), (10, 9))
_PILL_CELLS = ((1, 3), (15, 3), (1, 15), (15, 15))
_CENTER_ROW = tuple((x, 9) for x in range(5, 12))

_CHASE_RANGE = 5
_HEAR_RANGE = 2
_POWER_STEPS = 15

_REWARD_STEP = -1.0
_REWARD_FOOD = 10.0
_REWARD_GHOST = 25.0
_REWARD_DEATH = -100.0


class PocManState(NamedTuple):
    """Agent cell, ghost cells, food/pill bitmasks, and power steps left."""

    agent: int
    ghosts: Tuple[int, ...]
    food: int
    pills: int
    power: int


def encode_percept(
    walls: Tuple[int, int, int, int],
    ghosts: Tuple[int, int, int, int],
    food: int,
    hear: int,
) -> int:
    """Pack the 10-bit percept; bits 0-3 walls NESW, 4-7 ghosts NESW,
    8 food adjacency, 9 ghost hearing."""
    code = 0
    for i, bit in enumerate(walls):
        code |= (1 if bit else 0) << i
    for i, bit in enumerate(ghosts):
        code |= (1 if bit else 0) << (4 + i)
    code |= (1 if food else 0) << 8
    code |= (1 if hear else 0) << 9
    return code


def decode_percept(code: int) -> Tuple[Tuple[int, ...], Tuple[int, ...], int, int]:
    """Inverse of :func:`encode_percept`."""
    if not 0 <= code < 1024:
        raise ValueError(f"percept code must lie in [0, 1024), got {code}")
    walls = tuple((code >> i) & 1 for i in range(4))
    ghosts = tuple((code >> (4 + i)) & 1 for i in range(4))
    return walls, ghosts, (code >> 8) & 1, (code >> 9) & 1


class PocMan(GenerativeModel):
    """Generative PocMan model on the fixed 17 x 19 maze."""

    def __init__(self) -> None:
        open_cells = np.zeros(_WIDTH * _HEIGHT, dtype=bool)
        for y in range(1, _HEIGHT - 1):
            for x in range(1, _WIDTH - 1):
                if (x % 2 == 1 or y % 2 == 1) and (x, y) not in _EXTRA_WALLS:
                    open_cells[y * _WIDTH + x] = True
        self._open = open_cells
        self._x = np.arange(_WIDTH * _HEIGHT) % _WIDTH
        self._y = np.arange(_WIDTH * _HEIGHT) // _WIDTH

        self._legal: List[np.ndarray] = []
        self._targets: List[np.ndarray] = []
        self._rays: List[Tuple[Tuple[int, ...], ...]] = []
        for cell in range(_WIDTH * _HEIGHT):
            if not open_cells[cell]:
                self._legal.append(np.empty(0, dtype=np.int64))
                self._targets.append(np.empty(0, dtype=np.int64))
                self._rays.append(((), (), (), ()))
                continue
            x, y = cell % _WIDTH, cell // _WIDTH
            acts, targets, rays = [], [], []
            for direction, (dx, dy) in enumerate(_STEPS):
                nx, ny = x + dx, y + dy
                neighbor = ny * _WIDTH + nx
                if open_cells[neighbor]:
                    acts.append(direction)
                    targets.append(neighbor)
                ray = []
                rx, ry = x + dx, y + dy
                while 0 <= rx < _WIDTH and 0 <= ry < _HEIGHT and open_cells[ry * _WIDTH + rx]:
                    ray.append(ry * _WIDTH + rx)
                    rx, ry = rx + dx, ry + dy
                rays.append(tuple(ray))
            self._legal.append(np.array(acts, dtype=np.int64))
            self._targets.append(np.array(targets, dtype=np.int64))
            self._rays.append(tuple(rays))

        self._start = _AGENT_START[1] * _WIDTH + _AGENT_START[0]
        self._homes = tuple(y * _WIDTH + x for x, y in _GHOST_HOMES)
        self._pill_cells = tuple(y * _WIDTH + x for x, y in _PILL_CELLS)
        reserved = (
            {self._start}
            | set(self._pill_cells)
            | {y * _WIDTH + x for x, y in _CENTER_ROW}
        )
        self._food_sites = tuple(
            int(c) for c in np.flatnonzero(open_cells) if int(c) not in reserved
        )
        self._food_index = {cell: i for i, cell in enumerate(self._food_sites)}
        self._validate_maze()

    def _validate_maze(self) -> None:
        # every open cell must be reachable from the agent start
        seen = {self._start}
        frontier = [self._start]
        while frontier:
            cell = frontier.pop()
            for neighbor in self._targets[cell]:
                neighbor = int(neighbor)
                if neighbor not in seen:
                    seen.add(neighbor)
                    frontier.append(neighbor)
        open_count = int(self._open.sum())
        if len(seen) != open_count:
            raise ValueError(
                f"maze is disconnected: reached {len(seen)} of {open_count} cells"
            )
        for cell in self._homes + self._pill_cells + (self._start,):
            if not self._open[cell]:
                raise ValueError(f"special cell {cell} is not passable")

    # ------------------------------------------------------------------
    # model interface

    @property
    def action_count(self) -> int:
        return 4

    @property
    def observation_count(self) -> int:
        return 1024

    @property
    def discount(self) -> float:
        return 0.95

    @property
    def reward_range(self) -> float:
        # component span: ghost capture +25 down to death -100
        return 125.0

    def sample_initial(self, rng: np.random.Generator) -> PocManState:
        draws = rng.random(len(self._food_sites)) < 0.5
        food = 0
        for i in np.flatnonzero(draws):
            food |= 1 << int(i)
        return PocManState(
            agent=self._start,
            ghosts=self._homes,
            food=food,
            pills=(1 << len(self._pill_cells)) - 1,
            power=0,
        )

    def legal_actions(self, state: PocManState) -> np.ndarray:
        return self._legal[state.agent]

    def step(self, state: PocManState, action: int, rng: np.random.Generator) -> Step:
        legal = self._legal[state.agent]
        position = np.flatnonzero(legal == action)
        if position.size == 0:
            raise IllegalActionError(f"move {action} hits a wall from {state.agent}")
        agent = int(self._targets[state.agent][position[0]])

        reward = _REWARD_STEP
        food = state.food
        pills = state.pills
        power = state.power
        site = self._food_index.get(agent)
        if site is not None and food >> site & 1:
            food &= ~(1 << site)
            reward += _REWARD_FOOD
        for i, cell in enumerate(self._pill_cells):
            if cell == agent and pills >> i & 1:
                pills &= ~(1 << i)
                power = _POWER_STEPS

        ghosts = list(state.ghosts)
        dead = False
        for i, ghost in enumerate(ghosts):
            if ghost == agent:
                if power > 0:
                    reward += _REWARD_GHOST
                    ghosts[i] = self._homes[i]
                else:
                    dead = True
        if not dead:
            for i, ghost in enumerate(ghosts):
                ghosts[i] = self._move_ghost(ghost, agent, power > 0, rng)
            for i, ghost in enumerate(ghosts):
                if ghost == agent:
                    if power > 0:
                        reward += _REWARD_GHOST
                        ghosts[i] = self._homes[i]
                    else:
                        dead = True
        if dead:
            reward += _REWARD_DEATH
        power = max(power - 1, 0)
        next_state = PocManState(agent, tuple(ghosts), food, pills, power)
        terminal = dead or food == 0
        return next_state, self._percept(next_state), reward, terminal

    def _move_ghost(
        self, ghost: int, agent: int, powered: bool, rng: np.random.Generator
    ) -> int:
        options = self._targets[ghost]
        if options.size == 0:
            return ghost
        distance = abs(self._x[ghost] - self._x[agent]) + abs(
            self._y[ghost] - self._y[agent]
        )
        if distance <= _CHASE_RANGE:
            gaps = np.abs(self._x[options] - self._x[agent]) + np.abs(
                self._y[options] - self._y[agent]
            )
            best = options[gaps == (gaps.max() if powered else gaps.min())]
            return int(best[rng.integers(best.size)])
        return int(options[rng.integers(options.size)])

    def _percept(self, state: PocManState) -> int:
        agent = state.agent
        legal = set(self._legal[agent].tolist())
        walls = tuple(0 if d in legal else 1 for d in range(4))
        ghost_cells = set(state.ghosts)
        sights = tuple(
            1 if ghost_cells.intersection(ray) else 0 for ray in self._rays[agent]
        )
        food_near = 0
        for target in self._targets[agent]:
            site = self._food_index.get(int(target))
            if site is not None and state.food >> site & 1:
                food_near = 1
                break
        hear = 0
        for ghost in state.ghosts:
            if (
                abs(self._x[ghost] - self._x[agent])
                + abs(self._y[ghost] - self._y[agent])
                <= _HEAR_RANGE
            ):
                hear = 1
                break
        return encode_percept(walls, sights, food_near, hear)

    def recover_belief(
        self, history: History, capacity: int, rng: np.random.Generator
    ) -> BeliefParticles:
        """Rebuild a belief using what the action history pins down exactly.

        The agent path, eaten pills, and the power timer are deterministic
        functions of the actions; food along the path must be gone.  Ghost
        positions and off-path food are resampled from their priors.
        """
        agent = self._start
        visited = {agent}
        power = 0
        pills = (1 << len(self._pill_cells)) - 1
        for action, _ in history:
            position = np.flatnonzero(self._legal[agent] == action)
            if position.size:
                agent = int(self._targets[agent][position[0]])
            visited.add(agent)
            for i, cell in enumerate(self._pill_cells):
                if cell == agent and pills >> i & 1:
                    pills &= ~(1 << i)
                    power = _POWER_STEPS
            power = max(power - 1, 0)
        open_cells = np.flatnonzero(self._open)
        states = []
        for _ in range(capacity):
            draws = rng.random(len(self._food_sites)) < 0.5
            food = 0
            for i in np.flatnonzero(draws):
                if self._food_sites[int(i)] not in visited:
                    food |= 1 << int(i)
            ghosts = tuple(
                int(open_cells[j]) for j in rng.integers(open_cells.size, size=4)
            )
            states.append(PocManState(agent, ghosts, food, pills, power))
        return BeliefParticles(states, capacity)

    # ------------------------------------------------------------------
    # introspection helpers

    @property
    def maze_shape(self) -> Tuple[int, int]:
        return (_WIDTH, _HEIGHT)

    @property
    def open_cell_count(self) -> int:
        return int(self._open.sum())

    @property
    def food_site_count(self) -> int:
        return len(self._food_sites)
