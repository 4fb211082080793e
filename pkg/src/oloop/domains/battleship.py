"""Battleship: sink 5 hidden ships (sizes 1-5) on a 10x10 grid.

Each action fires at one unfired cell.  Feedback is hit/miss, the per-shot
reward is -1 plus +1 on a hit, and sinking the last of the 15 ship cells
adds +100 and ends the episode.  Ship placements are drawn uniformly among
non-overlapping configurations; an optional constructor flag additionally
forbids adjacent (including diagonal) ships.
"""
from __future__ import annotations

from typing import List, NamedTuple, Tuple

import numpy as np

from ..pomdp import BeliefParticles, GenerativeModel, History, IllegalActionError

__all__ = ["Battleship", "BattleshipState", "OBS_MISS", "OBS_HIT"]

OBS_MISS = 0
OBS_HIT = 1

_SIDE = 10
_CELLS = _SIDE * _SIDE
_SHIP_SIZES = (5, 4, 3, 2, 1)
_TOTAL_SHIP_CELLS = sum(_SHIP_SIZES)


class BattleshipState(NamedTuple):
    """Ship layout plus firing progress.

    ``ship`` is the fixed 100-cell occupancy of this episode's layout;
    ``fired`` marks cells already shot, ``unfired`` lists the rest (the
    legal actions), and ``hits_left`` counts ship cells still afloat.
    """

    ship: np.ndarray
    fired: np.ndarray
    unfired: np.ndarray
    hits_left: int


def _enumerate_placements(size: int) -> List[np.ndarray]:
    """All axis-aligned placements of one ship as sorted cell-index arrays."""
    placements = []
    for row in range(_SIDE):
        for col in range(_SIDE - size + 1):
            placements.append(np.arange(row * _SIDE + col, row * _SIDE + col + size))
    if size > 1:
        for row in range(_SIDE - size + 1):
            for col in range(_SIDE):
                placements.append(
                    np.arange(row * _SIDE + col, (row + size) * _SIDE + col, _SIDE)
                )
    return placements


def _cells_to_mask(cells: np.ndarray) -> int:
    mask = 0
    for cell in cells:
        mask |= 1 << int(cell)
    return mask


def _halo_mask(cells: np.ndarray) -> int:
    """Placement cells plus their 8-neighborhoods, as a bitmask."""
    mask = 0
    for cell in cells:
        row, col = divmod(int(cell), _SIDE)
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                r, c = row + dr, col + dc
                if 0 <= r < _SIDE and 0 <= c < _SIDE:
                    mask |= 1 << (r * _SIDE + c)
    return mask


class Battleship(GenerativeModel):
    """Generative Battleship model.

    Parameters
    ----------
    allow_adjacent : bool
        When False, placements additionally reject configurations where two
        ships touch, including diagonally.
    """

    def __init__(self, allow_adjacent: bool = True) -> None:
        self._allow_adjacent = bool(allow_adjacent)
        self._cells: List[np.ndarray] = []
        self._masks: List[Tuple[int, ...]] = []
        self._blockers: List[Tuple[int, ...]] = []
        for size in _SHIP_SIZES:
            placements = _enumerate_placements(size)
            self._cells.append(
                np.stack([self._cells_as_bool(p) for p in placements])
            )
            masks = tuple(_cells_to_mask(p) for p in placements)
            self._masks.append(masks)
            if allow_adjacent:
                self._blockers.append(masks)
            else:
                self._blockers.append(tuple(_halo_mask(p) for p in placements))
        self._counts = np.array([len(m) for m in self._masks])
        self._no_actions = np.empty(0, dtype=np.intp)
        self._all_cells = np.arange(_CELLS, dtype=np.intp)

    @staticmethod
    def _cells_as_bool(cells: np.ndarray) -> np.ndarray:
        board = np.zeros(_CELLS, dtype=bool)
        board[cells] = True
        return board

    # ------------------------------------------------------------------
    # model interface

    @property
    def action_count(self) -> int:
        return _CELLS

    @property
    def observation_count(self) -> int:
        return 2

    @property
    def discount(self) -> float:
        return 1.0

    @property
    def reward_range(self) -> float:
        # per-step rewards span [-1, +100]
        return 101.0

    def sample_initial(self, rng: np.random.Generator) -> BattleshipState:
        picks = self._sample_config(rng)
        ship = self._cells[0][picks[0]].copy()
        for i in range(1, len(_SHIP_SIZES)):
            ship |= self._cells[i][picks[i]]
        return BattleshipState(
            ship=ship,
            fired=np.zeros(_CELLS, dtype=bool),
            unfired=self._all_cells,
            hits_left=_TOTAL_SHIP_CELLS,
        )

    def legal_actions(self, state: BattleshipState) -> np.ndarray:
        return state.unfired if state.hits_left > 0 else self._no_actions

    def step(
        self, state: BattleshipState, action: int, rng: np.random.Generator
    ) -> Tuple[BattleshipState, int, float, bool]:
        if state.fired[action]:
            raise IllegalActionError(f"cell {action} was already fired at")
        hit = bool(state.ship[action])
        fired = state.fired.copy()
        fired[action] = True
        unfired = state.unfired[state.unfired != action]
        hits_left = state.hits_left - hit
        reward = -1.0 + hit
        terminal = hits_left == 0
        if hit and terminal:
            reward += 100.0
        next_state = BattleshipState(state.ship, fired, unfired, hits_left)
        return next_state, (OBS_HIT if hit else OBS_MISS), reward, terminal

    def rollout_return(
        self,
        state: BattleshipState,
        depth_remaining: int,
        discount: float,
        rng: np.random.Generator,
    ) -> float:
        """Closed-form playout: a uniform-legal firing sequence is exactly a
        uniform random permutation of the unfired cells, so the whole rollout
        reduces to one permutation draw."""
        shots = min(depth_remaining, state.unfired.size)
        if shots <= 0 or state.hits_left <= 0:
            return 0.0
        order = rng.permutation(state.unfired)[:shots]
        hits = state.ship[order]
        cumulative = np.cumsum(hits)
        if cumulative[-1] >= state.hits_left:
            last = int(np.argmax(cumulative >= state.hits_left))
            shots = last + 1
            hits = hits[:shots]
            bonus = 100.0 if discount == 1.0 else 100.0 * discount**last
        else:
            bonus = 0.0
        if discount == 1.0:
            return float(cumulative[shots - 1]) - shots + bonus
        weights = discount ** np.arange(shots)
        return float(weights @ (hits - 1.0)) + bonus

    def recover_belief(
        self, history: History, capacity: int, rng: np.random.Generator
    ) -> BeliefParticles:
        """Resample ship layouts consistent with the observed shot outcomes.

        Hit/miss feedback is deterministic given the layout, so rejection
        over consistent layouts is an exact posterior resample.  If the full
        constraints cannot be met within the attempt budget, the hit-coverage
        constraint is dropped first, then all layout constraints.
        """
        fired = np.zeros(_CELLS, dtype=bool)
        hit_bits = 0
        miss_bits = 0
        for action, observation in history:
            fired[action] = True
            if observation == OBS_HIT:
                hit_bits |= 1 << int(action)
            else:
                miss_bits |= 1 << int(action)
        unfired = np.flatnonzero(~fired).astype(np.intp)
        hits_left = _TOTAL_SHIP_CELLS - hit_bits.bit_count()

        allowed = [
            [j for j, mask in enumerate(masks) if not mask & miss_bits]
            for masks in self._masks
        ]
        states: list = []

        def propose(indices, check_hits: bool) -> None:
            highs = np.array([len(a) for a in indices])
            budget = 50 * capacity
            block = 256
            while budget > 0 and len(states) < capacity:
                draws = rng.integers(highs, size=(min(block, budget), len(highs)))
                budget -= draws.shape[0]
                for row in draws:
                    union = 0
                    acc = 0
                    ok = True
                    for i in range(len(_SHIP_SIZES)):
                        j = indices[i][row[i]]
                        mask = self._masks[i][j]
                        if mask & acc:
                            ok = False
                            break
                        acc |= self._blockers[i][j]
                        union |= mask
                    if not ok:
                        continue
                    if check_hits and union & hit_bits != hit_bits:
                        continue
                    ship = np.zeros(_CELLS, dtype=bool)
                    for i in range(len(_SHIP_SIZES)):
                        ship |= self._cells[i][indices[i][row[i]]]
                    states.append(BattleshipState(ship, fired, unfired, hits_left))
                    if len(states) >= capacity:
                        break

        if all(allowed):
            propose(allowed, check_hits=True)
            if not states:
                propose(allowed, check_hits=False)
        if not states:
            propose([list(range(len(m))) for m in self._masks], check_hits=False)
        return BeliefParticles(states, capacity)

    # ------------------------------------------------------------------
    # placement sampling

    def _sample_config(self, rng: np.random.Generator) -> np.ndarray:
        """One uniformly drawn valid configuration, as per-size indices."""
        while True:
            picks = rng.integers(self._counts)
            acc = 0
            ok = True
            for i in range(len(_SHIP_SIZES)):
                mask = self._masks[i][picks[i]]
                if mask & acc:
                    ok = False
                    break
                acc |= self._blockers[i][picks[i]]
            if ok:
                return picks

    def _sample_masks(self, rng: np.random.Generator) -> List[int]:
        """Per-ship cell bitmasks of one sampled configuration."""
        picks = self._sample_config(rng)
        return [self._masks[i][picks[i]] for i in range(len(_SHIP_SIZES))]
