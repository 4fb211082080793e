"""Experiment harness: seeded episodes, sweep grids, and CSV output.

An :class:`ExperimentSpec` names one grid cell (domain, planner, planner
configuration, episode count).  :func:`run_episode` plays a single seeded
episode of closed-loop planning and belief tracking; :func:`run_sweep`
executes a list of cells in order and writes one CSV row per episode.

Every episode is a pure function of its integer seed, so reruns with the
same grid and base seed reproduce the CSV byte for byte.  Planning time is
recorded for information only and is written as 0.0 unless a spec opts in
with ``record_timing`` (wall-clock noise would otherwise break rerun
equality).
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .bandits import NormalGammaParams
from .domains import make
from .planners import PLANNERS, PlannerConfig
from .pomdp import (
    BeliefParticles,
    GenerativeModel,
    History,
    ParticleDeprivationError,
    particle_update,
)

__all__ = [
    "CSV_COLUMNS",
    "EpisodeRecord",
    "ExperimentSpec",
    "episode_seed",
    "load_rows",
    "run_episode",
    "run_sweep",
    "specs_from_config",
    "summarize",
]

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "domain",
    "planner",
    "n_b",
    "T",
    "n_mem",
    "beta0",
    "c",
    "K",
    "seed",
    "undiscounted_return",
    "discounted_return",
    "steps",
    "max_nodes",
    "mean_plan_time_ms",
)

# Episode-step ceilings used when a spec does not set one explicitly.
_DEFAULT_MAX_STEPS = {"pocman": 1000}
_FALLBACK_MAX_STEPS = 200

_INT_COLUMNS = frozenset({"n_b", "T", "K", "seed", "steps", "max_nodes"})
_FLOAT_COLUMNS = frozenset(
    {"beta0", "c", "undiscounted_return", "discounted_return", "mean_plan_time_ms"}
)


@dataclass(frozen=True)
class ExperimentSpec:
    """One grid cell: a (domain, planner, configuration) triple to run.

    Parameters
    ----------
    domain : str
        Registry key of the environment, e.g. ``"rocksample-11-11"``.
    planner : str
        Registry key of the planner, e.g. ``"posts"``.
    config : PlannerConfig
        Planner settings shared by every episode of the cell.
    episode_count : int
        Number of independently seeded episodes to run.
    max_episode_steps : int, optional
        Hard cap on environment steps per episode; ``None`` selects the
        per-domain default (1000 for pocman, 200 otherwise).
    base_seed : int
        Root seed; per-episode seeds are derived from it, the cell index,
        and the episode index.
    wall_clock_limit : float, optional
        Soft time budget in seconds for the whole cell; once exceeded no
        further episodes of the cell are started.
    record_timing : bool
        When True the mean planning time per step is measured and written
        to the CSV; when False the column is 0.0 so reruns are identical.
    domain_options : tuple of (str, value) pairs
        Extra keyword arguments for the domain factory, e.g.
        ``(("allow_adjacent", False),)`` for battleship.
    """

    domain: str
    planner: str
    config: PlannerConfig
    episode_count: int = 1
    max_episode_steps: Optional[int] = None
    base_seed: int = 0
    wall_clock_limit: Optional[float] = None
    record_timing: bool = False
    domain_options: Tuple[Tuple[str, object], ...] = ()

    def __post_init__(self) -> None:
        if self.planner not in PLANNERS:
            raise ValueError(f"unknown planner {self.planner!r}")
        if self.episode_count < 1:
            raise ValueError("episode_count must be at least 1")
        if self.max_episode_steps is not None and self.max_episode_steps < 1:
            raise ValueError("max_episode_steps must be at least 1")
        if self.wall_clock_limit is not None and self.wall_clock_limit <= 0:
            raise ValueError("wall_clock_limit must be positive")

    def resolved_max_steps(self) -> int:
        if self.max_episode_steps is not None:
            return self.max_episode_steps
        return _DEFAULT_MAX_STEPS.get(self.domain, _FALLBACK_MAX_STEPS)


@dataclass(frozen=True)
class EpisodeRecord:
    """Outcome of one episode.

    ``max_nodes`` is the largest node count any single planning call used;
    ``mean_plan_time_ms`` averages planning wall time over steps taken and
    is 0.0 when timing was not recorded.  ``aborted`` marks episodes cut
    short by a planner error; their partial returns are kept here but the
    sweep writer excludes them from the CSV.
    """

    seed: int
    undiscounted_return: float
    discounted_return: float
    steps: int
    max_nodes: int
    mean_plan_time_ms: float
    aborted: bool = False


def episode_seed(base_seed: int, cell_index: int, episode_index: int) -> int:
    """Collision-resistant per-episode seed from (base, cell, episode)."""
    seq = np.random.SeedSequence((base_seed, cell_index, episode_index))
    return int(seq.generate_state(1, np.uint64)[0])


_MODEL_CACHE: Dict[Tuple[str, Tuple[Tuple[str, object], ...]], GenerativeModel] = {}


def _get_model(spec: ExperimentSpec) -> GenerativeModel:
    key = (spec.domain, spec.domain_options)
    model = _MODEL_CACHE.get(key)
    if model is None:
        model = make(spec.domain, **dict(spec.domain_options))
        _MODEL_CACHE[key] = model
    return model


def run_episode(
    spec: ExperimentSpec, seed: int, model: Optional[GenerativeModel] = None
) -> EpisodeRecord:
    """Play one closed-loop episode and return its record.

    The hidden state is drawn from the domain's initial distribution; each
    step plans from the current particle belief, executes the chosen action
    in the hidden state, and filters the belief with the observation.  On
    particle deprivation the belief is rebuilt from the action-observation
    history via the domain's recovery hook.  A planner exception aborts the
    episode, which is flagged on the record and logged.
    """
    if model is None:
        model = _get_model(spec)
    config = spec.config
    plan = PLANNERS[spec.planner]
    rng = np.random.default_rng(seed)
    state = model.sample_initial(rng)
    belief = BeliefParticles.from_initial(model, config.particle_capacity, rng)
    history = History()
    discount = config.resolved_discount(model)
    max_steps = spec.resolved_max_steps()
    undiscounted = 0.0
    discounted = 0.0
    weight = 1.0
    steps = 0
    max_nodes = 0
    plan_seconds = 0.0
    aborted = False
    for _ in range(max_steps):
        try:
            if spec.record_timing:
                t0 = time.perf_counter()
                result = plan(belief, model, config, rng)
                plan_seconds += time.perf_counter() - t0
            else:
                result = plan(belief, model, config, rng)
        except Exception:
            logger.exception(
                "planner %r failed on %r at step %d (seed %d); episode aborted",
                spec.planner,
                spec.domain,
                steps,
                seed,
            )
            aborted = True
            break
        if result.nodes_used > max_nodes:
            max_nodes = result.nodes_used
        state, observation, reward, terminal = model.step(
            state, result.chosen_action, rng
        )
        history.append(result.chosen_action, observation)
        undiscounted += reward
        discounted += weight * reward
        weight *= discount
        steps += 1
        if terminal or steps == max_steps:
            break
        try:
            belief = particle_update(belief, result.chosen_action, observation, model, rng)
        except ParticleDeprivationError:
            logger.warning(
                "particle deprivation on %r at step %d (seed %d); rebuilding "
                "belief from history",
                spec.domain,
                steps,
                seed,
            )
            belief = model.recover_belief(history, config.particle_capacity, rng)
    mean_ms = plan_seconds * 1000.0 / steps if spec.record_timing and steps else 0.0
    return EpisodeRecord(
        seed=seed,
        undiscounted_return=undiscounted,
        discounted_return=discounted,
        steps=steps,
        max_nodes=max_nodes,
        mean_plan_time_ms=mean_ms,
        aborted=aborted,
    )


def _spec_row(spec: ExperimentSpec, model: GenerativeModel, record: EpisodeRecord) -> dict:
    config = spec.config
    cap = config.memory_cap
    return {
        "domain": spec.domain,
        "planner": spec.planner,
        "n_b": config.budget,
        "T": config.horizon,
        "n_mem": "" if cap is None else cap,
        "beta0": config.prior.beta,
        "c": config.resolved_exploration(model),
        "K": config.particle_capacity,
        "seed": record.seed,
        "undiscounted_return": record.undiscounted_return,
        "discounted_return": record.discounted_return,
        "steps": record.steps,
        "max_nodes": record.max_nodes,
        "mean_plan_time_ms": record.mean_plan_time_ms,
    }


def _cell_records(
    spec: ExperimentSpec, cell_index: int, workers: int
) -> List[EpisodeRecord]:
    seeds = [episode_seed(spec.base_seed, cell_index, e) for e in range(spec.episode_count)]
    start = time.perf_counter()
    limit = spec.wall_clock_limit
    records: List[EpisodeRecord] = []
    if workers <= 1:
        model = _get_model(spec)
        for index, seed in enumerate(seeds):
            if limit is not None and index > 0 and time.perf_counter() - start > limit:
                logger.warning(
                    "wall clock limit %.1fs hit on cell %d after %d/%d episodes",
                    limit,
                    cell_index,
                    index,
                    spec.episode_count,
                )
                break
            records.append(run_episode(spec, seed, model))
        return records
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_episode, spec, seed) for seed in seeds]
        for index, future in enumerate(futures):
            if limit is not None and index > 0 and time.perf_counter() - start > limit:
                for pending in futures[index:]:
                    pending.cancel()
                logger.warning(
                    "wall clock limit %.1fs hit on cell %d after %d/%d episodes",
                    limit,
                    cell_index,
                    index,
                    spec.episode_count,
                )
                break
            records.append(future.result())
    return records


def run_sweep(
    specs: Sequence[ExperimentSpec],
    out_path: Optional[os.PathLike] = None,
    workers: Optional[int] = None,
) -> List[dict]:
    """Run every cell in order and return (and optionally write) the rows.

    Rows follow grid order, then episode index within each cell.  The CSV
    uses the fixed :data:`CSV_COLUMNS` header, UTF-8, and ``.`` decimals;
    the file is flushed after every cell so an interrupted sweep keeps its
    completed rows.  ``workers`` defaults to the ``OLOOP_WORKERS``
    environment variable (1 when unset); results are written in episode
    order regardless of completion order.
    """
    if workers is None:
        workers = int(os.environ.get("OLOOP_WORKERS", "1"))
    if workers < 1:
        raise ValueError("workers must be at least 1")
    rows: List[dict] = []
    handle = None
    writer = None
    if out_path is not None:
        handle = open(out_path, "w", encoding="utf-8", newline="")
        writer = csv.DictWriter(handle, fieldnames=list(CSV_COLUMNS))
        writer.writeheader()
        handle.flush()
    try:
        for cell_index, spec in enumerate(specs):
            model = _get_model(spec)
            for record in _cell_records(spec, cell_index, workers):
                if record.aborted:
                    logger.error(
                        "dropping aborted episode (cell %d, seed %d) from output",
                        cell_index,
                        record.seed,
                    )
                    continue
                row = _spec_row(spec, model, record)
                rows.append(row)
                if writer is not None:
                    writer.writerow(row)
            if handle is not None:
                handle.flush()
    finally:
        if handle is not None:
            handle.close()
    return rows


def load_rows(path: os.PathLike) -> List[dict]:
    """Read a sweep CSV back into typed row dictionaries."""
    out: List[dict] = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for raw in csv.DictReader(handle):
            row: dict = {}
            for key, value in raw.items():
                if key == "n_mem":
                    row[key] = None if value == "" else int(value)
                elif key in _INT_COLUMNS:
                    row[key] = int(value)
                elif key in _FLOAT_COLUMNS:
                    row[key] = float(value)
                else:
                    row[key] = value
            out.append(row)
    return out


def summarize(
    rows: Sequence[Mapping],
    group_keys: Sequence[str] = ("domain", "planner", "n_b", "T", "n_mem", "beta0"),
    value: str = "undiscounted_return",
) -> List[dict]:
    """Per-group episode count, mean, and standard error of the mean.

    Groups appear in first-occurrence order.  The standard error uses the
    ddof=1 sample standard deviation and is 0.0 for singleton groups.
    """
    order: List[tuple] = []
    buckets: Dict[tuple, List[float]] = {}
    for row in rows:
        key = tuple(row[k] for k in group_keys)
        if key not in buckets:
            buckets[key] = []
            order.append(key)
        buckets[key].append(float(row[value]))
    out: List[dict] = []
    for key in order:
        values = buckets[key]
        n = len(values)
        mean = sum(values) / n
        if n > 1:
            var = sum((v - mean) ** 2 for v in values) / (n - 1)
            se = math.sqrt(var / n)
        else:
            se = 0.0
        summary = dict(zip(group_keys, key))
        summary.update(episodes=n, mean=mean, se=se)
        out.append(summary)
    return out


# Grid axes of a sweep configuration, in cartesian-product order.
_GRID_KEYS = (
    "domain",
    "planner",
    "budget",
    "horizon",
    "memory_cap",
    "beta0",
    "c",
    "particles",
)
_SCALAR_KEYS = (
    "episodes",
    "max_steps",
    "seed",
    "wall_clock_limit",
    "timing",
    "discount",
    "domain_options",
)
_GRID_DEFAULTS = {
    "memory_cap": None,
    "beta0": 1000.0,
    "c": None,
    "particles": 10_000,
}


def specs_from_config(mapping: Mapping) -> List[ExperimentSpec]:
    """Expand a sweep configuration mapping into a grid of specs.

    Grid keys (``domain``, ``planner``, ``budget``, ``horizon``,
    ``memory_cap``, ``beta0``, ``c``, ``particles``) accept a scalar or a
    list and combine as a cartesian product in that key order.  Scalar-only
    keys: ``episodes``, ``max_steps``, ``seed``, ``wall_clock_limit``,
    ``timing``, ``discount``, ``domain_options``.  ``domain``, ``planner``,
    ``budget``, and ``horizon`` are required.
    """
    unknown = set(mapping) - set(_GRID_KEYS) - set(_SCALAR_KEYS)
    if unknown:
        raise ValueError(f"unknown sweep config keys: {sorted(unknown)}")
    for required in ("domain", "planner", "budget", "horizon"):
        if required not in mapping:
            raise ValueError(f"sweep config is missing {required!r}")

    def axis(key):
        value = mapping.get(key, _GRID_DEFAULTS.get(key))
        if isinstance(value, (list, tuple)):
            if len(value) == 0:
                raise ValueError(f"sweep axis {key!r} is empty")
            return list(value)
        return [value]

    episodes = int(mapping.get("episodes", 1))
    max_steps = mapping.get("max_steps")
    seed = int(mapping.get("seed", 0))
    wall_clock_limit = mapping.get("wall_clock_limit")
    timing = bool(mapping.get("timing", False))
    discount = mapping.get("discount")
    options = mapping.get("domain_options") or {}
    if not isinstance(options, Mapping):
        raise ValueError("domain_options must be a mapping")
    domain_options = tuple(sorted(options.items()))

    specs: List[ExperimentSpec] = []
    for domain, planner, budget, horizon, cap, beta0, c, particles in itertools.product(
        *(axis(key) for key in _GRID_KEYS)
    ):
        config = PlannerConfig(
            budget=int(budget),
            horizon=int(horizon),
            memory_cap=None if cap is None else int(cap),
            discount=None if discount is None else float(discount),
            prior=NormalGammaParams(beta=float(beta0)),
            exploration=None if c is None else float(c),
            particle_capacity=int(particles),
        )
        specs.append(
            ExperimentSpec(
                domain=str(domain),
                planner=str(planner),
                config=config,
                episode_count=episodes,
                max_episode_steps=None if max_steps is None else int(max_steps),
                base_seed=seed,
                wall_clock_limit=(
                    None if wall_clock_limit is None else float(wall_clock_limit)
                ),
                record_timing=timing,
                domain_options=domain_options,
            )
        )
    return specs
