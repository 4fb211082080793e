"""Anytime online planning for large POMDPs.

Planners are built from per-depth multi-armed bandits: a memory-bounded
stack of Thompson Sampling bandits, open-loop trees over action sequences
(Thompson Sampling or UCB1 at the nodes), and a closed-loop history tree
(POMCP).  Benchmark domains, belief tracking, and an experiment harness
with a CSV-emitting CLI round out the package.
"""

__version__ = "0.1.0"

from .bandits import NormalGammaParams, UcbConfig
from .harness import (
    CSV_COLUMNS,
    EpisodeRecord,
    ExperimentSpec,
    episode_seed,
    load_rows,
    run_episode,
    run_sweep,
    specs_from_config,
    summarize,
)
from .planners import PLANNERS, PlannerConfig, PlanResult
from .pomdp import (
    BeliefParticles,
    GenerativeModel,
    History,
    IllegalActionError,
    ParticleDeprivationError,
    particle_update,
)

__all__ = [
    "CSV_COLUMNS",
    "BeliefParticles",
    "EpisodeRecord",
    "ExperimentSpec",
    "GenerativeModel",
    "History",
    "IllegalActionError",
    "NormalGammaParams",
    "PLANNERS",
    "ParticleDeprivationError",
    "PlanResult",
    "PlannerConfig",
    "UcbConfig",
    "episode_seed",
    "load_rows",
    "particle_update",
    "run_episode",
    "run_sweep",
    "specs_from_config",
    "summarize",
]
