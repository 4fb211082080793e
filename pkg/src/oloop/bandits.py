"""Multi-armed bandit action selection over finite arm sets.

Two selection rules are provided, both supporting legal-arm masking:

- Generalized Thompson Sampling: each arm's return distribution is modeled
  as a Normal with unknown mean and precision, carrying a conjugate
  Normal-Gamma prior.  Selection samples a mean estimate per legal arm from
  the posterior and picks the argmax.
- UCB1: mean + c * sqrt(log(N_total) / N_a), with unvisited arms forced
  first (+inf score).

Arms are summarized by running sufficient statistics (count, mean, biased
variance); raw observations are never stored, so a bandit's memory footprint
is constant in the number of updates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

__all__ = [
    "ArmStatistics",
    "NormalGammaParams",
    "UcbConfig",
    "ArmArray",
    "PriorSampleStream",
    "update_arm",
    "posterior",
    "sample_normal_gamma",
    "thompson_select",
    "ucb1_select",
]

_TINY = float(np.finfo(np.float64).tiny)


@dataclass(frozen=True, slots=True)
class ArmStatistics:
    """Running sufficient statistics of one arm's observed values.

    ``variance`` is the biased sample variance (division by ``count``).
    An arm with no observations has mean 0 and variance 0 by convention.
    """

    count: int = 0
    mean: float = 0.0
    variance: float = 0.0

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError(f"count must be non-negative, got {self.count}")
        if self.count == 0 and (self.mean != 0.0 or self.variance != 0.0):
            raise ValueError("an unobserved arm must have mean 0 and variance 0")
        if self.variance < 0.0:
            raise ValueError(f"variance must be non-negative, got {self.variance}")


@dataclass(frozen=True, slots=True)
class NormalGammaParams:
    """Parameters (mu, lam, alpha, beta) of a Normal-Gamma distribution.

    The precision follows Gamma(alpha, beta) in the rate parameterization,
    so E[tau] = alpha / beta; the mean given tau follows
    Normal(mu, 1 / (lam * tau)).
    """

    mu: float = 0.0
    lam: float = 0.01
    alpha: float = 1.0
    beta: float = 1000.0

    def __post_init__(self) -> None:
        if not all(map(math.isfinite, (self.mu, self.lam, self.alpha, self.beta))):
            raise ValueError("Normal-Gamma parameters must be finite")
        if self.lam <= 0.0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.alpha < 1.0:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")


@dataclass(frozen=True, slots=True)
class UcbConfig:
    """UCB1 configuration; ``exploration`` is the bonus coefficient c."""

    exploration: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.exploration) or self.exploration < 0.0:
            raise ValueError(f"exploration must be finite and >= 0, got {self.exploration}")


def update_arm(stats: ArmStatistics, value: float) -> ArmStatistics:
    """Fold one observed value into an arm's running statistics.

    Uses the single-pass (Welford) recurrence: the returned mean and biased
    variance equal a batch recomputation over all values observed so far.
    """
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"observed value must be finite, got {value}")
    n = stats.count + 1
    delta = value - stats.mean
    mean = stats.mean + delta / n
    # m2 = count * biased variance = sum of squared deviations
    m2 = stats.count * stats.variance + delta * (value - mean)
    return ArmStatistics(count=n, mean=mean, variance=max(m2 / n, 0.0))


def _posterior_arrays(
    prior: NormalGammaParams,
    counts: np.ndarray,
    means: np.ndarray,
    m2: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Conjugate Normal-Gamma posterior, vectorized over arms.

    ``m2`` is count * biased variance (the summed squared deviations).
    """
    lam1 = prior.lam + counts
    mu1 = (prior.lam * prior.mu + counts * means) / lam1
    alpha1 = prior.alpha + 0.5 * counts
    dev = means - prior.mu
    beta1 = prior.beta + 0.5 * (m2 + prior.lam * counts * dev * dev / lam1)
    return mu1, lam1, alpha1, beta1


def _sample_posterior_means(
    prior: NormalGammaParams,
    counts: np.ndarray,
    means: np.ndarray,
    m2: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw one posterior mean sample per arm."""
    mu1, lam1, alpha1, beta1 = _posterior_arrays(prior, counts, means, m2)
    tau = rng.standard_gamma(alpha1) / np.maximum(beta1, _TINY)
    np.maximum(tau, _TINY, out=tau)
    return mu1 + rng.standard_normal(tau.shape) / np.sqrt(lam1 * tau)


def posterior(prior: NormalGammaParams, stats: ArmStatistics) -> NormalGammaParams:
    """Closed-form conjugate posterior given one arm's statistics.

    With no observations the prior is returned unchanged.
    """
    if stats.count == 0:
        return prior
    counts = np.array([float(stats.count)])
    means = np.array([stats.mean])
    m2 = np.array([stats.count * stats.variance])
    mu1, lam1, alpha1, beta1 = _posterior_arrays(prior, counts, means, m2)
    return NormalGammaParams(float(mu1[0]), float(lam1[0]), float(alpha1[0]), float(beta1[0]))


def sample_normal_gamma(
    params: NormalGammaParams, rng: np.random.Generator
) -> Tuple[float, float]:
    """Draw (mean, precision) from a Normal-Gamma distribution.

    The precision is drawn from Gamma(alpha, beta) (rate parameterization),
    then the mean from Normal(mu, 1 / (lam * precision)).  Deterministic
    given the generator state.
    """
    tau = float(rng.standard_gamma(params.alpha)) / max(params.beta, _TINY)
    tau = max(tau, _TINY)
    mu = params.mu + float(rng.standard_normal()) / math.sqrt(params.lam * tau)
    return mu, tau


def _legal_positions(
    arms: Sequence[Tuple[int, ArmStatistics]], legal: Iterable[int] | None
) -> list[int]:
    if legal is None:
        positions = list(range(len(arms)))
    else:
        legal_set = set(legal)
        positions = [i for i, (arm_id, _) in enumerate(arms) if arm_id in legal_set]
    if not positions:
        raise ValueError("no legal arm to select from (domain bug?)")
    return positions


def thompson_select(
    arms: Sequence[Tuple[int, ArmStatistics]],
    prior: NormalGammaParams,
    legal: Iterable[int] | None = None,
    rng: np.random.Generator | None = None,
) -> int:
    """Pick a legal arm by posterior sampling of its mean return.

    ``arms`` is a sequence of (arm id, statistics) pairs; ``legal`` restricts
    the choice to the given arm ids (None = all legal).  Statistics of
    illegal arms are never read.  Exact ties go to the earliest arm.
    """
    if rng is None:
        rng = np.random.default_rng()
    positions = _legal_positions(arms, legal)
    counts = np.array([float(arms[i][1].count) for i in positions])
    means = np.array([arms[i][1].mean for i in positions])
    m2 = np.array([arms[i][1].count * arms[i][1].variance for i in positions])
    samples = _sample_posterior_means(prior, counts, means, m2, rng)
    return arms[positions[int(np.argmax(samples))]][0]


def ucb1_select(
    arms: Sequence[Tuple[int, ArmStatistics]],
    config: UcbConfig,
    total_count: int,
    legal: Iterable[int] | None = None,
    rng: np.random.Generator | None = None,
) -> int:
    """Pick the legal arm with the highest UCB1 score.

    Unvisited arms score +inf and are therefore tried first.  Ties are
    broken uniformly at random when ``rng`` is given, else by the earliest
    arm.
    """
    positions = _legal_positions(arms, legal)
    unvisited = [i for i in positions if arms[i][1].count == 0]
    if unvisited:
        choice = unvisited[0] if rng is None or len(unvisited) == 1 else unvisited[int(rng.integers(len(unvisited)))]
        return arms[choice][0]
    log_total = math.log(total_count) if total_count > 0 else 0.0
    scores = np.array(
        [arms[i][1].mean + config.exploration * math.sqrt(log_total / arms[i][1].count) for i in positions]
    )
    ties = np.flatnonzero(scores == scores.max())
    pick = ties[0] if rng is None or ties.size == 1 else ties[int(rng.integers(ties.size))]
    return arms[positions[int(pick)]][0]


class PriorSampleStream:
    """Pre-generated iid draws of the posterior mean under an untouched prior.

    Selection over many unvisited arms only needs iid samples from the
    prior's marginal over the mean; generating them in blocks amortizes the
    per-call generator overhead.  Consuming the stream front to back keeps
    the draws exactly iid.
    """

    __slots__ = ("_prior", "_rng", "_block", "_buf", "_pos")

    def __init__(
        self, prior: NormalGammaParams, rng: np.random.Generator, block: int = 8192
    ) -> None:
        self._prior = prior
        self._rng = rng
        self._block = block
        self._buf = np.empty(0)
        self._pos = 0

    def take(self, k: int) -> np.ndarray:
        if self._pos + k > self._buf.size:
            size = max(self._block, k)
            p = self._prior
            tau = self._rng.standard_gamma(p.alpha, size=size) / max(p.beta, _TINY)
            np.maximum(tau, _TINY, out=tau)
            self._buf = p.mu + self._rng.standard_normal(size) / np.sqrt(p.lam * tau)
            self._pos = 0
        out = self._buf[self._pos : self._pos + k]
        self._pos += k
        return out


class ArmArray:
    """Array-backed bandit over a fixed action set, used by the planners.

    Holds the same sufficient statistics as :class:`ArmStatistics`, one slot
    per action id.  Binding a prior at construction keeps the conjugate
    posterior parameters of every arm cached and incrementally refreshed,
    so a Thompson selection costs two generator calls instead of a full
    posterior recomputation.
    """

    __slots__ = ("counts", "means", "m2", "prior", "mu1", "lam1", "alpha1", "beta1")

    def __init__(self, n_actions: int, prior: NormalGammaParams | None = None) -> None:
        self.counts = np.zeros(n_actions, dtype=np.float64)
        self.means = np.zeros(n_actions, dtype=np.float64)
        self.m2 = np.zeros(n_actions, dtype=np.float64)
        self.prior = prior
        if prior is not None:
            self.mu1 = np.full(n_actions, prior.mu)
            self.lam1 = np.full(n_actions, prior.lam)
            self.alpha1 = np.full(n_actions, prior.alpha)
            self.beta1 = np.full(n_actions, prior.beta)

    def __len__(self) -> int:
        return self.counts.size

    def update(self, action: int, value: float) -> None:
        n = self.counts[action] + 1.0
        delta = value - self.means[action]
        mean = self.means[action] + delta / n
        self.counts[action] = n
        self.means[action] = mean
        self.m2[action] += delta * (value - mean)
        p = self.prior
        if p is not None:
            lam1 = p.lam + n
            dev = mean - p.mu
            self.lam1[action] = lam1
            self.mu1[action] = (p.lam * p.mu + n * mean) / lam1
            self.alpha1[action] = p.alpha + 0.5 * n
            self.beta1[action] = p.beta + 0.5 * (
                self.m2[action] + p.lam * n * dev * dev / lam1
            )

    def variances(self) -> np.ndarray:
        return self.m2 / np.maximum(self.counts, 1.0)

    def stats_of(self, action: int) -> ArmStatistics:
        n = int(self.counts[action])
        if n == 0:
            return ArmStatistics()
        return ArmStatistics(n, float(self.means[action]), max(float(self.m2[action]) / n, 0.0))

    def thompson_pick(
        self,
        legal: np.ndarray,
        prior: NormalGammaParams,
        rng: np.random.Generator,
        stream: PriorSampleStream | None = None,
    ) -> int:
        idx = np.asarray(legal, dtype=np.intp)
        if self.prior is not prior:
            samples = _sample_posterior_means(
                prior, self.counts[idx], self.means[idx], self.m2[idx], rng
            )
            return int(idx[np.argmax(samples)])
        if stream is not None:
            unvisited = self.counts[idx] == 0.0
            if unvisited.all():
                return int(idx[np.argmax(stream.take(idx.size))])
            if unvisited.any():
                samples = np.empty(idx.size)
                samples[unvisited] = stream.take(int(unvisited.sum()))
                vis = idx[~unvisited]
                tau = rng.standard_gamma(self.alpha1[vis]) / self.beta1[vis]
                np.maximum(tau, _TINY, out=tau)
                samples[~unvisited] = self.mu1[vis] + rng.standard_normal(
                    vis.size
                ) / np.sqrt(self.lam1[vis] * tau)
                return int(idx[np.argmax(samples)])
        tau = rng.standard_gamma(self.alpha1[idx]) / np.maximum(self.beta1[idx], _TINY)
        np.maximum(tau, _TINY, out=tau)
        samples = self.mu1[idx] + rng.standard_normal(idx.size) / np.sqrt(
            self.lam1[idx] * tau
        )
        return int(idx[np.argmax(samples)])

    def ucb_pick(
        self, legal: np.ndarray, exploration: float, total: int, rng: np.random.Generator
    ) -> int:
        idx = np.asarray(legal, dtype=np.intp)
        n = self.counts[idx]
        zeros = np.flatnonzero(n == 0.0)
        if zeros.size:
            pick = zeros[0] if zeros.size == 1 else zeros[int(rng.integers(zeros.size))]
            return int(idx[pick])
        scores = self.means[idx] + exploration * np.sqrt(math.log(total) / n)
        ties = np.flatnonzero(scores == scores.max())
        pick = ties[0] if ties.size == 1 else ties[int(rng.integers(ties.size))]
        return int(idx[pick])
