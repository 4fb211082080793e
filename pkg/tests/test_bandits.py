"""Bandit statistics, Normal-Gamma posterior, and selection-rule tests."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oloop.bandits import (
    ArmArray,
    ArmStatistics,
    NormalGammaParams,
    PriorSampleStream,
    UcbConfig,
    posterior,
    sample_normal_gamma,
    thompson_select,
    ucb1_select,
    update_arm,
)


def batch_stats(values):
    """Oracle: mean and biased variance recomputed over the full list."""
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.var())


def posterior_oracle(prior, count, mean, variance):
    """Oracle: direct evaluation of the conjugate update formulas."""
    lam1 = prior.lam + count
    mu1 = (prior.lam * prior.mu + count * mean) / lam1
    alpha1 = prior.alpha + count / 2.0
    beta1 = prior.beta + 0.5 * (
        count * variance + prior.lam * count * (mean - prior.mu) ** 2 / lam1
    )
    return mu1, lam1, alpha1, beta1


def fold(values):
    stats = ArmStatistics()
    for v in values:
        stats = update_arm(stats, v)
    return stats


finite_values = st.lists(
    st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False),
    min_size=1,
    max_size=200,
)


class TestArmStatistics:
    def test_first_observation(self):
        assert update_arm(ArmStatistics(), 5.0) == ArmStatistics(1, 5.0, 0.0)

    def test_two_observations(self):
        stats = fold([5.0, 3.0])
        assert stats == ArmStatistics(2, 4.0, 1.0)

    def test_matches_batch_recompute(self):
        rng = np.random.default_rng(7)
        values = rng.normal(-2.0, 5.0, size=1000)
        stats = fold(values)
        mean, var = batch_stats(values)
        assert stats.count == 1000
        assert stats.mean == pytest.approx(mean, rel=1e-9)
        assert stats.variance == pytest.approx(var, rel=1e-9)

    def test_rejects_nonfinite(self):
        for bad in (float("nan"), float("inf"), -float("inf")):
            with pytest.raises(ValueError):
                update_arm(ArmStatistics(), bad)

    def test_invariant_validation(self):
        with pytest.raises(ValueError):
            ArmStatistics(count=-1)
        with pytest.raises(ValueError):
            ArmStatistics(count=0, mean=1.0)
        with pytest.raises(ValueError):
            ArmStatistics(count=2, mean=0.0, variance=-0.5)

    @given(finite_values)
    @settings(max_examples=200, deadline=None)
    def test_running_equals_batch(self, values):
        stats = fold(values)
        mean, var = batch_stats(values)
        assert stats.count == len(values)
        assert math.isclose(stats.mean, mean, rel_tol=1e-9, abs_tol=1e-9)
        assert math.isclose(stats.variance, var, rel_tol=1e-9, abs_tol=1e-9)
        assert stats.variance >= 0.0


class TestPosterior:
    PRIOR = NormalGammaParams(mu=0.0, lam=0.01, alpha=1.0, beta=1000.0)

    def test_empty_stats_is_identity(self):
        assert posterior(self.PRIOR, ArmStatistics()) == self.PRIOR

    def test_single_observation(self):
        got = posterior(self.PRIOR, ArmStatistics(1, 1.0, 0.0))
        mu1, lam1, alpha1, beta1 = posterior_oracle(self.PRIOR, 1, 1.0, 0.0)
        assert got.mu == pytest.approx(mu1, rel=1e-12)
        assert got.lam == pytest.approx(lam1, rel=1e-12)
        assert got.alpha == pytest.approx(alpha1, rel=1e-12)
        assert got.beta == pytest.approx(beta1, rel=1e-12)
        # spot values of the oracle itself
        assert mu1 == pytest.approx(0.990099, abs=5e-7)
        assert beta1 == pytest.approx(1000.00495, abs=5e-5)

    def test_two_observations(self):
        got = posterior(self.PRIOR, ArmStatistics(2, 4.0, 1.0))
        mu1, lam1, alpha1, beta1 = posterior_oracle(self.PRIOR, 2, 4.0, 1.0)
        assert got.mu == pytest.approx(mu1, rel=1e-12)
        assert got.lam == pytest.approx(lam1, rel=1e-12)
        assert got.alpha == pytest.approx(alpha1, rel=1e-12)
        assert got.beta == pytest.approx(beta1, rel=1e-12)

    @given(finite_values)
    @settings(max_examples=100, deadline=None)
    def test_monotonic_in_count(self, values):
        stats = fold(values)
        post = posterior(self.PRIOR, stats)
        assert post.lam > self.PRIOR.lam
        assert post.alpha > self.PRIOR.alpha
        assert post.beta >= self.PRIOR.beta

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            NormalGammaParams(lam=0.0)
        with pytest.raises(ValueError):
            NormalGammaParams(alpha=0.5)
        with pytest.raises(ValueError):
            NormalGammaParams(beta=-1.0)
        with pytest.raises(ValueError):
            NormalGammaParams(mu=float("inf"))


class TestSampleNormalGamma:
    def test_deterministic_given_seed(self):
        params = NormalGammaParams(0.0, 1.0, 3.0, 2.0)
        a = [sample_normal_gamma(params, np.random.default_rng(42)) for _ in range(1)]
        first = [sample_normal_gamma(params, rng) for rng in [np.random.default_rng(42)]][0]
        rng1, rng2 = np.random.default_rng(9), np.random.default_rng(9)
        s1 = [sample_normal_gamma(params, rng1) for _ in range(50)]
        s2 = [sample_normal_gamma(params, rng2) for _ in range(50)]
        assert s1 == s2
        assert a[0] == first

    def test_calibration(self):
        # E[tau] = alpha/beta = 1.5; E[mu] = 0.  Checked within 3 empirical SE.
        params = NormalGammaParams(0.0, 1.0, 3.0, 2.0)
        rng = np.random.default_rng(2024)
        n = 100_000
        draws = np.array([sample_normal_gamma(params, rng) for _ in range(n)])
        mus, taus = draws[:, 0], draws[:, 1]
        assert np.all(taus > 0.0)
        tau_se = taus.std(ddof=1) / math.sqrt(n)
        mu_se = mus.std(ddof=1) / math.sqrt(n)
        assert abs(taus.mean() - 1.5) <= 3.0 * tau_se
        assert abs(mus.mean() - 0.0) <= 3.0 * mu_se


class TestThompsonSelect:
    PRIOR = NormalGammaParams(0.0, 0.01, 1.0, 1.0)

    def test_single_legal_arm(self):
        arms = [(0, ArmStatistics(5, 1.0, 0.5)), (1, ArmStatistics())]
        rng = np.random.default_rng(0)
        assert thompson_select(arms, self.PRIOR, legal=[1], rng=rng) == 1

    def test_concentrated_posteriors(self):
        arms = [
            (0, ArmStatistics(10_000, 100.0, 0.01)),
            (1, ArmStatistics(10_000, 0.0, 0.01)),
        ]
        rng = np.random.default_rng(11)
        hits = sum(thompson_select(arms, self.PRIOR, rng=rng) == 0 for _ in range(1000))
        assert hits >= 990

    def test_empty_legal_raises(self):
        arms = [(0, ArmStatistics()), (1, ArmStatistics())]
        with pytest.raises(ValueError):
            thompson_select(arms, self.PRIOR, legal=[], rng=np.random.default_rng(0))

    def test_bernoulli_regret(self):
        # 2-armed Bernoulli, p = (0.8, 0.2).  Sublinear regret shows up as
        # suboptimal pulls thinning out over time.
        probs = (0.8, 0.2)
        rng = np.random.default_rng(3)
        stats = [ArmStatistics(), ArmStatistics()]
        choices = np.empty(10_000, dtype=np.int64)
        for t in range(10_000):
            arms = list(enumerate(stats))
            a = thompson_select(arms, self.PRIOR, rng=rng)
            reward = float(rng.random() < probs[a])
            stats[a] = update_arm(stats[a], reward)
            choices[t] = a
        last_tenth = choices[-1000:]
        assert np.mean(last_tenth == 0) >= 0.95
        first_half_bad = int(np.sum(choices[:5000] == 1))
        second_half_bad = int(np.sum(choices[5000:] == 1))
        assert second_half_bad < first_half_bad

    @given(
        st.lists(finite_values, min_size=1, max_size=6),
        st.data(),
    )
    @settings(max_examples=60, deadline=None)
    def test_never_returns_illegal(self, per_arm_values, data):
        arms = [(i, fold(vals)) for i, vals in enumerate(per_arm_values)]
        legal = data.draw(
            st.lists(
                st.sampled_from(range(len(arms))), min_size=1, unique=True
            )
        )
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        assert thompson_select(arms, self.PRIOR, legal=legal, rng=rng) in legal

    def test_exploration_collapses_with_evidence(self):
        # An unvisited arm's sampled means spread far wider than a
        # well-observed arm's.
        prior = NormalGammaParams(0.0, 0.01, 1.0, 1000.0)
        observed = fold([5.0] * 1000)
        post = posterior(prior, observed)
        rng = np.random.default_rng(17)
        fresh = np.array([sample_normal_gamma(prior, rng)[0] for _ in range(2000)])
        seasoned = np.array([sample_normal_gamma(post, rng)[0] for _ in range(2000)])
        assert fresh.std() >= 10.0 * seasoned.std()


class TestUcb1Select:
    def test_formula_example(self):
        arms = [(0, ArmStatistics(1, 1.0, 0.0)), (1, ArmStatistics(1, 0.0, 0.0))]
        config = UcbConfig(exploration=1.0)
        assert ucb1_select(arms, config, total_count=2) == 0
        bonus = math.sqrt(math.log(2.0))
        assert 1.0 + bonus == pytest.approx(1.8326, abs=5e-5)
        assert 0.0 + bonus == pytest.approx(0.8326, abs=5e-5)

    def test_unvisited_arm_first(self):
        arms = [(0, ArmStatistics(50, 10.0, 1.0)), (1, ArmStatistics())]
        assert ucb1_select(arms, UcbConfig(1.0), total_count=50) == 1

    def test_single_legal_arm(self):
        arms = [(0, ArmStatistics(3, 9.0, 0.0)), (1, ArmStatistics(3, 1.0, 0.0))]
        assert ucb1_select(arms, UcbConfig(1.0), total_count=6, legal=[1]) == 1

    def test_ties_uniform_random(self):
        arms = [(0, ArmStatistics(2, 1.0, 0.0)), (1, ArmStatistics(2, 1.0, 0.0))]
        rng = np.random.default_rng(5)
        picks = np.array(
            [ucb1_select(arms, UcbConfig(1.0), 4, rng=rng) for _ in range(500)]
        )
        assert 180 <= int(np.sum(picks == 0)) <= 320

    def test_empty_legal_raises(self):
        with pytest.raises(ValueError):
            ucb1_select([(0, ArmStatistics())], UcbConfig(1.0), 0, legal=[])

    @given(
        st.lists(finite_values, min_size=1, max_size=6),
        st.data(),
    )
    @settings(max_examples=60, deadline=None)
    def test_never_returns_illegal(self, per_arm_values, data):
        arms = [(i, fold(vals)) for i, vals in enumerate(per_arm_values)]
        legal = data.draw(
            st.lists(st.sampled_from(range(len(arms))), min_size=1, unique=True)
        )
        total = sum(s.count for _, s in arms)
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        assert ucb1_select(arms, UcbConfig(0.7), total, legal=legal, rng=rng) in legal

    def test_config_validation(self):
        with pytest.raises(ValueError):
            UcbConfig(exploration=-1.0)
        with pytest.raises(ValueError):
            UcbConfig(exploration=float("nan"))


class TestArmArray:
    def test_matches_scalar_updates(self):
        rng = np.random.default_rng(23)
        arr = ArmArray(4)
        scalar = [ArmStatistics() for _ in range(4)]
        for _ in range(300):
            a = int(rng.integers(4))
            v = float(rng.normal())
            arr.update(a, v)
            scalar[a] = update_arm(scalar[a], v)
        for a in range(4):
            assert arr.stats_of(a).count == scalar[a].count
            assert arr.stats_of(a).mean == pytest.approx(scalar[a].mean, abs=1e-12)
            assert arr.stats_of(a).variance == pytest.approx(scalar[a].variance, abs=1e-12)

    def test_thompson_pick_matches_pair_api(self):
        prior = NormalGammaParams(0.0, 0.01, 1.0, 1.0)
        rng = np.random.default_rng(31)
        arr = ArmArray(5)
        for _ in range(200):
            arr.update(int(rng.integers(5)), float(rng.normal()))
        arms = [(a, arr.stats_of(a)) for a in range(5)]
        legal = np.array([0, 2, 3])
        for seed in range(20):
            pick_arr = arr.thompson_pick(legal, prior, np.random.default_rng(seed))
            pick_pair = thompson_select(
                arms, prior, legal=legal.tolist(), rng=np.random.default_rng(seed)
            )
            assert pick_arr == pick_pair

    def test_bound_prior_cached_path_matches_pair_api(self):
        # interleave updates with picks so the incrementally cached posterior
        # parameters are exercised at every count
        prior = NormalGammaParams(0.4, 0.5, 2.0, 3.0)
        arr = ArmArray(4, prior)
        arms = {a: ArmStatistics() for a in range(4)}
        data_rng = np.random.default_rng(77)
        legal = np.arange(4)
        for trial in range(200):
            seed = 1000 + trial
            twin_a, twin_b = np.random.default_rng(seed), np.random.default_rng(seed)
            pick_arr = arr.thompson_pick(legal, prior, twin_a)
            pick_pair = thompson_select(list(arms.items()), prior, rng=twin_b)
            assert pick_arr == pick_pair
            assert twin_a.bit_generator.state == twin_b.bit_generator.state
            action = int(data_rng.integers(4))
            value = float(data_rng.normal())
            arr.update(action, value)
            arms[action] = update_arm(arms[action], value)

    def test_stream_path_fresh_bandit_is_uniform(self):
        # a fresh bandit sees iid prior draws per arm, so argmax is uniform
        prior = NormalGammaParams(0.0, 0.01, 1.0, 100.0)
        rng = np.random.default_rng(41)
        stream = PriorSampleStream(prior, rng)
        arr = ArmArray(4, prior)
        legal = np.arange(4)
        picks = np.zeros(4)
        for _ in range(2000):
            picks[arr.thompson_pick(legal, prior, rng, stream)] += 1
        assert picks.min() > 400 and picks.max() < 600

    def test_stream_path_mixed_visited_concentrates(self):
        # one clearly superior seasoned arm must dominate prior-fresh arms
        prior = NormalGammaParams(0.0, 0.01, 1.0, 1.0)
        rng = np.random.default_rng(43)
        stream = PriorSampleStream(prior, rng)
        arr = ArmArray(3, prior)
        for _ in range(500):
            arr.update(1, 50.0 + float(rng.normal()))
        legal = np.arange(3)
        picks = sum(arr.thompson_pick(legal, prior, rng, stream) == 1 for _ in range(500))
        assert picks >= 480

    def test_ucb_pick_matches_pair_api(self):
        rng = np.random.default_rng(37)
        arr = ArmArray(5)
        for _ in range(100):
            arr.update(int(rng.integers(5)), float(rng.normal()))
        arms = [(a, arr.stats_of(a)) for a in range(5)]
        legal = np.array([1, 2, 4])
        total = int(arr.counts.sum())
        for seed in range(20):
            pick_arr = arr.ucb_pick(legal, 0.7, total, np.random.default_rng(seed))
            pick_pair = ucb1_select(
                arms,
                UcbConfig(0.7),
                total,
                legal=legal.tolist(),
                rng=np.random.default_rng(seed),
            )
            assert pick_arr == pick_pair
