"""Random-sampling estimator and its three standard-error figures.

Monte-Carlo oracles: unbiasedness against exact abundances, and the
empirical variance of the weighted tally against the closed-form
hypergeometric expression with the true per-class totals plugged in.
"""

import math

import numpy as np
import pytest

from bdlab.action import FOUR_D_WEIGHTS, abundances, bd_action, ActionCoefficients
from bdlab.causet import generate
from bdlab.errors import EmptyRelation, KTooLarge
from bdlab.sampling import (
    SampleResult,
    estimate_sampled,
    resample_counts,
    sample_pairs,
    variance_linear_combination,
)


def test_full_census_on_three_chain():
    res = sample_pairs(generate(3, "chain"), K=3, seed=0)
    assert res.counts == (2, 1, 0, 0)
    assert res.N == 3 and res.K == 3


def test_single_draw_tallies_exactly_one_pair():
    for seed in range(12):
        res = sample_pairs(generate(3, "chain"), K=1, seed=seed)
        assert sum(res.counts) == 1


def test_empty_relation_and_oversized_k():
    with pytest.raises(EmptyRelation):
        sample_pairs(generate(4, "antichain"), K=1)
    with pytest.raises(KTooLarge):
        sample_pairs(generate(3, "chain"), K=4)
    with pytest.raises(KTooLarge):
        sample_pairs(generate(3, "chain"), K=0)


def test_full_census_reduces_to_exact_action():
    c = generate(3, "chain")
    res = sample_pairs(c, K=c.related_pairs, seed=5)
    est = estimate_sampled(res)
    assert est.S_hat == pytest.approx(40 / math.sqrt(6), rel=1e-12)
    assert est.se_full == 0.0
    assert est.se_subadditive == 0.0
    assert est.se_simple_bound == 0.0


def test_full_census_matches_exact_action_on_random_instance():
    c = generate(24, "random_order", seed=9, p=0.3)
    res = sample_pairs(c, K=c.related_pairs, seed=1)
    exact = bd_action(abundances(c, 3), ActionCoefficients.four_dim_preset())
    assert estimate_sampled(res).S_hat == pytest.approx(exact, rel=1e-12)


def test_resample_counts_matches_sample_pairs_distribution():
    c = generate(16, "random_order", seed=4, p=0.3)
    K = max(1, c.related_pairs // 3)
    tallies = resample_counts(c, K, trials=200, seed=3)
    assert tallies.shape == (200, 4)
    assert np.all(tallies.sum(axis=1) <= K)
    loop = np.array([sample_pairs(c, K, seed=s).counts for s in range(200)])
    # same distribution family: compare means loosely (3 sigma)
    for k in range(4):
        se = math.sqrt(max(loop[:, k].var() / 200, 1e-9)) * 3 + 0.35
        assert abs(tallies[:, k].mean() - loop[:, k].mean()) < se + 0.35


def test_unbiasedness_monte_carlo():
    c = generate(64, "random_order", seed=7, p=0.08)
    exact = abundances(c, 3)
    N = c.related_pairs
    K = max(1, N // 2)
    trials = 10_000
    tallies = resample_counts(c, K, trials=trials, seed=11)
    scaled = tallies * (N / K)
    for k in range(4):
        mean = scaled[:, k].mean()
        sigma = scaled[:, k].std(ddof=1) / math.sqrt(trials)
        assert abs(mean - exact.counts[k]) <= 3 * sigma + 1e-9


def test_empirical_std_matches_mean_reported_full_se():
    c = generate(64, "random_order", seed=31, p=0.08)
    N = c.related_pairs
    K = max(2, N // 4)
    trials = 10_000
    tallies = resample_counts(c, K, trials=trials, seed=37)
    scale = 4 / math.sqrt(6)
    s_values = scale * (c.n + (N / K) * (tallies @ np.array(FOUR_D_WEIGHTS)))
    reported = []
    for row in tallies[:2000]:
        res = SampleResult(n=c.n, K=K, counts=tuple(int(x) for x in row), N=N)
        reported.append(estimate_sampled(res).se_full)
    empirical = float(np.std(s_values, ddof=1))
    assert abs(empirical - float(np.mean(reported))) / empirical < 0.15


def test_weighted_tally_variance_matches_closed_form():
    c = generate(32, "random_order", seed=19, p=0.12)
    exact = abundances(c, 3)
    N = c.related_pairs
    K = max(2, N // 4)
    trials = 30_000
    tallies = resample_counts(c, K, trials=trials, seed=23)
    combo = tallies @ np.array(FOUR_D_WEIGHTS)
    predicted = variance_linear_combination(N, K, exact.counts)
    assert np.var(combo, ddof=1) == pytest.approx(predicted, rel=0.10)


def test_simple_bound_dominates_subadditive_bound():
    c = generate(40, "random_order", seed=3, p=0.2)
    N = c.related_pairs
    for seed in range(25):
        res = sample_pairs(c, K=max(1, N // 3), seed=seed)
        est = estimate_sampled(res)
        assert est.se_simple_bound >= est.se_subadditive - 1e-12
        assert est.se_full >= 0.0


def test_standard_error_scales_with_length_ratio():
    c = generate(20, "random_order", seed=6, p=0.3)
    res = sample_pairs(c, K=max(1, c.related_pairs // 2), seed=2)
    base = estimate_sampled(res, length_ratio=1.0)
    doubled = estimate_sampled(res, length_ratio=2.0)
    assert doubled.se_simple_bound == pytest.approx(4 * base.se_simple_bound, rel=1e-12)
