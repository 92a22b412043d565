"""Grover sampling model, one- and two-stage counting, and the estimator."""

import math

import numpy as np
import pytest

from bdlab.action import ActionCoefficients
from bdlab.causet import generate
from bdlab.counting import (
    CountingOracle,
    CountingParams,
    GroverModel,
    approx_count,
    approx_count_sqrt,
    circuit_oracle,
    derived_stream,
    estimate_bd_action,
    grover_sample,
    predicate_oracle,
    protocol_width,
)
from bdlab.errors import InvalidParameter, ZeroMarked

FOUR_D = ActionCoefficients.four_dim_preset


# -- grover model -------------------------------------------------------------------

def test_all_marked_returns_one_without_queries():
    o = CountingOracle.synthetic(8, 8)
    rng = derived_stream(0)
    assert grover_sample(o, 0, rng) == 1
    assert o.queries == 0


def test_none_marked_never_returns_one():
    o = CountingOracle.synthetic(8, 0)
    rng = derived_stream(1)
    assert all(grover_sample(o, j, rng) == 0 for j in range(5))


def test_single_iteration_textbook_grover():
    # N=4, K=1: theta = pi/6, one iteration amplifies to certainty
    o = CountingOracle.synthetic(4, 1)
    rng = derived_stream(2)
    assert GroverModel(math.asin(0.5)).success_probability(1) == pytest.approx(1.0)
    assert all(grover_sample(o, 1, rng) == 1 for _ in range(20))
    assert o.queries == 20


def test_query_counter_counts_iterations():
    o = CountingOracle.synthetic(16, 4)
    rng = derived_stream(3)
    grover_sample(o, 7, rng)
    grover_sample(o, 0, rng)
    grover_sample(o, 2, rng)
    assert o.queries == 9


def test_sample_frequency_matches_model():
    rng = derived_stream(4)
    for n_space, k, j in ((16, 4, 0), (16, 4, 2), (64, 5, 1), (9, 2, 3)):
        o = CountingOracle.synthetic(n_space, k)
        p = o.model.success_probability(j)
        draws = 100_000
        hits = sum(grover_sample(o, j, rng) for _ in range(draws))
        se = math.sqrt(max(p * (1 - p), 1e-9) / draws)
        assert abs(hits / draws - p) <= 3 * se + 1e-3


# -- single-stage counting -------------------------------------------------------------

def test_count_all_marked_detected_immediately():
    for trial in range(50):
        o = CountingOracle.synthetic(16, 16)
        assert approx_count(o, 0.5, 0.1, derived_stream(5, trial)) == 16


def test_count_zero_marked_raises():
    o = CountingOracle.synthetic(64, 0)
    with pytest.raises(ZeroMarked):
        approx_count(o, 0.5, 0.1, derived_stream(6))
    # the pre-scan budget stays geometric: well under N samples of work
    assert o.queries < 64 * 300


def test_count_relative_error_small_case():
    hits = 0
    trials = 400
    for t in range(trials):
        o = CountingOracle.synthetic(16, 4)
        k_hat = approx_count(o, 0.5, 0.1, derived_stream(7, t))
        hits += 2 < k_hat < 6
    assert hits / trials >= 0.90


def test_count_relative_error_mid_case():
    fails = 0
    trials = 300
    queries = []
    for t in range(trials):
        o = CountingOracle.synthetic(1024, 13)
        k_hat = approx_count(o, 0.2, 0.05, derived_stream(8, t))
        fails += not abs(k_hat - 13) < 0.2 * 13
        queries.append(o.queries)
    assert fails / trials <= 0.05
    bound = (1 / 0.2) * math.sqrt(1024 / 13) * math.log(1 / 0.05)
    assert np.mean(queries) <= 2000 * bound  # implementation constant, reported


def test_count_parameter_validation_before_queries():
    o = CountingOracle.synthetic(16, 4)
    for eps, delta in ((0.0, 0.1), (1.0, 0.1), (0.5, 0.0), (0.5, 1.0)):
        with pytest.raises(InvalidParameter):
            approx_count(o, eps, delta, derived_stream(9))
    assert o.queries == 0


# -- two-stage counting ------------------------------------------------------------------

def test_two_stage_error_law_small_case():
    hits = 0
    trials = 400
    for t in range(trials):
        o = CountingOracle.synthetic(16, 4)
        k_hat = approx_count_sqrt(o, 0.9, 0.1, derived_stream(10, t))
        hits += k_hat in (3, 4, 5)
    assert hits / trials >= 0.90


def test_two_stage_pins_single_marked_item():
    for n_space in (16, 256, 2048):
        hits = 0
        trials = 120
        for t in range(trials):
            o = CountingOracle.synthetic(n_space, 1)
            hits += approx_count_sqrt(o, 0.5, 0.1, derived_stream(11, n_space, t)) == 1
        assert hits / trials >= 0.90


def test_two_stage_rejects_epsilon_at_or_above_one():
    o = CountingOracle.synthetic(16, 4)
    with pytest.raises(InvalidParameter):
        approx_count_sqrt(o, 1.0, 0.1, derived_stream(12))
    assert o.queries == 0


def test_counting_params_derived_delta():
    params = CountingParams(0.5, 0.19)
    assert params.delta == pytest.approx(1 - math.sqrt(0.81))
    with pytest.raises(InvalidParameter):
        CountingParams(0.5, 0.0)


def test_two_stage_zero_marked_propagates():
    o = CountingOracle.synthetic(32, 0)
    with pytest.raises(ZeroMarked):
        approx_count_sqrt(o, 0.5, 0.1, derived_stream(13))


# -- oracles over causal sets -----------------------------------------------------------

def test_predicate_oracle_counts_match_truth():
    c = generate(8, "random_order", seed=3, p=0.3)
    from bdlab.action import abundances
    exact = abundances(c, 3)
    for k in range(4):
        assert predicate_oracle(c, k).marked_count == exact.counts[k]


def test_circuit_and_predicate_oracles_agree_pointwise():
    c = generate(6, "random_order", seed=9, p=0.4)
    for k in range(3):
        a = predicate_oracle(c, k)
        b = circuit_oracle(c, k)
        assert a.marked_count == b.marked_count
        for h in range(36):
            assert a.predicate(h) == b.predicate(h)


# -- end-to-end estimator -----------------------------------------------------------------

def test_antichain_estimate_is_exact_with_flags():
    est = estimate_bd_action(generate(5, "antichain"), FOUR_D(), 0.5, 0.05, seed=1)
    assert est.s_hat == pytest.approx(20 / math.sqrt(6), rel=1e-12)
    assert all(e.zero_flag and e.n_hat == 0 for e in est.per_k)


def test_three_chain_estimate_within_triangle_bound():
    bound = (4 / math.sqrt(6)) * (math.sqrt(2) + 9) * 0.5
    hits = 0
    trials = 200
    for t in range(trials):
        est = estimate_bd_action(generate(3, "chain"), FOUR_D(), 0.5, 0.05, seed=t)
        hits += abs(est.s_hat - 40 / math.sqrt(6)) < bound
    assert hits / trials >= (1 - 0.05) ** 4 - 3 * math.sqrt(0.15 * 0.85 / trials)


def test_width_report():
    assert protocol_width(8) == 32
    est = estimate_bd_action(generate(8, "random_order", seed=2, p=0.3),
                             FOUR_D(), 0.5, 0.05, seed=3)
    assert est.width_qubits == 32


def test_mode_equivalence_same_seed():
    c = generate(6, "random_order", seed=14, p=0.35)
    a = estimate_bd_action(c, FOUR_D(), 0.5, 0.05, seed=21, oracle_mode="predicate")
    b = estimate_bd_action(c, FOUR_D(), 0.5, 0.05, seed=21, oracle_mode="circuit")
    assert [(e.n_hat, e.queries, e.zero_flag) for e in a.per_k] == \
           [(e.n_hat, e.queries, e.zero_flag) for e in b.per_k]
    assert a.s_hat == b.s_hat


def test_estimator_deterministic_per_seed():
    c = generate(10, "random_order", seed=4, p=0.25)
    a = estimate_bd_action(c, FOUR_D(), 0.5, 0.05, seed=7)
    b = estimate_bd_action(c, FOUR_D(), 0.5, 0.05, seed=7)
    assert a == b
    d = estimate_bd_action(c, FOUR_D(), 0.5, 0.05, seed=8)
    assert a.per_k != d.per_k or a.s_hat != d.s_hat


def test_estimator_reports_exact_reference_when_available():
    c = generate(12, "random_order", seed=6, p=0.3)
    est = estimate_bd_action(c, FOUR_D(), 0.5, 0.05, seed=2)
    from bdlab.action import abundances, bd_action
    exact = abundances(c, 3)
    assert [e.n_true for e in est.per_k] == list(exact.counts)
    assert est.s_true == pytest.approx(bd_action(exact, FOUR_D()))
    assert est.confidence == pytest.approx(0.95 ** 4)


def test_invalid_oracle_mode():
    with pytest.raises(InvalidParameter):
        estimate_bd_action(generate(3, "chain"), FOUR_D(), 0.5, 0.05, oracle_mode="psychic")
