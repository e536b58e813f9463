import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import pair_loop_fraction
from twentyq import experiment as exp
from twentyq import simulation, theory
from twentyq.heuristics import order_questions, score_random
from twentyq.matrix import ResponseMatrix

matrices = st.tuples(st.integers(2, 9), st.integers(1, 10)).flatmap(
    lambda s: arrays(np.uint8, s, elements=st.integers(0, 1))).map(ResponseMatrix)


def test_first_discriminating_index_examples():
    m = ResponseMatrix([[0, 1, 1, 0], [0, 0, 1, 0], [0, 1, 1, 0]])
    assert exp.first_discriminating_index(range(4), m, 0, 1) == 2
    assert exp.first_discriminating_index(range(4), m, 0, 2) is None
    m2 = ResponseMatrix([[0, 1], [1, 0]])
    # order [second question, first question]: compared positionwise after reordering
    assert exp.first_discriminating_index([1, 0], m2, 0, 1) == 1
    with pytest.raises(ValueError):
        exp.first_discriminating_index(range(4), m, 1, 1)


def test_run_pairwise_examples():
    m = ResponseMatrix([[0, 0, 1, 0], [0, 0, 0, 0]])
    cdf = exp.run_pairwise(m, range(4))
    assert cdf.counts == {3: 1} and cdf.undistinguished == 0
    same = exp.run_pairwise(ResponseMatrix(np.ones((3, 4), dtype=np.uint8)), range(4))
    assert same.counts == {} and same.undistinguished == 3 and same.total_pairs == 3


def test_complete_two_question_set():
    m = theory.complete_model_set(2)
    cdf = exp.run_pairwise(m, [0, 1])
    pairs = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    by_hand = {}
    for i, j in pairs:
        t = exp.first_discriminating_index([0, 1], m, i, j)
        by_hand[t] = by_hand.get(t, 0) + 1
    assert cdf.counts == by_hand == {1: 4, 2: 2}
    assert cdf.fraction_within(1) == Fraction(2, 3) == theory.optimal_cdf_finite(2, 1)
    assert cdf.fraction_within(2) == 1


def test_cdf_invariants():
    with pytest.raises(ValueError):
        exp.DistinguishCdf({1: 2}, 0, 3)
    with pytest.raises(ValueError):
        exp.DistinguishCdf({0: 3}, 0, 3)


def test_cdf_to_accuracy_examples():
    all_first = exp.DistinguishCdf({1: 10}, 0, 10)
    assert exp.cdf_to_accuracy(all_first, 0.5, 5).acc.tolist() == [1.0] * 5
    never = exp.DistinguishCdf({}, 10, 10)
    curve = exp.cdf_to_accuracy(never, 0.5, 5)
    assert curve.acc.tolist() == [0.5] * 5 and curve.auc == 0.5
    ninety = exp.DistinguishCdf({6: 9}, 1, 10)
    curve = exp.cdf_to_accuracy(ninety, 0.5, 8)
    assert curve.acc[5] == pytest.approx(0.95, abs=1e-15)
    assert exp.k_for_accuracy(ninety, 0.95) == 6
    assert exp.cdf_to_accuracy(ninety, 0.0, 8).acc[5] == pytest.approx(0.9, abs=1e-15)


@given(matrices, st.floats(0, 1), st.integers(1, 12), st.randoms(use_true_random=False))
@settings(max_examples=80, deadline=None)
def test_pairwise_properties(m, prior, k_max, rnd):
    order = list(range(m.n_questions))
    rnd.shuffle(order)
    a = exp.run_pairwise(m, order)
    b = exp.run_pairwise(m, range(m.n_questions))
    assert a.undistinguished == b.undistinguished
    K = m.n_questions
    assert a.fraction_within(K) == exp.monte_carlo_true_negative(m, range(K))
    curve = exp.cdf_to_accuracy(a, prior, k_max)
    assert (np.diff(curve.acc) >= 0).all()
    assert (curve.acc >= prior - 1e-15).all()
    for k in range(1, k_max + 1):
        assert curve.acc[k - 1] == prior + (1 - prior) * (a.cumulative(k) / a.total_pairs)


@given(matrices, st.data())
@settings(max_examples=80, deadline=None)
def test_monte_carlo_matches_pair_loop(m, data):
    qs = data.draw(st.sets(st.integers(0, m.n_questions - 1), min_size=1))
    split, total = pair_loop_fraction(m.bits.tolist(), sorted(qs))
    assert exp.monte_carlo_true_negative(m, qs) == Fraction(split, total)


def test_monte_carlo_examples():
    distinct = theory.complete_model_set(3)
    assert exp.monte_carlo_true_negative(distinct, range(3)) == 1
    m = ResponseMatrix([[1, 0, 1], [1, 1, 1], [0, 0, 1], [0, 1, 1]])
    assert exp.monte_carlo_true_negative(m, [2]) == 0
    assert exp.monte_carlo_true_negative(m, [0]) == Fraction(math.comb(4, 2) - 2 * math.comb(2, 2), 6)
    with pytest.raises(ValueError):
        exp.monte_carlo_true_negative(m, [])


def test_aggregate_runs_examples():
    c = exp.AccuracyCurve(0.5, np.array([0.6, 0.8, 1.0]), 0.8)
    s = exp.aggregate_runs([c])
    assert s.mean.tolist() == c.acc.tolist() and s.std.tolist() == [0, 0, 0]
    assert s.best is c and s.worst is c
    d = exp.AccuracyCurve(0.5, np.array([0.7, 1.0, 1.0]), 0.9)
    s = exp.aggregate_runs([c, d])
    assert s.best is d and s.worst is c and s.best_index == 1
    with pytest.raises(ValueError):
        exp.aggregate_runs([c, exp.AccuracyCurve(0.5, np.array([1.0]), 1.0)])


def test_aggregate_many_random_runs():
    m = simulation.generate(simulation.PopulationSpec("uniform", 10, 12, seed=3, distinct=True))
    K = m.n_questions
    res = exp.run_experiment(m, "rand", seed=0, runs=2000, k_max=K)
    s = res.summary
    assert s.std[0] > 0
    assert s.std[K - 1] == 0 and s.mean[K - 1] == 1.0
    assert s.best.auc >= s.mean_auc >= s.worst.auc
    assert s.best.auc == s.aucs.max()


def test_run_experiment_jobs_do_not_change_results():
    m = simulation.generate(simulation.PopulationSpec("irt", 12, 200, seed=5))
    one = exp.run_experiment(m, "sep", seed=4, runs=30)
    many = exp.run_experiment(m, "sep", seed=4, runs=30, jobs=4)
    assert one.cdfs == many.cdfs
    assert np.array_equal(one.summary.mean, many.summary.mean)


def test_binomial_reference_examples():
    L = 22
    point = np.zeros(L + 1)
    point[L] = 1
    ref = exp.binomial_reference(point, L)
    assert ref.p_bar == 1 and ref.tv == 0 and ref.pmf[L] == 1

    pmf = np.array([math.comb(L, c) / 2**L for c in range(L + 1)])
    assert exp.binomial_reference(pmf, L).tv == pytest.approx(0, abs=1e-12)

    split = np.zeros(L + 1)
    split[0] = split[L] = 0.5
    ref = exp.binomial_reference(split, L)
    tail = Fraction(1, 2**L)
    expected_tv = (2 * (Fraction(1, 2) - tail) + (1 - 2 * tail)) / 2
    assert ref.p_bar == 0.5
    assert ref.tv == pytest.approx(float(expected_tv), abs=1e-12)
    assert ref.tv >= 0.99


def test_binomial_reference_means_match():
    m = simulation.generate(simulation.PopulationSpec("irt", 22, 3000, seed=8, sigma_difficulty=2.0))
    from twentyq.matrix import correct_count_histogram
    hist = correct_count_histogram(m)
    ref = exp.binomial_reference(hist, 22)
    c = np.arange(23)
    assert (c * hist).sum() == pytest.approx(22 * ref.p_bar, abs=1e-9)
    assert (c * ref.pmf).sum() == pytest.approx(22 * ref.p_bar, abs=1e-9)


def test_scalability_examples():
    pair = ResponseMatrix([[1, 0, 0], [0, 0, 0]])
    rows = exp.scalability_sweep([pair], lambda m: order_questions(score_random(m, 0)), target=0.99)
    assert rows[0].k_needed == 1
    twins = ResponseMatrix(np.zeros((3, 4), dtype=np.uint8))
    assert exp.scalability_sweep([twins], "sep", 0, 0.99)[0].k_needed is None
    rows = exp.scalability_sweep([theory.complete_model_set(4)], "optimal", 0, 0.99)
    assert float(theory.optimal_cdf_finite(4, 3)) == pytest.approx(1 - 1 / 15)
    assert rows[0].k_needed == 4 and rows[0].n_models == 16
    with pytest.raises(ValueError):
        exp.scalability_sweep([pair], "sep", 0, 0.0)


def test_uniform_population_follows_geometric_law():
    m = simulation.generate(simulation.PopulationSpec("uniform", 400, 60, seed=21))
    for ordering in ([*range(60)], [*reversed(range(60))]):
        cdf = exp.run_pairwise(m, ordering)
        for k in range(1, 9):
            assert abs(float(cdf.fraction_within(k)) - (1 - 0.5**k)) < 0.01


def test_aggregate_identical_runs_is_exact():
    acc = np.array([0.7619047619047619, 0.880995670995671, 1.0])
    curve = exp.AccuracyCurve(0.5, acc, float(acc.mean()))
    summary = exp.aggregate_runs([curve] * 200)
    assert summary.mean.tolist() == acc.tolist()
    assert summary.std.tolist() == [0.0, 0.0, 0.0]
