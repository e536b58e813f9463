"""End-to-end acceptance criteria, one test each.

Run with ``pytest -m acceptance``; every test prints a single PASS/FAIL line
and the lines are repeated in the terminal summary.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import pair_loop_fraction
from twentyq import experiment as exp
from twentyq import kernels, theory
from twentyq.cli import main
from twentyq.heuristics import OrderedQuestionList, separability_scores
from twentyq.interrogator import ACCEPT, REJECT, matrix_oracle, ordered_question_ids, sequential_test
from twentyq.matrix import ResponseMatrix, correct_count_histogram, save_matrix
from twentyq.simulation import PopulationSpec, generate, sample_distinct_pairs

pytestmark = pytest.mark.acceptance

# pinned tolerances
GEOMETRIC_TOL = 0.01
GEOMETRIC_SECONDS = 10.0
TV_UNIFORM_MAX = 0.05
TV_CLONES_RATIO = 3.0
MEAN_TOL = 1e-9
SEP_GAIN_MIN = 0.20
SCALABILITY_SECONDS = 60.0

IRT_SPEC = PopulationSpec("irt", 22, 5000, seed=2024, sigma_skill=1.0, sigma_difficulty=1.5)


def test_1_geometric_law(report):
    start = time.perf_counter()
    a, b = sample_distinct_pairs(100_000, 40, seed=1)
    t = kernels.first_difference(a, b)  # identity ordering
    worst = max(abs(np.mean(t <= k) - (1 - 0.5**k)) for k in range(1, 11))
    elapsed = time.perf_counter() - start
    ok = bool((t > 0).all()) and worst <= GEOMETRIC_TOL and elapsed < GEOMETRIC_SECONDS
    report(1, "geometric law", ok, f"max |P(X<=k) - (1 - 2^-k)| = {worst:.4f} over k=1..10, {elapsed:.2f}s")


def test_2_finite_law_exact(report):
    mismatches = []
    for n in (2, 3, 4):
        m = theory.complete_model_set(n)
        cdf = exp.run_pairwise(m, theory.balanced_ordering(m))
        for k in range(1, n + 1):
            got = cdf.fraction_within(k)
            want = 1 - Fraction(2 ** (n - k) - 1, 2**n - 1)
            if got != want:
                mismatches.append((n, k, got, want))
    report(2, "finite law", not mismatches, f"{len(mismatches)} mismatches for n in 2,3,4")


def test_3_most_even_splits_most_pairs(report):
    violations = 0
    for seed in range(200):
        m = ResponseMatrix(np.random.default_rng(seed).integers(0, 2, size=(6, 12)))
        bits = m.bits.tolist()
        split = [pair_loop_fraction(bits, [q])[0] for q in range(12)]
        by_split = {q for q in range(12) if split[q] == max(split)}
        sep = separability_scores(m)
        by_sep = set(np.flatnonzero(sep == sep.max()).tolist())
        brute = {s[0] for s in theory.brute_force_best_set(m, 1).best_sets}
        if not (by_split == by_sep == brute and theory.theorem1_check(m)):
            violations += 1
    report(3, "argmax split pairs = argmax separability", violations == 0, f"{violations} violations in 200")


def test_4_brute_force_consistency(report):
    problems = 0
    for seed in range(50):
        m = ResponseMatrix(np.random.default_rng(1000 + seed).integers(0, 2, size=(8, 10)))
        bits = m.bits.tolist()
        prev = Fraction(0)
        for k in range(1, 11):
            res = theory.brute_force_best_set(m, k)
            for s in res.best_sets:
                split, total = pair_loop_fraction(bits, s)
                if Fraction(split, total) != res.best_fraction:
                    problems += 1
            if res.best_fraction < prev:
                problems += 1
            prev = res.best_fraction
    report(4, "brute force", problems == 0, f"{problems} problems over 50 matrices, k=1..10")


def test_5_heuristic_ordering(report):
    m = generate(IRT_SPEC)
    means = {}
    for h in ("rand", "sep", "sim"):
        ks = exp.run_experiment(m, h, seed=0, runs=200).k_at_accuracy(0.95)
        assert None not in ks
        means[h] = float(np.mean(ks))
    gain = 1 - means["sep"] / means["rand"]
    ok = means["sim"] <= means["sep"] <= means["rand"] and gain >= SEP_GAIN_MIN
    report(5, "heuristic ordering", ok,
           f"mean questions to 95%: rand {means['rand']:.3f}, sep {means['sep']:.3f}, sim {means['sim']:.3f}; "
           f"sep gain {gain:.1%} (reference on real models: rand 6, heuristics 3)")


def _tv_and_mean_gap(m: ResponseMatrix) -> tuple[float, float]:
    L = m.n_models
    hist = correct_count_histogram(m)
    ref = exp.binomial_reference(hist, L)
    c = np.arange(L + 1)
    gap = max(abs(float((c * hist).sum()) - L * ref.p_bar), abs(float((c * ref.pmf).sum()) - L * ref.p_bar))
    return ref.tv, gap


def test_6_binomial_mismatch(report):
    tv_u, gap_u = _tv_and_mean_gap(generate(PopulationSpec("uniform", 22, 5000, seed=6)))
    tv_c, gap_c = _tv_and_mean_gap(generate(PopulationSpec("clones", 22, 5000, seed=6, families=4,
                                                           flip_rate=0.01)))
    ok = tv_u < TV_UNIFORM_MAX and tv_c >= TV_CLONES_RATIO * tv_u and max(gap_u, gap_c) <= MEAN_TOL
    report(6, "binomial mismatch", ok,
           f"TV uniform {tv_u:.4f}, clones {tv_c:.4f} ({tv_c / tv_u:.1f}x), max mean gap {max(gap_u, gap_c):.1e}")


def test_7_oracle_offline_equivalence(report):
    rng = np.random.default_rng(7)
    pops = [generate(PopulationSpec("uniform", 12, 30, seed=1)),
            generate(PopulationSpec("irt", 12, 30, seed=2, sigma_difficulty=1.5)),
            generate(PopulationSpec("clones", 12, 30, seed=3, families=3, flip_rate=0.05))]
    agree = h0 = h0_ok = 0
    for _ in range(1000):
        m = pops[int(rng.integers(len(pops)))]
        ordered = OrderedQuestionList(rng.permutation(m.n_questions))
        qids = ordered_question_ids(m, ordered)
        i = int(rng.integers(m.n_models))
        j = i if rng.random() < 0.2 else int(rng.integers(m.n_models))
        v = sequential_test(matrix_oracle(m, i), matrix_oracle(m, j), qids, budget=m.n_questions)
        if i == j:
            h0 += 1
            h0_ok += v.decision == ACCEPT and v.queries_used == m.n_questions
            agree += v.decision == ACCEPT
            continue
        t = exp.first_discriminating_index(ordered, m, i, j)
        want = (ACCEPT, m.n_questions) if t is None else (REJECT, t)
        agree += (v.decision, v.queries_used) == want
    ok = agree == 1000 and h0_ok == h0 > 0
    report(7, "oracle/offline equivalence", ok, f"{agree}/1000 agree, {h0_ok}/{h0} same-model pairs accepted")


def test_8_scalability_shape(report):
    start = time.perf_counter()
    complete = exp.scalability_sweep([theory.complete_model_set(n) for n in range(2, 7)], "optimal", target=0.99)
    uniform = exp.scalability_sweep(
        [generate(PopulationSpec("uniform", 2**n, 1000, seed=80 + n, distinct=True)) for n in range(2, 7)],
        "sep", seed=0, target=0.99)
    elapsed = time.perf_counter() - start
    k_opt = [r.k_needed for r in complete]
    k_sep = [r.k_needed for r in uniform]
    ok = (k_opt == list(range(2, 7)) and all(k is not None and k <= 2 * n for k, n in zip(k_sep, range(2, 7)))
          and elapsed < SCALABILITY_SECONDS)
    report(8, "scalability", ok, f"L=4..64 optimal k={k_opt}, sep k={k_sep}, {elapsed:.1f}s")


def _snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_9_cli_determinism(report, tmp_path):
    inputs = tmp_path / "inputs"
    inputs.mkdir()
    save_matrix(generate(PopulationSpec("irt", 22, 400, seed=9, sigma_difficulty=1.5)), inputs / "irt.csv")
    save_matrix(generate(PopulationSpec("uniform", 6, 14, seed=9)), inputs / "small.csv")
    irt, small = str(inputs / "irt.csv"), str(inputs / "small.csv")
    commands = {
        "simulate": ["simulate", "--kind", "clones", "--models", "22", "--questions", "500", "--seed", "3",
                     "--families", "4", "--flip", "0.01"],
        "score": ["score", "--matrix", irt, "--heuristic", "sim", "--seed", "5"],
        "experiment": ["experiment", "--matrix", irt, "--heuristic", "sep", "--seed", "5", "--runs", "40"],
        "theory_law": ["theory", "--law", "finite", "--n", "5", "--kmax", "8"],
        "theory_brute": ["theory", "--brute-force", "--matrix", small, "--k", "4"],
        "analyze": ["analyze", "--matrix", irt, "--distances"],
        "scalability": ["scalability", "--matrix", irt, "--matrix", small, "--complete", "2:6",
                        "--heuristic", "rand", "--seed", "5"],
        "interrogate": ["interrogate", "--matrix", irt, "--heuristic", "sim", "--seed", "5",
                        "--model-a", "m03", "--model-b", "m04"],
    }
    differing = []
    for name, argv in commands.items():
        snaps = []
        for run, jobs in enumerate((1, 8, 1, 8)):
            out = tmp_path / f"{name}-{run}"
            assert main([*argv, "--jobs", str(jobs), "--out", str(out)]) == 0, name
            snaps.append(_snapshot(out))
        if any(s != snaps[0] for s in snaps[1:]):
            differing.append(name)
    report(9, "CLI determinism", not differing,
           f"{len(commands) - len(differing)}/{len(commands)} subcommand runs byte-identical across jobs 1 and 8"
           + (f"; differing: {differing}" if differing else ""))
