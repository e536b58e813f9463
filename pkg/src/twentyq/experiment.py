"""The distinguishing experiment over all model pairs, and its summaries."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .heuristics import DEFAULT_MAX_ITER, OrderedQuestionList, order_questions, score
from .matrix import ResponseMatrix, rows_equal_groups
from .theory import balanced_ordering

__all__ = [
    "DEFAULT_PRIOR",
    "DEFAULT_K_MAX",
    "ORDERINGS",
    "DistinguishCdf",
    "AccuracyCurve",
    "RunSummary",
    "BinomialReference",
    "ExperimentResult",
    "SweepRow",
    "first_discriminating_index",
    "run_pairwise",
    "cdf_to_accuracy",
    "k_for_accuracy",
    "k_for_fraction",
    "monte_carlo_true_negative",
    "aggregate_runs",
    "binomial_reference",
    "ordering_for",
    "run_experiment",
    "scalability_sweep",
]

DEFAULT_PRIOR = 0.5
DEFAULT_K_MAX = 20
ORDERINGS = ("rand", "sep", "sim", "optimal")


@dataclass(frozen=True)
class DistinguishCdf:
    """How many pairs are first told apart after exactly k questions."""

    counts: dict[int, int]
    undistinguished: int
    total_pairs: int

    def __post_init__(self):
        if any(k < 1 for k in self.counts):
            raise ValueError("question counts start at 1")
        if sum(self.counts.values()) + self.undistinguished != self.total_pairs:
            raise ValueError("counts and undistinguished pairs must add up to all pairs")

    @classmethod
    def from_first_differences(cls, t: np.ndarray) -> "DistinguishCdf":
        t = np.asarray(t, dtype=np.int64)
        values, freq = np.unique(t[t > 0], return_counts=True)
        return cls({int(k): int(c) for k, c in zip(values, freq)},
                   int((t == 0).sum()), len(t))

    def cumulative(self, k: int) -> int:
        return sum(c for j, c in self.counts.items() if j <= k)

    def cumulative_array(self, k_max: int) -> np.ndarray:
        per_k = np.zeros(k_max + 1, dtype=np.int64)
        for j, c in self.counts.items():
            if j <= k_max:
                per_k[j] = c
        return np.cumsum(per_k)[1:]

    def fraction_within(self, k: int) -> Fraction:
        if self.total_pairs == 0:
            return Fraction(1)
        return Fraction(self.cumulative(k), self.total_pairs)

    @property
    def max_k(self) -> int:
        return max(self.counts, default=0)


@dataclass(frozen=True)
class AccuracyCurve:
    prior_h0: float
    acc: np.ndarray  # acc[k - 1] for k = 1..k_max
    auc: float

    @property
    def k_max(self) -> int:
        return len(self.acc)


@dataclass(frozen=True)
class RunSummary:
    mean: np.ndarray
    std: np.ndarray
    best: AccuracyCurve
    worst: AccuracyCurve
    best_index: int
    worst_index: int
    aucs: np.ndarray

    @property
    def mean_auc(self) -> float:
        return float(self.mean.mean())


@dataclass(frozen=True)
class BinomialReference:
    p_bar: float
    pmf: np.ndarray
    tv: float


@dataclass(frozen=True)
class SweepRow:
    n_models: int
    k_needed: int | None
    target: float


def first_discriminating_index(ordered: OrderedQuestionList | Sequence[int], matrix: ResponseMatrix,
                               m: int, m2: int) -> int | None:
    """1-based position of the first ordered question the two models disagree on.

    ``None`` when they agree on every question.
    """
    if m == m2:
        raise ValueError("a model is never compared with itself")
    order = np.asarray(getattr(ordered, "order", ordered), dtype=np.int64)
    a = matrix.bits[m, order]
    b = matrix.bits[m2, order]
    diff = np.flatnonzero(a != b)
    return int(diff[0]) + 1 if len(diff) else None


def run_pairwise(matrix: ResponseMatrix, ordered: OrderedQuestionList | Sequence[int]) -> DistinguishCdf:
    """Tally, over all unordered pairs of distinct models, the questions needed."""
    order = np.asarray(getattr(ordered, "order", ordered), dtype=np.int64)
    t = kernels.pairwise_first_difference(matrix.bits[:, order])
    return DistinguishCdf.from_first_differences(t)


def cdf_to_accuracy(cdf: DistinguishCdf, prior_h0: float = DEFAULT_PRIOR,
                    k_max: int = DEFAULT_K_MAX) -> AccuracyCurve:
    """acc(k) = P(H0) + (1 - P(H0)) * (fraction of pairs split within k)."""
    if not 0.0 <= prior_h0 <= 1.0:
        raise ValueError("prior_h0 must lie in [0, 1]")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    total = cdf.total_pairs
    frac = cdf.cumulative_array(k_max) / total if total else np.ones(k_max)
    acc = prior_h0 + (1.0 - prior_h0) * frac
    return AccuracyCurve(prior_h0, acc, float(acc.mean()))


def k_for_fraction(cdf: DistinguishCdf, target: float) -> int | None:
    """Smallest k whose cumulative split fraction reaches ``target``."""
    need = Fraction(target).limit_denominator(10**12) * cdf.total_pairs
    running = 0
    for k in sorted(cdf.counts):
        running += cdf.counts[k]
        if running >= need:
            return k
    return None


def k_for_accuracy(cdf: DistinguishCdf, level: float, prior_h0: float = DEFAULT_PRIOR) -> int | None:
    """Smallest k with acc(k) >= level (not truncated at any k_max)."""
    if level <= prior_h0:
        return 1
    if prior_h0 >= 1.0:
        return 1
    prior = Fraction(prior_h0).limit_denominator(10**12)
    lvl = Fraction(level).limit_denominator(10**12)
    return k_for_fraction(cdf, float((lvl - prior) / (1 - prior)))


def monte_carlo_true_negative(matrix: ResponseMatrix, question_set) -> Fraction:
    """Fraction of distinct-model pairs that differ on at least one question of the set."""
    qs = sorted(set(int(q) for q in question_set))
    if not qs:
        raise ValueError("question set is empty")
    if qs[0] < 0 or qs[-1] >= matrix.n_questions:
        raise IndexError("question index out of range")
    L = matrix.n_models
    total = math.comb(L, 2)
    sizes = rows_equal_groups(matrix.bits[:, qs])
    joined = int(sum(math.comb(int(s), 2) for s in sizes))
    return Fraction(total - joined, total)


def aggregate_runs(runs: Sequence[AccuracyCurve]) -> RunSummary:
    """Pointwise mean and std; best and worst runs chosen by AUC (first wins ties)."""
    if not runs:
        raise ValueError("need at least one run")
    k_max = runs[0].k_max
    if any(r.k_max != k_max for r in runs):
        raise ValueError("runs cover different k ranges")
    stack = np.stack([r.acc for r in runs])
    aucs = np.array([r.auc for r in runs])
    best = int(np.argmax(aucs))
    worst = int(np.argmin(aucs))
    # shifted, exactly rounded sums: identical runs give their value back and std exactly 0
    shift = stack[0]
    mean = shift + np.array([math.fsum(col) for col in (stack - shift).T]) / len(runs)
    std = np.sqrt(np.array([math.fsum(col) for col in ((stack - mean) ** 2).T]) / len(runs))
    return RunSummary(mean, std, runs[best], runs[worst], best, worst, aucs)


def _binomial_pmf(L: int, p: float) -> np.ndarray:
    return np.array([math.comb(L, c) * p**c * (1.0 - p) ** (L - c) for c in range(L + 1)])


def binomial_reference(hist, L: int) -> BinomialReference:
    """Binomial(L, p̄) with p̄ the histogram's mean correct rate, and its TV distance."""
    h = np.asarray(hist, dtype=np.float64)
    if len(h) != L + 1:
        raise ValueError(f"histogram must have L + 1 = {L + 1} bins")
    if np.any(h < 0) or not math.isclose(h.sum(), 1.0, abs_tol=1e-9):
        raise ValueError("histogram must be a probability distribution")
    c = np.arange(L + 1)
    p_bar = float((c / L * h).sum())
    p_bar = min(max(p_bar, 0.0), 1.0)
    pmf = _binomial_pmf(L, p_bar)
    tv = 0.5 * float(np.abs(h - pmf).sum())
    return BinomialReference(p_bar, pmf, tv)


def ordering_for(matrix: ResponseMatrix, heuristic: str, seed: int,
                 max_iter: int = DEFAULT_MAX_ITER) -> OrderedQuestionList:
    if heuristic == "optimal":
        return balanced_ordering(matrix)
    return order_questions(score(matrix, heuristic, seed, max_iter))


@dataclass(frozen=True)
class ExperimentResult:
    heuristic: str
    seeds: tuple[int, ...]
    cdfs: tuple[DistinguishCdf, ...]
    curves: tuple[AccuracyCurve, ...]
    summary: RunSummary

    def k_at_accuracy(self, level: float) -> list[int | None]:
        prior = self.curves[0].prior_h0
        return [k_for_accuracy(c, level, prior) for c in self.cdfs]


def run_experiment(matrix: ResponseMatrix, heuristic: str, seed: int, runs: int = 1,
                   k_max: int = DEFAULT_K_MAX, prior_h0: float = DEFAULT_PRIOR,
                   max_iter: int = DEFAULT_MAX_ITER, jobs: int = 1) -> ExperimentResult:
    """Repeat the pairwise experiment with seeds ``seed, seed + 1, ...``."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    seeds = tuple(seed + r for r in range(runs))

    def one(s: int) -> DistinguishCdf:
        return run_pairwise(matrix, ordering_for(matrix, heuristic, s, max_iter))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            cdfs = tuple(pool.map(one, seeds))
    else:
        cdfs = tuple(one(s) for s in seeds)
    curves = tuple(cdf_to_accuracy(c, prior_h0, k_max) for c in cdfs)
    return ExperimentResult(heuristic, seeds, cdfs, curves, aggregate_runs(curves))


def scalability_sweep(populations: Sequence[ResponseMatrix], heuristic: str | Callable,
                      seed: int = 0, target: float = 0.99,
                      max_iter: int = DEFAULT_MAX_ITER, jobs: int = 1) -> list[SweepRow]:
    """Per population, the shortest ordering prefix splitting ``target`` of all pairs."""
    if not 0.0 < target <= 1.0:
        raise ValueError("target must lie in (0, 1]")

    def one(pop: ResponseMatrix) -> SweepRow:
        if callable(heuristic):
            ordered = heuristic(pop)
        else:
            ordered = ordering_for(pop, heuristic, seed, max_iter)
        cdf = run_pairwise(pop, ordered)
        return SweepRow(pop.n_models, k_for_fraction(cdf, target), target)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, populations))
    return [one(pop) for pop in populations]
