"""Closed-form laws for optimally balanced questions, plus exact brute force.

The laws give the probability that a random pair of distinct models is told
apart within k ideally balanced questions. Values are kept as exact
:class:`fractions.Fraction` so they can be compared for equality.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .heuristics import OrderedQuestionList, evenness
from .matrix import ResponseMatrix

__all__ = [
    "DEFAULT_BUDGET",
    "BudgetExceeded",
    "OptimalLaw",
    "BruteForceResult",
    "split_pair_count",
    "optimal_cdf_finite",
    "optimal_cdf_infinite",
    "finite_law",
    "infinite_law",
    "complete_model_set",
    "balanced_ordering",
    "brute_force_best_set",
    "split_pairs_per_question",
    "theorem1_check",
]

DEFAULT_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    def __init__(self, required: int, budget: int):
        super().__init__(f"enumeration needs {required} subsets, budget is {budget}")
        self.required = required
        self.budget = budget


def split_pair_count(L: int, k: int) -> int:
    """Pairs separated by a question that puts k of L models on one side."""
    if L < 2:
        raise ValueError("need at least 2 models")
    if not 0 <= k <= L:
        raise ValueError(f"group size {k} out of range 0..{L}")
    return math.comb(L, 2) - (math.comb(k, 2) + math.comb(L - k, 2))


def optimal_cdf_finite(n: int, k: int) -> Fraction:
    """P(X <= k) for 2**n models split by perfectly balanced questions."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range 1..{n}")
    return 1 - Fraction(2 ** (n - k) - 1, 2**n - 1)


def optimal_cdf_infinite(k: int) -> Fraction:
    if k < 1:
        raise ValueError("k must be >= 1")
    return 1 - Fraction(1, 2**k)


@dataclass(frozen=True)
class OptimalLaw:
    kind: str  # "finite" or "infinite"
    n: int | None
    values: dict[int, Fraction]

    def __post_init__(self):
        prev = Fraction(0)
        for k in sorted(self.values):
            v = self.values[k]
            if not prev <= v <= 1:
                raise ValueError("law must be non-decreasing within [0, 1]")
            prev = v


def finite_law(n: int, k_max: int) -> OptimalLaw:
    # beyond k = n every pair is already split
    values = {k: optimal_cdf_finite(n, k) if k <= n else Fraction(1) for k in range(1, k_max + 1)}
    return OptimalLaw("finite", n, values)


def infinite_law(k_max: int) -> OptimalLaw:
    return OptimalLaw("infinite", None, {k: optimal_cdf_infinite(k) for k in range(1, k_max + 1)})


def complete_model_set(n: int) -> ResponseMatrix:
    """All 2**n answer patterns over n questions; model i answers its binary digits."""
    if n < 1:
        raise ValueError("n must be >= 1")
    idx = np.arange(2**n)[:, None]
    shifts = np.arange(n - 1, -1, -1)[None, :]
    bits = (idx >> shifts) & 1
    width = len(str(2**n - 1))
    return ResponseMatrix(bits, [f"m{i:0{width}d}" for i in range(2**n)],
                          [f"q{j}" for j in range(n)])


def balanced_ordering(matrix: ResponseMatrix) -> OrderedQuestionList:
    """Greedy refinement: each step takes the question splitting the most still-joined pairs.

    On a complete model set every question halves every current group, so
    this realizes the optimal law exactly. Questions that split nothing new
    follow in index order.
    """
    bits = matrix.bits.astype(np.int64)
    L, K = bits.shape
    groups = np.zeros(L, dtype=np.int64)
    chosen: list[int] = []
    free = np.ones(K, dtype=bool)
    while free.any():
        n_groups = int(groups.max()) + 1
        onehot = np.zeros((n_groups, L), dtype=np.int64)
        onehot[groups, np.arange(L)] = 1
        ones = onehot @ bits
        sizes = onehot.sum(axis=1)[:, None]
        gain = (ones * (sizes - ones)).sum(axis=0)
        gain[~free] = -1
        q = int(np.argmax(gain))
        if gain[q] <= 0:
            break
        chosen.append(q)
        free[q] = False
        _, groups = np.unique(np.stack([groups, bits[:, q]], axis=1), axis=0, return_inverse=True)
        groups = groups.reshape(-1)
    rest = [int(q) for q in np.flatnonzero(free)]
    return OrderedQuestionList(np.array(chosen + rest, dtype=np.int64), tie_break="greedy-refinement")


@dataclass(frozen=True)
class BruteForceResult:
    k: int
    best_sets: tuple[tuple[int, ...], ...]
    best_pairs: int
    total_pairs: int
    sets_examined: int

    @property
    def best_fraction(self) -> Fraction:
        return Fraction(self.best_pairs, self.total_pairs)


def _unrank_combination(n: int, k: int, rank: int) -> tuple[int, ...]:
    out = []
    x = 0
    for i in range(k):
        while True:
            block = math.comb(n - x - 1, k - i - 1)
            if rank < block:
                break
            rank -= block
            x += 1
        out.append(x)
        x += 1
    return tuple(out)


def brute_force_best_set(matrix: ResponseMatrix, k: int, budget: int = DEFAULT_BUDGET,
                         jobs: int = 1) -> BruteForceResult:
    """Every k-subset of questions scored by the fraction of pairs it splits.

    Returns all maximizing subsets. Refuses when there are more than
    ``budget`` subsets. With ``jobs > 1`` the subsets are split by their
    smallest member and enumerated concurrently; the result is identical.
    """
    K = matrix.n_questions
    if not 1 <= k <= K:
        raise ValueError(f"k={k} out of range 1..{K}")
    required = math.comb(K, k)
    if required > budget:
        raise BudgetExceeded(required, budget)
    masks = kernels.pair_masks(matrix.bits)
    if jobs > 1:
        def by_first(f: int) -> np.ndarray:
            return kernels.subset_pair_counts(masks[f + 1:], k - 1, masks[f])

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(by_first, range(K - k + 1)))
        counts = np.concatenate(parts)
    else:
        counts = kernels.subset_pair_counts(masks, k)
    best = int(counts.max())
    winners = np.flatnonzero(counts == best)
    sets = tuple(_unrank_combination(K, k, int(r)) for r in winners)
    L = matrix.n_models
    return BruteForceResult(k, sets, best, L * (L - 1) // 2, required)


def split_pairs_per_question(matrix: ResponseMatrix) -> np.ndarray:
    """Number of model pairs each question separates, counted pair by pair."""
    bits = matrix.bits
    iu, ju = kernels.pair_index(matrix.n_models)
    return (bits[iu] != bits[ju]).sum(axis=0)


def theorem1_check(matrix: ResponseMatrix) -> bool:
    """Whether the questions splitting the most pairs are exactly the evenest ones."""
    split = split_pairs_per_question(matrix)
    ev = evenness(matrix)
    by_split = set(np.flatnonzero(split == split.max()).tolist())
    by_even = set(np.flatnonzero(ev == ev.max()).tolist())
    return by_split == by_even
