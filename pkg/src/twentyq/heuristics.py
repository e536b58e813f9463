"""Discriminating scores for questions.

Three scorers map a reference matrix to a score in [0, 1] per question:

* ``rand``: i.i.d. uniform scores (baseline).
* ``sep``: uniform scores restricted to the questions whose split of the
  models is as even as possible; every other question scores 0.
* ``sim``: greedy construction over the evenest questions, each step adding
  the question whose partition is least similar to those already chosen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .matrix import Partition, ResponseMatrix

__all__ = [
    "HEURISTICS",
    "ScoreVector",
    "OrderedQuestionList",
    "separability",
    "similarity",
    "evenness",
    "separability_scores",
    "score_random",
    "score_separability",
    "score_recursive_similarity",
    "score",
    "order_questions",
]

HEURISTICS = ("rand", "sep", "sim")
DEFAULT_MAX_ITER = 20


@dataclass(frozen=True)
class ScoreVector:
    scores: np.ndarray
    seed: int | None
    heuristic: str
    # questions picked by ``sim``, in selection order
    selection: tuple[int, ...] = field(default=())

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 1:
            raise ValueError("scores must be one-dimensional")
        if np.any((s < 0) | (s > 1)) or np.isnan(s).any():
            raise ValueError("scores must lie in [0, 1]")
        s.flags.writeable = False
        object.__setattr__(self, "scores", s)

    def __len__(self):
        return len(self.scores)


@dataclass(frozen=True)
class OrderedQuestionList:
    order: np.ndarray
    tie_break: str = "ascending-index"

    def __len__(self):
        return len(self.order)

    def __iter__(self):
        return iter(int(q) for q in self.order)

    def __getitem__(self, i):
        return int(self.order[i])


# --------------------------------------------------------------------------
# Partition measures
# --------------------------------------------------------------------------


def separability(p: Partition) -> float:
    """Evenness of a split, normalized so the most even achievable split is 1."""
    L = p.universe_size
    if L < 2:
        raise ValueError(f"separability needs at least 2 models, got {L}")
    raw = L - abs(p.size - p.complement_size)
    return raw / (2 * (L // 2))


def _similarity_bounds(L: int, s: int) -> tuple[int, int]:
    return math.ceil(L / 4), L - s


def similarity(x: Partition, y: Partition) -> float:
    """Normalized size of the largest of the four blocks x∩y, x̄∩y, x∩ȳ, x̄∩ȳ.

    Only defined for partitions of equal separability.
    """
    if x.universe_size != y.universe_size:
        raise ValueError("partitions live in different universes")
    L = x.universe_size
    s = min(x.size, x.complement_size)
    if s != min(y.size, y.complement_size):
        raise ValueError("similarity requires partitions of equal separability")
    both = len(x.members & y.members)
    blocks = (both, y.size - both, x.size - both, L - x.size - y.size + both)
    lo, hi = _similarity_bounds(L, s)
    if hi == lo:
        return 1.0
    return (max(blocks) - lo) / (hi - lo)


def evenness(matrix: ResponseMatrix) -> np.ndarray:
    """``2 * min(|M_q|, L - |M_q|)`` for every question (integer)."""
    ones = matrix.column_sums()
    return 2 * np.minimum(ones, matrix.n_models - ones)


def separability_scores(matrix: ResponseMatrix) -> np.ndarray:
    return evenness(matrix) / (2 * (matrix.n_models // 2))


def _best_questions(matrix: ResponseMatrix) -> np.ndarray:
    ev = evenness(matrix)
    return np.flatnonzero(ev == ev.max())


# --------------------------------------------------------------------------
# Scorers
# --------------------------------------------------------------------------


def score_random(matrix: ResponseMatrix, seed: int) -> ScoreVector:
    rng = np.random.default_rng(seed)
    return ScoreVector(rng.random(matrix.n_questions), seed, "rand")


def score_separability(matrix: ResponseMatrix, seed: int) -> ScoreVector:
    rng = np.random.default_rng(seed)
    best = _best_questions(matrix)
    scores = np.zeros(matrix.n_questions)
    # 1 - U[0,1) lies in (0, 1], so 0 only ever means "not among the evenest"
    scores[best] = 1.0 - rng.random(len(best))
    return ScoreVector(scores, seed, "sep")


def score_recursive_similarity(matrix: ResponseMatrix, max_iter: int = DEFAULT_MAX_ITER,
                               seed: int | None = None) -> ScoreVector:
    """Greedy least-similar selection among the evenest questions.

    Starts from the least similar pair, then repeatedly adds the candidate
    minimizing its summed similarity to the selection while the selection has
    at most ``max_iter`` questions. The question at selection rank r scores
    ``1 - r / max_iter``. Ties go to the smallest question index. The result
    does not depend on ``seed``; it is only recorded.
    """
    if matrix.n_questions < 2:
        raise ValueError("recursive similarity needs at least 2 questions")
    if max_iter < 1:
        raise ValueError("max_iter must be a positive integer")
    best = _best_questions(matrix)
    n = len(best)
    if n == 1:
        picked = [0]
    else:
        # all candidates share one separability, so the normalization is a
        # common increasing affine map and raw block maxima order identically
        raw = kernels.block_max(matrix.bits[:, best])
        masked = raw.astype(np.float64)
        masked[np.tril_indices(n)] = np.inf
        a, b = np.unravel_index(int(np.argmin(masked)), masked.shape)
        picked = [int(a), int(b)]
        taken = np.zeros(n, dtype=bool)
        taken[picked] = True
        total = raw[a] + raw[b]
        while len(picked) <= max_iter and not taken.all():
            cand = np.where(taken, np.iinfo(np.int64).max, total)
            nxt = int(np.argmin(cand))
            picked.append(nxt)
            taken[nxt] = True
            total = total + raw[nxt]
    scores = np.zeros(matrix.n_questions)
    selection = tuple(int(best[i]) for i in picked)
    for rank, q in enumerate(selection):
        scores[q] = max(0.0, 1.0 - rank / max_iter)
    return ScoreVector(scores, seed, "sim", selection)


def score(matrix: ResponseMatrix, heuristic: str, seed: int,
          max_iter: int = DEFAULT_MAX_ITER) -> ScoreVector:
    if heuristic == "rand":
        return score_random(matrix, seed)
    if heuristic == "sep":
        return score_separability(matrix, seed)
    if heuristic == "sim":
        return score_recursive_similarity(matrix, max_iter, seed)
    raise ValueError(f"unknown heuristic {heuristic!r}; expected one of {', '.join(HEURISTICS)}")


def order_questions(sv: ScoreVector) -> OrderedQuestionList:
    """Questions by decreasing score; equal scores keep ascending index order."""
    order = np.argsort(-sv.scores, kind="stable")
    return OrderedQuestionList(order)
