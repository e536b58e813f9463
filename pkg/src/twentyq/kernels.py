"""Hot inner loops, with a numba path and a pure-numpy fallback.

The backend is chosen once at import time from ``TWENTYQ_BACKEND``
(``numba`` or ``numpy``). Without the variable, numba is used when it can be
imported. Both implementations stay reachable through :data:`NUMPY` and
:data:`NUMBA` so tests and benchmarks can compare them side by side.
"""

from __future__ import annotations

import itertools
import math
import os
from types import SimpleNamespace

import numpy as np

try:
    import numba as nb
except ModuleNotFoundError:  # pragma: no cover - exercised only without numba
    nb = None

__all__ = [
    "BACKEND",
    "NUMBA",
    "NUMPY",
    "pair_index",
    "pairwise_first_difference",
    "first_difference",
    "hamming",
    "block_max",
    "pair_masks",
    "subset_pair_counts",
    "popcount",
]


def pair_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row indices ``(i, j)`` of all unordered pairs ``i < j``, lexicographic."""
    return np.triu_indices(n, k=1)


def popcount(words: np.ndarray) -> np.ndarray:
    """Per-element population count of an unsigned integer array."""
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(words)
    as_bytes = np.ascontiguousarray(words).view(np.uint8)
    bits = np.unpackbits(as_bytes).reshape(*words.shape, -1)
    return bits.sum(axis=-1)


def pair_masks(bits: np.ndarray) -> np.ndarray:
    """Pack, per question, the set of model pairs it splits.

    Returns a ``(K, W)`` uint64 array where bit ``p`` of row ``q`` is set iff
    pair ``p`` (lexicographic ``i < j``) answers question ``q`` differently.
    """
    L, K = bits.shape
    iu, ju = pair_index(L)
    n_pairs = len(iu)
    n_words = max(1, -(-n_pairs // 64))
    split = np.zeros((n_words * 64, K), dtype=np.uint64)
    split[:n_pairs] = bits[iu] != bits[ju]
    split = split.reshape(n_words, 64, K)
    shifts = np.arange(64, dtype=np.uint64)[None, :, None]
    words = np.bitwise_or.reduce(split << shifts, axis=1)
    return np.ascontiguousarray(words.T)


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------


def _first_difference_np(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a != b
    first = diff.argmax(axis=1) + 1
    first[~diff.any(axis=1)] = 0
    return first.astype(np.int64)


def _pairwise_first_difference_np(bits: np.ndarray) -> np.ndarray:
    iu, ju = pair_index(bits.shape[0])
    out = np.empty(len(iu), dtype=np.int64)
    # chunked so K=5000 matrices with many pairs stay within memory
    step = max(1, 2_000_000 // max(1, bits.shape[1]))
    for start in range(0, len(iu), step):
        sl = slice(start, start + step)
        out[sl] = _first_difference_np(bits[iu[sl]], bits[ju[sl]])
    return out


def _hamming_np(bits: np.ndarray) -> np.ndarray:
    # float64 matmul goes through BLAS and is exact for counts below 2**53
    x = bits.astype(np.float64)
    ones = x.sum(axis=1)
    d = ones[:, None] + ones[None, :] - 2.0 * (x @ x.T)
    return np.rint(d).astype(np.int64)


def _block_max_np(cols: np.ndarray) -> np.ndarray:
    x = cols.astype(np.int64)
    L = x.shape[0]
    both = x.T @ x
    size = x.sum(axis=0)
    only_x = size[:, None] - both
    only_y = size[None, :] - both
    neither = L - size[:, None] - size[None, :] + both
    return np.maximum(np.maximum(both, neither), np.maximum(only_x, only_y))


def _subset_pair_counts_np(masks: np.ndarray, k: int, base: np.ndarray,
                           chunk: int = 65536) -> np.ndarray:
    n = masks.shape[0]
    out = np.empty(math.comb(n, k), dtype=np.int64)
    if k == 0:
        out[0] = popcount(base).sum()
        return out
    combos = itertools.combinations(range(n), k)
    pos = 0
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        union = np.bitwise_or.reduce(masks[block], axis=1) | base
        out[pos:pos + len(block)] = popcount(union).sum(axis=1)
        pos += len(block)
    return out


NUMPY = SimpleNamespace(
    name="numpy",
    first_difference=_first_difference_np,
    pairwise_first_difference=_pairwise_first_difference_np,
    hamming=_hamming_np,
    block_max=_block_max_np,
    subset_pair_counts=_subset_pair_counts_np,
)


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

NUMBA = None

if nb is not None:

    @nb.njit(cache=True, nogil=True)
    def _first_difference_nb(a, b):
        n, K = a.shape
        out = np.zeros(n, dtype=np.int64)
        for r in range(n):
            for q in range(K):
                if a[r, q] != b[r, q]:
                    out[r] = q + 1
                    break
        return out

    @nb.njit(cache=True, nogil=True)
    def _pairwise_first_difference_nb(bits):
        L, K = bits.shape
        out = np.zeros(L * (L - 1) // 2, dtype=np.int64)
        p = 0
        for i in range(L):
            for j in range(i + 1, L):
                for q in range(K):
                    if bits[i, q] != bits[j, q]:
                        out[p] = q + 1
                        break
                p += 1
        return out

    @nb.njit(cache=True, nogil=True)
    def _hamming_nb(bits):
        L, K = bits.shape
        out = np.zeros((L, L), dtype=np.int64)
        for i in range(L):
            for j in range(i + 1, L):
                d = 0
                for q in range(K):
                    if bits[i, q] != bits[j, q]:
                        d += 1
                out[i, j] = d
                out[j, i] = d
        return out

    @nb.njit(cache=True, nogil=True)
    def _block_max_nb(cols):
        L, n = cols.shape
        size = np.zeros(n, dtype=np.int64)
        for q in range(n):
            for m in range(L):
                size[q] += cols[m, q]
        out = np.zeros((n, n), dtype=np.int64)
        for a in range(n):
            for b in range(a, n):
                both = 0
                for m in range(L):
                    both += cols[m, a] & cols[m, b]
                only_a = size[a] - both
                only_b = size[b] - both
                neither = L - size[a] - size[b] + both
                v = max(max(both, neither), max(only_a, only_b))
                out[a, b] = v
                out[b, a] = v
        return out

    @nb.njit(cache=True, inline="always")
    def _popcount64(x):
        x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
        x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
        x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
        return (x * np.uint64(0x0101010101010101)) >> np.uint64(56)

    @nb.njit(cache=True, nogil=True)
    def _subset_pair_counts_nb(masks, k, base):
        n, W = masks.shape
        total = 1
        for i in range(k):
            total = total * (n - i) // (i + 1)
        out = np.zeros(total, dtype=np.int64)
        if k == 0:
            for w in range(W):
                out[0] += _popcount64(base[w])
            return out
        idx = np.arange(k)
        prefix = np.zeros((k, W), dtype=np.uint64)
        start = 0
        for c in range(total):
            for i in range(start, k):
                for w in range(W):
                    if i == 0:
                        prefix[0, w] = base[w] | masks[idx[0], w]
                    else:
                        prefix[i, w] = prefix[i - 1, w] | masks[idx[i], w]
            s = 0
            for w in range(W):
                s += _popcount64(prefix[k - 1, w])
            out[c] = s
            # advance to the next combination in lexicographic order
            i = k - 1
            while i >= 0 and idx[i] == n - k + i:
                i -= 1
            if i < 0:
                break
            idx[i] += 1
            for j in range(i + 1, k):
                idx[j] = idx[j - 1] + 1
            start = i
        return out

    NUMBA = SimpleNamespace(
        name="numba",
        first_difference=_first_difference_nb,
        pairwise_first_difference=_pairwise_first_difference_nb,
        hamming=_hamming_nb,
        block_max=_block_max_nb,
        subset_pair_counts=_subset_pair_counts_nb,
    )


def _select_backend():
    wanted = os.environ.get("TWENTYQ_BACKEND", "").strip().lower()
    if wanted not in ("", "numba", "numpy"):
        raise ValueError(f"TWENTYQ_BACKEND must be 'numba' or 'numpy', got {wanted!r}")
    if wanted == "numpy" or NUMBA is None:
        return NUMPY
    return NUMBA


_impl = _select_backend()
BACKEND: str = _impl.name


def first_difference(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """1-based index of the first differing column per row pair, 0 if equal."""
    return _impl.first_difference(np.ascontiguousarray(a, dtype=np.uint8),
                                  np.ascontiguousarray(b, dtype=np.uint8))


def pairwise_first_difference(bits: np.ndarray) -> np.ndarray:
    """First differing column (1-based, 0 if none) for every pair ``i < j``."""
    return _impl.pairwise_first_difference(np.ascontiguousarray(bits, dtype=np.uint8))


def hamming(bits: np.ndarray) -> np.ndarray:
    return _impl.hamming(np.ascontiguousarray(bits, dtype=np.uint8))


def block_max(cols: np.ndarray) -> np.ndarray:
    """Largest of the four intersection blocks for every pair of columns."""
    return _impl.block_max(np.ascontiguousarray(cols, dtype=np.uint8))


def subset_pair_counts(masks: np.ndarray, k: int, base: np.ndarray | None = None) -> np.ndarray:
    """Number of split pairs for every ``k``-subset of questions.

    Subsets are enumerated in :func:`itertools.combinations` order. Pairs
    already split by ``base`` (a packed pair set) count for every subset.
    """
    masks = np.ascontiguousarray(masks, dtype=np.uint64)
    if base is None:
        base = np.zeros(masks.shape[1], dtype=np.uint64)
    return _impl.subset_pair_counts(masks, k, np.ascontiguousarray(base, dtype=np.uint64))
