"""Binary response matrix: ingestion, binarization, partitions and statistics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import kernels

__all__ = [
    "MatrixFormatError",
    "MatrixValidationError",
    "ResponseMatrix",
    "Partition",
    "RawAnswerSet",
    "Binarized",
    "UNPARSEABLE",
    "load_matrix",
    "save_matrix",
    "load_raw_answers",
    "binarize",
    "partition_of",
    "hamming_distance_matrix",
    "correct_count_histogram",
    "correct_count_histogram_exact",
]

UNPARSEABLE = "?"


class MatrixFormatError(ValueError):
    """A matrix file could not be parsed."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.row = row
        self.column = column


class MatrixValidationError(ValueError):
    """A matrix violates one of its structural invariants."""


class ResponseMatrix:
    """L models by K questions; ``bits[m, q] == 1`` iff model m answers q correctly.

    Instances are immutable. Columns are also kept as packed bit vectors
    (``packed_columns[q]``), since per-question partitions are what the
    heuristics touch most.
    """

    __slots__ = ("model_ids", "question_ids", "bits", "packed_columns", "_model_pos", "_question_pos")

    def __init__(self, bits, model_ids: Sequence[str] | None = None,
                 question_ids: Sequence[str] | None = None):
        arr = np.asarray(bits)
        if arr.ndim != 2:
            raise MatrixValidationError(f"bits must be 2-D, got shape {arr.shape}")
        L, K = arr.shape
        if L < 1:
            raise MatrixValidationError("no models")
        if L < 2:
            raise MatrixValidationError(f"need at least 2 models, got {L}")
        if K < 1:
            raise MatrixValidationError("need at least 1 question")
        if not np.isin(arr, (0, 1)).all():
            raise MatrixValidationError("every cell must be 0 or 1")
        if model_ids is None:
            model_ids = [f"m{i}" for i in range(L)]
        if question_ids is None:
            question_ids = [f"q{j}" for j in range(K)]
        model_ids = tuple(str(m) for m in model_ids)
        question_ids = tuple(str(q) for q in question_ids)
        if len(model_ids) != L or len(question_ids) != K:
            raise MatrixValidationError("identifier count does not match matrix shape")
        _check_unique(model_ids, "model")
        _check_unique(question_ids, "question")

        frozen = np.ascontiguousarray(arr, dtype=np.uint8)
        frozen.flags.writeable = False
        packed = np.packbits(frozen.T, axis=1)
        packed.flags.writeable = False
        self.model_ids = model_ids
        self.question_ids = question_ids
        self.bits = frozen
        self.packed_columns = packed
        self._model_pos = {m: i for i, m in enumerate(model_ids)}
        self._question_pos = {q: j for j, q in enumerate(question_ids)}

    @property
    def n_models(self) -> int:
        return self.bits.shape[0]

    @property
    def n_questions(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    def model_index(self, model_id: str) -> int:
        try:
            return self._model_pos[model_id]
        except KeyError:
            raise KeyError(f"unknown model id {model_id!r}") from None

    def question_index(self, question_id: str) -> int:
        try:
            return self._question_pos[question_id]
        except KeyError:
            raise KeyError(f"unknown question id {question_id!r}") from None

    def column(self, q: int) -> np.ndarray:
        """Unpacked column ``q`` (derived from the packed store)."""
        return np.unpackbits(self.packed_columns[q], count=self.n_models)

    def row(self, m: int) -> np.ndarray:
        return self.bits[m]

    def column_sums(self) -> np.ndarray:
        return kernels.popcount(self.packed_columns).sum(axis=1).astype(np.int64)

    def __eq__(self, other):
        if not isinstance(other, ResponseMatrix):
            return NotImplemented
        return (self.model_ids == other.model_ids and self.question_ids == other.question_ids
                and np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((self.model_ids, self.question_ids, self.bits.tobytes()))

    def __repr__(self):
        return f"ResponseMatrix(L={self.n_models}, K={self.n_questions})"


def _check_unique(ids: Sequence[str], kind: str) -> None:
    seen = set()
    for ident in ids:
        if ident in seen:
            raise MatrixValidationError(f"duplicate {kind} id {ident!r}")
        seen.add(ident)


@dataclass(frozen=True)
class Partition:
    """The models answering 1 to a question; the complement is implicit."""

    members: frozenset
    universe_size: int

    def __post_init__(self):
        if any(not 0 <= m < self.universe_size for m in self.members):
            raise ValueError("partition members must lie in 0..L-1")

    @classmethod
    def from_mask(cls, mask) -> "Partition":
        mask = np.asarray(mask)
        return cls(frozenset(int(i) for i in np.flatnonzero(mask)), len(mask))

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def complement_size(self) -> int:
        return self.universe_size - len(self.members)

    def complement(self) -> "Partition":
        rest = frozenset(range(self.universe_size)) - self.members
        return Partition(rest, self.universe_size)

    def mask(self) -> np.ndarray:
        out = np.zeros(self.universe_size, dtype=np.uint8)
        out[list(self.members)] = 1
        return out


# --------------------------------------------------------------------------
# CSV I/O
# --------------------------------------------------------------------------


def load_matrix(path: str | Path) -> ResponseMatrix:
    """Read a matrix CSV (``model_id,<q1>,...,<qK>``, cells ``0``/``1``)."""
    text = Path(path).read_text(encoding="utf-8")
    return parse_matrix_csv(text)


def parse_matrix_csv(text: str) -> ResponseMatrix:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not any(rows):
        raise MatrixValidationError("no models")
    header, body = rows[0], [r for r in rows[1:] if r]
    if len(header) < 2 or header[0] != "model_id":
        raise MatrixFormatError("header must start with 'model_id' followed by question ids", row=1)
    if not body:
        raise MatrixValidationError("no models")
    K = len(header) - 1
    bits = np.empty((len(body), K), dtype=np.uint8)
    model_ids = []
    for r, row in enumerate(body, start=2):
        if len(row) != K + 1:
            raise MatrixFormatError(f"expected {K + 1} fields, got {len(row)}", row=r)
        model_ids.append(row[0])
        for c, cell in enumerate(row[1:], start=2):
            if cell == "0":
                bits[r - 2, c - 2] = 0
            elif cell == "1":
                bits[r - 2, c - 2] = 1
            else:
                raise MatrixFormatError(f"cell {cell!r} is not 0 or 1", row=r, column=c)
    return ResponseMatrix(bits, model_ids, header[1:])


def format_matrix_csv(matrix: ResponseMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model_id", *matrix.question_ids])
    for mid, row in zip(matrix.model_ids, matrix.bits):
        writer.writerow([mid, *("1" if b else "0" for b in row)])
    return buf.getvalue()


def save_matrix(matrix: ResponseMatrix, path: str | Path) -> None:
    Path(path).write_bytes(format_matrix_csv(matrix).encode("utf-8"))


# --------------------------------------------------------------------------
# Binarization of raw multiple-choice answers
# --------------------------------------------------------------------------


@dataclass
class RawAnswerSet:
    """Chosen option labels per (model, question) plus gold labels.

    ``options`` optionally lists the valid labels of each question; when given,
    the gold label must be one of them and chosen labels outside the list are
    treated as unparseable.
    """

    chosen: dict[tuple[str, str], str]
    gold: dict[str, str]
    options: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for q, labels in self.options.items():
            if q in self.gold and self.gold[q] not in labels:
                raise MatrixValidationError(f"gold label {self.gold[q]!r} of {q!r} is not an option")

    def option_count(self, question_id: str) -> int | None:
        labels = self.options.get(question_id)
        return None if labels is None else len(labels)


class Binarized(NamedTuple):
    matrix: ResponseMatrix
    unparseable: int


def load_raw_answers(path: str | Path) -> RawAnswerSet:
    """Read a raw-answer CSV with header ``model_id,question_id,chosen,gold``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = ["model_id", "question_id", "chosen", "gold"]
        if reader.fieldnames != expected:
            raise MatrixFormatError(f"raw-answer header must be {','.join(expected)}", row=1)
        chosen: dict[tuple[str, str], str] = {}
        gold: dict[str, str] = {}
        for r, rec in enumerate(reader, start=2):
            q = rec["question_id"]
            if q in gold and gold[q] != rec["gold"]:
                raise MatrixFormatError(f"conflicting gold labels for {q!r}", row=r)
            gold[q] = rec["gold"]
            key = (rec["model_id"], q)
            if key in chosen:
                raise MatrixValidationError(f"duplicate answer for model {key[0]!r}, question {q!r}")
            chosen[key] = rec["chosen"]
    return RawAnswerSet(chosen, gold)


def binarize(raw: RawAnswerSet) -> Binarized:
    """Map each answer to 1 if it equals the gold label, else 0.

    Unparseable answers (``?``, empty, or outside the question's options)
    become 0 and are tallied in ``Binarized.unparseable``.
    """
    models = list(dict.fromkeys(m for m, _ in raw.chosen))
    questions = list(dict.fromkeys(q for _, q in raw.chosen))
    missing_gold = [q for q in questions if q not in raw.gold]
    if missing_gold:
        raise MatrixValidationError(f"no gold label for question {missing_gold[0]!r}")
    bits = np.zeros((len(models), len(questions)), dtype=np.uint8)
    unparseable = 0
    for i, m in enumerate(models):
        for j, q in enumerate(questions):
            try:
                answer = raw.chosen[(m, q)]
            except KeyError:
                raise MatrixValidationError(f"model {m!r} has no answer for {q!r}") from None
            labels = raw.options.get(q)
            if answer in ("", UNPARSEABLE) or (labels is not None and answer not in labels):
                unparseable += 1
                continue
            bits[i, j] = answer == raw.gold[q]
    return Binarized(ResponseMatrix(bits, models, questions), unparseable)


# --------------------------------------------------------------------------
# Partitions and response-vector statistics
# --------------------------------------------------------------------------


def partition_of(matrix: ResponseMatrix, q: int) -> Partition:
    if not 0 <= q < matrix.n_questions:
        raise IndexError(f"question index {q} out of range 0..{matrix.n_questions - 1}")
    return Partition.from_mask(matrix.column(q))


def hamming_distance_matrix(matrix: ResponseMatrix) -> np.ndarray:
    """L x L count of questions on which two models' answers differ."""
    return kernels.hamming(matrix.bits)


def correct_count_histogram_exact(matrix: ResponseMatrix) -> list[Fraction]:
    """Exact fraction of questions answered correctly by exactly c models, c = 0..L."""
    counts = np.bincount(matrix.column_sums(), minlength=matrix.n_models + 1)
    K = matrix.n_questions
    return [Fraction(int(n), K) for n in counts]


def correct_count_histogram(matrix: ResponseMatrix) -> np.ndarray:
    """Fraction of questions answered correctly by exactly c models, indexed by c."""
    counts = np.bincount(matrix.column_sums(), minlength=matrix.n_models + 1)
    return counts / matrix.n_questions


def rows_equal_groups(bits: np.ndarray) -> np.ndarray:
    """Sizes of the groups of identical rows."""
    _, sizes = np.unique(bits, axis=0, return_counts=True)
    return sizes


def iter_pairs(n: int) -> Iterable[tuple[int, int]]:
    for i in range(n):
        for j in range(i + 1, n):
            yield i, j
