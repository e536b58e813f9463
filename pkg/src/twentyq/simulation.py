"""Synthetic model populations.

These are stand-ins for a real population of models, not fits to one:

* ``uniform``: every answer an independent fair coin;
* ``irt``: logistic skill-minus-difficulty (Rasch) answers, which produces
  questions most models get right and questions most get wrong;
* ``clones``: a few base models plus noisy copies, like versions within a
  model family.

Every generator is a pure function of its :class:`PopulationSpec`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .matrix import ResponseMatrix

__all__ = [
    "GENERATOR_VERSION",
    "KINDS",
    "PopulationSpec",
    "gen_uniform",
    "gen_irt",
    "gen_clones",
    "generate",
    "sample_distinct_pairs",
]

GENERATOR_VERSION = "1"
KINDS = ("uniform", "irt", "clones")


@dataclass(frozen=True)
class PopulationSpec:
    kind: str
    n_models: int
    n_questions: int
    seed: int
    sigma_skill: float = 1.0
    sigma_difficulty: float = 1.0
    families: int = 1
    flip_rate: float = 0.0
    distinct: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown population kind {self.kind!r}")
        if self.n_models < 2 or self.n_questions < 1:
            raise ValueError("need at least 2 models and 1 question")
        if not 0.0 <= self.flip_rate <= 1.0:
            raise ValueError("flip rate must lie in [0, 1]")
        if self.sigma_skill < 0 or self.sigma_difficulty < 0:
            raise ValueError("spreads must be non-negative")
        if self.kind == "clones" and not 1 <= self.families <= self.n_models:
            raise ValueError(f"families must lie in 1..{self.n_models}")
        if self.distinct and self.n_questions < 63 and 2**self.n_questions < self.n_models:
            raise ValueError("too few questions for that many distinct models")

    def to_dict(self) -> dict:
        return asdict(self)


def _ids(spec: PopulationSpec) -> tuple[list[str], list[str]]:
    wm = len(str(spec.n_models - 1))
    wq = len(str(spec.n_questions - 1))
    return ([f"m{i:0{wm}d}" for i in range(spec.n_models)],
            [f"q{j:0{wq}d}" for j in range(spec.n_questions)])


def _resample_duplicates(bits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Redraw later copies of repeated rows until every row is unique."""
    seen = set()
    for i in range(len(bits)):
        key = bits[i].tobytes()
        while key in seen:
            bits[i] = rng.integers(0, 2, size=bits.shape[1], dtype=np.uint8)
            key = bits[i].tobytes()
        seen.add(key)
    return bits


def _finish(bits: np.ndarray, spec: PopulationSpec, rng: np.random.Generator) -> ResponseMatrix:
    if spec.distinct:
        bits = _resample_duplicates(bits, rng)
    return ResponseMatrix(bits, *_ids(spec))


def gen_uniform(spec: PopulationSpec) -> ResponseMatrix:
    if spec.kind != "uniform":
        raise ValueError("spec is not a uniform population")
    rng = np.random.default_rng(spec.seed)
    bits = rng.integers(0, 2, size=(spec.n_models, spec.n_questions), dtype=np.uint8)
    return _finish(bits, spec, rng)


def gen_irt(spec: PopulationSpec) -> ResponseMatrix:
    if spec.kind != "irt":
        raise ValueError("spec is not an irt population")
    rng = np.random.default_rng(spec.seed)
    skill = rng.normal(0.0, spec.sigma_skill, size=spec.n_models)
    difficulty = rng.normal(0.0, spec.sigma_difficulty, size=spec.n_questions)
    p = 1.0 / (1.0 + np.exp(-(skill[:, None] - difficulty[None, :])))
    bits = (rng.random((spec.n_models, spec.n_questions)) < p).astype(np.uint8)
    return _finish(bits, spec, rng)


def gen_clones(spec: PopulationSpec) -> ResponseMatrix:
    """F base rows, then copies assigned round-robin with independent bit flips.

    Model i belongs to family ``i % F``.
    """
    if spec.kind != "clones":
        raise ValueError("spec is not a clones population")
    rng = np.random.default_rng(spec.seed)
    F, L, K = spec.families, spec.n_models, spec.n_questions
    bits = np.empty((L, K), dtype=np.uint8)
    bits[:F] = rng.integers(0, 2, size=(F, K), dtype=np.uint8)
    for i in range(F, L):
        flips = rng.random(K) < spec.flip_rate
        bits[i] = bits[i % F] ^ flips
    return _finish(bits, spec, rng)


_GENERATORS = {"uniform": gen_uniform, "irt": gen_irt, "clones": gen_clones}


def generate(spec: PopulationSpec) -> ResponseMatrix:
    return _GENERATORS[spec.kind](spec)


def sample_distinct_pairs(n_pairs: int, n_questions: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """``n_pairs`` independent draws of two uniform models with different rows.

    Returns two ``(n_pairs, n_questions)`` arrays. Equal draws are redrawn.
    """
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 2, size=(n_pairs, n_questions), dtype=np.uint8)
    b = rng.integers(0, 2, size=(n_pairs, n_questions), dtype=np.uint8)
    same = np.flatnonzero((a == b).all(axis=1))
    while len(same):
        b[same] = rng.integers(0, 2, size=(len(same), n_questions), dtype=np.uint8)
        same = same[(a[same] == b[same]).all(axis=1)]
    return a, b
