"""CSV and JSON writers for every artifact the CLI emits.

Floats are written with ``repr`` (shortest round-trip form), never rounded.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .experiment import DistinguishCdf, ExperimentResult, SweepRow, cdf_to_accuracy
from .heuristics import ScoreVector, order_questions
from .matrix import ResponseMatrix
from .theory import BruteForceResult, OptimalLaw


def num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        x = float(x)
    return repr(float(x))


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, Fraction)):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps_json(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path: Path, obj) -> None:
    Path(path).write_text(dumps_json(obj), encoding="utf-8")


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([c if isinstance(c, str) else num(c) for c in row])
    return buf.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    Path(path).write_bytes(csv_text(header, rows).encode("utf-8"))


def scores_rows(matrix: ResponseMatrix, sv: ScoreVector) -> list[tuple[str, float]]:
    return [(matrix.question_ids[q], float(sv.scores[q])) for q in order_questions(sv)]


def read_scores(path: Path, matrix: ResponseMatrix) -> ScoreVector:
    """Read a ``question_id,score`` file back into a score vector over ``matrix``."""
    scores = np.zeros(matrix.n_questions)
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["question_id", "score"]:
            raise ValueError("scores file header must be question_id,score")
        for rec in reader:
            q = matrix.question_index(rec["question_id"])
            seen.add(q)
            scores[q] = float(rec["score"])
    if len(seen) != matrix.n_questions:
        raise ValueError("scores file does not cover every question of the matrix")
    return ScoreVector(scores, None, "file")


def cdf_rows(cdf: DistinguishCdf, prior_h0: float, k_max: int) -> list[tuple]:
    curve = cdf_to_accuracy(cdf, prior_h0, k_max)
    cum = cdf.cumulative_array(k_max)
    rows = []
    for k in range(1, k_max + 1):
        rows.append((k, cdf.counts.get(k, 0), int(cum[k - 1]),
                     Fraction(int(cum[k - 1]), cdf.total_pairs) if cdf.total_pairs else 1.0,
                     float(curve.acc[k - 1])))
    return rows


CDF_HEADER = ("k", "pairs_at_k", "cum_pairs", "cum_fraction", "accuracy")
ACCURACY_HEADER = ("k", "mean", "std", "best", "worst")


def accuracy_rows(result: ExperimentResult) -> list[tuple]:
    s = result.summary
    return [(k + 1, s.mean[k], s.std[k], s.best.acc[k], s.worst.acc[k]) for k in range(len(s.mean))]


def summary_dict(result: ExperimentResult, levels: Sequence[float] = (0.95,)) -> dict:
    s = result.summary
    out = {
        "heuristic": result.heuristic,
        "seed_policy": "seed + run index",
        "seeds": {"first": result.seeds[0], "last": result.seeds[-1]},
        "runs": len(result.seeds),
        "prior_h0": result.curves[0].prior_h0,
        "k_max": result.curves[0].k_max,
        "per_k": [{"k": k + 1, "mean": s.mean[k], "std": s.std[k]} for k in range(len(s.mean))],
        "mean_auc": s.mean_auc,
        "best": {"seed": result.seeds[s.best_index], "auc": s.best.auc},
        "worst": {"seed": result.seeds[s.worst_index], "auc": s.worst.auc},
        "undistinguished_pairs": result.cdfs[0].undistinguished,
        "total_pairs": result.cdfs[0].total_pairs,
    }
    for level in levels:
        ks = result.k_at_accuracy(level)
        reached = [k for k in ks if k is not None]
        out[f"questions_to_accuracy_{level!r}"] = {
            "mean": float(np.mean(reached)) if reached else None,
            "unreached_runs": len(ks) - len(reached),
        }
    return out


def law_rows(law: OptimalLaw) -> list[tuple]:
    return [(k, v) for k, v in sorted(law.values.items())]


def brute_force_dict(matrix: ResponseMatrix, res: BruteForceResult) -> dict:
    return {
        "k": res.k,
        "best_fraction": float(res.best_fraction),
        "best_pairs": res.best_pairs,
        "total_pairs": res.total_pairs,
        "best_sets": [[matrix.question_ids[q] for q in s] for s in res.best_sets],
        "sets_examined": res.sets_examined,
    }


def sweep_rows(rows: Sequence[SweepRow]) -> list[tuple]:
    return [(r.n_models, "unreachable" if r.k_needed is None else r.k_needed, r.target) for r in rows]
