"""Command line entry point: ``twentyq <subcommand> ...``.

Every subcommand writes into ``--out DIR`` and leaves a ``manifest.json``
echoing the configuration needed to replay it. Any flag may also come from a
JSON file given with ``--config``; flags on the command line win.
"""

from __future__ import annotations

import hashlib
import json
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import click
import numpy as np

from . import experiment as exp
from . import formats as fmt
from . import heuristics, interrogator, simulation, theory
from .matrix import correct_count_histogram, hamming_distance_matrix, load_matrix, save_matrix

try:
    __version__ = version("twentyq")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0+unknown"

# execution details that never change the results
_NOT_IN_MANIFEST = {"jobs", "force", "config", "out"}


def _load_config(ctx: click.Context, param: click.Parameter, value):
    if value is None:
        return None
    try:
        data = json.loads(Path(value).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise click.BadParameter(f"cannot read config: {exc}") from None
    if not isinstance(data, dict):
        raise click.BadParameter("config must be a JSON object")
    defaults = dict(ctx.default_map or {})
    defaults.update({k.replace("-", "_"): v for k, v in data.items()})
    ctx.default_map = defaults
    return value


def common(func):
    """Options shared by every subcommand.

    ``--jobs`` is accepted everywhere so one config drives any subcommand;
    only experiment, theory and scalability have work to spread over threads.
    """
    func = click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True,
                        help="Worker threads; outputs do not depend on it.")(func)
    func = click.option("--force", is_flag=True, help="Overwrite existing outputs.")(func)
    func = click.option("--out", "out", required=True, type=click.Path(file_okay=False, path_type=Path),
                        help="Output directory.")(func)
    func = click.option("--config", type=click.Path(dir_okay=False), callback=_load_config,
                        is_eager=True, expose_value=True,
                        help="JSON file supplying any flag; explicit flags win.")(func)
    return func



def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Outputs:
    """Collects files for one output directory and refuses silent overwrites."""

    def __init__(self, out: Path, force: bool, names: list[str]):
        self.out = out
        existing = [n for n in [*names, "manifest.json"] if (out / n).exists()]
        if existing and not force:
            raise click.ClickException(f"{out / existing[0]} exists; pass --force to overwrite")
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.out / name

    def manifest(self, command: str, params: dict, **extra) -> None:
        config = {k: v for k, v in params.items() if k not in _NOT_IN_MANIFEST}
        body = {"command": command, "twentyq_version": __version__, "config": config, **extra}
        fmt.write_json(self.out / "manifest.json", body)


def _inputs(**paths) -> dict:
    return {name: {"path": str(p), "sha256": _sha256(p)} for name, p in paths.items() if p is not None}


@click.group()
@click.version_option(__version__, prog_name="twentyq")
def cli():
    """Pick discriminating binary questions and test whether two models are the same."""


# --------------------------------------------------------------------------


@cli.command()
@common
@click.option("--kind", type=click.Choice(simulation.KINDS), required=True)
@click.option("--models", type=click.IntRange(min=2), required=True)
@click.option("--questions", type=click.IntRange(min=1), required=True)
@click.option("--seed", type=int, required=True, help="Required: runs must be replayable.")
@click.option("--sigma-skill", type=click.FloatRange(min=0), default=1.0, show_default=True)
@click.option("--sigma-difficulty", type=click.FloatRange(min=0), default=1.0, show_default=True)
@click.option("--families", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--flip", type=click.FloatRange(0, 1), default=0.0, show_default=True)
@click.option("--distinct", is_flag=True, help="Redraw duplicate rows.")
def simulate(**p):
    """Generate a synthetic population as a matrix CSV."""
    spec = simulation.PopulationSpec(p["kind"], p["models"], p["questions"], p["seed"],
                                     sigma_skill=p["sigma_skill"], sigma_difficulty=p["sigma_difficulty"],
                                     families=p["families"], flip_rate=p["flip"], distinct=p["distinct"])
    outs = Outputs(p["out"], p["force"], ["matrix.csv"])
    matrix = simulation.generate(spec)
    save_matrix(matrix, outs.path("matrix.csv"))
    outs.manifest("simulate", p, spec=spec.to_dict(), generator_version=simulation.GENERATOR_VERSION)


@cli.command()
@common
@click.option("--matrix", "matrix_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True)
@click.option("--heuristic", type=click.Choice(heuristics.HEURISTICS), required=True)
@click.option("--seed", type=int, required=True)
@click.option("--max-iter", type=click.IntRange(min=1), default=heuristics.DEFAULT_MAX_ITER, show_default=True)
def score(**p):
    """Score every question of a matrix and write them best first."""
    outs = Outputs(p["out"], p["force"], ["scores.csv"])
    matrix = load_matrix(p["matrix_path"])
    sv = heuristics.score(matrix, p["heuristic"], p["seed"], p["max_iter"])
    fmt.write_csv(outs.path("scores.csv"), ("question_id", "score"), fmt.scores_rows(matrix, sv))
    outs.manifest("score", p, inputs=_inputs(matrix=p["matrix_path"]), heuristic=p["heuristic"],
                  seed=p["seed"], selection=[matrix.question_ids[q] for q in sv.selection])


@cli.command()
@common
@click.option("--matrix", "matrix_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True)
@click.option("--heuristic", type=click.Choice(heuristics.HEURISTICS), required=True)
@click.option("--seed", type=int, required=True, help="Run r uses seed + r.")
@click.option("--runs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--k-max", type=click.IntRange(min=1), default=exp.DEFAULT_K_MAX, show_default=True)
@click.option("--prior", type=click.FloatRange(0, 1), default=exp.DEFAULT_PRIOR, show_default=True)
@click.option("--max-iter", type=click.IntRange(min=1), default=heuristics.DEFAULT_MAX_ITER, show_default=True)
def experiment(**p):
    """Repeat the pairwise distinguishing experiment and summarize the runs."""
    outs = Outputs(p["out"], p["force"], ["cdf.csv", "accuracy.csv", "summary.json"])
    matrix = load_matrix(p["matrix_path"])
    result = exp.run_experiment(matrix, p["heuristic"], p["seed"], p["runs"], p["k_max"], p["prior"],
                                p["max_iter"], jobs=p["jobs"])
    fmt.write_csv(outs.path("cdf.csv"), fmt.CDF_HEADER, fmt.cdf_rows(result.cdfs[0], p["prior"], p["k_max"]))
    fmt.write_csv(outs.path("accuracy.csv"), fmt.ACCURACY_HEADER, fmt.accuracy_rows(result))
    fmt.write_json(outs.path("summary.json"), fmt.summary_dict(result))
    outs.manifest("experiment", p, inputs=_inputs(matrix=p["matrix_path"]))


@cli.command("theory")
@common
@click.option("--law", type=click.Choice(["finite", "infinite"]), help="Emit the optimal law as law.csv.")
@click.option("--n", "n", type=click.IntRange(min=1), help="log2 of the model count (finite law).")
@click.option("--kmax", type=click.IntRange(min=1), default=exp.DEFAULT_K_MAX, show_default=True)
@click.option("--brute-force", is_flag=True, help="Exhaustive best k-subset search on --matrix.")
@click.option("--matrix", "matrix_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--k", "k", type=click.IntRange(min=1))
@click.option("--budget", type=click.IntRange(min=1), default=theory.DEFAULT_BUDGET, show_default=True)
def theory_cmd(**p):
    """Closed-form optimal laws, or brute-force optimal question sets."""
    if p["brute_force"] == (p["law"] is not None):
        raise click.UsageError("give exactly one of --law or --brute-force")
    if p["law"]:
        if p["law"] == "finite" and p["n"] is None:
            raise click.UsageError("--law finite needs --n")
        outs = Outputs(p["out"], p["force"], ["law.csv"])
        law = (theory.finite_law(p["n"], p["kmax"]) if p["law"] == "finite"
               else theory.infinite_law(p["kmax"]))
        fmt.write_csv(outs.path("law.csv"), ("k", "p"), fmt.law_rows(law))
        outs.manifest("theory", p)
        return
    if p["matrix_path"] is None or p["k"] is None:
        raise click.UsageError("--brute-force needs --matrix and --k")
    outs = Outputs(p["out"], p["force"], ["brute_force.json"])
    matrix = load_matrix(p["matrix_path"])
    res = theory.brute_force_best_set(matrix, p["k"], p["budget"], jobs=p["jobs"])
    fmt.write_json(outs.path("brute_force.json"), fmt.brute_force_dict(matrix, res))
    outs.manifest("theory", p, inputs=_inputs(matrix=p["matrix_path"]))


@cli.command()
@common
@click.option("--matrix", "matrix_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True)
@click.option("--distances", is_flag=True, help="Also write the L x L Hamming distance table.")
def analyze(**p):
    """Correct-count histogram against its matched binomial, and distances."""
    names = ["histogram.csv", "binomial.csv", "analysis.json"] + (["distances.csv"] if p["distances"] else [])
    outs = Outputs(p["out"], p["force"], names)
    matrix = load_matrix(p["matrix_path"])
    L = matrix.n_models
    hist = correct_count_histogram(matrix)
    ref = exp.binomial_reference(hist, L)
    fmt.write_csv(outs.path("histogram.csv"), ("c", "fraction"), [(c, hist[c]) for c in range(L + 1)])
    fmt.write_csv(outs.path("binomial.csv"), ("c", "empirical", "binomial"),
                  [(c, hist[c], ref.pmf[c]) for c in range(L + 1)])
    c = np.arange(L + 1)
    fmt.write_json(outs.path("analysis.json"), {
        "models": L,
        "questions": matrix.n_questions,
        "mean_correct_rate": ref.p_bar,
        "empirical_mean_count": float((c * hist).sum()),
        "binomial_mean_count": float((c * ref.pmf).sum()),
        "tv_distance": ref.tv,
    })
    if p["distances"]:
        d = hamming_distance_matrix(matrix)
        fmt.write_csv(outs.path("distances.csv"), ("model_id", *matrix.model_ids),
                      [(mid, *row) for mid, row in zip(matrix.model_ids, d.tolist())])
    outs.manifest("analyze", p, inputs=_inputs(matrix=p["matrix_path"]))


def _parse_range(text: str) -> list[int]:
    lo, sep, hi = text.partition(":")
    try:
        return list(range(int(lo), int(hi) + 1)) if sep else [int(lo)]
    except ValueError:
        raise click.BadParameter(f"expected N or N_MIN:N_MAX, got {text!r}") from None


@cli.command()
@common
@click.option("--matrix", "matrix_paths", multiple=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path), help="Population (repeatable).")
@click.option("--complete", help="Also sweep complete model sets 2**n for n in N_MIN:N_MAX.")
@click.option("--heuristic", type=click.Choice(exp.ORDERINGS), required=True)
@click.option("--seed", type=int, required=True)
@click.option("--target", type=click.FloatRange(0, 1, min_open=True), default=0.99, show_default=True)
@click.option("--max-iter", type=click.IntRange(min=1), default=heuristics.DEFAULT_MAX_ITER, show_default=True)
def scalability(**p):
    """Questions needed to split a target fraction of pairs, per population size."""
    pops = [load_matrix(path) for path in p["matrix_paths"]]
    if p["complete"]:
        pops += [theory.complete_model_set(n) for n in _parse_range(p["complete"])]
    if not pops:
        raise click.UsageError("give --matrix and/or --complete")
    outs = Outputs(p["out"], p["force"], ["sweep.csv"])
    rows = exp.scalability_sweep(pops, p["heuristic"], p["seed"], p["target"], p["max_iter"], jobs=p["jobs"])
    fmt.write_csv(outs.path("sweep.csv"), ("L", "k_needed", "target"), fmt.sweep_rows(rows))
    outs.manifest("scalability", {**p, "matrix_paths": [str(x) for x in p["matrix_paths"]]},
                  inputs=[_inputs(matrix=x)["matrix"] for x in p["matrix_paths"]])


@cli.command()
@common
@click.option("--matrix", "matrix_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True, help="Reference matrix defining the questions.")
@click.option("--scores", "scores_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Question order from a scores CSV.")
@click.option("--heuristic", type=click.Choice(exp.ORDERINGS), help="Or order with a heuristic.")
@click.option("--seed", type=int)
@click.option("--max-iter", type=click.IntRange(min=1), default=heuristics.DEFAULT_MAX_ITER, show_default=True)
@click.option("--model-a", help="Model id in --matrix answering as side a.")
@click.option("--model-b", help="Model id in --matrix answering as side b.")
@click.option("--endpoint-a", help="HOST:PORT of a remote oracle for side a.")
@click.option("--endpoint-b", help="HOST:PORT of a remote oracle for side b.")
@click.option("--budget", type=click.IntRange(min=1), default=interrogator.DEFAULT_BUDGET, show_default=True)
@click.option("--timeout", type=click.FloatRange(min=0, min_open=True), default=interrogator.DEFAULT_TIMEOUT,
              show_default=True)
@click.option("--retries", type=click.IntRange(0, 1), default=0, show_default=True)
def interrogate(**p):
    """Run the sequential test between two oracles and write verdict.json."""
    matrix = load_matrix(p["matrix_path"])
    if (p["scores_path"] is None) == (p["heuristic"] is None):
        raise click.UsageError("give exactly one of --scores or --heuristic")
    if p["scores_path"] is not None:
        ordered = heuristics.order_questions(fmt.read_scores(p["scores_path"], matrix))
    else:
        if p["seed"] is None:
            raise click.UsageError("--heuristic needs --seed")
        ordered = exp.ordering_for(matrix, p["heuristic"], p["seed"], p["max_iter"])

    def side(name: str):
        model, endpoint = p[f"model_{name}"], p[f"endpoint_{name}"]
        if (model is None) == (endpoint is None):
            raise click.UsageError(f"give exactly one of --model-{name} or --endpoint-{name}")
        if model is not None:
            return interrogator.matrix_oracle(matrix, matrix.model_index(model))
        return interrogator.remote_oracle(interrogator.Endpoint.parse(endpoint, p["timeout"], p["retries"]))

    outs = Outputs(p["out"], p["force"], ["verdict.json"])
    a, b = side("a"), side("b")
    try:
        verdict = interrogator.sequential_test(a, b, interrogator.ordered_question_ids(matrix, ordered),
                                               p["budget"])
    finally:
        for o in (a, b):
            if hasattr(o, "close"):
                o.close()
    fmt.write_json(outs.path("verdict.json"), verdict.to_dict())
    outs.manifest("interrogate", p, inputs=_inputs(matrix=p["matrix_path"], scores=p["scores_path"]))
    if verdict.decision == interrogator.ABORTED:
        raise click.ClickException(f"interrogation aborted: {verdict.error}")


# --------------------------------------------------------------------------


def _error_line(kind: str, message: str) -> str:
    return json.dumps({"error": kind, "message": " ".join(str(message).split())})


def main(argv=None) -> int:
    """Run the CLI; failures print one JSON line on stderr and exit nonzero."""
    try:
        rv = cli.main(args=argv, prog_name="twentyq", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        print(_error_line("Abort", "aborted"), file=sys.stderr)
        return 1
    except click.UsageError as exc:
        print(_error_line("UsageError", exc.format_message()), file=sys.stderr)
        return 2
    except click.ClickException as exc:
        print(_error_line(type(exc).__name__, exc.format_message()), file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError, RuntimeError, IndexError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(_error_line(type(exc).__name__, message), file=sys.stderr)
        return 1
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
