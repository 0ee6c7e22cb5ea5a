"""Command-line pipeline: project -> saturate -> train -> evaluate, plus sweep.

Every command writes its resolved configuration as JSON next to its
outputs. Settings come from (lowest to highest priority) built-in defaults,
a ``--config`` JSON file, and explicit flags. The default seed is read from
``CATE_SEED``.
"""

from __future__ import annotations

import json
import logging
import sys
from collections import Counter
from dataclasses import asdict, fields
from pathlib import Path

import click
import numpy as np

from . import plotting
from .alc import ALCSyntaxError, NonALCConstructError, Ontology, parse_ontology
from .embedding import (
    FULL_GRID,
    EmbeddingTable,
    NonFiniteLossError,
    TrainConfig,
    grid_configs,
    grid_sweep,
    load_embeddings,
    save_embeddings,
    train,
)
from .evaluation import (
    UnknownConceptError,
    MissingNodeError,
    named_concepts,
    read_names,
    read_pairs,
    remove_test_overlap,
    run_ppi,
    run_subsumption,
    run_unsat,
)
from .graph import Graph, MalformedGraphError, read_graph, write_graph
from .projection import ProjectionOptions, UnknownNameError, add_existential_scaffold, project_ontology
from .saturation import SaturationNotConverged, saturate

log = logging.getLogger("cate")

TRAIN_KEYS = [f.name for f in fields(TrainConfig)]
TASKS = ("unsat", "deductive", "inductive", "ppi")


# ------------------------------------------------------------ config


def resolve_config(ctx: click.Context, params: dict, config_path: str | None) -> dict:
    """Merge a JSON config file under the explicitly given flags.

    Unknown keys in the file are rejected.
    """
    resolved = dict(params)
    resolved.pop("config", None)
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = sorted(set(loaded) - set(resolved))
        if unknown:
            raise click.UsageError(f"unknown config key(s) in {config_path}: {', '.join(unknown)}")
        for key, value in loaded.items():
            if ctx.get_parameter_source(key) in (click.core.ParameterSource.DEFAULT, None):
                resolved[key] = value
    return resolved


def write_config(resolved: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _config_path(out: str) -> Path:
    return Path(str(out) + ".config.json")


def _names_path(graph_path) -> Path:
    return Path(str(graph_path) + ".names.tsv")


def _train_config(resolved: dict) -> TrainConfig:
    try:
        return TrainConfig(**{k: resolved[k] for k in TRAIN_KEYS})
    except (TypeError, ValueError) as exc:
        raise click.UsageError(str(exc)) from None


def _load_graph(path) -> Graph:
    try:
        return read_graph(path)
    except MalformedGraphError as exc:
        raise click.ClickException(f"{path}: {exc}") from None


def train_options(f):
    d = TrainConfig()
    opts = [
        click.option("--variant", type=click.Choice(["graph", "preorder"]), default=d.variant, show_default=True),
        click.option("--dim", type=int, default=d.dim, show_default=True),
        click.option("--l2-reg", "l2_reg", type=float, default=d.l2_reg, show_default=True),
        click.option("--margin", type=float, default=d.margin, show_default=True),
        click.option("--batch-size", "batch_size", type=int, default=d.batch_size, show_default=True),
        click.option("--epochs", type=int, default=d.epochs, show_default=True),
        click.option("--seed", type=int, default=d.seed, envvar="CATE_SEED", show_default=True),
        click.option("--lr-min", "lr_min", type=float, default=d.lr_min, show_default=True),
        click.option("--lr-max", "lr_max", type=float, default=d.lr_max, show_default=True),
        click.option("--cycle-length", "cycle_length", type=int, default=d.cycle_length, show_default=True),
        click.option("--optimizer", type=click.Choice(["sgd", "adam"]), default=d.optimizer, show_default=True),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


config_option = click.option(
    "--config", type=click.Path(exists=True, dir_okay=False), help="JSON file of option values."
)


@click.group()
@click.option("-v", "--verbose", count=True)
def main(verbose):
    """Categorical ontology embeddings."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


# ------------------------------------------------------------ project


@main.command()
@click.argument("ontology", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False), help="Graph TSV to write.")
@click.option("--format", "fmt", type=click.Choice(["alc-text", "owl-functional"]), default="alc-text", show_default=True)
@click.option("--lenient", is_flag=True, help="Translate/skip OWL axioms outside the strict subset.")
@click.option("--emit-top-complement", "emit_top_complement", is_flag=True, help="Also project top sub or(not(C),D).")
@click.option("--scaffold-role", "scaffold_role", default=None, help="Role for existential scaffolds (e.g. interacts).")
@click.option(
    "--scaffold-fillers",
    "scaffold_fillers",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="File with one filler concept per line.",
)
@config_option
@click.pass_context
def project(ctx, **params):
    """Project an ontology into a graph TSV."""
    cfg = resolve_config(ctx, params, params.get("config"))
    path = cfg["ontology"]
    try:
        with open(path, "rb") as fh:
            ont = parse_ontology(fh.read(), cfg["fmt"], strict=not cfg["lenient"])
    except (ALCSyntaxError, NonALCConstructError) as exc:
        raise click.ClickException(f"{path}: {exc}") from None
    g = project_ontology(ont, ProjectionOptions(emit_top_complement_edge=cfg["emit_top_complement"]))
    asserted = len(g.edges)
    scaffold_edges = 0
    if cfg["scaffold_role"]:
        if not cfg["scaffold_fillers"]:
            raise click.UsageError("--scaffold-role needs --scaffold-fillers")
        fillers = read_names(cfg["scaffold_fillers"])
        try:
            before = len(g.edges)
            add_existential_scaffold(g, cfg["scaffold_role"], fillers)
            scaffold_edges = len(g.edges) - before
        except UnknownNameError as exc:
            raise click.ClickException(str(exc)) from None
    write_graph(g, cfg["out"])
    _write_names(ont, _names_path(cfg["out"]))
    write_config(cfg, _config_path(cfg["out"]))
    click.echo(f"|V|={len(g.nodes)} |E|={len(g.edges)} (axiom edges {asserted}, scaffold edges +{scaffold_edges})")


def _write_names(ont: Ontology, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for name in sorted(ont.signature.concept_names):
            fh.write(f"concept\t{name}\n")
        for name in sorted(ont.signature.role_names):
            fh.write(f"role\t{name}\n")


def _signature_concepts(graph_path) -> list[str] | None:
    path = _names_path(graph_path)
    if not path.exists():
        return None
    with open(path, encoding="utf-8") as fh:
        return [ln.split("\t", 1)[1].rstrip("\n") for ln in fh if ln.startswith("concept\t")]


# ------------------------------------------------------------ saturate


def _steps(value: str):
    if value == "fixpoint":
        return None
    try:
        n = int(value)
    except ValueError:
        raise click.BadParameter("expected a non-negative integer or 'fixpoint'") from None
    if n < 0:
        raise click.BadParameter("expected a non-negative integer or 'fixpoint'")
    return n


@main.command("saturate")
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@click.option("--steps", default="1", show_default=True, help="Number of steps, or 'fixpoint'.")
@click.option("--limit", default=100, show_default=True, help="Step cap when --steps fixpoint.")
@config_option
@click.pass_context
def saturate_cmd(ctx, **params):
    """Apply saturation rules to a graph."""
    cfg = resolve_config(ctx, params, params.get("config"))
    g = _load_graph(cfg["graph"])
    steps = _steps(str(cfg["steps"]))
    stats = Counter()
    before = len(g.edges)
    try:
        g, taken = saturate(g, steps, stats=stats, limit=int(cfg["limit"]))
        converged = steps is None
    except SaturationNotConverged as exc:
        raise click.ClickException(f"{exc}; use a finite --steps") from None
    write_graph(g, cfg["out"])
    names = _names_path(cfg["graph"])
    if names.exists():
        _names_path(cfg["out"]).write_text(names.read_text(encoding="utf-8"), encoding="utf-8")
    write_config(cfg, _config_path(cfg["out"]))
    click.echo(f"steps={taken}{' (fixpoint)' if converged else ''} |V|={len(g.nodes)} |E|={len(g.edges)} (+{len(g.edges) - before})")
    for name, count in sorted(stats.items()):
        click.echo(f"  {name}\t+{count}")


# ------------------------------------------------------------ train


@main.command("train")
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False), help="Embedding TSV to write.")
@click.option(
    "--exclude",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="Test pairs (sub<TAB>sup) whose edges are removed before training.",
)
@click.option("--no-figures", "no_figures", is_flag=True)
@train_options
@config_option
@click.pass_context
def train_cmd(ctx, **params):
    """Train node embeddings on a graph."""
    cfg = resolve_config(ctx, params, params.get("config"))
    g = _load_graph(cfg["graph"])
    tc = _train_config(cfg)
    if cfg["exclude"]:
        removed = remove_test_overlap(g, read_pairs(cfg["exclude"]))
        log.info("removed %d training edges overlapping the test pairs", removed)
    try:
        table = train(g, tc)
    except NonFiniteLossError as exc:
        raise click.ClickException(str(exc)) from None
    save_embeddings(table, cfg["out"])
    write_config(cfg, _config_path(cfg["out"]))
    if not cfg["no_figures"] and table.history:
        plotting.plot_loss(table.history, str(cfg["out"]) + ".loss.png")
    last = f"{table.history[-1]:.4f}" if table.history else "n/a"
    click.echo(f"trained {tc.variant} d={tc.dim} epochs={tc.epochs} final loss={last}")


# ------------------------------------------------------------ evaluate


def aligned_scorer(g: Graph, table: EmbeddingTable):
    """Scorer over graph indices, tolerant of a different row order."""
    if table.node_ids == g.nodes:
        return table.score
    pos = {n: i for i, n in enumerate(table.node_ids)}
    missing = [n for n in g.nodes if n not in pos]
    if missing:
        raise click.ClickException(f"embeddings lack {len(missing)} graph node(s), e.g. {missing[0]!r}")
    rows = np.array([pos[n] for n in g.nodes])
    return lambda heads, tails: table.score(rows[np.asarray(heads)], rows[np.asarray(tails)])


def _candidates(g: Graph, cfg: dict) -> list[int]:
    if cfg.get("candidates"):
        return named_concepts(g, read_names(cfg["candidates"]))
    names = _signature_concepts(cfg["graph"])
    if names is not None:
        return named_concepts(g, [n for n in names if n in g.index])
    return named_concepts(g)


def evaluate_task(task: str, g: Graph, scorer, test_path: str, cfg: dict):
    """Run one task; returns a list of reports (raw and filtered for ppi)."""
    if task == "unsat":
        return [run_unsat(g, scorer, read_names(test_path), _candidates(g, cfg))]
    if task in ("deductive", "inductive"):
        return [run_subsumption(g, scorer, read_pairs(test_path), _candidates(g, cfg), label=task)]
    if task == "ppi":
        role = cfg.get("role") or "interacts"
        if cfg.get("proteins"):
            proteins = read_names(cfg["proteins"])
        else:
            prefix = f"some({role},"
            proteins = [n[len(prefix) : -1] for n in g.nodes if n.startswith(prefix) and "(" not in n[len(prefix) : -1]]
        return list(run_ppi(g, scorer, read_pairs(test_path), proteins, role))
    raise click.UsageError(f"unknown task {task!r}")


def _write_reports(reports, out_dir: Path, figures: bool, stem: str = "report"):
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for rep in reports:
        suffix = "" if len(reports) == 1 else "_" + rep.label.split()[-1]
        with open(out_dir / f"{stem}{suffix}.tsv", "w", encoding="utf-8") as fh:
            rep.write_tsv(fh)
        if figures:
            plotting.plot_ranks(rep, out_dir / f"{stem}{suffix}.png")
        lines.append(rep.summary())
    return lines


@main.command("evaluate")
@click.option("--task", type=click.Choice(TASKS), required=True)
@click.option("--graph", required=True, type=click.Path(exists=True, dir_okay=False), help="Training graph TSV.")
@click.option("--embeddings", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--test", "test", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--candidates", type=click.Path(exists=True, dir_okay=False), default=None, help="Candidate names, one per line.")
@click.option("--role", default="interacts", show_default=True, help="PPI role name.")
@click.option("--proteins", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--no-figures", "no_figures", is_flag=True)
@config_option
@click.pass_context
def evaluate_cmd(ctx, **params):
    """Rank test axioms and write TSV reports, a summary and figures."""
    cfg = resolve_config(ctx, params, params.get("config"))
    g = _load_graph(cfg["graph"])
    scorer = aligned_scorer(g, load_embeddings(cfg["embeddings"]))
    try:
        reports = evaluate_task(cfg["task"], g, scorer, cfg["test"], cfg)
    except (UnknownConceptError, MissingNodeError) as exc:
        raise click.ClickException(str(exc)) from None
    out_dir = Path(cfg["out_dir"])
    lines = _write_reports(reports, out_dir, not cfg["no_figures"])
    (out_dir / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    write_config(cfg, out_dir / "config.json")
    for line in lines:
        click.echo(line)


# ------------------------------------------------------------ sweep


def _grid(name: str) -> dict:
    if name == "full":
        return FULL_GRID
    with open(name, encoding="utf-8") as fh:
        return json.load(fh)


@main.command("sweep")
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.option("--grid", default="full", show_default=True, help="'full' or a JSON file mapping option -> values.")
@click.option("--task", type=click.Choice(TASKS), default="inductive", show_default=True)
@click.option("--valid", type=click.Path(exists=True, dir_okay=False), default=None, help="Validation test file.")
@click.option("--out-dir", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--candidates", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--role", default="interacts", show_default=True)
@click.option("--proteins", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--dry-run", "dry_run", is_flag=True, help="Only enumerate the configurations.")
@click.option("--no-figures", "no_figures", is_flag=True)
@train_options
@config_option
@click.pass_context
def sweep_cmd(ctx, **params):
    """Grid search over training settings, selecting by validation rank-AUC."""
    cfg = resolve_config(ctx, params, params.get("config"))
    base = _train_config(cfg)
    try:
        configs = grid_configs(_grid(cfg["grid"]), base)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    click.echo(f"{len(configs)} configurations")
    if cfg["dry_run"]:
        for c in configs:
            click.echo(json.dumps(asdict(c), sort_keys=True))
        return
    if not cfg["valid"] or not cfg["out_dir"]:
        raise click.UsageError("--valid and --out-dir are required unless --dry-run")
    g = _load_graph(cfg["graph"])
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    counter = iter(range(len(configs)))

    def eval_fn(table, tc):
        i = next(counter)
        scorer = aligned_scorer(g, table)
        reports = evaluate_task(cfg["task"], g, scorer, cfg["valid"], cfg)
        _write_reports(reports, out_dir, False, stem=f"trial_{i:03d}")
        return reports[-1]

    try:
        result = grid_sweep(g, configs, eval_fn)
    except NonFiniteLossError as exc:
        raise click.ClickException(str(exc)) from None
    with open(out_dir / "sweep.tsv", "w", encoding="utf-8") as fh:
        fh.write("trial\t" + "\t".join(TRAIN_KEYS) + "\tMR\trank-AUC\n")
        for i, (tc, rep) in enumerate(result.trials):
            vals = "\t".join(str(getattr(tc, k)) for k in TRAIN_KEYS)
            fh.write(f"{i}\t{vals}\t{rep.mr:.4f}\t{rep.auc:.6f}\n")
    write_config(asdict(result.best), out_dir / "best_config.json")
    write_config(cfg, out_dir / "config.json")
    if not cfg["no_figures"]:
        plotting.plot_sweep(result.trials, out_dir / "sweep.png")
    for i, (tc, rep) in enumerate(result.trials):
        click.echo(f"trial {i}: {rep.summary()}")
    click.echo("best: " + json.dumps(asdict(result.best), sort_keys=True))


if __name__ == "__main__":  # pragma: no cover
    main()
