"""Command-line entry points.

Every subcommand reads an optional sectioned config file, applies flag
overrides, runs one or more persisted pipeline stages into the run
directory, and refreshes the run manifest.  Exit codes: 0 success,
1 configuration error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import load_config
from .errors import TciError
from .pipeline import PipelineRun, replay_manifest, run_pipeline
from .synth import SynthConfig, generate_synthetic_corpus, write_synthetic


def _common(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="Sectioned key-value config file.")(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="Override the run seed.")(fn)
    fn = click.option("--jobs", type=int, default=None,
                      help="Worker cap for parallel stages.")(fn)
    fn = click.option("--out", "outdir", type=click.Path(), default="run",
                      show_default=True, help="Run directory for artifacts.")(fn)
    return fn


def _make_run(config_path, outdir, **overrides) -> PipelineRun:
    cfg = load_config(config_path, **overrides)
    return PipelineRun(cfg, outdir)


@click.group()
def cli() -> None:
    """Patent convergence scoring pipeline."""


@cli.command()
@_common
@click.option("--corpus", default=None, type=click.Path(),
              help="Corpus file (jsonl or tsv).")
@click.option("--format", "corpus_format", default=None,
              type=click.Choice(["jsonl", "tsv"]), help="Corpus format.")
@click.option("--ipc-texts", default=None, type=click.Path(),
              help="Two-column code/description table.")
def ingest(config_path, seed, jobs, outdir, corpus, corpus_format, ipc_texts):
    """Parse and validate the corpus; persist the normalized form."""
    run = _make_run(config_path, outdir, seed=seed, jobs=jobs, corpus=corpus,
                    corpus_format=corpus_format, ipc_texts=ipc_texts)
    data = run.ensure_ingest()
    run.write_manifest()
    click.echo(f"ingested {len(data)} records "
               f"({run.summary.get('n_rejected', 0)} rejected) -> {outdir}")


@cli.command()
@click.option("--n-patents", default=2000, show_default=True, type=int)
@click.option("--beta", default=0.5, show_default=True, type=float,
              help="Planted quality coefficient.")
@click.option("--noise-sigma", default=0.5, show_default=True, type=float)
@click.option("--high-fraction", default=0.5, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "outdir", type=click.Path(), default="synth",
              show_default=True)
def synth(n_patents, beta, noise_sigma, high_fraction, seed, outdir):
    """Generate a synthetic corpus with a planted convergence effect."""
    cfg = SynthConfig(n_patents=n_patents, beta=beta, noise_sigma=noise_sigma,
                      high_fraction=high_fraction)
    result = generate_synthetic_corpus(cfg, seed=seed)
    paths = write_synthetic(result, outdir)
    click.echo(f"wrote {len(result.corpus)} records -> "
               + ", ".join(str(p) for p in paths.values()))


@cli.command()
@_common
@click.option("--knn-k", default=None, type=int,
              help="Neighbors per code for code-code edges.")
@click.option("--sim-threshold", default=None, type=float,
              help="Drop code-code edges below this weight.")
def graph(config_path, seed, jobs, outdir, knn_k, sim_threshold):
    """Build and persist the heterogeneous graph."""
    run = _make_run(config_path, outdir, seed=seed, jobs=jobs, knn_k=knn_k,
                    sim_threshold=sim_threshold)
    g = run.ensure_graph()
    run.write_manifest()
    click.echo(f"graph: {g.counts()} -> {outdir}")


@cli.command()
@_common
@click.option("--epochs", default=None, type=int)
@click.option("--learning-rate", default=None, type=float)
@click.option("--layers", default=None, type=int)
def train(config_path, seed, jobs, outdir, epochs, learning_rate, layers):
    """Train the structural encoder; persist checkpoint and loss log."""
    run = _make_run(config_path, outdir, seed=seed, jobs=jobs, epochs=epochs,
                    learning_rate=learning_rate, layers=layers)
    run.ensure_train()
    run.ensure_encode()
    run.write_manifest()
    first = run.summary.get("initial_loss")
    last = run.summary.get("final_loss")
    auc = run.summary.get("holdout_auc")
    msg = f"trained -> {outdir}"
    if first is not None:
        msg += f" (loss {first:.4f} -> {last:.4f}"
        msg += f", holdout AUC {auc:.3f})" if auc is not None else ")"
    click.echo(msg)


@cli.command()
@_common
@click.option("--ipc-level", default=None,
              type=click.Choice(["section", "class", "subclass", "group"]))
@click.option("--depth-k", default=None, type=float,
              help="Smoothing constant for the pairwise depth blend.")
@click.option("--min-support", default=None, type=int,
              help="Co-occurrence count needed for a network edge.")
def score(config_path, seed, jobs, outdir, ipc_level, depth_k, min_support):
    """Compute metrics, weights, and all index variants."""
    run = _make_run(config_path, outdir, seed=seed, jobs=jobs,
                    ipc_level=ipc_level, depth_k=depth_k,
                    min_support=min_support)
    table = run.ensure_score()
    run.write_manifest()
    click.echo(f"scored {len(table.patent_ids)} patents -> {outdir}")


@cli.command()
@_common
@click.option("--log1p/--no-log1p", "log1p_transform", default=None,
              help="Apply log1p to the outcome before regression.")
@click.option("--bandwidth", "kde_bandwidth", default=None,
              help="Density bandwidth ('auto' or a number).")
def report(config_path, seed, jobs, outdir, log1p_transform, kde_bandwidth):
    """Correlations, regression, density and trend tables plus figures."""
    run = _make_run(config_path, outdir, seed=seed, jobs=jobs,
                    log1p_transform=log1p_transform,
                    kde_bandwidth=kde_bandwidth)
    run.ensure_report()
    run.write_manifest()
    click.echo(f"report written -> {Path(outdir) / 'report'}")


@cli.command()
@_common
@click.option("--replay", "replay_path", type=click.Path(), default=None,
              help="Re-run the configuration stored in a manifest.")
def pipeline(config_path, seed, jobs, outdir, replay_path):
    """Run every stage end to end and write the manifest."""
    if replay_path is not None:
        manifest = replay_manifest(replay_path, outdir)
    else:
        cfg = load_config(config_path, seed=seed, jobs=jobs)
        manifest = run_pipeline(cfg, outdir)
    click.echo(f"pipeline complete -> {manifest}")


def main(argv=None) -> None:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except TciError as exc:
        stage = getattr(exc, "stage", None)
        prefix = f"[{stage}] " if stage else ""
        click.echo(f"error: {prefix}{exc}", err=True)
        sys.exit(exc.exit_code)
    sys.exit(0)


if __name__ == "__main__":
    main()
