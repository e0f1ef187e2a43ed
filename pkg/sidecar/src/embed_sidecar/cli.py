"""Command-line entry points for the embedding sidecar.

``gather`` collects encodable strings from a corpus, ``encode`` turns a
text table into an embedding-table file, ``topics`` extracts keyword
topics from title/abstract text.  Exit codes: 0 success, 1 option or
configuration error, 2 bad input data, 3 encoder or extractor
unavailable/misbehaving.
"""

from __future__ import annotations

import sys

import click

from .embed import EmbedJob, embed_texts
from .encoders import DEFAULT_MODEL
from .errors import SidecarError
from .texts import gather_corpus_texts, load_text_table, save_text_table
from .topics import KEYWORD_EXTRACTOR, MAX_TOPICS, extract_topics, save_topics


@click.group()
def cli() -> None:
    """Embedding-table producer for the convergence scoring pipeline."""


@cli.command()
@click.option("--input", "-i", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Two-column (id, text) TSV to encode.")
@click.option("--output", "-o", "output_path", required=True,
              type=click.Path(dir_okay=False), help="Embedding table to write.")
@click.option("--model", default=DEFAULT_MODEL, show_default=True,
              help="Sentence encoder id, or hashed-ngram-<dim> for the "
                   "offline lexical fallback.")
@click.option("--batch-size", default=64, show_default=True,
              type=click.IntRange(min=1))
def encode(input_path, output_path, model, batch_size):
    """Encode a text table into a unit-norm embedding table."""
    table = load_text_table(input_path)
    job = EmbedJob(table=table, output=output_path, model=model,
                   batch_size=batch_size)
    path = embed_texts(job)
    click.echo(f"wrote {len(table)} vectors ({model}) -> {path}")


@cli.command()
@click.option("--corpus", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Patent corpus file (jsonl or tsv).")
@click.option("--format", "fmt", default="jsonl", show_default=True,
              type=click.Choice(["jsonl", "tsv"]), help="Corpus format.")
@click.option("--ipc-texts", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Two-column code/description table.")
@click.option("--output", "-o", "output_path", required=True,
              type=click.Path(dir_okay=False), help="Text table to write.")
def gather(corpus, fmt, ipc_texts, output_path):
    """Collect IPC descriptions, topics, and applicants to encode."""
    table = gather_corpus_texts(corpus, ipc_texts, fmt)
    save_text_table(table, output_path)
    click.echo(f"gathered {len(table)} texts -> {output_path}")


@cli.command()
@click.option("--input", "-i", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Two-column (id, title/abstract text) TSV.")
@click.option("--output", "-o", "output_path", required=True,
              type=click.Path(dir_okay=False),
              help="Two-column (id, semicolon-joined topics) TSV to write.")
@click.option("--n-topics", default=5, show_default=True,
              type=click.IntRange(0, MAX_TOPICS))
@click.option("--extractor", default=KEYWORD_EXTRACTOR, show_default=True,
              help="Topic extractor name.")
def topics(input_path, output_path, n_topics, extractor):
    """Extract per-id keyword topics from free text."""
    table = load_text_table(input_path)
    extracted = extract_topics(table, n_topics, extractor)
    save_topics(extracted, output_path)
    total = sum(len(v) for v in extracted.values())
    click.echo(f"extracted {total} topics for {len(table)} texts "
               f"-> {output_path}")


def main(argv=None) -> None:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except SidecarError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)
    sys.exit(0)


if __name__ == "__main__":
    main()
