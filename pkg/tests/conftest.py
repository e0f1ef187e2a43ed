"""Shared fixtures: checked-in files and small in-memory corpora."""

from pathlib import Path

import pytest

from tci.corpus import parse_corpus
from tci.embeddings import load_embeddings

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def small_corpus():
    result = parse_corpus(str(DATA_DIR / "corpus_small.jsonl"), fmt="jsonl",
                          ipc_texts_path=str(DATA_DIR / "ipc_texts_small.tsv"))
    assert not result.diagnostics
    return result.corpus


@pytest.fixture(scope="session")
def small_semantic():
    return load_embeddings(str(DATA_DIR / "semantic_small.tsv"))
