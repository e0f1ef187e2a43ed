"""Shared fixtures: a three-record corpus in both formats plus IPC texts."""

import json

import pytest

RECORDS = [
    {
        "patent_id": "P1", "year": 2010, "main_ipc": "G06F 17/30",
        "secondary_ipcs": ["H04L 29/06"], "applicants": ["Acme Labs"],
        "topics": ["Neural Networks", "drug delivery"],
        "first_claims": 1.5, "forward_citations": 2, "backward_citations": 1,
        "pages": 10, "claims": 5,
    },
    {
        "patent_id": "P2", "year": 2011, "main_ipc": "H04L 29/06",
        "secondary_ipcs": [], "applicants": ["acme labs"],
        "topics": ["neural networks", "Acme Labs"],
        "first_claims": 2.0, "forward_citations": 0, "backward_citations": 3,
        "pages": 8, "claims": 7,
    },
    {
        "patent_id": "P3", "year": 2012, "main_ipc": "A61K 38/00",
        "secondary_ipcs": ["G06F 17/30", "B60L 53/00"],
        "applicants": ["Volta Industrial"], "topics": [],
        "first_claims": 0.5, "forward_citations": 1, "backward_citations": 0,
        "pages": 12, "claims": 3,
    },
]

IPC_TEXTS = {
    "A61K 38/00": "medicinal preparations containing peptides",
    "B60L 53/00": "charging stations for electrically propelled vehicles",
    "G06F 17/30": "digital data processing for information retrieval",
    "H04L 29/06": "transmission of digital information protocols",
}

TSV_COLUMNS = (
    "patent_id", "year", "main_ipc", "secondary_ipcs", "applicants",
    "topics", "first_claims", "forward_citations", "backward_citations",
    "pages", "claims",
)

# gather output: codes sorted, then topics sorted, then applicants sorted,
# with the doubly-used "acme labs" appearing once
GATHERED_IDS = [
    "A61K 38/00", "B60L 53/00", "G06F 17/30", "H04L 29/06",
    "acme labs", "drug delivery", "neural networks", "volta industrial",
]


@pytest.fixture(scope="session")
def ipc_texts_map():
    return dict(IPC_TEXTS)


@pytest.fixture(scope="session")
def gathered_ids():
    return list(GATHERED_IDS)


@pytest.fixture(scope="session")
def corpus_files(tmp_path_factory):
    base = tmp_path_factory.mktemp("corpus")
    jsonl = base / "corpus.jsonl"
    with open(jsonl, "w", encoding="utf-8") as fh:
        for rec in RECORDS:
            fh.write(json.dumps(rec) + "\n")

    tsv = base / "corpus.tsv"
    with open(tsv, "w", encoding="utf-8") as fh:
        fh.write("\t".join(TSV_COLUMNS) + "\n")
        for rec in RECORDS:
            cells = []
            for col in TSV_COLUMNS:
                value = rec[col]
                cells.append(";".join(value) if isinstance(value, list)
                             else str(value))
            fh.write("\t".join(cells) + "\n")

    ipc = base / "ipc_texts.tsv"
    with open(ipc, "w", encoding="utf-8") as fh:
        for code in sorted(IPC_TEXTS):
            fh.write(f"{code}\t{IPC_TEXTS[code]}\n")

    return {"jsonl": jsonl, "tsv": tsv, "ipc_texts": ipc}
