"""Input text tables and collection of encodable strings from a corpus.

A text table is a two-column UTF-8 TSV (id, text) with no header;
``#``-prefixed lines are comments.  The text keeps everything after the
first tab, so descriptions may themselves contain tabs.

``gather_corpus_texts`` reads the pipeline's corpus file (JSONL or TSV)
plus its IPC-description table and emits one row per string the graph
builder can look up: every distinct IPC code (text = its description),
every distinct topic, and every distinct applicant.  Topic and
applicant ids are trimmed and case-folded to match graph node keys.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import TextTableError


@dataclass
class TextTable:
    ids: list[str]
    texts: list[str]
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.ids) != len(self.texts):
            raise TextTableError(
                f"{len(self.ids)} ids but {len(self.texts)} texts")
        self.index = {}
        for pos, id_ in enumerate(self.ids):
            if id_ in self.index:
                raise TextTableError(f"duplicate id {id_!r}")
            self.index[id_] = pos

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, id_: str) -> bool:
        return id_ in self.index

    def text(self, id_: str) -> str:
        return self.texts[self.index[id_]]

    def items(self):
        return zip(self.ids, self.texts)


def load_text_table(path: str) -> TextTable:
    """Read a two-column (id, text) TSV; duplicate ids are an error."""
    ids: list[str] = []
    texts: list[str] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            id_, sep, text = line.partition("\t")
            if not sep:
                raise TextTableError(f"line {line_no}: missing tab separator")
            id_ = id_.strip()
            if not id_:
                raise TextTableError(f"line {line_no}: empty id")
            if id_ in seen:
                raise TextTableError(f"line {line_no}: duplicate id {id_!r}")
            seen.add(id_)
            ids.append(id_)
            texts.append(text)
    return TextTable(ids, texts)


def save_text_table(table: TextTable, path: str) -> None:
    """Write rows in order; ``load_text_table(save(t)) == t``."""
    for id_, text in table.items():
        if "\t" in id_ or "\n" in id_:
            raise TextTableError(f"id {id_!r} contains a tab or newline")
        if "\n" in text:
            raise TextTableError(f"text for {id_!r} contains a newline")
    with open(path, "w", encoding="utf-8") as fh:
        for id_, text in table.items():
            fh.write(f"{id_}\t{text}\n")


def _norm_key(text: str) -> str:
    # topic/applicant identity used by the graph builder: trimmed, case-folded
    return text.strip().casefold()


def _iter_corpus_fields(path: str, fmt: str):
    """Yield (line_no, field dict) per record, format errors included."""
    with open(path, encoding="utf-8") as fh:
        if fmt == "jsonl":
            for i, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    yield i, json.loads(line)
                except json.JSONDecodeError as exc:
                    raise TextTableError(f"line {i}: bad JSON: {exc}") from exc
        elif fmt == "tsv":
            header: list[str] | None = None
            for i, line in enumerate(fh, start=1):
                if not line.rstrip("\n"):
                    continue
                cells = line.rstrip("\n").split("\t")
                if header is None:
                    header = cells
                    continue
                raw = dict(zip(header, cells))
                record = dict(raw)
                for col in ("secondary_ipcs", "applicants", "topics"):
                    value = raw.get(col, "")
                    record[col] = value.split(";") if value else []
                yield i, record
        else:
            raise TextTableError(f"unknown corpus format: {fmt!r}")


def gather_corpus_texts(corpus_path: str, ipc_texts_path: str,
                        fmt: str = "jsonl") -> TextTable:
    """Collect every encodable string a corpus refers to.

    Output order: IPC codes (sorted), then topics (sorted), then
    applicants (sorted).  Every referenced code must have a description;
    missing ones are reported together.  A string serving several roles
    (say, the same name as topic and applicant) appears once.
    """
    descriptions: dict[str, str] = {}
    with open(ipc_texts_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            code, _, desc = line.rstrip("\n").partition("\t")
            descriptions[code.strip()] = desc

    def _strings(rec: dict, line_no: int, col: str) -> list[str]:
        value = rec.get(col, [])
        if not isinstance(value, (list, tuple)) or not all(
                isinstance(v, str) for v in value):
            raise TextTableError(f"line {line_no}: {col} is not a string list")
        return list(value)

    codes: set[str] = set()
    topics: set[str] = set()
    applicants: set[str] = set()
    for line_no, rec in _iter_corpus_fields(corpus_path, fmt):
        main = rec.get("main_ipc")
        if not isinstance(main, str) or not main:
            raise TextTableError(f"line {line_no}: record has no main_ipc")
        codes.add(main)
        codes.update(_strings(rec, line_no, "secondary_ipcs"))
        topics.update(k for k in map(_norm_key,
                                     _strings(rec, line_no, "topics")) if k)
        applicants.update(k for k in map(_norm_key,
                                         _strings(rec, line_no, "applicants"))
                          if k)

    missing = sorted(c for c in codes if c not in descriptions)
    if missing:
        raise TextTableError(
            "no description for codes: " + ", ".join(missing[:10]))

    ids: list[str] = []
    texts: list[str] = []
    for code in sorted(codes):
        ids.append(code)
        texts.append(descriptions[code])
    # topics and applicants are their own text; a string serving several
    # roles keeps its first (code-description) entry
    seen = set(ids)
    for key in sorted(topics) + sorted(applicants):
        if key not in seen:
            seen.add(key)
            ids.append(key)
            texts.append(key)
    return TextTable(ids, texts)
