"""Patent corpus parsing, validation, and serialization.

A corpus is a line-delimited record file (jsonl or tsv) plus an optional
IPC-text table (TSV: code, description).  Records that violate their
invariants are rejected individually with per-record diagnostics; only
corpus-wide inconsistencies (missing IPC texts) abort the parse.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import DataError, MissingIpcTextError
from .ipc import is_valid_ipc

TSV_COLUMNS = (
    "patent_id", "year", "main_ipc", "secondary_ipcs", "applicants",
    "topics", "first_claims", "forward_citations", "backward_citations",
    "pages", "claims",
)

MAX_TOPICS = 10
YEAR_RANGE = (1900, 2100)


@dataclass(frozen=True)
class PatentRecord:
    patent_id: str
    year: int
    main_ipc: str
    secondary_ipcs: tuple[str, ...] = ()
    applicants: tuple[str, ...] = ()
    topics: tuple[str, ...] = ()
    first_claims: float = 0.0
    forward_citations: int = 0
    backward_citations: int = 0
    pages: int = 1
    claims: int = 1

    def all_ipcs(self) -> tuple[str, ...]:
        """Main code first, then secondaries, order preserved."""
        return (self.main_ipc,) + self.secondary_ipcs


@dataclass
class CorpusData:
    records: list[PatentRecord] = field(default_factory=list)
    ipc_texts: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def distinct_ipcs(self) -> list[str]:
        seen: dict[str, None] = {}
        for rec in self.records:
            for code in rec.all_ipcs():
                seen.setdefault(code, None)
        return sorted(seen)

    def by_id(self) -> dict[str, PatentRecord]:
        return {rec.patent_id: rec for rec in self.records}


@dataclass(frozen=True)
class Diagnostic:
    """One per-record parse problem: the record was rejected or repaired."""
    kind: str      # missing_field | invalid_ipc | duplicate_id | invalid_value | dedup_secondary
    line: int      # 1-based line number in the source file
    record_id: str | None
    detail: str


@dataclass
class ParseResult:
    corpus: CorpusData
    diagnostics: list[Diagnostic]

    @property
    def rejected(self) -> int:
        return sum(1 for d in self.diagnostics if d.kind != "dedup_secondary")


def _as_str_list(value) -> list[str]:
    if value is None:
        return []
    if isinstance(value, str):
        return [p.strip() for p in value.split(";") if p.strip()]
    if isinstance(value, (list, tuple)):
        return [str(v).strip() for v in value if str(v).strip()]
    raise ValueError(f"expected list of strings, got {type(value).__name__}")


def _validate_record(raw: dict, line: int, diags: list[Diagnostic]) -> PatentRecord | None:
    """Build a PatentRecord from a raw field dict, or record why not."""
    pid = raw.get("patent_id")
    pid = str(pid).strip() if pid is not None else ""

    for name in ("patent_id", "year", "main_ipc"):
        v = raw.get(name)
        if v is None or (isinstance(v, str) and not v.strip()):
            diags.append(Diagnostic("missing_field", line, pid or None,
                                    f"required field {name!r} absent"))
            return None
    try:
        year = int(raw["year"])
        first_claims = float(raw.get("first_claims", 0.0))
        fcite = int(raw.get("forward_citations", 0))
        bcite = int(raw.get("backward_citations", 0))
        pages = int(raw.get("pages", 1))
        claims = int(raw.get("claims", 1))
        secondary = _as_str_list(raw.get("secondary_ipcs"))
        applicants = _as_str_list(raw.get("applicants"))
        topics = _as_str_list(raw.get("topics"))
    except (TypeError, ValueError) as exc:
        diags.append(Diagnostic("invalid_value", line, pid, str(exc)))
        return None

    main_ipc = str(raw["main_ipc"]).strip()
    if not is_valid_ipc(main_ipc):
        diags.append(Diagnostic("invalid_ipc", line, pid, f"main_ipc {main_ipc!r}"))
        return None
    bad = [c for c in secondary if not is_valid_ipc(c)]
    if bad:
        diags.append(Diagnostic("invalid_ipc", line, pid, f"secondary {bad!r}"))
        return None

    if not (YEAR_RANGE[0] <= year <= YEAR_RANGE[1]):
        diags.append(Diagnostic("invalid_value", line, pid, f"year {year} out of range"))
        return None
    if first_claims < 0 or fcite < 0 or bcite < 0 or pages < 1 or claims < 1:
        diags.append(Diagnostic("invalid_value", line, pid,
                                "negative quality field or non-positive pages/claims"))
        return None
    if len(topics) > MAX_TOPICS:
        diags.append(Diagnostic("invalid_value", line, pid,
                                f"{len(topics)} topics exceeds limit of {MAX_TOPICS}"))
        return None

    # dedupe secondaries, and never let the main code double as a secondary
    deduped: list[str] = []
    for code in secondary:
        if code != main_ipc and code not in deduped:
            deduped.append(code)
    if len(deduped) != len(secondary):
        diags.append(Diagnostic("dedup_secondary", line, pid,
                                f"secondary list reduced {len(secondary)} -> {len(deduped)}"))

    return PatentRecord(
        patent_id=pid, year=year, main_ipc=main_ipc,
        secondary_ipcs=tuple(deduped), applicants=tuple(applicants),
        topics=tuple(topics), first_claims=first_claims,
        forward_citations=fcite, backward_citations=bcite,
        pages=pages, claims=claims,
    )


def _iter_raw(path: str, fmt: str):
    """Yield (line_number, field_dict) for each non-empty line."""
    with open(path, encoding="utf-8") as fh:
        if fmt == "jsonl":
            for i, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    yield i, json.loads(line)
                except json.JSONDecodeError as exc:
                    yield i, exc
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
                # empty TSV cells mean "absent"
                yield i, {k: v for k, v in raw.items() if v != ""}
        else:
            raise ValueError(f"unknown corpus format: {fmt!r}")


def load_ipc_texts(path: str) -> dict[str, str]:
    """Two-column TSV (code, description), UTF-8, no header."""
    texts: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            code, _, desc = line.rstrip("\n").partition("\t")
            texts[code.strip()] = desc
    return texts


def save_ipc_texts(texts: dict[str, str], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for code in sorted(texts):
            fh.write(f"{code}\t{texts[code]}\n")


def parse_corpus(path: str, fmt: str = "jsonl",
                 ipc_texts_path: str | None = None) -> ParseResult:
    """Parse and validate a corpus file.

    Order-preserving and deterministic.  Bad records are dropped with a
    diagnostic; duplicated patent_ids keep the first occurrence.  When an
    IPC-text table is supplied, every referenced code must appear in it,
    otherwise MissingIpcTextError lists the gaps.
    """
    diags: list[Diagnostic] = []
    records: list[PatentRecord] = []
    seen_ids: set[str] = set()

    for line_no, raw in _iter_raw(path, fmt):
        if isinstance(raw, Exception):
            diags.append(Diagnostic("invalid_value", line_no, None, str(raw)))
            continue
        rec = _validate_record(raw, line_no, diags)
        if rec is None:
            continue
        if rec.patent_id in seen_ids:
            diags.append(Diagnostic("duplicate_id", line_no, rec.patent_id,
                                    "patent_id already present; record dropped"))
            continue
        seen_ids.add(rec.patent_id)
        records.append(rec)

    ipc_texts: dict[str, str] = {}
    if ipc_texts_path is not None:
        ipc_texts = load_ipc_texts(ipc_texts_path)
        referenced = {c for rec in records for c in rec.all_ipcs()}
        missing = referenced - set(ipc_texts)
        if missing:
            raise MissingIpcTextError(missing)

    return ParseResult(CorpusData(records=records, ipc_texts=ipc_texts), diags)


def record_to_dict(rec: PatentRecord) -> dict:
    return {
        "patent_id": rec.patent_id,
        "year": rec.year,
        "main_ipc": rec.main_ipc,
        "secondary_ipcs": list(rec.secondary_ipcs),
        "applicants": list(rec.applicants),
        "topics": list(rec.topics),
        "first_claims": rec.first_claims,
        "forward_citations": rec.forward_citations,
        "backward_citations": rec.backward_citations,
        "pages": rec.pages,
        "claims": rec.claims,
    }


def save_corpus(corpus: CorpusData, path: str, fmt: str = "jsonl") -> None:
    """Serialize records in order; parse(save(c)) == c."""
    with open(path, "w", encoding="utf-8") as fh:
        if fmt == "jsonl":
            for rec in corpus.records:
                fh.write(json.dumps(record_to_dict(rec), ensure_ascii=False) + "\n")
        elif fmt == "tsv":
            fh.write("\t".join(TSV_COLUMNS) + "\n")
            for rec in corpus.records:
                d = record_to_dict(rec)
                cells = []
                for col in TSV_COLUMNS:
                    v = d[col]
                    if isinstance(v, list):
                        cells.append(";".join(v))
                    elif isinstance(v, float):
                        cells.append(repr(v))
                    else:
                        cells.append(str(v))
                fh.write("\t".join(cells) + "\n")
        else:
            raise ValueError(f"unknown corpus format: {fmt!r}")


def require_nonempty(corpus: CorpusData) -> CorpusData:
    if not corpus.records:
        raise DataError("empty corpus: no valid records")
    return corpus
