"""Optional keyword-based topic extraction from title/abstract text.

The extractor is deliberately simple: frequency-scored unigrams and
bigrams with function words and patent boilerplate removed.  It is
deterministic and produces plain strings for the corpus ``topics``
field; no semantic quality beyond that schema is claimed.  The
extractor slot is pluggable: unknown names raise
``ExtractorUnavailable`` so callers can fall back to empty topics.
"""

from __future__ import annotations

import re
from collections import Counter

from .errors import ConfigError, ExtractorUnavailable, TextTableError
from .texts import TextTable

MAX_TOPICS = 10

KEYWORD_EXTRACTOR = "keywords"

# common function words plus patent-claim boilerplate
_STOPWORDS = frozenset("""
    a an the and or of to in on for with by from at as is are be was were
    been being this that these those it its we our their they he she his
    her you your not no nor but if then than so such can could may might
    will would shall should must have has had do does did each which who
    whose what when where how all any both more most other some own same
    between into through during before after above below over under again
    further once here there about against using used use based also one
    two first second present according
    method methods system systems apparatus device devices means thereof
    wherein comprising comprises said claim claims invention embodiment
""".split())

_TOKEN = re.compile(r"[a-z][a-z0-9]*")


def _keywords(text: str, n_topics: int) -> list[str]:
    """Top phrases by weighted frequency, bigrams counted per word.

    Candidates are kept unigrams and bigrams of adjacent kept tokens.
    Ranking key: higher score first, then earlier first occurrence, then
    lexicographic.  A phrase whose words all appear in an already-chosen
    phrase is skipped, so a winning bigram suppresses its own unigrams.
    """
    tokens = _TOKEN.findall(text.casefold())
    kept = [(pos, tok) for pos, tok in enumerate(tokens)
            if len(tok) >= 3 and tok not in _STOPWORDS]

    counts: Counter[str] = Counter()
    first: dict[str, int] = {}
    for i, (pos, tok) in enumerate(kept):
        counts[tok] += 1
        first.setdefault(tok, pos)
        if i + 1 < len(kept) and kept[i + 1][0] == pos + 1:
            phrase = f"{tok} {kept[i + 1][1]}"
            counts[phrase] += 1
            first.setdefault(phrase, pos)

    def score(phrase: str) -> int:
        return counts[phrase] * len(phrase.split())

    ranked = sorted(counts, key=lambda p: (-score(p), first[p], p))
    chosen: list[str] = []
    chosen_words: set[str] = set()
    for phrase in ranked:
        if len(chosen) == n_topics:
            break
        words = phrase.split()
        if all(w in chosen_words for w in words):
            continue
        chosen.append(phrase)
        chosen_words.update(words)
    return chosen


def extract_topics(table: TextTable, n_topics: int,
                   extractor: str = KEYWORD_EXTRACTOR) -> dict[str, list[str]]:
    """Per-id topic strings, at most ``n_topics`` each, in table order.

    Empty or all-stopword texts yield empty lists rather than errors, so
    a corpus can be enriched wholesale and patents without usable text
    simply stay topic-free.
    """
    if not 0 <= n_topics <= MAX_TOPICS:
        raise ConfigError(
            f"n_topics must be between 0 and {MAX_TOPICS}, got {n_topics}")
    if extractor != KEYWORD_EXTRACTOR:
        raise ExtractorUnavailable(extractor)
    if n_topics == 0:
        return {id_: [] for id_ in table.ids}
    return {id_: _keywords(text, n_topics) for id_, text in table.items()}


def save_topics(topics: dict[str, list[str]], path: str) -> None:
    """Two-column TSV (id, semicolon-joined topics), empty list allowed."""
    for id_, values in topics.items():
        bad = [v for v in values if ";" in v or "\t" in v or "\n" in v]
        if bad:
            raise TextTableError(
                f"topic {bad[0]!r} for {id_!r} contains a reserved character")
    with open(path, "w", encoding="utf-8") as fh:
        for id_, values in topics.items():
            fh.write(f"{id_}\t{';'.join(values)}\n")


def load_topics(path: str) -> dict[str, list[str]]:
    topics: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            id_, sep, joined = line.partition("\t")
            if not sep:
                raise TextTableError(f"line {line_no}: missing tab separator")
            if id_ in topics:
                raise TextTableError(f"line {line_no}: duplicate id {id_!r}")
            topics[id_] = joined.split(";") if joined else []
    return topics
