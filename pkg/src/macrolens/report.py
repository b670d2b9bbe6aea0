"""Table emission: corpus summary statistics and CSV/JSON writers.

CSV is the canonical interchange format (quoted fields, UTF-8, header
row, LF line endings so output bytes are platform-independent); JSON
mirrors every table field-for-field.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Corpus
from .extraction import MacroDefinition


def body_hash(signature: str, body: str) -> str:
    payload = signature + "\x1f" + body
    return hashlib.sha1(payload.encode("utf-8")).hexdigest()


def fmt_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(float(v))  # shortest round-trip repr, numpy scalars included
    return str(v)


def write_table(
    base: Path, header: Sequence[str], rows: Sequence[Sequence], fmt: str = "csv"
) -> Path:
    """Write one table as ``<base>.csv`` or ``<base>.json``."""
    base.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path = base.with_suffix(".csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, quoting=csv.QUOTE_ALL, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([fmt_value(v) for v in row])
        return path
    if fmt == "json":
        path = base.with_suffix(".json")
        payload = [dict(zip(header, row)) for row in rows]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")
        return path
    raise ValueError(f"unknown format {fmt!r}")


SUMMARY_METRICS = (
    "papers_with_macro",
    "definitions",
    "unique_bodies",
    "avg_names_per_body",
    "unique_authors",
    "avg_authors_per_paper",
)


def corpus_summary(
    corpus: Corpus, definitions: Mapping[str, list[MacroDefinition]]
) -> dict[str, float | int]:
    """The six headline dataset statistics.

    Author counts cover papers that define at least one macro, matching
    the denominator used for the other quantities.
    """
    papers_with = [p for p in corpus if definitions.get(p.paper_id)]
    total_defs = sum(len(definitions.get(p.paper_id, [])) for p in corpus)
    bodies: set[tuple[str, str]] = set()
    named: set[tuple[tuple[str, str], str]] = set()
    for defs in definitions.values():
        for d in defs:
            bodies.add(d.body_key)
            named.add((d.body_key, d.name))
    authors = {a for p in papers_with for a in p.authors}
    author_slots = sum(len(p.authors) for p in papers_with)
    return {
        "papers_with_macro": len(papers_with),
        "definitions": total_defs,
        "unique_bodies": len(bodies),
        "avg_names_per_body": (len(named) / len(bodies)) if bodies else 0.0,
        "unique_authors": len(authors),
        "avg_authors_per_paper": (author_slots / len(papers_with)) if papers_with else 0.0,
    }


def summary_rows(summary: Mapping[str, float | int]) -> list[tuple[str, float | int]]:
    return [(metric, summary[metric]) for metric in SUMMARY_METRICS]
