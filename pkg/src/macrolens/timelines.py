"""Per-body usage timelines, the author experience ledger, co-author graphs.

A timeline lists, in temporal order, every paper that used one macro
body together with the name it used there.  All "strictly before"
queries compare tie-group ranks, so papers whose relative order is
unknown (same month, month-granular) never count as predecessors of
each other.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import Corpus, Paper
from .extraction import MacroDefinition, paper_conventions


@dataclass(frozen=True)
class Occurrence:
    """One paper's use of a body: which name it used, by whom."""

    paper_id: str
    group_rank: int
    name: str
    authors: tuple[str, ...]


@dataclass
class BodyTimeline:
    """Time-ordered occurrences of one normalized body.

    For name-keyed (role-swapped) timelines built by
    :func:`build_name_timelines`, ``body`` holds the shared macro name
    and each occurrence's ``name`` field holds the body used.
    """

    body: str
    signature: str = ""
    occurrences: tuple[Occurrence, ...] = ()
    _author_index: dict[str, list[int]] = field(default_factory=dict, repr=False)

    @property
    def m(self) -> int:
        return len(self.occurrences)

    @property
    def key(self) -> tuple[str, str]:
        return (self.signature, self.body)

    def names(self) -> list[str]:
        return sorted({o.name for o in self.occurrences})

    def distinct_authors(self) -> set[str]:
        return {a for o in self.occurrences for a in o.authors}

    def author_positions(self, author: str) -> list[int]:
        """Occurrence indices involving ``author`` (built lazily, cached)."""
        if not self._author_index:
            for idx, occ in enumerate(self.occurrences):
                for a in occ.authors:
                    self._author_index.setdefault(a, []).append(idx)
        return self._author_index.get(author, [])


def _sorted_occurrences(entries: list[tuple[int, str, Occurrence]]) -> tuple[Occurrence, ...]:
    entries.sort(key=lambda e: (e[0], e[1]))
    return tuple(occ for _, _, occ in entries)


def build_timelines(
    corpus: Corpus, definitions: Mapping[str, list[MacroDefinition]]
) -> dict[tuple[str, str], BodyTimeline]:
    """One timeline per distinct (signature, body); at most one occurrence
    per paper per body."""
    buckets: dict[tuple[str, str], list[tuple[int, str, Occurrence]]] = {}
    for paper in corpus:
        defs = definitions.get(paper.paper_id)
        if not defs:
            continue
        rank = corpus.rank_of(paper.paper_id)
        for conv in paper_conventions(defs):
            occ = Occurrence(
                paper_id=paper.paper_id,
                group_rank=rank,
                name=conv.name,
                authors=paper.authors,
            )
            buckets.setdefault(conv.body_key, []).append((rank, paper.paper_id, occ))
    out: dict[tuple[str, str], BodyTimeline] = {}
    for key in sorted(buckets):
        sig, body = key
        out[key] = BodyTimeline(body=body, signature=sig, occurrences=_sorted_occurrences(buckets[key]))
    return out


def build_name_timelines(
    corpus: Corpus,
    definitions: Mapping[str, list[MacroDefinition]],
    whitelist: Iterable[str] | None = None,
) -> dict[str, BodyTimeline]:
    """Role-swapped timelines: one per macro name, occurrences carry the
    body (with signature folded in) that the name expanded to."""
    allowed = set(whitelist) if whitelist is not None else None
    buckets: dict[str, list[tuple[int, str, Occurrence]]] = {}
    for paper in corpus:
        defs = definitions.get(paper.paper_id)
        if not defs:
            continue
        rank = corpus.rank_of(paper.paper_id)
        effective: dict[str, MacroDefinition] = {}
        for d in sorted(defs, key=lambda d: d.offset):
            effective[d.name] = d
        for name in sorted(effective):
            if allowed is not None and name not in allowed:
                continue
            d = effective[name]
            variant = d.body if not d.signature else f"{d.signature} {d.body}"
            occ = Occurrence(
                paper_id=paper.paper_id, group_rank=rank, name=variant, authors=paper.authors
            )
            buckets.setdefault(name, []).append((rank, paper.paper_id, occ))
    return {
        name: BodyTimeline(body=name, occurrences=_sorted_occurrences(buckets[name]))
        for name in sorted(buckets)
    }


def interval(timeline: BodyTimeline, t0: float, t1: float) -> list[Occurrence]:
    """Occurrences in the lifespan fraction window [t0, t1].

    0-based floor indexing; a window that would come out empty is
    widened to one occurrence, so every valid window is non-empty.
    """
    if not 0 <= t0 <= t1 <= 1:
        raise ValueError(f"invalid interval [{t0}, {t1}]")
    m = timeline.m
    if m == 0:
        raise ValueError("empty timeline")
    start = min(math.floor(t0 * m), m - 1)
    end = min(max(math.floor(t1 * m), start + 1), m)
    return list(timeline.occurrences[start:end])


class ExperienceLedger:
    """Per-author, time-ordered paper history.

    Experience at a paper counts the author's strictly earlier papers;
    papers in the same tie group are excluded as order-ambiguous.
    """

    def __init__(self, corpus: Corpus):
        self._corpus = corpus
        self._papers: dict[str, list[Paper]] = {}
        self._ranks: dict[str, list[int]] = {}
        for paper in corpus:
            rank = corpus.rank_of(paper.paper_id)
            for a in paper.authors:
                self._papers.setdefault(a, []).append(paper)
                self._ranks.setdefault(a, []).append(rank)

    def authors(self) -> list[str]:
        return sorted(self._papers)

    def papers_of(self, author: str) -> list[Paper]:
        return list(self._papers.get(author, []))

    def experience(self, author: str, paper: Paper | str) -> int:
        paper_id = paper.paper_id if isinstance(paper, Paper) else paper
        return self.experience_at_rank(author, self._corpus.rank_of(paper_id))

    def experience_at_rank(self, author: str, group_rank: int) -> int:
        ranks = self._ranks.get(author)
        if not ranks:
            return 0
        return bisect_left(ranks, group_rank)

    def count_in_group(self, author: str, group_rank: int) -> int:
        """How many of the author's papers sit in one tie group."""
        ranks = self._ranks.get(author, [])
        lo = bisect_left(ranks, group_rank)
        hi = bisect_left(ranks, group_rank + 1)
        return hi - lo


def build_experience_ledger(corpus: Corpus) -> ExperienceLedger:
    return ExperienceLedger(corpus)


class CoauthorIndex:
    """For each unordered author pair, the ranks of their joint papers."""

    def __init__(self, corpus: Corpus):
        self._joint: dict[tuple[str, str], list[int]] = {}
        for paper in corpus:
            rank = corpus.rank_of(paper.paper_id)
            authors = paper.authors
            for i in range(len(authors)):
                for j in range(i + 1, len(authors)):
                    pair = (min(authors[i], authors[j]), max(authors[i], authors[j]))
                    self._joint.setdefault(pair, []).append(rank)

    def joint_ranks(self, a: str, b: str) -> list[int]:
        return self._joint.get((min(a, b), max(a, b)), [])

    def coauthored_before(self, a: str, b: str, group_rank: int) -> bool:
        ranks = self.joint_ranks(a, b)
        return bool(ranks) and ranks[0] < group_rank

    def joint_count_before(self, a: str, b: str, group_rank: int) -> int:
        return bisect_left(self.joint_ranks(a, b), group_rank)

    def joint_count_in_group(self, a: str, b: str, group_rank: int) -> int:
        ranks = self.joint_ranks(a, b)
        return bisect_left(ranks, group_rank + 1) - bisect_left(ranks, group_rank)


def build_coauthor_index(corpus: Corpus) -> CoauthorIndex:
    return CoauthorIndex(corpus)


@dataclass(frozen=True)
class CoauthorGraph:
    """Co-author graph over one body's prior users at a cutoff paper.

    Nodes: authors with at least one occurrence of the body strictly
    before the cutoff.  Edges: pairs that co-authored any paper strictly
    before the cutoff (not only papers using the body).
    """

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    body: str
    cutoff_paper_id: str

    def adjacency(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {v: [] for v in self.nodes}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        for v in adj:
            adj[v].sort()
        return adj

    def degree(self, node: str) -> int:
        return sum(1 for e in self.edges if node in e)


def coauthor_graph(
    corpus: Corpus,
    timeline: BodyTimeline,
    cutoff: Paper | str,
    index: CoauthorIndex | None = None,
) -> CoauthorGraph:
    cutoff_id = cutoff.paper_id if isinstance(cutoff, Paper) else cutoff
    cutoff_rank = corpus.rank_of(cutoff_id)
    if index is None:
        index = CoauthorIndex(corpus)
    nodes = sorted(
        {a for occ in timeline.occurrences if occ.group_rank < cutoff_rank for a in occ.authors}
    )
    edges = []
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            if index.coauthored_before(nodes[i], nodes[j], cutoff_rank):
                edges.append((nodes[i], nodes[j]))
    return CoauthorGraph(
        nodes=tuple(nodes), edges=tuple(edges), body=timeline.body, cutoff_paper_id=cutoff_id
    )


def _prior_positions(timeline: BodyTimeline, author: str, cutoff_rank: int) -> list[int]:
    return [
        i for i in timeline.author_positions(author)
        if timeline.occurrences[i].group_rank < cutoff_rank
    ]


def prior_uses(timeline: BodyTimeline, author: str, cutoff: Paper | str, corpus: Corpus) -> int:
    cutoff_id = cutoff.paper_id if isinstance(cutoff, Paper) else cutoff
    return len(_prior_positions(timeline, author, corpus.rank_of(cutoff_id)))


def flexibility(timeline: BodyTimeline, author: str, cutoff: Paper | str, corpus: Corpus) -> float:
    """Fraction of the author's consecutive prior uses that switched names."""
    cutoff_id = cutoff.paper_id if isinstance(cutoff, Paper) else cutoff
    positions = _prior_positions(timeline, author, corpus.rank_of(cutoff_id))
    if not positions:
        raise ValueError(f"author {author!r} has no prior use of this body")
    if len(positions) == 1:
        return 0.0
    names = [timeline.occurrences[i].name for i in positions]
    changes = sum(1 for a, b in zip(names, names[1:]) if a != b)
    return changes / (len(names) - 1)


def timeline_rows(timelines: Mapping[tuple[str, str], BodyTimeline]) -> list[dict]:
    """Per-body summary rows for the ``timelines`` CLI output."""
    from .report import body_hash

    rows = []
    for key in sorted(timelines):
        tl = timelines[key]
        rows.append(
            {
                "body_hash": body_hash(tl.signature, tl.body),
                "m": tl.m,
                "distinct_names": len(tl.names()),
                "distinct_authors": len(tl.distinct_authors()),
            }
        )
    return rows


def occurrences_sorted(occs: Sequence[Occurrence]) -> tuple[Occurrence, ...]:
    """Canonical occurrence order: (tie group, paper id)."""
    return tuple(sorted(occs, key=lambda o: (o.group_rank, o.paper_id)))
