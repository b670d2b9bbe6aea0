import random

import pytest

from macrolens.corpus import Corpus, Paper, PaperDate
from macrolens.timelines import BodyTimeline, Occurrence


def paper(pid, date, authors, title="t", source=""):
    return Paper(
        paper_id=pid,
        date=PaperDate.parse(date),
        authors=tuple(authors),
        title=title,
        source=source,
    )


def corpus_of(*papers):
    return Corpus(papers)


def timeline(entries, body="\\testbody{x}", signature=""):
    """entries: (paper_id, rank, name, authors) tuples, any order."""
    occs = tuple(
        sorted(
            (Occurrence(paper_id=p, group_rank=r, name=n, authors=tuple(a)) for p, r, n, a in entries),
            key=lambda o: (o.group_rank, o.paper_id),
        )
    )
    return BodyTimeline(body=body, signature=signature, occurrences=occs)


def simple_timeline(names, body="\\testbody{x}"):
    """One occurrence per name string, one fresh author each."""
    return timeline(
        [(f"p{i:04d}", i, name, [f"author {i}"]) for i, name in enumerate(names)], body=body
    )


@pytest.fixture
def rng():
    return random.Random(12345)
