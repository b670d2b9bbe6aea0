"""Global competition between names for one body.

Detects changeovers (an early dominant name displaced by a late one),
samples sliding-window usage curves, finds persistent crossing points,
builds matched changeover/control pairs, and derives the experience
curves and feature vectors used by the prediction harness.

All fractions here are author fractions: the share of authors in an
occurrence window that used a given name, out of all authors appearing
in the window.  An author using both names in one window counts for
both, so fractions can sum above 1.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .extraction import name_features
from .timelines import BodyTimeline, ExperienceLedger, interval


@dataclass(frozen=True)
class ChangeoverParams:
    """Detection knobs: volume floor s, edge fraction q, author-share
    threshold, sliding-window increment, crossing persistence span."""

    s: int = 100
    q: float = 0.3
    theta: float = 0.3
    delta: float = 0.05
    persistence: float = 0.1

    def __post_init__(self) -> None:
        if self.s < 1:
            raise ValueError("s must be >= 1")
        if not 0 < self.q <= 0.5:
            raise ValueError("q must be in (0, 0.5]")
        if not 0 < self.theta <= 1:
            raise ValueError("theta must be in (0, 1]")
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if self.persistence <= 0:
            raise ValueError("persistence must be positive")


@dataclass(frozen=True)
class Curve:
    """A function sampled on the shared window grid {0, d, 2d, ...}."""

    grid: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.grid) != len(self.values):
            raise ValueError("grid and values differ in length")


def window_grid(delta: float) -> tuple[float, ...]:
    """Window start points: multiples of delta up to 1 - delta."""
    k_max = int(math.floor((1.0 - delta) / delta + 1e-9))
    return tuple(k * delta for k in range(k_max + 1))


def usage_fraction(timeline: BodyTimeline, name: str, t0: float, t1: float) -> float:
    """Share of interval authors that used ``name`` there."""
    occs = interval(timeline, t0, t1)
    all_authors: set[str] = set()
    name_authors: set[str] = set()
    for occ in occs:
        all_authors.update(occ.authors)
        if occ.name == name:
            name_authors.update(occ.authors)
    if not all_authors:
        raise ValueError("interval has no authors")
    return len(name_authors) / len(all_authors)


def most_used_name(occurrences: Sequence) -> str:
    """Name with the most occurrences; ties go to the name whose first
    occurrence in the slice comes earlier."""
    if not occurrences:
        raise ValueError("empty occurrence slice")
    counts: dict[str, int] = {}
    first: dict[str, int] = {}
    for idx, occ in enumerate(occurrences):
        counts[occ.name] = counts.get(occ.name, 0) + 1
        first.setdefault(occ.name, idx)
    return min(counts, key=lambda n: (-counts[n], first[n]))


def sliding_curve(timeline: BodyTimeline, name: str, delta: float) -> Curve:
    grid = window_grid(delta)
    values = tuple(usage_fraction(timeline, name, t, t + delta) for t in grid)
    return Curve(grid=grid, values=values)


def crossing_point(f_curve: Curve, g_curve: Curve, persistence: float) -> float | None:
    """Earliest grid t from which g stays >= f for the persistence span.

    Evaluated on grid points only; near the end of the grid the span is
    clamped to the points that exist.
    """
    if f_curve.grid != g_curve.grid:
        raise ValueError("curves sampled on different grids")
    grid = f_curve.grid
    if not grid:
        return None
    delta = grid[1] - grid[0] if len(grid) > 1 else 1.0
    span = int(round(persistence / delta))
    last = len(grid) - 1
    for i in range(len(grid)):
        hi = min(i + span, last)
        if all(g_curve.values[j] >= f_curve.values[j] for j in range(i, hi + 1)):
            return grid[i]
    return None


@dataclass
class ChangeoverRecord:
    body: str
    signature: str
    early_name: str
    late_name: str
    m: int
    f_curve: Curve
    g_curve: Curve
    crossing: float | None
    timeline: BodyTimeline = field(repr=False)


def detect_changeover(timeline: BodyTimeline, params: ChangeoverParams) -> ChangeoverRecord | None:
    """Changeover test: volume floor, distinct early/late dominant names,
    both above the author-share threshold in their edge windows."""
    if timeline.m < params.s:
        return None
    early = interval(timeline, 0.0, params.q)
    late = interval(timeline, 1.0 - params.q, 1.0)
    n_early = most_used_name(early)
    n_late = most_used_name(late)
    if n_early == n_late:
        return None
    if usage_fraction(timeline, n_early, 0.0, params.q) <= params.theta:
        return None
    if usage_fraction(timeline, n_late, 1.0 - params.q, 1.0) <= params.theta:
        return None
    f_curve = sliding_curve(timeline, n_early, params.delta)
    g_curve = sliding_curve(timeline, n_late, params.delta)
    return ChangeoverRecord(
        body=timeline.body,
        signature=timeline.signature,
        early_name=n_early,
        late_name=n_late,
        m=timeline.m,
        f_curve=f_curve,
        g_curve=g_curve,
        crossing=crossing_point(f_curve, g_curve, params.persistence),
        timeline=timeline,
    )


def aggregate_median_curves(
    records: Sequence[ChangeoverRecord],
) -> tuple[Curve, Curve, list[tuple[float, int]]]:
    """Pointwise median early/late curves plus a crossing-point histogram."""
    if not records:
        raise ValueError("no changeover records to aggregate")
    grid = records[0].f_curve.grid
    for rec in records:
        if rec.f_curve.grid != grid or rec.g_curve.grid != grid:
            raise ValueError("records sampled on different grids")
    f_median = tuple(
        statistics.median(rec.f_curve.values[i] for rec in records) for i in range(len(grid))
    )
    g_median = tuple(
        statistics.median(rec.g_curve.values[i] for rec in records) for i in range(len(grid))
    )
    hist: dict[float, int] = {}
    for rec in records:
        if rec.crossing is not None:
            hist[rec.crossing] = hist.get(rec.crossing, 0) + 1
    return Curve(grid, f_median), Curve(grid, g_median), sorted(hist.items())


@dataclass(frozen=True)
class MatchTolerances:
    ratio_lo: float = 0.91
    ratio_hi: float = 1.1
    prevalence_tol: float = 0.01


@dataclass
class ControlCandidate:
    """A non-changeover body eligible as a matched control."""

    timeline: BodyTimeline
    early_name: str
    early_prevalence: float
    # other early names and their prevalences, with first-occurrence
    # position in the early window for deterministic tie-breaking
    others: dict[str, tuple[float, int]]


def find_control_candidates(
    timelines: Mapping[tuple[str, str], BodyTimeline], params: ChangeoverParams
) -> list[ControlCandidate]:
    """Bodies meeting the volume floor but failing the changeover test,
    with at least two names present in the early window."""
    out: list[ControlCandidate] = []
    for key in sorted(timelines):
        tl = timelines[key]
        if tl.m < params.s:
            continue
        if detect_changeover(tl, params) is not None:
            continue
        early = interval(tl, 0.0, params.q)
        n_early = most_used_name(early)
        others: dict[str, tuple[float, int]] = {}
        for idx, occ in enumerate(early):
            if occ.name != n_early and occ.name not in others:
                others[occ.name] = (usage_fraction(tl, occ.name, 0.0, params.q), idx)
        if not others:
            continue
        out.append(
            ControlCandidate(
                timeline=tl,
                early_name=n_early,
                early_prevalence=usage_fraction(tl, n_early, 0.0, params.q),
                others=others,
            )
        )
    return out


@dataclass
class MatchedPair:
    record: ChangeoverRecord
    control: BodyTimeline
    control_early_name: str
    control_late_name: str
    f_beta: float
    g_beta: float
    f_gamma: float
    g_gamma: float

    @property
    def m_beta(self) -> int:
        return self.record.m

    @property
    def m_gamma(self) -> int:
        return self.control.m


def match_pairs(
    changeovers: Sequence[ChangeoverRecord],
    candidates: Sequence[ControlCandidate],
    params: ChangeoverParams,
    tolerances: MatchTolerances | None = None,
) -> tuple[list[MatchedPair], int]:
    """Greedy matching without replacement, largest controls first.

    A control matches when the volume ratio sits in the allowed band and
    both early-prevalence gaps are under the tolerance; its second name
    is the one closest in early prevalence to the changeover's late
    name.  Returns the pairs and the count of unmatched changeovers.
    """
    tol = tolerances or MatchTolerances()
    q = params.q
    pool = sorted(candidates, key=lambda c: (-c.timeline.m, c.timeline.key))
    used = [False] * len(pool)
    pairs: list[MatchedPair] = []
    unmatched = 0
    for rec in sorted(changeovers, key=lambda r: (-r.m, (r.signature, r.body))):
        f_b = usage_fraction(rec.timeline, rec.early_name, 0.0, q)
        g_b = usage_fraction(rec.timeline, rec.late_name, 0.0, q)
        hit = None
        for idx, cand in enumerate(pool):
            if used[idx]:
                continue
            ratio = rec.m / cand.timeline.m
            if not (tol.ratio_lo <= ratio <= tol.ratio_hi):
                continue
            if abs(f_b - cand.early_prevalence) >= tol.prevalence_tol:
                continue
            best_name = None
            best_rank: tuple[float, int, str] | None = None
            for name in sorted(cand.others):
                prevalence, first_idx = cand.others[name]
                gap = abs(g_b - prevalence)
                if gap >= tol.prevalence_tol:
                    continue
                rank = (gap, first_idx, name)
                if best_rank is None or rank < best_rank:
                    best_rank = rank
                    best_name = name
            if best_name is None:
                continue
            hit = (idx, cand, best_name)
            break
        if hit is None:
            unmatched += 1
            continue
        idx, cand, late_name = hit
        used[idx] = True
        pairs.append(
            MatchedPair(
                record=rec,
                control=cand.timeline,
                control_early_name=cand.early_name,
                control_late_name=late_name,
                f_beta=f_b,
                g_beta=g_b,
                f_gamma=cand.early_prevalence,
                g_gamma=cand.others[late_name][0],
            )
        )
    return pairs, unmatched


# ---------------------------------------------------------------------------
# Experience curves and prediction features
# ---------------------------------------------------------------------------


def _window_bounds(m: int, t0: float, t1: float) -> tuple[int, int]:
    start = min(math.floor(t0 * m), m - 1)
    end = min(max(math.floor(t1 * m), start + 1), m)
    return start, end


def _first_use_positions(timeline: BodyTimeline) -> dict[tuple[str, str], int]:
    first: dict[tuple[str, str], int] = {}
    for idx, occ in enumerate(timeline.occurrences):
        for author in occ.authors:
            first.setdefault((author, occ.name), idx)
    return first


def _window_experiences(
    timeline: BodyTimeline,
    name: str,
    t0: float,
    t1: float,
    ledger: ExperienceLedger,
    adoption_only: bool,
    first_use: dict[tuple[str, str], int],
) -> list[int]:
    start, end = _window_bounds(timeline.m, t0, t1)
    values: list[int] = []
    for idx in range(start, end):
        occ = timeline.occurrences[idx]
        if occ.name != name:
            continue
        for author in occ.authors:
            if adoption_only and first_use[(author, name)] != idx:
                continue
            values.append(ledger.experience_at_rank(author, occ.group_rank))
    return values


EXPERIENCE_SERIES = (
    "usage_early",
    "usage_late",
    "usage_early_control",
    "usage_late_control",
    "adoption_early",
    "adoption_late",
    "adoption_early_control",
    "adoption_late_control",
)


@dataclass
class ExperienceCurves:
    grid: tuple[float, ...]
    series: dict[str, list[float | None]]


def experience_curves(
    pairs: Sequence[MatchedPair], ledger: ExperienceLedger, delta: float
) -> ExperienceCurves:
    """Mean usage/adoption experience per window for the four names,
    averaged across pairs; windows empty in every pair come out None."""
    if not pairs:
        raise ValueError("no matched pairs")
    grid = window_grid(delta)
    sums = {name: [0.0] * len(grid) for name in EXPERIENCE_SERIES}
    counts = {name: [0] * len(grid) for name in EXPERIENCE_SERIES}
    for pair in pairs:
        roles = (
            ("usage_early", pair.record.timeline, pair.record.early_name, False),
            ("usage_late", pair.record.timeline, pair.record.late_name, False),
            ("usage_early_control", pair.control, pair.control_early_name, False),
            ("usage_late_control", pair.control, pair.control_late_name, False),
            ("adoption_early", pair.record.timeline, pair.record.early_name, True),
            ("adoption_late", pair.record.timeline, pair.record.late_name, True),
            ("adoption_early_control", pair.control, pair.control_early_name, True),
            ("adoption_late_control", pair.control, pair.control_late_name, True),
        )
        first_use_cache = {
            id(pair.record.timeline): _first_use_positions(pair.record.timeline),
            id(pair.control): _first_use_positions(pair.control),
        }
        for series, timeline, name, adoption in roles:
            first_use = first_use_cache[id(timeline)]
            for i, t in enumerate(grid):
                values = _window_experiences(
                    timeline, name, t, t + delta, ledger, adoption, first_use
                )
                if values:
                    sums[series][i] += sum(values) / len(values)
                    counts[series][i] += 1
    series_out: dict[str, list[float | None]] = {}
    for name in EXPERIENCE_SERIES:
        series_out[name] = [
            (sums[name][i] / counts[name][i]) if counts[name][i] else None
            for i in range(len(grid))
        ]
    return ExperienceCurves(grid=grid, series=series_out)


FEATURE_WINDOW_WIDTH = 0.05


def changeover_feature_columns(q: float) -> list[str]:
    n_windows = int(math.floor(q / FEATURE_WINDOW_WIDTH + 1e-9))
    cols = ["early_authors_e", "early_authors_l"]
    for tag in ("e", "l"):
        for kind in ("usage", "adoption"):
            for w in range(n_windows):
                cols.append(f"{kind}_exp_{tag}_w{w}")
                cols.append(f"{kind}_exp_{tag}_w{w}_missing")
    for tag in ("e", "l"):
        cols.extend(
            [
                f"name_len_{tag}",
                f"name_non_alpha_{tag}",
                f"name_frac_lower_{tag}",
                f"name_frac_upper_{tag}",
            ]
        )
    return cols


def changeover_features(
    pair: MatchedPair, q: float, ledger: ExperienceLedger
) -> tuple[list[float], list[float]]:
    """Feature rows for the changeover body (label 1) and its control
    (label 0): early author counts, windowed experiences with missing
    flags, and name orthography."""
    n_windows = int(math.floor(q / FEATURE_WINDOW_WIDTH + 1e-9))
    rows: list[list[float]] = []
    for timeline, early_name, late_name in (
        (pair.record.timeline, pair.record.early_name, pair.record.late_name),
        (pair.control, pair.control_early_name, pair.control_late_name),
    ):
        first_use = _first_use_positions(timeline)
        start, end = _window_bounds(timeline.m, 0.0, q)
        early_occs = timeline.occurrences[start:end]
        row: list[float] = []
        for name in (early_name, late_name):
            row.append(float(len({a for o in early_occs if o.name == name for a in o.authors})))
        for name in (early_name, late_name):
            for adoption in (False, True):
                for w in range(n_windows):
                    t = w * FEATURE_WINDOW_WIDTH
                    values = _window_experiences(
                        timeline, name, t, t + FEATURE_WINDOW_WIDTH, ledger, adoption, first_use
                    )
                    if values:
                        row.extend([sum(values) / len(values), 0.0])
                    else:
                        row.extend([0.0, 1.0])
        for name in (early_name, late_name):
            nf = name_features(name)
            row.extend([float(nf.length), float(nf.non_alpha), nf.frac_lower, nf.frac_upper])
        rows.append(row)
    return rows[0], rows[1]
