"""Command-line pipeline: extract, analyze, predict, generate, report.

Every subcommand reads a corpus manifest (or a feature matrix), writes
plot-ready CSV (or mirrored JSON) into an output directory, and is
fully deterministic for a fixed ``--seed``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import analytics, changeover, fights, report, synth
from .corpus import Corpus, load_corpus
from .extraction import MacroDefinition, extract_definitions
from .timelines import (
    build_coauthor_index,
    build_experience_ledger,
    build_name_timelines,
    build_timelines,
    timeline_rows,
)

log = logging.getLogger("macrolens")

DEFAULT_OUT_ENV = "MACROLENS_OUTDIR"


def _default_outdir() -> str:
    return os.environ.get(DEFAULT_OUT_ENV, "out")


def _add_corpus_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", required=True, help="path to a JSONL corpus manifest")
    p.add_argument("--out", default=None, help=f"output directory (default ${DEFAULT_OUT_ENV} or ./out)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_changeover_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--s", type=int, default=100, help="minimum body volume")
    p.add_argument("--q", type=float, default=0.3, help="edge window fraction (<= 0.5)")
    p.add_argument("--theta", type=float, default=0.3, help="author-share threshold")
    p.add_argument("--delta", type=float, default=0.05, help="sliding window increment")
    p.add_argument("--persistence", type=float, default=0.1, help="crossing persistence span")


def _changeover_params(args) -> changeover.ChangeoverParams:
    return changeover.ChangeoverParams(
        s=args.s, q=args.q, theta=args.theta, delta=args.delta, persistence=args.persistence
    )


def _load(args) -> Corpus:
    result = load_corpus(args.corpus)
    if result.skipped:
        log.warning("skipped %d malformed corpus records", result.skipped)
    return result.corpus


def _extract_all(corpus: Corpus) -> tuple[dict[str, list[MacroDefinition]], int]:
    by_paper: dict[str, list[MacroDefinition]] = {}
    skipped = 0
    for paper in corpus:
        res = extract_definitions(paper.source, paper.paper_id)
        skipped += res.skipped
        if res.definitions:
            by_paper[paper.paper_id] = res.definitions
    if skipped:
        log.warning("skipped %d malformed macro definitions", skipped)
    return by_paper, skipped


def _outdir(args) -> Path:
    out = Path(args.out if args.out is not None else _default_outdir())
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_extract(args) -> int:
    corpus = _load(args)
    defs, _ = _extract_all(corpus)
    rows = []
    for paper in corpus:
        for d in defs.get(paper.paper_id, []):
            rows.append((d.paper_id, d.name, d.body, d.command))
    report.write_table(
        _outdir(args) / "definitions", ("paper_id", "name", "body", "defining_command"),
        rows, args.format,
    )
    return 0


def cmd_timelines(args) -> int:
    corpus = _load(args)
    defs, _ = _extract_all(corpus)
    timelines = build_timelines(corpus, defs)
    rows = [
        (r["body_hash"], r["m"], r["distinct_names"], r["distinct_authors"])
        for r in timeline_rows(timelines)
    ]
    report.write_table(
        _outdir(args) / "timelines", ("body_hash", "m", "distinct_names", "distinct_authors"),
        rows, args.format,
    )
    return 0


def _detect_changeovers(corpus, defs, params):
    timelines = build_timelines(corpus, defs)
    records = []
    for key in sorted(timelines):
        rec = changeover.detect_changeover(timelines[key], params)
        if rec is not None:
            records.append(rec)
    return timelines, records


def cmd_changeovers(args) -> int:
    corpus = _load(args)
    defs, _ = _extract_all(corpus)
    params = _changeover_params(args)
    _, records = _detect_changeovers(corpus, defs, params)
    out = _outdir(args)
    rows = []
    for rec in records:
        h = report.body_hash(rec.signature, rec.body)
        rows.append((h, rec.body, rec.signature, rec.early_name, rec.late_name, rec.m, rec.crossing))
        curve_rows = [
            (t, rec.f_curve.values[i], rec.g_curve.values[i])
            for i, t in enumerate(rec.f_curve.grid)
        ]
        report.write_table(
            out / "curves" / h, ("t", "early_fraction", "late_fraction"), curve_rows, args.format
        )
    report.write_table(
        out / "changeovers",
        ("body_hash", "body", "signature", "early_name", "late_name", "m", "crossing"),
        rows, args.format,
    )
    return 0


def _matched_pairs(corpus, defs, params):
    timelines, records = _detect_changeovers(corpus, defs, params)
    candidates = changeover.find_control_candidates(timelines, params)
    pairs, unmatched = changeover.match_pairs(records, candidates, params)
    return timelines, records, pairs, unmatched


def cmd_matched_pairs(args) -> int:
    corpus = _load(args)
    defs, _ = _extract_all(corpus)
    params = _changeover_params(args)
    _, _, pairs, unmatched = _matched_pairs(corpus, defs, params)
    if unmatched:
        log.warning("%d changeovers had no matching control", unmatched)
    ledger = build_experience_ledger(corpus)
    out = _outdir(args)
    pair_rows = []
    feat_rows = []
    labels = []
    for pair in pairs:
        pair_rows.append(
            (
                report.body_hash(pair.record.signature, pair.record.body),
                report.body_hash(pair.control.signature, pair.control.body),
                pair.record.early_name,
                pair.record.late_name,
                pair.control_early_name,
                pair.control_late_name,
                pair.m_beta,
                pair.m_gamma,
                pair.f_beta,
                pair.g_beta,
                pair.f_gamma,
                pair.g_gamma,
            )
        )
        row_beta, row_gamma = changeover.changeover_features(pair, params.q, ledger)
        feat_rows.extend([row_beta, row_gamma])
        labels.extend([1, 0])
    report.write_table(
        out / "matched_pairs",
        (
            "beta_hash", "gamma_hash", "early_name", "late_name",
            "control_early_name", "control_late_name", "m_beta", "m_gamma",
            "f_beta", "g_beta", "f_gamma", "g_gamma",
        ),
        pair_rows, args.format,
    )
    cols = changeover.changeover_feature_columns(params.q)
    report.write_table(
        out / "changeover_features",
        tuple(cols) + ("label",),
        [tuple(r) + (lbl,) for r, lbl in zip(feat_rows, labels)],
        args.format,
    )
    return 0


def cmd_curves(args) -> int:
    corpus = _load(args)
    defs, _ = _extract_all(corpus)
    params = _changeover_params(args)
    _, records, pairs, _ = _matched_pairs(corpus, defs, params)
    out = _outdir(args)
    if records:
        f_med, g_med, hist = changeover.aggregate_median_curves(records)
        agg_rows = [(t, f_med.values[i], "early_median") for i, t in enumerate(f_med.grid)]
        agg_rows += [(t, g_med.values[i], "late_median") for i, t in enumerate(g_med.grid)]
        report.write_table(out / "aggregate_curves", ("t", "value", "series"), agg_rows, args.format)
        report.write_table(out / "crossing_histogram", ("t", "count"), hist, args.format)
    else:
        report.write_table(out / "aggregate_curves", ("t", "value", "series"), [], args.format)
        report.write_table(out / "crossing_histogram", ("t", "count"), [], args.format)
    if pairs:
        ledger = build_experience_ledger(corpus)
        curves = changeover.experience_curves(pairs, ledger, params.delta)
        exp_rows = []
        for series in changeover.EXPERIENCE_SERIES:
            for i, t in enumerate(curves.grid):
                exp_rows.append((t, curves.series[series][i], series))
        report.write_table(out / "experience_curves", ("t", "value", "series"), exp_rows, args.format)
    else:
        report.write_table(out / "experience_curves", ("t", "value", "series"), [], args.format)
    return 0


def _gap_table_rows(rows):
    return [(r.lo, r.hi, r.rate, r.n) for r in rows]


def _write_variant_fights(out, prefix, fight_list, timelines_by_key, corpus, ledger, args):
    shared_label = "body_hash" if prefix == "name" else "name"
    rows = []
    for f in fight_list:
        shared = (
            report.body_hash(f.shared_key[0], f.shared_key[1])
            if prefix == "name"
            else f.shared
        )
        rows.append(
            (
                f.paper_id, f.author_a, f.author_b, shared,
                f.variant_a, f.variant_b, f.winner + 1, f.exp_a, f.exp_b,
            )
        )
    report.write_table(
        out / f"{prefix}_fights",
        ("paper_id", "author_1", "author_2", shared_label, "choice_1", "choice_2",
         "winner", "exp_1", "exp_2"),
        rows, args.format,
    )
    index = build_coauthor_index(corpus)
    matrix = fights.fight_feature_matrix(fight_list, timelines_by_key, corpus, ledger, index)
    report.write_table(
        out / f"{prefix}_fight_features",
        tuple(matrix.columns) + ("label",),
        [tuple(matrix.X[i]) + (int(matrix.y[i]),) for i in range(matrix.n_rows)],
        args.format,
    )
    gap_rows = fights.win_rate_by_gap(
        fight_list, bucket_edges=args.bucket_edges, seed=args.seed
    )
    report.write_table(
        out / f"{prefix}_fight_gap_table",
        ("gap_lo", "gap_hi", "older_win_rate", "n"),
        _gap_table_rows(gap_rows), args.format,
    )


def cmd_fights(args) -> int:
    corpus = _load(args)
    out = _outdir(args)
    ledger = build_experience_ledger(corpus)
    if args.mode in ("name", "body"):
        defs, _ = _extract_all(corpus)
        if args.mode == "name":
            timelines = build_timelines(corpus, defs)
            filters = fights.FightFilters(
                min_distinct_authors=args.min_authors,
                min_shared_len=args.min_body_len,
                three_author=args.three_author,
            )
            fight_list = fights.detect_name_fights(corpus, timelines, ledger, filters)
            by_key = timelines
        else:
            whitelist = args.whitelist or list(fights.DEFAULT_BODY_FIGHT_NAMES)
            fight_list = fights.detect_body_fights(
                corpus, defs, ledger, whitelist,
                min_distinct_authors=args.min_authors,
                three_author=args.three_author,
            )
            name_timelines = build_name_timelines(corpus, defs, whitelist=whitelist)
            by_key = {tl.key: tl for tl in name_timelines.values()}
        if not fight_list:
            log.warning("no %s fights detected", args.mode)
            report.write_table(
                out / f"{args.mode}_fights",
                ("paper_id", "author_1", "author_2",
                 "body_hash" if args.mode == "name" else "name",
                 "choice_1", "choice_2", "winner", "exp_1", "exp_2"),
                [], args.format,
            )
            return 0
        _write_variant_fights(out, args.mode, fight_list, by_key, corpus, ledger, args)
        return 0
    # title fights
    lexicon = fights.TitleLexicon.load(args.lexicon) if args.lexicon else None
    filters = fights.TitleFightFilters(
        older_exp_threshold=args.older_exp_threshold,
        min_younger_papers=args.min_younger_papers,
    )
    fight_list = fights.detect_title_fights(
        corpus, args.style, filters, ledger=ledger, lexicon=lexicon
    )
    report.write_table(
        out / "title_fights",
        ("paper_id", "style", "younger", "older", "exp_younger", "exp_older",
         "profile_younger", "profile_older", "indicator"),
        [
            (f.paper_id, f.style, f.younger, f.older, f.exp_younger, f.exp_older,
             f.profile_younger, f.profile_older, f.indicator)
            for f in fight_list
        ],
        args.format,
    )
    pairs, unmatched = fights.match_title_fights(fight_list, tolerance=args.match_tolerance)
    if unmatched:
        log.warning("%d title fights left unmatched", unmatched)
    report.write_table(
        out / "title_fight_pairs",
        ("paper_id_1", "paper_id_2", "verdict", "mean_gap"),
        [(p.first.paper_id, p.second.paper_id, p.verdict(), p.mean_gap) for p in pairs],
        args.format,
    )
    report.write_table(
        out / "dominance_gap_table",
        ("gap_lo", "gap_hi", "high_dominance_rate", "n"),
        _gap_table_rows(fights.dominance_by_gap(pairs, bucket_edges=args.bucket_edges)),
        args.format,
    )
    return 0


def _read_feature_csv(path: Path) -> analytics.FeatureMatrix:
    import csv as _csv

    with open(path, encoding="utf-8", newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader)
        if header[-1] != "label":
            raise ValueError("feature CSV must end with a 'label' column")
        columns = header[:-1]
        rows = []
        labels = []
        for rec in reader:
            rows.append([float(v) for v in rec[:-1]])
            labels.append(int(float(rec[-1])))
    return analytics.FeatureMatrix.from_rows(columns, rows, labels)


def cmd_predict(args) -> int:
    matrix = _read_feature_csv(Path(args.features))
    train_raw, test_raw = analytics.split(
        matrix, train_frac=args.train_frac, seed=args.seed, balance=True
    )
    train, stats = analytics.zscore(train_raw)
    test = analytics.apply_zscore(test_raw, stats)
    model = analytics.logistic_fit(train, analytics.TrainConfig(seed=args.seed))
    acc = analytics.accuracy(model, test)
    correct = round(acc * test.n_rows)
    ci_lo, ci_hi = analytics.binomial_ci(correct, test.n_rows)
    out = _outdir(args)
    coef_rows = [("intercept", model.intercept)] + sorted(model.coefficients().items())
    report.write_table(out / "coefficients", ("feature", "coefficient"), coef_rows, args.format)
    report.write_table(
        out / "prediction_metrics",
        ("accuracy", "ci_low", "ci_high", "n_train", "n_test",
         "iterations", "converged", "final_loss", "seed"),
        [(acc, ci_lo, ci_hi, train.n_rows, test.n_rows,
          model.iterations, model.converged, model.final_loss, args.seed)],
        args.format,
    )
    return 0


def cmd_synth(args) -> int:
    config = synth.SynthConfig(
        seed=args.seed,
        preset=args.preset,
        n_changeover_pairs=args.changeover_pairs,
        n_name_fights=args.name_fights,
        n_body_fights=args.body_fights,
        n_title_pairs=args.title_pairs,
    )
    result = synth.generate(config)
    out = Path(args.out if args.out is not None else _default_outdir())
    manifest, truth = synth.write_output(result, out)
    log.info("wrote %s (%d papers) and %s", manifest, len(result.records), truth)
    return 0


def cmd_report(args) -> int:
    corpus = _load(args)
    defs, _ = _extract_all(corpus)
    out = _outdir(args)
    rows = []
    for paper in corpus:
        for d in defs.get(paper.paper_id, []):
            rows.append((d.paper_id, d.name, d.body, d.command))
    report.write_table(
        out / "definitions", ("paper_id", "name", "body", "defining_command"), rows, args.format
    )
    summary = report.corpus_summary(corpus, defs)
    report.write_table(
        out / "summary", ("metric", "value"), report.summary_rows(summary), args.format
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macrolens",
        description="Mine competing macro conventions from a paper corpus.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract macro definitions to CSV")
    _add_corpus_args(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("timelines", help="per-body usage summaries")
    _add_corpus_args(p)
    p.set_defaults(func=cmd_timelines)

    p = sub.add_parser("changeovers", help="detect name changeovers")
    _add_corpus_args(p)
    _add_changeover_args(p)
    p.set_defaults(func=cmd_changeovers)

    p = sub.add_parser("matched-pairs", help="match changeovers with controls")
    _add_corpus_args(p)
    _add_changeover_args(p)
    p.set_defaults(func=cmd_matched_pairs)

    p = sub.add_parser("curves", help="aggregate usage and experience curves")
    _add_corpus_args(p)
    _add_changeover_args(p)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("fights", help="detect convention fights")
    p.add_argument("mode", choices=("name", "body", "title"))
    _add_corpus_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-authors", type=int, default=30, dest="min_authors")
    p.add_argument("--min-body-len", type=int, default=10, dest="min_body_len")
    p.add_argument("--three-author", action="store_true", dest="three_author",
                   help="robustness variant: second vs third author on 3-author papers")
    p.add_argument("--whitelist", nargs="*", default=None,
                   help="macro names eligible for body fights")
    p.add_argument("--style", choices=fights.STYLE_NAMES, default="colon")
    p.add_argument("--older-exp-threshold", type=int, default=20, dest="older_exp_threshold")
    p.add_argument("--min-younger-papers", type=int, default=10, dest="min_younger_papers")
    p.add_argument("--match-tolerance", type=float, default=0.05, dest="match_tolerance")
    p.add_argument("--lexicon", default=None, help="path to a title lexicon JSON")
    p.add_argument("--bucket-edges", type=int, nargs="*",
                   default=list(fights.DEFAULT_GAP_EDGES), dest="bucket_edges")
    p.set_defaults(func=cmd_fights)

    p = sub.add_parser("predict", help="fit and score a logistic model on a feature CSV")
    p.add_argument("--features", required=True, help="feature matrix CSV with a label column")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-frac", type=float, default=0.8, dest="train_frac")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    p.add_argument("--preset", choices=synth.PRESETS, default="full")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--changeover-pairs", type=int, default=12, dest="changeover_pairs")
    p.add_argument("--name-fights", type=int, default=200, dest="name_fights")
    p.add_argument("--body-fights", type=int, default=120, dest="body_fights")
    p.add_argument("--title-pairs", type=int, default=100, dest="title_pairs")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="corpus summary statistics")
    _add_corpus_args(p)
    p.set_defaults(func=cmd_report)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        parser.exit(2 if isinstance(exc, ValueError) else 1, f"macrolens: error: {exc}\n")
        return 2  # unreachable; parser.exit raises SystemExit


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
