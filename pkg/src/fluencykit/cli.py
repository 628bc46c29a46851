"""Command-line front end.

Subcommands: segment, features, evaluate, rate-serve, report.  Every batch
command writes a run manifest JSON capturing the resolved configuration, the
seed, and input hashes, and is byte-deterministic given config + seed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .audio import ANALYSIS_RATE, AudioError, load_wav, resample
from .clustering import (
    ClusterResult,
    build_pseudo_syllables,
    classify,
    cluster,
    find_silent_breaks,
)
from .fbds import segment as segment_buffer
from .features import StimulusScript, compute_features, expected_sign_check
from .io_formats import (
    cluster_json,
    evaluation_report_json,
    read_features_csv,
    read_ratings_csv,
    run_manifest,
    scatter_svg,
    segments_json,
    write_clusters_csv,
    write_features_csv,
    write_json,
    write_predictions_csv,
    write_segments_csv,
)
from .manifest import DEFAULT_RFR_GRID, DEFAULT_SVR_GRID, load_config, read_manifest
from .models import (
    Dataset,
    DatasetRow,
    ModelSpec,
    fit_mlr_full,
    loso_evaluate,
    loso_evaluate_nested,
)
from .stats import UndefinedStatisticError, build_reference_ratings, partial_f_test


def _load_analysis_buffer(path):
    buf = load_wav(path)
    if buf.sample_rate != ANALYSIS_RATE:
        buf = resample(buf, ANALYSIS_RATE)
    return buf


def cmd_segment(args) -> int:
    config = load_config(args.config)
    manifest = read_manifest(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    failures = []
    all_segments = []
    all_clusters = []
    for row in manifest.rows:
        try:
            buf = _load_analysis_buffer(row.wav_path)
            segments = segment_buffer(buf, config.fbds)
            labeled = classify(segments, config.clustering)
            result = ClusterResult(
                tuple(build_pseudo_syllables(labeled, config.clustering)),
                tuple(find_silent_breaks(labeled, config.clustering)),
                buf.duration_ms,
            )
        except (AudioError, ValueError) as exc:
            print(f"error: {row.stimulus_id}: {exc}", file=sys.stderr)
            failures.append(row.stimulus_id)
            continue
        write_json(out_dir / f"{row.stimulus_id}.segments.json",
                   segments_json(row.stimulus_id, segments))
        write_segments_csv(out_dir / f"{row.stimulus_id}.segments.csv",
                           [(row.stimulus_id, segments)])
        write_json(out_dir / f"{row.stimulus_id}.clusters.json",
                   cluster_json(row.stimulus_id, result))
        all_segments.append((row.stimulus_id, segments))
        all_clusters.append((row.stimulus_id, result))

    write_segments_csv(out_dir / "segments.csv", all_segments)
    write_clusters_csv(out_dir / "clusters.csv", all_clusters)
    outputs = ["segments.csv", "clusters.csv"] + [
        f"{sid}.{kind}" for sid, _ in all_segments
        for kind in ("segments.json", "segments.csv", "clusters.json")
    ]
    write_json(out_dir / "run_manifest.json", run_manifest(
        "segment", config.to_dict(), args.seed,
        {"manifest": args.manifest}, outputs))
    if failures:
        print(f"{len(failures)} of {len(manifest.rows)} stimuli failed", file=sys.stderr)
        return 1
    return 0


def cmd_features(args) -> int:
    config = load_config(args.config)
    manifest = read_manifest(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    use_scripts = manifest.has_full_scripts()
    failures = []
    rows = []
    for row in manifest.rows:
        try:
            buf = _load_analysis_buffer(row.wav_path)
            result = cluster(buf, config.fbds, config.clustering)
            script = None
            if use_scripts:
                script = StimulusScript(row.sentence_id, row.expected_syllables)
            feats = compute_features(result, script)
        except (AudioError, ValueError) as exc:
            print(f"error: {row.stimulus_id}: {exc}", file=sys.stderr)
            failures.append(row.stimulus_id)
            continue
        rows.append((row.stimulus_id, row.speaker_id, feats))

    write_features_csv(out_dir / "features.csv", rows)
    write_json(out_dir / "run_manifest.json", run_manifest(
        "features", config.to_dict(), args.seed,
        {"manifest": args.manifest}, ["features.csv"]))
    if failures:
        print(f"{len(failures)} of {len(manifest.rows)} stimuli failed", file=sys.stderr)
        return 1
    return 0


def cmd_evaluate(args) -> int:
    config = load_config(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    feature_rows = read_features_csv(args.features)
    records = read_ratings_csv(args.ratings)
    references, reliability = build_reference_ratings(
        records, allow_single_pass=args.allow_single_pass)
    ref_by_id = {r.stimulus_id: r.value for r in references}

    missing_ratings = sorted(r["stimulus_id"] for r in feature_rows
                             if r["stimulus_id"] not in ref_by_id)
    missing_features = sorted(set(ref_by_id) - {r["stimulus_id"] for r in feature_rows})
    if missing_ratings or missing_features:
        if missing_ratings:
            print(f"error: stimuli without ratings: {missing_ratings}", file=sys.stderr)
        if missing_features:
            print(f"error: ratings without features: {missing_features}", file=sys.stderr)
        return 1

    data = Dataset([
        DatasetRow(r["stimulus_id"], r["speaker_id"], r["features"],
                   ref_by_id[r["stimulus_id"]])
        for r in feature_rows
    ])

    with_delta = bool(args.with_delta)
    if with_delta and not data.has_delta:
        print("error: --with-delta requires a syllable_count_delta column",
              file=sys.stderr)
        return 1

    model_cfg = dict(config.model)
    hyperparams = dict(model_cfg.get("hyperparams", {}))
    resolved_grid = None
    if args.tune and args.model in ("svr", "rfr"):
        resolved_grid = model_cfg.get(
            f"{args.model}_grid",
            DEFAULT_SVR_GRID if args.model == "svr" else DEFAULT_RFR_GRID)
        report = loso_evaluate_nested(data, args.model, resolved_grid,
                                      with_delta=with_delta, seed=args.seed)
    else:
        spec = ModelSpec(args.model, hyperparams, with_delta=with_delta, seed=args.seed)
        report = loso_evaluate(data, spec)

    report_obj = evaluation_report_json(report)
    report_obj["reliability"] = reliability
    try:
        signs = expected_sign_check([r.features for r in data.rows],
                                    [r.reference for r in data.rows])
    except (ValueError, UndefinedStatisticError) as exc:
        signs = {"error": str(exc)}
    report_obj["predictor_correlations"] = signs

    full1 = fit_mlr_full(data, with_delta=False)
    report_obj["full_fit"] = {"model_1": {
        "r2": full1.r2, "rmse": full1.rmse, "betas": full1.betas,
        "predictors": full1.retained, "n": full1.n,
    }}
    if data.has_delta:
        full2 = fit_mlr_full(data, with_delta=True)
        report_obj["full_fit"]["model_2"] = {
            "r2": full2.r2, "rmse": full2.rmse, "betas": full2.betas,
            "predictors": full2.retained, "n": full2.n,
        }
        report_obj["full_fit"]["r2_change"] = full2.r2 - full1.r2
        try:
            f_stat, p = partial_f_test(full1.r2, len(full1.retained),
                                       full2.r2, len(full2.retained), full2.n)
            report_obj["full_fit"]["partial_f"] = {"F": f_stat, "p": p}
        except (ValueError, UndefinedStatisticError) as exc:
            report_obj["full_fit"]["partial_f"] = {"error": str(exc)}
    write_json(out_dir / "report.json", report_obj)
    write_predictions_csv(out_dir / "predictions.csv", report.predictions)

    sent_x = [p.reference for p in report.predictions]
    sent_y = [p.prediction for p in report.predictions]
    (out_dir / "scatter_sentence.svg").write_text(scatter_svg(
        sent_x, sent_y, "Reference rating", "Predicted rating",
        f"Sentence level ({args.model.upper()})"), encoding="utf-8")
    pairs = report.participant_level["pairs"]
    (out_dir / "scatter_participant.svg").write_text(scatter_svg(
        [p["reference_mean"] for p in pairs], [p["prediction_mean"] for p in pairs],
        "Mean reference rating", "Mean predicted rating",
        f"Participant level ({args.model.upper()})"), encoding="utf-8")

    write_json(out_dir / "run_manifest.json", run_manifest(
        "evaluate", {**config.to_dict(), "cli_model": args.model,
                     "cli_with_delta": with_delta, "cli_tune": bool(args.tune),
                     "resolved_grid": resolved_grid},
        args.seed,
        {"features": args.features, "ratings": args.ratings},
        ["report.json", "predictions.csv", "scatter_sentence.svg",
         "scatter_participant.svg"]))
    return 0


def cmd_report(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = read_ratings_csv(args.ratings)
    references, reliability = build_reference_ratings(
        records, allow_single_pass=args.allow_single_pass)
    write_json(out_dir / "reliability.json", reliability)
    with open(out_dir / "reference_ratings.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write("stimulus_id,reference\n")
        for ref in references:
            fh.write(f"{ref.stimulus_id},{ref.value!r}\n")
    write_json(out_dir / "run_manifest.json", run_manifest(
        "report", {}, args.seed, {"ratings": args.ratings},
        ["reliability.json", "reference_ratings.csv"]))
    return 0


def cmd_rate_serve(args) -> int:
    from .server import create_server

    manifest = read_manifest(args.manifest)
    practice = read_manifest(args.practice_manifest) if args.practice_manifest else None
    server, _ = create_server(manifest, args.out_ratings, port=args.port,
                              seed=args.seed, practice=practice, ui_dir=args.ui_dir)
    inputs = {"manifest": args.manifest}
    if args.practice_manifest:
        inputs["practice_manifest"] = args.practice_manifest
    write_json(Path(args.out_ratings).with_suffix(".run_manifest.json"), run_manifest(
        "rate-serve", {"port": args.port, "ui_dir": args.ui_dir},
        args.seed, inputs, [str(args.out_ratings)]))
    host, port = server.server_address[:2]
    print(f"rating service listening on http://{host}:{port}/ "
          f"({len(manifest.rows)} stimuli, ratings -> {args.out_ratings})",
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        print("shutting down")
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluencykit",
        description="Automatic read-speech fluency scoring")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, manifest=False):
        p.add_argument("--config", help="run config JSON")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)
        if manifest:
            p.add_argument("--manifest", required=True, help="stimulus manifest CSV")

    p = sub.add_parser("segment", help="segment + cluster every stimulus")
    common(p, manifest=True)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("features", help="compute fluency predictors per stimulus")
    common(p, manifest=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("evaluate", help="LOSO evaluation against ratings")
    common(p)
    p.add_argument("--features", required=True, help="features CSV")
    p.add_argument("--ratings", required=True, help="ratings CSV (rater log)")
    p.add_argument("--model", choices=["mlr", "svr", "rfr"], default="mlr")
    p.add_argument("--with-delta", action="store_true",
                   help="include the repetition delta predictor")
    p.add_argument("--tune", action="store_true",
                   help="nested LOSO hyperparameter tuning (svr/rfr)")
    p.add_argument("--allow-single-pass", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="rating reliability report")
    common(p)
    p.add_argument("--ratings", required=True)
    p.add_argument("--allow-single-pass", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("rate-serve", help="serve the rating UI and API")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-ratings", required=True, help="append-only ratings CSV")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--practice-manifest", help="familiarization stimuli CSV")
    p.add_argument("--ui-dir", help="directory with built UI assets")
    p.set_defaults(func=cmd_rate_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AudioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
