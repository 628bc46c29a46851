"""File schemas: CSV/JSON exports, the scatter SVG, and run manifests.

All writers are deterministic: floats use repr (shortest round-trip), JSON is
key-sorted, and nothing embeds a timestamp, so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

from . import __version__
from .clustering import ClusterResult
from .fbds import Segment
from .features import FluencyFeatures
from .stats import RatingRecord

FEATURES_COLUMNS = [
    "stimulus_id", "speaker_id", "duration_ms", "n_pseudo_syllables",
    "n_silent_breaks", "pseudo_syllable_rate_per_ms", "sd_pseudo_syllable_ms",
    "speech_ratio", "silent_break_rate_per_ms", "syllable_count_delta",
    # convenience columns, factor 1000 from the per-ms rates
    "pseudo_syllable_rate_per_s", "silent_break_rate_per_s",
]
RATINGS_COLUMNS = ["rater_id", "stimulus_id", "pass", "rating", "timestamp_iso8601"]
PREDICTIONS_COLUMNS = ["stimulus_id", "speaker_id", "reference", "prediction", "fold_speaker"]
SEGMENTS_COLUMNS = ["stimulus_id", "start_ms", "end_ms", "max_energy"]
CLUSTERS_COLUMNS = ["stimulus_id", "kind", "start_ms", "end_ms"]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


# -- segments / clusters ----------------------------------------------------

def write_segments_csv(path, per_stimulus: list[tuple[str, list[Segment]]]) -> None:
    rows = [
        (sid, s.start_ms, s.end_ms, s.max_energy)
        for sid, segments in per_stimulus
        for s in segments
    ]
    _write_csv(path, SEGMENTS_COLUMNS, rows)


def segments_json(stimulus_id: str, segments: list[Segment]) -> dict:
    return {
        "stimulus_id": stimulus_id,
        "segments": [
            {"start_ms": s.start_ms, "end_ms": s.end_ms, "max_energy": s.max_energy}
            for s in segments
        ],
    }


def cluster_json(stimulus_id: str, result: ClusterResult) -> dict:
    return {
        "stimulus_id": stimulus_id,
        "total_duration_ms": result.total_duration_ms,
        "pseudo_syllables": [
            {"start_ms": p.start_ms, "end_ms": p.end_ms} for p in result.pseudo_syllables
        ],
        "silent_breaks": [
            {"start_ms": b.start_ms, "end_ms": b.end_ms} for b in result.silent_breaks
        ],
    }


def write_clusters_csv(path, per_stimulus: list[tuple[str, ClusterResult]]) -> None:
    rows = []
    for sid, result in per_stimulus:
        for p in result.pseudo_syllables:
            rows.append((sid, "pseudo_syllable", p.start_ms, p.end_ms))
        for b in result.silent_breaks:
            rows.append((sid, "silent_break", b.start_ms, b.end_ms))
    _write_csv(path, CLUSTERS_COLUMNS, rows)


# -- features -----------------------------------------------------------------

def write_features_csv(path, rows: list[tuple[str, str, FluencyFeatures]]) -> None:
    """rows: (stimulus_id, speaker_id, features)."""
    out = []
    for sid, speaker, f in rows:
        out.append((
            sid, speaker, f.duration_ms, f.n_pseudo_syllables, f.n_silent_breaks,
            f.pseudo_syllable_rate, f.sd_pseudo_syllable_ms, f.speech_ratio,
            f.silent_break_rate, f.syllable_count_delta,
            f.pseudo_syllable_rate * 1000.0, f.silent_break_rate * 1000.0,
        ))
    _write_csv(path, FEATURES_COLUMNS, out)


def read_features_csv(path) -> list[dict]:
    """Rows with stimulus_id, speaker_id, and a FluencyFeatures instance."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(FEATURES_COLUMNS[:10]) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing features columns {sorted(missing)}")
        for rec in reader:
            delta = rec["syllable_count_delta"]
            features = FluencyFeatures(
                pseudo_syllable_rate=float(rec["pseudo_syllable_rate_per_ms"]),
                sd_pseudo_syllable_ms=float(rec["sd_pseudo_syllable_ms"]),
                speech_ratio=float(rec["speech_ratio"]),
                silent_break_rate=float(rec["silent_break_rate_per_ms"]),
                syllable_count_delta=int(delta) if delta != "" else None,
                n_pseudo_syllables=int(rec["n_pseudo_syllables"]),
                n_silent_breaks=int(rec["n_silent_breaks"]),
                duration_ms=float(rec["duration_ms"]),
            )
            out.append({"stimulus_id": rec["stimulus_id"],
                        "speaker_id": rec["speaker_id"], "features": features})
    return out


# -- ratings ------------------------------------------------------------------

def write_ratings_csv(path, records: list[RatingRecord]) -> None:
    rows = [(r.rater_id, r.stimulus_id, r.pass_number, r.rating, r.timestamp)
            for r in records]
    _write_csv(path, RATINGS_COLUMNS, rows)


def ratings_csv_text(records: list[RatingRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RATINGS_COLUMNS)
    for r in records:
        writer.writerow([r.rater_id, r.stimulus_id, r.pass_number, r.rating, r.timestamp])
    return buf.getvalue()


def read_ratings_csv(path) -> list[RatingRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RATINGS_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing ratings columns {sorted(missing)}")
        for rec in reader:
            out.append(RatingRecord(
                rater_id=rec["rater_id"],
                stimulus_id=rec["stimulus_id"],
                pass_number=int(rec["pass"]),
                rating=int(rec["rating"]),
                timestamp=rec["timestamp_iso8601"],
            ))
    return out


# -- predictions + evaluation report -------------------------------------------

def write_predictions_csv(path, predictions) -> None:
    rows = [(p.stimulus_id, p.speaker_id, p.reference, p.prediction, p.fold_speaker)
            for p in predictions]
    _write_csv(path, PREDICTIONS_COLUMNS, rows)


def evaluation_report_json(report) -> dict:
    return {
        "model": report.model,
        "rmse": {
            "per_speaker": report.per_speaker,
            "average": report.average_rmse,
            "sd": report.rmse_sd,
        },
        "sentence_level": report.sentence_level,
        "participant_level": report.participant_level,
    }


# -- scatter SVG ----------------------------------------------------------------

def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** int(f"{raw:e}".split("e")[1])
    for step in (1, 2, 2.5, 5, 10):
        if raw <= step * mag:
            break
    step *= mag
    first = step * int(lo / step + (0 if lo % step == 0 else 1))
    ticks = []
    t = first
    while t <= hi + 1e-9:
        ticks.append(round(t, 10))
        t += step
    return ticks


def scatter_svg(x: list[float], y: list[float], xlabel: str, ylabel: str,
                title: str) -> str:
    """Minimal scatter plot with an OLS regression line, no dependencies."""
    width, height = 640, 480
    ml, mr, mt, mb = 70, 20, 40, 55
    if not x:
        raise ValueError("no points to plot")
    lo_x, hi_x = min(x), max(x)
    lo_y, hi_y = min(y), max(y)
    pad_x = (hi_x - lo_x) * 0.06 or 0.5
    pad_y = (hi_y - lo_y) * 0.06 or 0.5
    lo_x, hi_x = lo_x - pad_x, hi_x + pad_x
    lo_y, hi_y = lo_y - pad_y, hi_y + pad_y

    def sx(v):
        return ml + (v - lo_x) / (hi_x - lo_x) * (width - ml - mr)

    def sy(v):
        return height - mb - (v - lo_y) / (hi_y - lo_y) * (height - mt - mb)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width/2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{title}</text>',
    ]
    axis = f'stroke="black" stroke-width="1"'
    parts.append(f'<line x1="{ml}" y1="{height-mb}" x2="{width-mr}" y2="{height-mb}" {axis}/>')
    parts.append(f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height-mb}" {axis}/>')
    for t in _nice_ticks(lo_x, hi_x):
        px = sx(t)
        parts.append(f'<line x1="{px:.2f}" y1="{height-mb}" x2="{px:.2f}" y2="{height-mb+5}" {axis}/>')
        parts.append(f'<text x="{px:.2f}" y="{height-mb+20}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{t:g}</text>')
    for t in _nice_ticks(lo_y, hi_y):
        py = sy(t)
        parts.append(f'<line x1="{ml-5}" y1="{py:.2f}" x2="{ml}" y2="{py:.2f}" {axis}/>')
        parts.append(f'<text x="{ml-9}" y="{py+4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{t:g}</text>')
    parts.append(f'<text x="{(ml+width-mr)/2:.1f}" y="{height-12}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13">{xlabel}</text>')
    parts.append(f'<text x="18" y="{(mt+height-mb)/2:.1f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13" '
                 f'transform="rotate(-90 18 {(mt+height-mb)/2:.1f})">{ylabel}</text>')

    n = len(x)
    mean_x = sum(x) / n
    mean_y = sum(y) / n
    sxx = sum((v - mean_x) ** 2 for v in x)
    if sxx > 0:
        slope = sum((a - mean_x) * (b - mean_y) for a, b in zip(x, y)) / sxx
        intercept = mean_y - slope * mean_x
        y0 = slope * lo_x + intercept
        y1 = slope * hi_x + intercept
        parts.append(f'<line x1="{sx(lo_x):.2f}" y1="{sy(y0):.2f}" '
                     f'x2="{sx(hi_x):.2f}" y2="{sy(y1):.2f}" '
                     f'stroke="#c0392b" stroke-width="1.5"/>')
    for a, b in zip(x, y):
        parts.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3.5" '
                     f'fill="#2e6da4" fill-opacity="0.65"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# -- run manifest -----------------------------------------------------------------

def run_manifest(command: str, config: dict, seed: int | None,
                 inputs: dict[str, str], outputs: list[str]) -> dict:
    """Everything needed to reproduce a command, without timestamps."""
    return {
        "command": command,
        "package_version": __version__,
        "seed": seed,
        "config": config,
        "inputs": {
            name: {"path": str(path), "sha256": sha256_file(path)}
            for name, path in inputs.items()
        },
        "outputs": sorted(outputs),
    }
