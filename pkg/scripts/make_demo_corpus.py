#!/usr/bin/env python3
"""Write a small demo corpus: WAV files, manifest, and a simulated rater log.

The output directory can be fed straight into the CLI:

    python scripts/make_demo_corpus.py --out demo
    fluencykit features --manifest demo/manifest.csv --config demo/config.json --out demo/feat
    fluencykit evaluate --features demo/feat/features.csv --ratings demo/ratings.csv --out demo/eval
    fluencykit rate-serve --manifest demo/manifest.csv --out-ratings demo/live_ratings.csv \
        --practice-manifest demo/practice_manifest.csv
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from fluencykit.audio import write_wav
from fluencykit.io_formats import write_ratings_csv
from fluencykit.manifest import ManifestRow, write_manifest
from fluencykit.stats import RatingRecord
from fluencykit.synthetic import make_regression_corpus, random_plan, render_plan


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--speakers", type=int, default=10)
    parser.add_argument("--sentences", type=int, default=3)
    args = parser.parse_args()

    out = Path(args.out)
    (out / "wav").mkdir(parents=True, exist_ok=True)
    rows = make_regression_corpus(seed=args.seed, n_speakers=args.speakers,
                                  n_sentences=args.sentences, scripted=True)

    manifest_rows = []
    render_rng = np.random.default_rng(args.seed + 1)
    for r in rows:
        wav_path = out / "wav" / f"{r.stimulus_id}.wav"
        write_wav(render_plan(r.plan, render_rng), wav_path)
        expected = len(r.plan.bursts) - max(
            0, r.features.syllable_count_delta or 0)
        manifest_rows.append(ManifestRow(
            r.stimulus_id, r.speaker_id, "control", r.sentence_id,
            max(1, expected), str(wav_path)))
    write_manifest(out / "manifest.csv", manifest_rows)

    practice_rows = []
    for i in range(3):
        rng = np.random.default_rng(9000 + i)
        plan = random_plan(rng, n_bursts=(4, 8))
        wav_path = out / "wav" / f"practice{i}.wav"
        write_wav(render_plan(plan, rng), wav_path)
        practice_rows.append(ManifestRow(
            f"practice{i}", "demo", "control", "practice", len(plan.bursts),
            str(wav_path)))
    write_manifest(out / "practice_manifest.csv", practice_rows)

    records = []
    rng = np.random.default_rng(args.seed + 2)
    for rater in ("rater1", "rater2", "rater3"):
        for pass_number in (1, 2):
            for r in rows:
                noisy = r.rating + rng.normal(0, 0.35)
                records.append(RatingRecord(
                    rater, r.stimulus_id, pass_number,
                    int(np.clip(round(noisy), 1, 5)),
                    "2024-01-01T00:00:00+00:00"))
    write_ratings_csv(out / "ratings.csv", records)

    (out / "config.json").write_text(json.dumps({
        "clustering": {"silence_ratio_threshold": 0.05},
    }, indent=2) + "\n")
    print(f"wrote {len(rows)} stimuli, manifest, practice manifest, "
          f"simulated ratings, and config under {out}/")


if __name__ == "__main__":
    main()
