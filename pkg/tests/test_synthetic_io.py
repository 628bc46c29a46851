import json

import numpy as np
import pytest

from fluencykit.io_formats import (
    fmt,
    read_features_csv,
    read_ratings_csv,
    scatter_svg,
    write_features_csv,
    write_ratings_csv,
)
from fluencykit.stats import RatingRecord
from fluencykit.synthetic import (
    make_regression_corpus,
    random_plan,
    render_plan,
    with_duplicated_bursts,
)


class TestPlans:
    def test_truth_intervals_consistent(self):
        rng = np.random.default_rng(0)
        plan = random_plan(rng)
        bursts = plan.burst_intervals_ms()
        gaps = plan.gap_intervals_ms()
        assert len(bursts) == len(plan.bursts)
        # bursts and gaps interleave and tile the full duration
        edges = sorted([e for iv in bursts + gaps for e in iv])
        assert edges[0] == 0.0
        assert edges[-1] == pytest.approx(plan.duration_s * 1000.0)
        assert all(b - a > 0 for a, b in bursts)

    def test_true_breaks_strictly_over_threshold(self):
        rng = np.random.default_rng(1)
        plan = random_plan(rng)
        assert all(b - a > 250.0 for a, b in plan.true_breaks_ms())

    def test_render_matches_duration(self):
        rng = np.random.default_rng(2)
        plan = random_plan(rng)
        buf = render_plan(plan, rng)
        assert buf.duration_ms == pytest.approx(plan.duration_s * 1000.0, abs=1.0)
        assert np.max(np.abs(buf.samples)) <= 1.0

    def test_duplication_inserts_k_bursts(self):
        rng = np.random.default_rng(3)
        plan = random_plan(rng, n_bursts=(5, 5))
        dup = with_duplicated_bursts(plan, 3, rng)
        assert len(dup.bursts) == 8
        assert len(dup.gaps_after_s) == 8

    def test_corpus_shapes(self):
        rows = make_regression_corpus(seed=1, n_speakers=4, n_sentences=2)
        assert len(rows) == 8
        assert len({r.speaker_id for r in rows}) == 4
        assert all(1.0 <= r.rating <= 5.0 for r in rows)
        assert all(r.features.syllable_count_delta is None for r in rows)
        scripted = make_regression_corpus(seed=1, n_speakers=4, n_sentences=2,
                                          scripted=True)
        assert all(r.features.syllable_count_delta is not None for r in scripted)


class TestFormats:
    def test_float_formatting_round_trips(self):
        for v in (0.1, 1e-12, 12345.6789, 2000.0):
            assert float(fmt(v)) == v
        assert fmt(None) == ""

    def test_features_round_trip(self, tmp_path):
        rows = make_regression_corpus(seed=2, n_speakers=3, n_sentences=2,
                                      scripted=True)
        path = tmp_path / "features.csv"
        write_features_csv(path, [(r.stimulus_id, r.speaker_id, r.features)
                                  for r in rows])
        back = read_features_csv(path)
        assert len(back) == len(rows)
        for orig, rec in zip(rows, back):
            assert rec["stimulus_id"] == orig.stimulus_id
            assert rec["features"] == orig.features  # exact float round trip

    def test_ratings_round_trip(self, tmp_path):
        records = [RatingRecord("r1", "s1", 1, 4, "2024-01-01T00:00:00+00:00"),
                   RatingRecord("r1", "s1", 2, 3, "2024-01-01T00:01:00+00:00")]
        path = tmp_path / "ratings.csv"
        write_ratings_csv(path, records)
        assert read_ratings_csv(path) == records

    def test_scatter_svg_deterministic(self):
        x = [1.0, 2.0, 3.0, 4.0]
        y = [1.2, 1.9, 3.4, 3.8]
        a = scatter_svg(x, y, "x", "y", "t")
        b = scatter_svg(x, y, "x", "y", "t")
        assert a == b
        assert a.count("<circle") == 4
        assert "<line" in a  # regression line + axes
