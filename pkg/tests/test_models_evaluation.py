import numpy as np
import pytest

from fluencykit.features import FluencyFeatures
from fluencykit.models import (
    Dataset,
    DatasetRow,
    ModelSpec,
    aggregate_by_participant,
    fit_mlr_full,
    fit_svr,
    loso_evaluate,
    loso_evaluate_nested,
    tune_nested_loso,
)


def feats(rate, sd, ratio, breaks, delta=None):
    return FluencyFeatures(
        pseudo_syllable_rate=rate, sd_pseudo_syllable_ms=sd, speech_ratio=ratio,
        silent_break_rate=breaks, syllable_count_delta=delta,
        n_pseudo_syllables=10, n_silent_breaks=2, duration_ms=4000.0)


def linear_dataset(rng, n_speakers=8, n_sentences=3, noise=0.0, delta=False):
    """rating = 1 + 400 * rate - 0.004 * sd + 2 * ratio - 800 * breaks (+ noise)."""
    rows = []
    for s in range(n_speakers):
        for j in range(n_sentences):
            rate = rng.uniform(0.002, 0.008)
            sd = rng.uniform(20, 120)
            ratio = rng.uniform(0.3, 0.9)
            brk = rng.uniform(0.0, 0.001)
            d = int(rng.integers(0, 5)) if delta else None
            rating = 1.0 + 400 * rate - 0.004 * sd + 2 * ratio - 800 * brk
            rating += rng.normal(0, noise)
            rows.append(DatasetRow(f"S{s}_{j}", f"S{s}", feats(rate, sd, ratio, brk, d),
                                   float(rating)))
    return Dataset(rows)


class TestDataset:
    def test_needs_two_speakers(self):
        with pytest.raises(ValueError, match="2 distinct speakers"):
            Dataset([DatasetRow("a", "s1", feats(0.004, 50, 0.5, 0.0), 3.0)])

    def test_delta_uniformity_enforced(self):
        rows = [
            DatasetRow("a", "s1", feats(0.004, 50, 0.5, 0.0, delta=1), 3.0),
            DatasetRow("b", "s2", feats(0.005, 40, 0.6, 0.0), 3.2),
        ]
        with pytest.raises(ValueError, match="delta"):
            Dataset(rows)

    def test_matrix_shape_and_names(self, rng):
        data = linear_dataset(rng, delta=True)
        X, y = data.matrix(with_delta=True)
        assert X.shape == (24, 5)
        assert data.feature_names(True)[-1] == "syllable_count_delta"


class TestLoso:
    def test_fold_structure(self, rng):
        data = linear_dataset(rng, n_speakers=6)
        report = loso_evaluate(data, ModelSpec("mlr"))
        assert len(report.per_speaker) == 6
        speakers = {e["speaker_id"] for e in report.per_speaker}
        assert speakers == set(data.speakers())
        for p in report.predictions:
            assert p.fold_speaker == p.speaker_id

    def test_perfect_when_target_is_linear(self, rng):
        data = linear_dataset(rng, noise=0.0)
        report = loso_evaluate(data, ModelSpec("mlr"))
        assert report.average_rmse < 1e-9
        assert report.sentence_level["rmse"] < 1e-9

    def test_needs_three_speakers(self, rng):
        data = linear_dataset(rng, n_speakers=2)
        with pytest.raises(ValueError, match="3 speakers"):
            loso_evaluate(data, ModelSpec("mlr"))

    def test_rfr_deterministic_given_seed(self, rng):
        data = linear_dataset(rng, noise=0.1)
        a = loso_evaluate(data, ModelSpec("rfr", {"n_trees": 20}, seed=5))
        b = loso_evaluate(data, ModelSpec("rfr", {"n_trees": 20}, seed=5))
        assert [p.prediction for p in a.predictions] == [p.prediction for p in b.predictions]


class TestAggregation:
    def test_perfect_sentences_perfect_participants(self, rng):
        data = linear_dataset(rng)
        report = loso_evaluate(data, ModelSpec("mlr"))
        part = report.participant_level
        assert part["rmse"] < 1e-9
        assert part["n"] == 8

    def test_constant_per_speaker_prediction(self, rng):
        data = linear_dataset(rng, noise=0.2)
        report = loso_evaluate(data, ModelSpec("mlr"))
        # overwrite predictions with a per-speaker constant
        for p in report.predictions:
            p.prediction = 2.5
        agg = aggregate_by_participant(report)
        assert all(pair["prediction_mean"] == pytest.approx(2.5) for pair in agg["pairs"])


class TestNestedTuning:
    def test_singleton_grid(self, rng):
        data = linear_dataset(rng, n_speakers=5, noise=0.1)
        result = tune_nested_loso(data, "svr", [{"C": 3.0, "epsilon": 0.1}])
        assert result["selected"] == {"C": 3.0, "epsilon": 0.1}
        assert all(v == {"C": 3.0, "epsilon": 0.1} for v in result["per_fold"].values())

    def test_outer_speaker_never_in_inner_folds(self, rng):
        data = linear_dataset(rng, n_speakers=5, noise=0.1)
        result = tune_nested_loso(data, "svr", [{"C": 1.0, "epsilon": 0.1},
                                                 {"C": 10.0, "epsilon": 0.1}])
        for outer, inner in result["inner_speakers"].items():
            assert outer not in inner
            assert set(inner) | {outer} == set(data.speakers())

    def test_tie_break_prefers_smallest(self, rng):
        data = linear_dataset(rng, n_speakers=4, noise=0.0)
        # noiseless linear data: several points fit essentially perfectly;
        # construct an exact tie by duplicating one grid point
        grid = [{"C": 10.0, "epsilon": 0.05}, {"C": 10.0, "epsilon": 0.05}]
        result = tune_nested_loso(data, "svr", grid)
        assert result["selected"] == grid[0]

    def test_generating_point_recovered(self):
        """Data generated by a planted SVR; tuning lands within one grid step."""
        grid = [{"C": c, "epsilon": e} for c in (0.1, 10.0) for e in (0.05, 0.8)]
        target = {"C": 10.0, "epsilon": 0.05}
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng(500 + seed)
            rows = []
            X_pool = rng.uniform(-1, 1, size=(60, 2))
            planted = fit_svr(X_pool, np.sin(2 * X_pool[:, 0]) + X_pool[:, 1],
                              C=target["C"], epsilon=target["epsilon"])
            y_pool = planted.predict(X_pool) + rng.uniform(-0.05, 0.05, 60)
            for s in range(10):
                for j in range(3):
                    i = s * 3 + j
                    rows.append(DatasetRow(
                        f"S{s}_{j}", f"S{s}",
                        feats(X_pool[i, 0] / 100, 50 + 20 * X_pool[i, 1],
                              0.5, 0.0),
                        float(y_pool[i])))
            data = Dataset(rows)
            result = tune_nested_loso(data, "svr", grid)
            sel = result["selected"]
            c_step = abs([0.1, 10.0].index(sel["C"]) - [0.1, 10.0].index(target["C"]))
            e_step = abs([0.05, 0.8].index(sel["epsilon"]) - [0.05, 0.8].index(target["epsilon"]))
            if max(c_step, e_step) <= 1 and (sel["C"] == target["C"] or sel["epsilon"] == target["epsilon"]):
                hits += 1
        assert hits >= 16  # 80% of 20 runs

    def test_nested_evaluation_uses_per_fold_choice(self, rng):
        data = linear_dataset(rng, n_speakers=5, noise=0.1)
        report = loso_evaluate_nested(data, "svr", [{"C": 1.0, "epsilon": 0.1},
                                                     {"C": 10.0, "epsilon": 0.1}])
        assert "nested_tuning" in report.model
        assert len(report.model["nested_tuning"]["per_fold"]) == 5

    def test_empty_grid_rejected(self, rng):
        data = linear_dataset(rng, n_speakers=4)
        with pytest.raises(ValueError, match="empty"):
            tune_nested_loso(data, "svr", [])


class TestFullFit:
    def test_noiseless_r2_one(self, rng):
        data = linear_dataset(rng)
        fit = fit_mlr_full(data)
        assert fit.r2 == pytest.approx(1.0, abs=1e-12)
        assert fit.rmse == pytest.approx(0.0, abs=1e-9)

    def test_with_delta_adds_predictor(self, rng):
        data = linear_dataset(rng, noise=0.05, delta=True)
        base = fit_mlr_full(data, with_delta=False)
        extended = fit_mlr_full(data, with_delta=True)
        assert "syllable_count_delta" not in base.retained
        assert extended.retained[-1] == "syllable_count_delta"
        assert extended.r2 >= base.r2  # nested models
