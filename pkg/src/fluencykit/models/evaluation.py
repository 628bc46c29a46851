"""Leave-one-speaker-out evaluation of the fluency predictors.

Every fold trains on all rows except those of one speaker and predicts that
speaker's rows; reports carry per-speaker RMSEs, their mean and SD, pooled
sentence-level agreement, and the participant-level view obtained by
averaging references and predictions per speaker.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..features import CORE_PREDICTORS, FluencyFeatures
from ..stats import UndefinedStatisticError, pearson_r, rmse
from .forest import fit_rfr
from .linear import fit_mlr_stepwise, fit_ols
from .svr import fit_svr

FAMILIES = ("mlr", "svr", "rfr")


@dataclass(frozen=True)
class DatasetRow:
    stimulus_id: str
    speaker_id: str
    features: FluencyFeatures
    reference: float
    group: str | None = None


@dataclass
class Dataset:
    rows: list[DatasetRow]

    def __post_init__(self):
        if len({r.speaker_id for r in self.rows}) < 2:
            raise ValueError("need at least 2 distinct speakers")
        if any(r.reference is None for r in self.rows):
            raise ValueError("missing reference ratings")
        with_delta = [r.features.syllable_count_delta is not None for r in self.rows]
        if any(with_delta) and not all(with_delta):
            raise ValueError("syllable_count_delta must be present for all rows or none")
        self.has_delta = all(with_delta)

    def speakers(self) -> list[str]:
        return sorted({r.speaker_id for r in self.rows})

    def feature_names(self, with_delta: bool) -> list[str]:
        names = list(CORE_PREDICTORS)
        if with_delta:
            if not self.has_delta:
                raise ValueError("dataset has no syllable_count_delta column")
            names.append("syllable_count_delta")
        return names

    def matrix(self, rows: Iterable[DatasetRow] | None = None,
               with_delta: bool = False) -> tuple[np.ndarray, np.ndarray]:
        rows = list(rows) if rows is not None else self.rows
        names = self.feature_names(with_delta)
        X = np.array([[float(getattr(r.features, nm)) for nm in names] for r in rows])
        y = np.array([r.reference for r in rows])
        return X, y


@dataclass(frozen=True)
class ModelSpec:
    family: str
    hyperparams: dict = field(default_factory=dict)
    with_delta: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}")


@dataclass
class PredictionRow:
    stimulus_id: str
    speaker_id: str
    reference: float
    prediction: float
    fold_speaker: str


@dataclass
class EvaluationReport:
    model: dict
    per_speaker: list[dict]
    average_rmse: float
    rmse_sd: float
    sentence_level: dict
    participant_level: dict
    predictions: list[PredictionRow]


def _fit_and_predict(spec: ModelSpec, names: list[str],
                     X_train, y_train, X_test, fold_index: int) -> np.ndarray:
    hp = dict(spec.hyperparams)
    if spec.family == "mlr":
        model = fit_mlr_stepwise(X_train, y_train, names, alpha=hp.get("alpha", 0.05))
        return model.predict(X_test, names)
    if spec.family == "svr":
        model = fit_svr(X_train, y_train,
                        C=hp.get("C", 1.0), epsilon=hp.get("epsilon", 0.1),
                        gamma=hp.get("gamma"))
        return model.predict(X_test)
    seed = int(np.random.SeedSequence([spec.seed, fold_index]).generate_state(1)[0])
    model = fit_rfr(X_train, y_train, n_trees=hp.get("n_trees", 100),
                    max_depth=hp.get("max_depth"), seed=seed)
    return model.predict(X_test)


def loso_evaluate(data: Dataset, spec: ModelSpec) -> EvaluationReport:
    """One fold per speaker; the held-out speaker never appears in training."""
    speakers = data.speakers()
    if len(speakers) < 3:
        raise ValueError("leave-one-speaker-out needs at least 3 speakers")
    names = data.feature_names(spec.with_delta)

    predictions: list[PredictionRow] = []
    per_speaker: list[dict] = []
    for fold_index, held_out in enumerate(speakers):
        train = [r for r in data.rows if r.speaker_id != held_out]
        test = [r for r in data.rows if r.speaker_id == held_out]
        if not train or not test:
            raise ValueError(f"degenerate fold for speaker {held_out}")
        train_speakers = {r.speaker_id for r in train}
        assert held_out not in train_speakers
        assert train_speakers | {held_out} == set(speakers)

        X_train, y_train = data.matrix(train, spec.with_delta)
        X_test, y_test = data.matrix(test, spec.with_delta)
        preds = _fit_and_predict(spec, names, X_train, y_train, X_test, fold_index)
        per_speaker.append({
            "speaker_id": held_out,
            "rmse": rmse(y_test, preds),
            "n_sentences": len(test),
        })
        for row, pred in zip(test, preds):
            predictions.append(PredictionRow(row.stimulus_id, row.speaker_id,
                                             row.reference, float(pred), held_out))

    fold_rmses = [e["rmse"] for e in per_speaker]
    refs = [p.reference for p in predictions]
    preds = [p.prediction for p in predictions]
    sentence = {
        "pearson_r": _safe_r(refs, preds),
        "rmse": rmse(refs, preds),
        "n": len(predictions),
    }
    report = EvaluationReport(
        model={"family": spec.family, "hyperparams": dict(spec.hyperparams),
               "with_delta": spec.with_delta, "seed": spec.seed,
               "feature_names": names},
        per_speaker=per_speaker,
        average_rmse=float(np.mean(fold_rmses)),
        rmse_sd=float(np.std(fold_rmses, ddof=1)) if len(fold_rmses) > 1 else 0.0,
        sentence_level=sentence,
        participant_level={},
        predictions=predictions,
    )
    report.participant_level = aggregate_by_participant(report)
    return report


def _safe_r(x, y) -> float | None:
    try:
        return pearson_r(x, y)
    except UndefinedStatisticError:
        return None


def aggregate_by_participant(report: EvaluationReport) -> dict:
    """Mean reference and prediction per speaker, with recomputed r and RMSE."""
    by_speaker: dict[str, list[PredictionRow]] = {}
    for p in report.predictions:
        by_speaker.setdefault(p.speaker_id, []).append(p)
    pairs = [
        {
            "speaker_id": spk,
            "reference_mean": float(np.mean([p.reference for p in rows])),
            "prediction_mean": float(np.mean([p.prediction for p in rows])),
            "n_sentences": len(rows),
        }
        for spk, rows in sorted(by_speaker.items())
    ]
    refs = [p["reference_mean"] for p in pairs]
    preds = [p["prediction_mean"] for p in pairs]
    return {
        "pearson_r": _safe_r(refs, preds) if len(pairs) >= 3 else None,
        "rmse": rmse(refs, preds),
        "n": len(pairs),
        "pairs": pairs,
    }


def _grid_sort_key(point: dict, index: int):
    # ties broken by the smallest C / n_trees, then original listing order
    return (point.get("C", point.get("n_trees", 0.0)), index)


def tune_nested_loso(data: Dataset, family: str, grid: list[dict],
                     with_delta: bool = False, seed: int = 0) -> dict:
    """Nested LOSO tuning: inner folds never touch the outer test speaker.

    Returns per-outer-fold selections, the overall selection (most frequently
    chosen point, ties resolved like the per-fold ties), and the audit list of
    inner speakers per fold.
    """
    if not grid:
        raise ValueError("empty hyperparameter grid")
    speakers = data.speakers()
    per_fold = {}
    audit = {}
    votes = [0] * len(grid)
    for held_out in speakers:
        inner_rows = [r for r in data.rows if r.speaker_id != held_out]
        inner = Dataset(inner_rows)
        audit[held_out] = inner.speakers()
        assert held_out not in audit[held_out]
        scores = []
        for gi, point in enumerate(grid):
            spec = ModelSpec(family, point, with_delta=with_delta, seed=seed)
            report = loso_evaluate(inner, spec)
            scores.append((report.average_rmse, _grid_sort_key(point, gi), gi))
        scores.sort()
        best = scores[0][2]
        votes[best] += 1
        per_fold[held_out] = dict(grid[best])
    ranked = sorted(
        ((-(votes[gi]), _grid_sort_key(point, gi), gi) for gi, point in enumerate(grid)))
    selected = dict(grid[ranked[0][2]])
    return {"per_fold": per_fold, "selected": selected,
            "inner_speakers": audit, "votes": dict(zip(range(len(grid)), votes))}


def loso_evaluate_nested(data: Dataset, family: str, grid: list[dict],
                         with_delta: bool = False, seed: int = 0) -> EvaluationReport:
    """Full nested protocol: each outer fold runs with its inner-tuned point."""
    tuning = tune_nested_loso(data, family, grid, with_delta=with_delta, seed=seed)
    speakers = data.speakers()
    names = data.feature_names(with_delta)
    predictions: list[PredictionRow] = []
    per_speaker: list[dict] = []
    for fold_index, held_out in enumerate(speakers):
        train = [r for r in data.rows if r.speaker_id != held_out]
        test = [r for r in data.rows if r.speaker_id == held_out]
        spec = ModelSpec(family, tuning["per_fold"][held_out],
                         with_delta=with_delta, seed=seed)
        X_train, y_train = data.matrix(train, with_delta)
        X_test, y_test = data.matrix(test, with_delta)
        preds = _fit_and_predict(spec, names, X_train, y_train, X_test, fold_index)
        per_speaker.append({"speaker_id": held_out, "rmse": rmse(y_test, preds),
                            "n_sentences": len(test)})
        for row, pred in zip(test, preds):
            predictions.append(PredictionRow(row.stimulus_id, row.speaker_id,
                                             row.reference, float(pred), held_out))
    fold_rmses = [e["rmse"] for e in per_speaker]
    refs = [p.reference for p in predictions]
    preds = [p.prediction for p in predictions]
    report = EvaluationReport(
        model={"family": family, "hyperparams": tuning["selected"],
               "with_delta": with_delta, "seed": seed, "feature_names": names,
               "nested_tuning": {"per_fold": tuning["per_fold"],
                                  "grid_size": len(grid)}},
        per_speaker=per_speaker,
        average_rmse=float(np.mean(fold_rmses)),
        rmse_sd=float(np.std(fold_rmses, ddof=1)) if len(fold_rmses) > 1 else 0.0,
        sentence_level={"pearson_r": _safe_r(refs, preds), "rmse": rmse(refs, preds),
                        "n": len(predictions)},
        participant_level={},
        predictions=predictions,
    )
    report.participant_level = aggregate_by_participant(report)
    return report


@dataclass
class FullFit:
    r2: float
    rmse: float
    betas: dict[str, float]
    retained: list[str]
    coefficients: dict[str, float]
    intercept: float
    n: int


def fit_mlr_full(data: Dataset, with_delta: bool = False, alpha: float = 0.05) -> FullFit:
    """Whole-corpus linear fit (no LOSO), reporting R^2, RMSE, and betas.

    The predictor set is the backward-stepwise selection over the core
    predictors; with_delta then forces the syllable-count delta into that
    retained set.
    """
    X_core, y = data.matrix(with_delta=False)
    core_names = data.feature_names(False)
    stepwise = fit_mlr_stepwise(X_core, y, core_names, alpha=alpha)
    names = list(stepwise.retained)
    if with_delta:
        names.append("syllable_count_delta")
        X_all, _ = data.matrix(with_delta=True)
        all_names = data.feature_names(True)
    else:
        X_all, all_names = X_core, core_names
    cols = [all_names.index(nm) for nm in names]
    X = X_all[:, cols]
    fit = fit_ols(X, y, names)
    sy = float(np.std(y))
    betas = {nm: float(c * np.std(X[:, k]) / sy)
             for k, (nm, c) in enumerate(zip(names, fit.coefficients))}
    return FullFit(
        r2=fit.r2,
        rmse=fit.residual_rmse(X, y),
        betas=betas,
        retained=names,
        coefficients={nm: float(c) for nm, c in zip(names, fit.coefficients)},
        intercept=fit.intercept,
        n=len(y),
    )
