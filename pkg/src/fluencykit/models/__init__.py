from .linear import MlrModel, OlsFit, fit_mlr_stepwise, fit_ols
from .svr import ConvergenceError, SvrModel, fit_svr
from .forest import RfrModel, fit_rfr
from .evaluation import (
    Dataset,
    DatasetRow,
    EvaluationReport,
    FullFit,
    ModelSpec,
    aggregate_by_participant,
    fit_mlr_full,
    loso_evaluate,
    loso_evaluate_nested,
    tune_nested_loso,
)

__all__ = [
    "ConvergenceError", "Dataset", "DatasetRow", "EvaluationReport", "FullFit",
    "MlrModel", "ModelSpec", "OlsFit", "RfrModel", "SvrModel",
    "aggregate_by_participant", "fit_mlr_full", "fit_mlr_stepwise", "fit_ols",
    "fit_rfr", "fit_svr", "loso_evaluate", "loso_evaluate_nested",
    "tune_nested_loso",
]
