"""Temporal fluency predictors computed from one clustered recording.

The four core predictors: pseudo-syllable rate (count / recording ms),
standard deviation of pseudo-syllable duration (ms), speech ratio
(pseudo-syllable time / recording time), and silent-break rate
(count / recording ms).  When the expected syllable count of the read
sentence is known, the surplus of detected pseudo-syllables over that count
is exported as a repetition-sensitive fifth predictor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .clustering import ClusterResult
from .stats import UndefinedStatisticError, spearman_rho


@dataclass(frozen=True)
class StimulusScript:
    sentence_id: str
    expected_syllables: int

    def __post_init__(self):
        if self.expected_syllables <= 0:
            raise ValueError("expected_syllables must be positive")


@dataclass(frozen=True)
class FluencyFeatures:
    pseudo_syllable_rate: float       # count per ms
    sd_pseudo_syllable_ms: float
    speech_ratio: float
    silent_break_rate: float          # count per ms
    syllable_count_delta: int | None
    n_pseudo_syllables: int
    n_silent_breaks: int
    duration_ms: float


CORE_PREDICTORS = (
    "pseudo_syllable_rate",
    "sd_pseudo_syllable_ms",
    "speech_ratio",
    "silent_break_rate",
)

# signs the predictors are designed to carry against perceived fluency
EXPECTED_SIGNS = {
    "pseudo_syllable_rate": +1,
    "sd_pseudo_syllable_ms": -1,
    "speech_ratio": +1,
    "silent_break_rate": -1,
}


def compute_features(cluster: ClusterResult, script: StimulusScript | None = None) -> FluencyFeatures:
    """Evaluate the predictor formulas for one recording."""
    duration = cluster.total_duration_ms
    if duration <= 0:
        raise ValueError("recording has zero duration")
    durations = [p.duration_ms for p in cluster.pseudo_syllables]
    n = len(durations)
    if n > 1:
        mean = sum(durations) / n
        sd = math.sqrt(sum((d - mean) ** 2 for d in durations) / n)  # population SD
    else:
        sd = 0.0
    delta = n - script.expected_syllables if script is not None else None
    return FluencyFeatures(
        pseudo_syllable_rate=n / duration,
        sd_pseudo_syllable_ms=sd,
        speech_ratio=sum(durations) / duration,
        silent_break_rate=len(cluster.silent_breaks) / duration,
        syllable_count_delta=delta,
        n_pseudo_syllables=n,
        n_silent_breaks=len(cluster.silent_breaks),
        duration_ms=duration,
    )


def expected_sign_check(features: list[FluencyFeatures], ratings: list[float]) -> dict:
    """Spearman sign report for each core predictor against ratings.

    Predictors with zero variance get defined=False instead of a correlation.
    """
    if len(features) != len(ratings):
        raise ValueError("features and ratings must be paired")
    if len(features) < 10:
        raise ValueError(f"need at least 10 paired observations, got {len(features)}")
    report = {}
    for name in CORE_PREDICTORS:
        xs = [getattr(f, name) for f in features]
        try:
            rho = spearman_rho(xs, ratings)
        except UndefinedStatisticError:
            report[name] = {"defined": False, "rho": None, "sign": None,
                            "expected_sign": EXPECTED_SIGNS[name], "matches_expected": None}
            continue
        sign = 0 if rho == 0 else (1 if rho > 0 else -1)
        report[name] = {
            "defined": True,
            "rho": rho,
            "sign": sign,
            "expected_sign": EXPECTED_SIGNS[name],
            "matches_expected": sign == EXPECTED_SIGNS[name],
        }
    return report
