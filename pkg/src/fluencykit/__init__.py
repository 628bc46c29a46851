"""Automatic read-speech fluency scoring.

Pipeline: WAV -> energy-based sub-phonemic segmentation -> pseudo-syllable /
silent-break clustering -> temporal fluency predictors -> regression against
listener ratings under leave-one-speaker-out validation.
"""

from .audio import ANALYSIS_RATE, AudioBuffer, AudioError, load_wav, resample, write_wav
from .clustering import (
    ClusterParams,
    ClusterResult,
    LabeledSegment,
    PseudoSyllable,
    SilentBreak,
    build_pseudo_syllables,
    classify,
    cluster,
    find_silent_breaks,
)
from .fbds import EnergyTrack, FbdsParams, Segment, detect_changes, energy_track, segment
from .features import (
    CORE_PREDICTORS,
    FluencyFeatures,
    StimulusScript,
    compute_features,
    expected_sign_check,
)
from .stats import (
    RatingRecord,
    ReferenceRating,
    UndefinedStatisticError,
    build_reference_ratings,
    cronbach_alpha,
    friedman,
    kruskal_wallis,
    partial_f_test,
    pearson_r,
    rmse,
    spearman_rho,
    spearman_test,
)

__version__ = "0.1.0"
