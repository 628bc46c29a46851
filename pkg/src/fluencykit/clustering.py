"""Grouping of raw segments into pseudo-syllables and silent breaks.

Segments are labeled speech or silent from the ratio of their peak power to
the recording's peak power, so the decision survives arbitrary gain changes.
Runs of silence longer than 250 ms become silent breaks; runs of speech are
cut into pseudo-syllables wherever the energy falls into a deep valley.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .audio import AudioBuffer
from .fbds import ENERGY_FLOOR, FbdsParams, Segment, segment


@dataclass(frozen=True)
class ClusterParams:
    silence_ratio_threshold: float = 0.001   # -30 dB below recording peak power
    syllable_valley_ratio: float = 0.35
    break_min_ms: float = 250.0
    valley_mode: Literal["running_max", "previous"] = "running_max"

    def __post_init__(self):
        if not 0.0 < self.silence_ratio_threshold < 1.0:
            raise ValueError("silence_ratio_threshold must be in (0, 1)")
        if not 0.0 < self.syllable_valley_ratio < 1.0:
            raise ValueError("syllable_valley_ratio must be in (0, 1)")
        if self.break_min_ms <= 0:
            raise ValueError("break_min_ms must be positive")
        if self.valley_mode not in ("running_max", "previous"):
            raise ValueError(f"unknown valley_mode {self.valley_mode!r}")


@dataclass(frozen=True)
class LabeledSegment:
    segment: Segment
    kind: Literal["speech", "silent"]


@dataclass(frozen=True)
class PseudoSyllable:
    start_ms: float
    end_ms: float
    member_segments: tuple[Segment, ...]

    @property
    def duration_ms(self) -> float:
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class SilentBreak:
    start_ms: float
    end_ms: float

    @property
    def duration_ms(self) -> float:
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class ClusterResult:
    pseudo_syllables: tuple[PseudoSyllable, ...]
    silent_breaks: tuple[SilentBreak, ...]
    total_duration_ms: float


# a segment whose peak power sits at the representation floor is silent no
# matter what the rest of the recording looks like (all-silence inputs)
_FLOOR_CEILING = ENERGY_FLOOR * (1.0 + 1e-9)


def classify(segments: list[Segment], params: ClusterParams) -> list[LabeledSegment]:
    """Label each segment speech or silent by relative peak power."""
    if not segments:
        raise ValueError("cannot classify an empty segment tiling")
    global_max = max(s.max_energy for s in segments)
    labeled = []
    for s in segments:
        power_ratio = math.exp(s.max_energy - global_max)
        at_floor = math.exp(s.max_energy) <= _FLOOR_CEILING
        kind = "silent" if at_floor or power_ratio < params.silence_ratio_threshold else "speech"
        labeled.append(LabeledSegment(s, kind))
    return labeled


def find_silent_breaks(labeled: list[LabeledSegment], params: ClusterParams) -> list[SilentBreak]:
    """Merge consecutive silent segments; keep runs strictly longer than the minimum."""
    breaks = []
    run_start = None
    run_end = None
    for ls in labeled + [None]:
        if ls is not None and ls.kind == "silent":
            if run_start is None:
                run_start = ls.segment.start_ms
            run_end = ls.segment.end_ms
        else:
            if run_start is not None and run_end - run_start > params.break_min_ms:
                breaks.append(SilentBreak(run_start, run_end))
            run_start = run_end = None
    return breaks


def build_pseudo_syllables(labeled: list[LabeledSegment], params: ClusterParams) -> list[PseudoSyllable]:
    """Group consecutive speech segments separated by no deep energy valley.

    A new pseudo-syllable starts when the next segment's peak power drops
    below valley_ratio times the reference power; the reference is either the
    running maximum of the current pseudo-syllable (default) or the previous
    segment alone.  Silent segments always close the current pseudo-syllable.
    """
    syllables = []
    members: list[Segment] = []
    ref_energy = -math.inf
    log_ratio = math.log(params.syllable_valley_ratio)

    def flush():
        nonlocal members, ref_energy
        if members:
            syllables.append(PseudoSyllable(members[0].start_ms, members[-1].end_ms, tuple(members)))
        members = []
        ref_energy = -math.inf

    for ls in labeled:
        if ls.kind == "silent":
            flush()
            continue
        e = ls.segment.max_energy
        if members and e < ref_energy + log_ratio:
            flush()
        members.append(ls.segment)
        if params.valley_mode == "previous":
            ref_energy = e
        else:
            ref_energy = max(ref_energy, e)
    flush()
    return syllables


def cluster(
    buf: AudioBuffer,
    fbds_params: FbdsParams | None = None,
    cluster_params: ClusterParams | None = None,
) -> ClusterResult:
    """Full segmentation + clustering for one recording."""
    cluster_params = cluster_params or ClusterParams()
    labeled = classify(segment(buf, fbds_params), cluster_params)
    return ClusterResult(
        pseudo_syllables=tuple(build_pseudo_syllables(labeled, cluster_params)),
        silent_breaks=tuple(find_silent_breaks(labeled, cluster_params)),
        total_duration_ms=buf.duration_ms,
    )
