"""Forward-backward divergence segmentation of speech into sub-phonemic units.

The detector watches the short-time log-energy trajectory and accumulates, per
frame, the divergence between a long-term Gaussian model of the current
segment and a short-term model of the last few frames.  A boundary is declared
when the cumulative statistic falls a fixed amount below its running maximum;
the boundary is placed at the frame where the maximum was attained, which
keeps the placement symmetric under time reversal.  One pass is run forward
and one on the reversed track, and nearby boundaries from the two passes are
fused to their midpoint.

The statistic is the mean-difference log-likelihood ratio with the long-term
variance shared between both models, which makes it exactly invariant under
constant gain applied to the waveform (log-energy shifts by a constant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer

ENERGY_FLOOR = 1e-10
VAR_FLOOR = 1e-6

# Page-Hinkley style allowance: each increment is nudged upward so the
# cumulative statistic drifts away from the alarm under stationarity (frame
# overlap makes the raw increments nearly driftless); transitions swing the
# increment by orders of magnitude more than this.
DRIFT_ALLOWANCE = 0.15

# the long-term model must see this many frames before the test runs,
# otherwise its variance estimate is too wild to normalize the statistic
MIN_LONG_FRAMES = 8

# an alarm is only accepted if the best split of the segment shows at least
# this squared t statistic between the two sides (a credible level shift)
VERIFY_TSQ = 36.0


@dataclass(frozen=True)
class FbdsParams:
    """Segmentation knobs.  Defaults target sub-phonemic resolution at 16 kHz."""

    frame_ms: float = 16.0
    hop_ms: float = 8.0
    detection_threshold: float = 12.0
    short_window_frames: int = 5
    min_segment_ms: float = 20.0
    merge_tolerance_ms: float = 20.0

    def __post_init__(self):
        for name in ("frame_ms", "hop_ms", "detection_threshold",
                     "short_window_frames", "min_segment_ms", "merge_tolerance_ms"):
            if getattr(self, name) <= 0:
                raise ValueError(f"FbdsParams.{name} must be strictly positive")
        if self.frame_ms < self.hop_ms:
            raise ValueError("frame_ms must be >= hop_ms")
        if self.min_segment_ms < self.hop_ms:
            raise ValueError("min_segment_ms must be >= hop_ms")


@dataclass(frozen=True)
class EnergyTrack:
    """Short-time log-energies: ln(max(floor, frame mean square))."""

    values: np.ndarray
    frame_ms: float
    hop_ms: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(values)):
            raise ValueError("energy track contains non-finite values")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def cut_time_ms(self, index: int) -> float:
        """Time of the cut between frames index and index+1 (midpoint of centers)."""
        return index * self.hop_ms + (self.frame_ms + self.hop_ms) / 2.0


@dataclass(frozen=True)
class Segment:
    start_ms: float
    end_ms: float
    max_energy: float

    def __post_init__(self):
        if not self.start_ms < self.end_ms:
            raise ValueError(f"degenerate segment [{self.start_ms}, {self.end_ms}]")

    @property
    def duration_ms(self) -> float:
        return self.end_ms - self.start_ms


def energy_track(buf: AudioBuffer, frame_ms: float = 16.0, hop_ms: float = 8.0) -> EnergyTrack:
    """Frame the buffer and return ln(max(ENERGY_FLOOR, mean square)) per frame."""
    if not frame_ms >= hop_ms > 0:
        raise ValueError("need frame_ms >= hop_ms > 0")
    flen = int(round(frame_ms * buf.sample_rate / 1000.0))
    hlen = int(round(hop_ms * buf.sample_rate / 1000.0))
    if flen < 1 or hlen < 1:
        raise ValueError("frame/hop shorter than one sample at this rate")
    if len(buf) < flen:
        raise ValueError(f"buffer of {len(buf)} samples is shorter than one frame ({flen})")
    windows = np.lib.stride_tricks.sliding_window_view(buf.samples, flen)[::hlen]
    mean_square = np.einsum("ij,ij->i", windows, windows) / flen
    values = np.log(np.maximum(ENERGY_FLOOR, mean_square))
    return EnergyTrack(values, frame_ms, hop_ms)


def _best_split(s1: list[float], s2: list[float], a: int, b: int) -> tuple[int, float]:
    """Best two-mean split of frames [a, b).

    Returns (k, tsq): k in (a, b) separating [a, k) from [k, b), and the
    squared t statistic of the mean difference against the pooled within-group
    variance.  tsq is scale- and shift-free, so verification decisions made on
    it survive waveform gain changes.
    """
    best_k = a + 1
    best_score = -1.0
    sa = s1[a]
    sb = s1[b]
    for k in range(a + 1, b):
        nl = k - a
        nr = b - k
        d = (s1[k] - sa) / nl - (sb - s1[k]) / nr
        score = nl * nr * d * d
        if score > best_score:
            best_score = score
            best_k = k
    nl = best_k - a
    nr = b - best_k
    ml = (s1[best_k] - sa) / nl
    mr = (sb - s1[best_k]) / nr
    sse = ((s2[best_k] - s2[a]) - nl * ml * ml) + ((s2[b] - s2[best_k]) - nr * mr * mr)
    pooled = max(sse / max(nl + nr - 2, 1), VAR_FLOOR)
    tsq = (nl * nr / (nl + nr)) * (ml - mr) ** 2 / pooled
    return best_k, tsq


def _detect_indices(values, params: FbdsParams) -> list[int]:
    """Cut indices b (boundary between frames b and b+1) for one pass.

    Frame i is predicted by two Gaussian models that never share frames: the
    long-term model over [r, i-L) and the short-term model over the last L
    frames [i-L, i).  Keeping the windows disjoint means a change pollutes the
    short-term mean first while the long-term mean and variance stay clean,
    which is what makes the drop in the cumulative statistic sharp.  The
    long-term variance is shared by both likelihoods (mean-difference
    statistic), so the whole test is invariant under constant shifts of the
    track, hence under waveform gain.

    Runs on a plain float list with O(1) work per frame.
    """
    n = len(values)
    L = params.short_window_frames
    lam = params.detection_threshold
    hop = params.hop_ms
    half_span = (params.frame_ms + params.hop_ms) / 2.0
    min_seg = params.min_segment_ms

    s1 = [0.0] * (n + 1)
    s2 = [0.0] * (n + 1)
    acc1 = acc2 = 0.0
    for i, v in enumerate(values):
        acc1 += v
        acc2 += v * v
        s1[i + 1] = acc1
        s2[i + 1] = acc2

    warmup = L + MIN_LONG_FRAMES
    cuts: list[int] = []
    r = 0
    t_prev = 0.0
    w_sum = 0.0
    w_peak = 0.0
    i = r + warmup
    while i < n:
        x = values[i]
        split = i - L
        n0 = split - r
        mu0 = (s1[split] - s1[r]) / n0
        var0 = (s2[split] - s2[r]) / n0 - mu0 * mu0
        if var0 < VAR_FLOOR:
            var0 = VAR_FLOOR
        mu1 = (s1[i] - s1[split]) / L
        d1 = x - mu1
        d0 = x - mu0
        w_sum += (d1 * d1 - d0 * d0) / (2.0 * var0) + DRIFT_ALLOWANCE
        if w_sum > w_peak:
            w_peak = w_sum
        if w_peak - w_sum > lam:
            # the alarm says a change happened somewhere in [r, i]; place the
            # boundary at the frame maximizing the two-mean separation, which
            # stays accurate even when the change fell inside the warmup
            k_split, tsq = _best_split(s1, s2, r, i + 1)
            if tsq < VERIFY_TSQ:
                # excursion without a credible level shift; discard it
                w_sum = 0.0
                w_peak = 0.0
                i += 1
                continue
            t_cut = (k_split - 1) * hop + half_span
            if t_cut - t_prev >= min_seg:
                cuts.append(k_split - 1)
                t_prev = t_cut
            r = k_split
            w_sum = 0.0
            w_peak = 0.0
            i = r + warmup
            continue
        i += 1
    return cuts


def detect_changes(track: EnergyTrack, params: FbdsParams) -> list[float]:
    """Boundary times in ms for a single forward pass over the track."""
    if len(track) == 0:
        raise ValueError("energy track is empty")
    return [track.cut_time_ms(b) for b in _detect_indices(track.values.tolist(), params)]


def _fuse(forward: list[float], backward: list[float], tol: float) -> list[float]:
    """Pair up boundaries from the two passes; fused pairs become midpoints."""
    out: list[float] = []
    i = j = 0
    while i < len(forward) and j < len(backward):
        d = forward[i] - backward[j]
        if abs(d) <= tol:
            out.append((forward[i] + backward[j]) / 2.0)
            i += 1
            j += 1
        elif d < 0:
            out.append(forward[i])
            i += 1
        else:
            out.append(backward[j])
            j += 1
    out.extend(forward[i:])
    out.extend(backward[j:])
    return out


def segment(buf: AudioBuffer, params: FbdsParams | None = None) -> list[Segment]:
    """Tile the recording into sub-phonemic segments.

    Forward and backward change detection on the energy track, midpoint fusion
    of boundary pairs closer than the merge tolerance, unpaired boundaries
    kept.  The returned segments are sorted, disjoint, and cover
    [0, duration_ms] exactly.
    """
    params = params or FbdsParams()
    track = energy_track(buf, params.frame_ms, params.hop_ms)
    n = len(track)
    if n < 2:
        raise ValueError("buffer too short to segment (needs at least 2 frames)")
    values = track.values.tolist()

    fwd = [track.cut_time_ms(b) for b in _detect_indices(values, params)]
    rev = _detect_indices(values[::-1], params)
    bwd = sorted(track.cut_time_ms(n - 2 - b) for b in rev)

    duration = buf.duration_ms
    cuts = sorted(_fuse(fwd, bwd, params.merge_tolerance_ms))
    kept: list[float] = []
    for t in cuts:
        if t < params.min_segment_ms or t > duration - params.min_segment_ms:
            continue
        if kept and t - kept[-1] < params.min_segment_ms:
            continue
        kept.append(t)

    centers = np.arange(n) * params.hop_ms + params.frame_ms / 2.0
    edges = [0.0] + kept + [duration]
    split = np.searchsorted(centers, kept, side="left")
    frame_bounds = [0] + [int(k) for k in split] + [n]

    segments: list[Segment] = []
    lo_frame = 0
    start = 0.0
    eps = 1e-9
    for idx in range(1, len(edges)):
        hi_frame = frame_bounds[idx]
        end = edges[idx]
        if idx < len(edges) - 1 and hi_frame <= lo_frame:
            continue  # fused cut landed before any new frame center; drop it
        hi_frame = max(hi_frame, lo_frame + 1)
        # prefer frames whose whole window lies inside the segment, so a quiet
        # segment is not scored by a frame overhanging a loud neighbour
        i0 = max(lo_frame, int(math.ceil((start - eps) / params.hop_ms)))
        i1 = min(hi_frame - 1, int(math.floor((end - params.frame_ms + eps) / params.hop_ms)))
        if i0 <= i1:
            max_e = float(np.max(track.values[i0:i1 + 1]))
        else:
            max_e = float(np.max(track.values[lo_frame:hi_frame]))
        segments.append(Segment(start, end, max_e))
        start = end
        lo_frame = hi_frame
    return segments
