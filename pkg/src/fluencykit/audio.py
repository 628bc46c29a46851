"""WAV loading and rate conversion into the canonical analysis form.

Every recording is reduced to a mono float buffer in [-1, 1] before any
analysis.  The downstream pipeline reads the sample rate from the buffer
instead of assuming one, but the conventional analysis rate is 16 kHz.
"""

from __future__ import annotations

import struct
import wave
from dataclasses import dataclass
from math import gcd
from pathlib import Path

import numpy as np
from scipy import signal as sig

ANALYSIS_RATE = 16000


class AudioError(ValueError):
    """Raised for unreadable, unsupported, or empty audio files."""


@dataclass(frozen=True)
class AudioBuffer:
    """Mono PCM samples at a known rate, amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples is self.samples and samples.flags.writeable:
            samples = samples.copy()  # never lock a caller-owned array
        if samples.ndim != 1:
            raise ValueError("AudioBuffer samples must be one-dimensional")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if samples.size and (samples.max() > 1.0 or samples.min() < -1.0):
            raise ValueError("sample amplitudes must lie in [-1, 1]")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def duration_ms(self) -> float:
        return len(self.samples) / self.sample_rate * 1000.0

    def __len__(self) -> int:
        return len(self.samples)


_PCM_SCALE = {1: 128.0, 2: 32768.0, 3: 8388608.0}
_WAVE_FORMAT_PCM = 1
_WAVE_FORMAT_IEEE_FLOAT = 3
_WAVE_FORMAT_EXTENSIBLE = 0xFFFE


def _decode_pcm(raw: bytes, sampwidth: int, fmt: int, path) -> np.ndarray:
    """Decode interleaved sample bytes to float64 in [-1, 1]."""
    if fmt == _WAVE_FORMAT_IEEE_FLOAT:
        if sampwidth != 4:
            raise AudioError(f"{path}: only 32-bit float WAV is supported")
        return np.frombuffer(raw, dtype="<f4").astype(np.float64)
    if sampwidth == 1:
        # 8-bit WAV is unsigned, midpoint 128
        return (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / _PCM_SCALE[1]
    if sampwidth == 2:
        return np.frombuffer(raw, dtype="<i2").astype(np.float64) / _PCM_SCALE[2]
    if sampwidth == 3:
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3)
        vals = (
            b[:, 0].astype(np.int32)
            | (b[:, 1].astype(np.int32) << 8)
            | (b[:, 2].astype(np.int32) << 16)
        )
        vals = np.where(vals >= 1 << 23, vals - (1 << 24), vals)
        return vals.astype(np.float64) / _PCM_SCALE[3]
    raise AudioError(f"{path}: unsupported sample width {sampwidth * 8} bits")


def load_wav(path) -> AudioBuffer:
    """Load a RIFF/WAVE PCM file as a mono AudioBuffer.

    Accepts 8/16/24-bit integer and 32-bit float PCM with 1 or 2 channels.
    Stereo is downmixed by channel averaging; integer samples are scaled so
    that full negative scale maps to -1.0.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise AudioError(f"{path}: cannot read file ({exc})") from exc
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    raw = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (size,) = struct.unpack("<I", data[pos + 4 : pos + 8])
        body = data[pos + 8 : pos + 8 + size]
        if chunk_id == b"fmt ":
            if len(body) < 16:
                raise AudioError(f"{path}: truncated fmt chunk")
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif chunk_id == b"data":
            raw = body
        pos += 8 + size + (size & 1)

    if fmt is None or raw is None:
        raise AudioError(f"{path}: missing fmt or data chunk")
    format_tag, n_channels, sample_rate, _, _, bits = fmt
    if format_tag == _WAVE_FORMAT_EXTENSIBLE:
        # extensible header stores the real format in the GUID prefix;
        # not in scope -- reject rather than guess
        raise AudioError(f"{path}: WAVE_FORMAT_EXTENSIBLE is not supported")
    if format_tag not in (_WAVE_FORMAT_PCM, _WAVE_FORMAT_IEEE_FLOAT):
        raise AudioError(f"{path}: non-PCM codec (format tag {format_tag})")
    if n_channels not in (1, 2):
        raise AudioError(f"{path}: {n_channels} channels, expected 1 or 2")
    if sample_rate <= 0:
        raise AudioError(f"{path}: invalid sample rate {sample_rate}")

    sampwidth = bits // 8
    frame_bytes = sampwidth * n_channels
    if frame_bytes == 0 or len(raw) < frame_bytes:
        raise AudioError(f"{path}: zero-length audio")
    raw = raw[: len(raw) - len(raw) % frame_bytes]

    samples = _decode_pcm(raw, sampwidth, format_tag, path)
    if n_channels == 2:
        samples = samples.reshape(-1, 2).mean(axis=1)
    if samples.size == 0:
        raise AudioError(f"{path}: zero-length audio")
    return AudioBuffer(np.clip(samples, -1.0, 1.0), sample_rate)


def write_wav(buf: AudioBuffer, path) -> None:
    """Write a buffer as 16-bit PCM WAV (synthetic corpora, demo stimuli)."""
    pcm = np.clip(np.round(buf.samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(buf.sample_rate)
        w.writeframes(pcm.tobytes())


def _kaiser_lowpass(up: int, down: int, attenuation_db: float = 80.0) -> np.ndarray:
    """FIR anti-alias filter for a rational rate change, on the upsampled grid."""
    max_rate = max(up, down)
    cutoff = 1.0 / max_rate  # relative to Nyquist of the upsampled signal
    beta = sig.kaiser_beta(attenuation_db)
    half_len = 10 * max_rate
    return sig.firwin(2 * half_len + 1, cutoff, window=("kaiser", beta))


def resample(buf: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Band-limited resampling to target_rate (windowed-sinc polyphase).

    The stopband attenuation of the anti-alias filter is ~80 dB, so energy
    statistics computed downstream are not polluted by aliased content.
    Identity conversions return the input buffer unchanged.
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    if target_rate == buf.sample_rate:
        return buf
    g = gcd(buf.sample_rate, int(target_rate))
    up, down = int(target_rate) // g, buf.sample_rate // g
    taps = _kaiser_lowpass(up, down)
    out = sig.resample_poly(buf.samples, up, down, window=taps)
    # sinc overshoot can leave a few samples marginally outside [-1, 1]
    return AudioBuffer(np.clip(out, -1.0, 1.0), int(target_rate))
