"""Stimulus manifests and run configuration.

The manifest CSV names every recording: stimulus_id, speaker_id, group,
sentence_id, expected_syllables (may be empty), wav_path.  The run config is
a JSON file with "fbds", "clustering", "model", and "io" blocks; unknown keys
anywhere are rejected rather than silently ignored.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .clustering import ClusterParams
from .fbds import FbdsParams

MANIFEST_COLUMNS = ["stimulus_id", "speaker_id", "group", "sentence_id",
                    "expected_syllables", "wav_path"]


@dataclass(frozen=True)
class ManifestRow:
    stimulus_id: str
    speaker_id: str
    group: str
    sentence_id: str
    expected_syllables: int | None
    wav_path: str


@dataclass
class Manifest:
    rows: list[ManifestRow]
    path: str

    def __post_init__(self):
        ids = [r.stimulus_id for r in self.rows]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise ValueError(f"{self.path}: duplicate stimulus_id values {dupes}")

    def has_full_scripts(self) -> bool:
        return bool(self.rows) and all(r.expected_syllables is not None for r in self.rows)


def read_manifest(path) -> Manifest:
    path = Path(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        missing = set(MANIFEST_COLUMNS) - set(names)
        if missing:
            raise ValueError(f"{path}: missing manifest columns {sorted(missing)}")
        extra = set(names) - set(MANIFEST_COLUMNS)
        if extra:
            raise ValueError(f"{path}: unknown manifest columns {sorted(extra)}")
        for i, rec in enumerate(reader, start=2):
            raw = rec["expected_syllables"].strip()
            expected = None
            if raw:
                expected = int(raw)
                if expected <= 0:
                    raise ValueError(f"{path}:{i}: expected_syllables must be positive")
            rows.append(ManifestRow(
                stimulus_id=rec["stimulus_id"],
                speaker_id=rec["speaker_id"],
                group=rec["group"],
                sentence_id=rec["sentence_id"],
                expected_syllables=expected,
                wav_path=rec["wav_path"],
            ))
    return Manifest(rows, str(path))


def write_manifest(path, rows: list[ManifestRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for r in rows:
            writer.writerow([
                r.stimulus_id, r.speaker_id, r.group, r.sentence_id,
                "" if r.expected_syllables is None else r.expected_syllables,
                r.wav_path,
            ])


_MODEL_KEYS = {"family", "with_delta", "seed", "hyperparams", "svr_grid", "rfr_grid"}
_IO_KEYS = {"out_dir"}

DEFAULT_SVR_GRID = [
    {"C": c, "epsilon": e}
    for c in (0.1, 1.0, 10.0, 100.0)
    for e in (0.01, 0.05, 0.1, 0.2)
]
DEFAULT_RFR_GRID = [
    {"n_trees": n, "max_depth": d}
    for n in (50, 100, 200)
    for d in (2, 4, 8, None)
]


@dataclass
class RunConfig:
    fbds: FbdsParams = field(default_factory=FbdsParams)
    clustering: ClusterParams = field(default_factory=ClusterParams)
    model: dict = field(default_factory=dict)
    io: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "fbds": {f.name: getattr(self.fbds, f.name) for f in fields(FbdsParams)},
            "clustering": {f.name: getattr(self.clustering, f.name)
                           for f in fields(ClusterParams)},
            "model": self.model,
            "io": self.io,
        }


def _build_params(cls, block: dict, where: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(block) - allowed
    if unknown:
        raise ValueError(f"config block {where!r}: unknown keys {sorted(unknown)}")
    return cls(**block)


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig()
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    unknown = set(data) - {"fbds", "clustering", "model", "io"}
    if unknown:
        raise ValueError(f"{path}: unknown config blocks {sorted(unknown)}")
    model = data.get("model", {})
    bad = set(model) - _MODEL_KEYS
    if bad:
        raise ValueError(f"{path}: unknown model keys {sorted(bad)}")
    io_block = data.get("io", {})
    bad = set(io_block) - _IO_KEYS
    if bad:
        raise ValueError(f"{path}: unknown io keys {sorted(bad)}")
    return RunConfig(
        fbds=_build_params(FbdsParams, data.get("fbds", {}), "fbds"),
        clustering=_build_params(ClusterParams, data.get("clustering", {}), "clustering"),
        model=model,
        io=io_block,
    )
