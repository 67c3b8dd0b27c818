"""Frame records, corpus manifests, and their line-delimited file format.

Manifest files are UTF-8 TSV, one record per line, fields in the order
study_id, series_id, frame_index, image_path, circulation, plane,
primary_angle_deg, secondary_angle_deg, phase, phase_score (empty when
absent). Pipeline-stage accounting travels in a JSON sidecar next to the
manifest.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

from .conditions import CIRCULATIONS, PLANES

PHASES = ("ARTERIAL", "NON_ARTERIAL", "UNLABELED")

FIELD_ORDER = ("study_id", "series_id", "frame_index", "image_path", "circulation",
               "plane", "primary_angle_deg", "secondary_angle_deg", "phase",
               "phase_score")


class ManifestError(ValueError):
    """Invalid record fields or malformed manifest file."""


@dataclass
class FrameRecord:
    """One image frame with its acquisition metadata and phase label."""

    study_id: str
    series_id: str
    frame_index: int
    image_path: str
    circulation: str
    plane: str
    primary_angle_deg: float
    secondary_angle_deg: float
    phase: str = "UNLABELED"
    phase_score: Optional[float] = None

    def __post_init__(self):
        if self.frame_index < 0:
            raise ManifestError(f"frame_index must be >= 0, got {self.frame_index}")
        if self.circulation not in CIRCULATIONS:
            raise ManifestError(f"circulation must be one of {CIRCULATIONS}, "
                                f"got {self.circulation!r}")
        if self.plane not in PLANES:
            raise ManifestError(f"plane must be one of {PLANES}, got {self.plane!r}")
        for name in ("primary_angle_deg", "secondary_angle_deg"):
            if not math.isfinite(getattr(self, name)):
                raise ManifestError(f"{name} must be finite")
        if self.phase not in PHASES:
            raise ManifestError(f"phase must be one of {PHASES}, got {self.phase!r}")
        if self.phase_score is not None and not 0.0 <= self.phase_score <= 1.0:
            raise ManifestError(f"phase_score must be in [0, 1], got {self.phase_score}")

    @property
    def series_key(self) -> tuple:
        return (self.study_id, self.series_id)


@dataclass
class StageRecord:
    """Accounting for one pipeline stage: input = retained + excluded."""

    stage: str
    unit: str
    input: int
    retained: int
    excluded: int
    note: str = ""

    def __post_init__(self):
        if self.input != self.retained + self.excluded:
            raise ManifestError(
                f"stage {self.stage!r} breaks conservation: "
                f"{self.input} != {self.retained} + {self.excluded}")


@dataclass
class CorpusManifest:
    """An ordered set of frame records plus the audit trail that produced it."""

    records: list = field(default_factory=list)
    provenance: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def series_keys(self) -> list:
        seen = dict.fromkeys(r.series_key for r in self.records)
        return list(seen)

    def with_stage(self, stage: StageRecord, records: list) -> "CorpusManifest":
        return CorpusManifest(records=records, provenance=[*self.provenance, stage])

    def check_conservation(self) -> None:
        for st in self.provenance:
            if st.input != st.retained + st.excluded:
                raise ManifestError(f"stage {st.stage!r} breaks conservation")


def _format_record(r: FrameRecord) -> str:
    score = "" if r.phase_score is None else f"{r.phase_score:.6f}"
    cells = (r.study_id, r.series_id, str(r.frame_index), r.image_path,
             r.circulation, r.plane, f"{r.primary_angle_deg:g}",
             f"{r.secondary_angle_deg:g}", r.phase, score)
    for name, cell in zip(FIELD_ORDER, cells):
        if "\t" in cell or "\n" in cell:
            raise ManifestError(f"field {name} contains a separator character")
    return "\t".join(cells)


def _parse_record(line: str, lineno: int) -> FrameRecord:
    cells = line.split("\t")
    if len(cells) != len(FIELD_ORDER):
        raise ManifestError(
            f"line {lineno}: expected {len(FIELD_ORDER)} fields, got {len(cells)}")
    try:
        return FrameRecord(
            study_id=cells[0], series_id=cells[1], frame_index=int(cells[2]),
            image_path=cells[3], circulation=cells[4], plane=cells[5],
            primary_angle_deg=float(cells[6]), secondary_angle_deg=float(cells[7]),
            phase=cells[8], phase_score=float(cells[9]) if cells[9] else None)
    except (ValueError, ManifestError) as exc:
        raise ManifestError(f"line {lineno}: {exc}") from exc


def write_manifest(path, manifest: CorpusManifest) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for r in manifest.records:
            fh.write(_format_record(r) + "\n")
    sidecar = provenance_path(path)
    if manifest.provenance:
        sidecar.write_text(json.dumps(
            [vars(s) for s in manifest.provenance], indent=2), encoding="utf-8")
    elif sidecar.exists():
        sidecar.unlink()


def read_manifest(path) -> CorpusManifest:
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            records.append(_parse_record(line, lineno))
    provenance = []
    sidecar = provenance_path(path)
    if sidecar.exists():
        provenance = [StageRecord(**d) for d in json.loads(sidecar.read_text("utf-8"))]
    return CorpusManifest(records=records, provenance=provenance)


def provenance_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".provenance.json")


def with_scores(records: Iterable[FrameRecord], scores, phases) -> list:
    """Copy records with classifier-assigned scores and phases."""
    out = []
    for r, s, p in zip(records, scores, phases):
        out.append(replace(r, phase_score=float(s), phase=p))
    return out
