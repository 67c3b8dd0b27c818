"""Corpus curation: series filtering, angle binning, and condition accounting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .conditions import CANONICAL_ANGLES, OTHERS, bin_angles
from .manifest import CorpusManifest, FrameRecord, StageRecord

OTHERS_LABEL = "Others"

# Table-style row order for the four canonical settings.
ROW_ORDER = ("AC-A", "PC-A", "AC-B", "PC-B")


def condition_row(record: FrameRecord) -> str:
    """Table row for a frame: 'AC-A' ... 'PC-B' or 'Others'.

    A frame lands in a canonical row only when its angles bin to its
    plane's canonical orientation; inconsistent metadata goes to Others.
    """
    if record.circulation not in ("AC", "PC"):
        return OTHERS_LABEL
    binned = bin_angles(record.primary_angle_deg, record.secondary_angle_deg)
    if binned is OTHERS or binned != CANONICAL_ANGLES[record.plane]:
        return OTHERS_LABEL
    return f"{record.circulation}-{record.plane}"


def filter_series(manifest: CorpusManifest) -> CorpusManifest:
    """Drop whole series whose circulation is neither AC nor PC."""
    retained = [r for r in manifest.records if r.circulation in ("AC", "PC")]
    n_series_in = len(manifest.series_keys())
    n_series_keep = len({r.series_key for r in retained})
    stage = StageRecord(stage="filter-circulation", unit="series",
                        input=n_series_in, retained=n_series_keep,
                        excluded=n_series_in - n_series_keep,
                        note="kept anterior/posterior circulations only")
    out = manifest.with_stage(stage, retained)
    out.provenance.append(StageRecord(
        stage="filter-circulation", unit="frames", input=len(manifest.records),
        retained=len(retained), excluded=len(manifest.records) - len(retained)))
    return out


@dataclass
class ConditionTable:
    """Per-condition counts and proportions of an arterial-phase corpus."""

    counts: dict = field(default_factory=dict)
    total: int = 0

    def proportion(self, row: str) -> float:
        return self.counts.get(row, 0) / self.total if self.total else 0.0

    def rows(self) -> list:
        labels = [r for r in ROW_ORDER if r in self.counts]
        if OTHERS_LABEL in self.counts:
            labels.append(OTHERS_LABEL)
        return [(label, self.counts[label], self.proportion(label)) for label in labels]

    def to_table(self) -> str:
        lines = [f"{'condition':<10} {'count':>8} {'proportion':>11}"]
        for label, count, prop in self.rows():
            lines.append(f"{label:<10} {count:>8d} {100 * prop:>10.1f}%")
        lines.append(f"{'Total':<10} {self.total:>8d} {100.0 if self.total else 0.0:>10.1f}%")
        return "\n".join(lines)


def summarize_conditions(manifest: CorpusManifest,
                         phase: Optional[str] = "ARTERIAL") -> ConditionTable:
    """Count frames per canonical condition row (callers pass phase=None to
    summarize an already-filtered manifest as-is)."""
    records = manifest.records
    if phase is not None:
        records = [r for r in records if r.phase == phase]
    counts: dict = {}
    for r in records:
        row = condition_row(r)
        counts[row] = counts.get(row, 0) + 1
    table = ConditionTable(counts=counts, total=len(records))
    assert abs(sum(table.proportion(k) for k in counts) - (1.0 if records else 0.0)) < 1e-9
    return table
