"""Reader-study records, masked aggregation, summary tables, and ICC reliability."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

SEGMENTS = ("proximal", "medium", "peripheral")
RATER_ROLES = ("NR", "NS", "IM")

NOT_PRESENT = "NP"
NOT_APPLICABLE = "NA"
FLAGS = (NOT_PRESENT, NOT_APPLICABLE)


class StudyError(ValueError):
    """Invalid rating payloads or study inputs."""


class IccUndefinedError(StudyError):
    """ICC is undefined (zero total variance)."""


def validate_entry(value) -> object:
    """A segment entry is an integer Likert 1-5 or one of the NP/NA flags."""
    if isinstance(value, bool):
        raise StudyError(f"segment entry must be 1-5 or NP/NA, got {value!r}")
    if isinstance(value, int):
        if not 1 <= value <= 5:
            raise StudyError(f"Likert score must be in 1..5, got {value}")
        return value
    if value in FLAGS:
        return value
    raise StudyError(f"segment entry must be 1-5 or NP/NA, got {value!r}")


@dataclass
class RatingRecord:
    """One rater's per-segment Likert scores and flags for one image."""

    image_id: str
    rater_id: str
    rater_role: str
    proximal: object
    medium: object
    peripheral: object
    external_circulation: bool = False
    timestamp: str = ""

    def __post_init__(self):
        if self.rater_role not in RATER_ROLES:
            raise StudyError(f"rater_role must be one of {RATER_ROLES}, "
                             f"got {self.rater_role!r}")
        self.proximal = validate_entry(self.proximal)
        self.medium = validate_entry(self.medium)
        self.peripheral = validate_entry(self.peripheral)

    def entry(self, segment: str):
        if segment not in SEGMENTS:
            raise StudyError(f"unknown segment {segment!r}")
        return getattr(self, segment)

    def likert(self, segment: str) -> Optional[int]:
        """Usable score for a segment; external-circulation images mask
        every entry from this rater."""
        if self.external_circulation:
            return None
        value = self.entry(segment)
        return value if isinstance(value, int) else None


@dataclass
class ImageScore:
    """Masked per-segment means for one image; overall is their mean."""

    image_id: str
    segment_scores: Dict[str, float] = field(default_factory=dict)

    @property
    def overall(self) -> Optional[float]:
        if not self.segment_scores:
            return None
        return float(np.mean(list(self.segment_scores.values())))

    @property
    def ratable(self) -> bool:
        return bool(self.segment_scores)


def aggregate_image_scores(ratings: Sequence[RatingRecord]) -> ImageScore:
    """Average Likert entries across raters per segment, ignoring flags.

    An image where every rater flagged every segment is non-ratable and
    excluded from downstream denominators (``ratable`` is False).
    """
    if not ratings:
        raise StudyError("need at least one rating record")
    image_id = ratings[0].image_id
    if any(r.image_id != image_id for r in ratings):
        raise StudyError("all ratings must refer to the same image")
    score = ImageScore(image_id=image_id)
    for segment in SEGMENTS:
        values = [r.likert(segment) for r in ratings]
        values = [v for v in values if v is not None]
        if values:
            score.segment_scores[segment] = float(np.mean(values))
    return score


def screen(image_ids: Sequence[str], verdicts: Dict[str, str],
           conditions: Optional[Dict[str, str]] = None):
    """Apply eligibility verdicts; returns (retained ids, per-condition keeps).

    Every image needs a KEEP/EXCLUDE verdict. ``conditions`` maps image ids
    to condition keys for the retention table.
    """
    missing = [i for i in image_ids if i not in verdicts]
    if missing:
        raise StudyError(f"missing screening verdicts for {len(missing)} images "
                         f"(first: {missing[0]!r})")
    bad = {v for v in verdicts.values() if v not in ("KEEP", "EXCLUDE")}
    if bad:
        raise StudyError(f"verdicts must be KEEP or EXCLUDE, got {sorted(bad)}")
    retained = [i for i in image_ids if verdicts[i] == "KEEP"]
    keeps: Dict[str, int] = {}
    if conditions is not None:
        for i in retained:
            key = conditions.get(i, "?")
            keeps[key] = keeps.get(key, 0) + 1
    return retained, keeps


def retention_table(keeps: Dict[str, int], order: Sequence[str]) -> str:
    """Screening retention counts in the published two-column layout."""
    lines = [f"{'condition':<10} {'N_keep':>7}"]
    for key in order:
        lines.append(f"{key:<10} {keeps.get(key, 0):>7d}")
    return "\n".join(lines)


@dataclass
class ConditionStats:
    condition: str
    n_images: int
    overall: Optional[tuple]
    segments: Dict[str, Optional[tuple]]


def _mean_sd(values: List[float]) -> Optional[tuple]:
    if not values:
        return None
    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return (mean, sd)


def condition_summary(scores: Sequence[ImageScore], conditions: Dict[str, str],
                      order: Sequence[str]) -> List[ConditionStats]:
    """Per-condition N and mean +/- sample SD for overall and each segment.

    Non-ratable images are excluded from every denominator; a segment's
    statistics cover only images where that segment was ratable.
    """
    ratable = [s for s in scores if s.ratable]
    for s in ratable:
        if s.image_id not in conditions:
            raise StudyError(f"image {s.image_id!r} has no condition label")
    stats = []
    for cond in order:
        rows = [s for s in ratable if conditions[s.image_id] == cond]
        seg_stats = {seg: _mean_sd([s.segment_scores[seg] for s in rows
                                    if seg in s.segment_scores])
                     for seg in SEGMENTS}
        stats.append(ConditionStats(
            condition=cond, n_images=len(rows),
            overall=_mean_sd([s.overall for s in rows]), segments=seg_stats))
    return stats


def summary_table(stats: Sequence[ConditionStats]) -> str:
    """Likert summary in the published wide layout, two decimals."""

    def cell(ms: Optional[tuple]) -> str:
        if ms is None:
            return "-"
        return f"{ms[0]:.2f} ± {ms[1]:.2f}"

    lines = [f"{'condition':<10} {'N':>4} {'overall':>13} {'prox':>13} "
             f"{'med':>13} {'peri':>13}"]
    for st in stats:
        lines.append(
            f"{st.condition:<10} {st.n_images:>4d} {cell(st.overall):>13} "
            f"{cell(st.segments['proximal']):>13} {cell(st.segments['medium']):>13} "
            f"{cell(st.segments['peripheral']):>13}")
    return "\n".join(lines)


def icc(matrix) -> dict:
    """Two-way random-effects absolute-agreement ICCs for a complete matrix.

    Rows are targets (images), columns raters. Returns single-rater
    ICC(2,1) and k-rater-mean ICC(2,k) from the standard ANOVA mean
    squares (MSR rows, MSC columns, MSE residual).
    """
    x = np.asarray(matrix, dtype=np.float64)
    if x.ndim != 2:
        raise StudyError(f"ratings must be a 2-D matrix, got shape {x.shape}")
    n, k = x.shape
    if n < 2 or k < 2:
        raise StudyError(f"need at least 2 images and 2 raters, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise StudyError("ratings matrix must be complete (no NaN/inf)")

    grand = x.mean()
    row_means = x.mean(axis=1)
    col_means = x.mean(axis=0)
    ss_total = float(((x - grand) ** 2).sum())
    if ss_total == 0.0:
        raise IccUndefinedError("zero total variance: ICC is undefined")
    ss_rows = float(k * ((row_means - grand) ** 2).sum())
    ss_cols = float(n * ((col_means - grand) ** 2).sum())
    ss_err = ss_total - ss_rows - ss_cols

    msr = ss_rows / (n - 1)
    msc = ss_cols / (k - 1)
    mse = ss_err / ((n - 1) * (k - 1))

    denom_single = msr + (k - 1) * mse + (k / n) * (msc - mse)
    denom_avg = msr + (msc - mse) / n
    if denom_single == 0.0 or denom_avg == 0.0:
        raise IccUndefinedError("degenerate ANOVA decomposition")
    return {
        "icc_single": (msr - mse) / denom_single,
        "icc_average": (msr - mse) / denom_avg,
        "msr": msr, "msc": msc, "mse": mse, "n": n, "k": k,
    }


def rating_matrix(ratings: Iterable[RatingRecord], segment: str,
                  rater_ids: Optional[Sequence[str]] = None):
    """Complete-case image x rater matrix for one segment (or 'overall').

    'overall' uses each rater's mean over their own ratable segments per
    image. Images missing a usable value from any listed rater are dropped;
    returns (matrix, kept image ids, dropped count).
    """
    ratings = list(ratings)
    if rater_ids is None:
        rater_ids = sorted({r.rater_id for r in ratings})
    by_image: Dict[str, Dict[str, RatingRecord]] = {}
    for r in ratings:
        if rater_ids and r.rater_id not in rater_ids:
            continue
        by_image.setdefault(r.image_id, {})[r.rater_id] = r

    def value(record: RatingRecord) -> Optional[float]:
        if segment == "overall":
            vals = [record.likert(seg) for seg in SEGMENTS]
            vals = [v for v in vals if v is not None]
            return float(np.mean(vals)) if vals else None
        return record.likert(segment)

    rows, kept = [], []
    dropped = 0
    for image_id in sorted(by_image):
        records = by_image[image_id]
        vals = [value(records[rid]) if rid in records else None for rid in rater_ids]
        if any(v is None for v in vals):
            dropped += 1
            continue
        rows.append(vals)
        kept.append(image_id)
    matrix = np.asarray(rows, dtype=np.float64) if rows else np.empty((0, len(rater_ids)))
    return matrix, kept, dropped


def icc_report(ratings: Iterable[RatingRecord],
               rater_ids: Optional[Sequence[str]] = None) -> dict:
    """ICC(2,1)/ICC(2,k) per segment and for the overall score.

    Complete-case per region; each row reports how many images were
    dropped for missingness. Pass a rater-id subset for the
    domain-experts-only variant.
    """
    ratings = list(ratings)
    out = {}
    for region in (*SEGMENTS, "overall"):
        matrix, kept, dropped = rating_matrix(ratings, region, rater_ids)
        row: dict = {"n_images": len(kept), "dropped": dropped}
        try:
            row.update(icc(matrix))
        except StudyError as exc:
            row["error"] = str(exc)
        out[region] = row
    return out
