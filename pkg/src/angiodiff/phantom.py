"""Procedural DSA-like phantom series: 2D vascular trees with contrast propagation.

Each series grows a seeded binary vessel tree (anterior trees branch
bilaterally from a midline trunk, posterior trees climb a single dorsal
trunk into a narrow crown), renders dark vessels on a light background,
and sweeps a contrast front through the tree: early frames show only the
proximal trunk, middle frames the fully opacified tree (the designated
arterial phase), late frames a washed-out venous-like remnant. Plane B
projects the same tree rotated 90 degrees with compressed aspect.

Per-series seeds derive from the corpus seed, so series are independent
and the whole corpus is byte-reproducible; generation could parallelize
over series without changing any output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np
from PIL import Image

from . import _kernels
from .manifest import CorpusManifest, FrameRecord, StageRecord
from .seeds import rng_for

# Frame-count mix of the published conditioning distribution.
TABLE1_MIX = {"AC-A": 0.096, "PC-A": 0.009, "AC-B": 0.269, "PC-B": 0.080,
              "Others": 0.546}

BALANCED_MIX = {"AC-A": 0.25, "PC-A": 0.25, "AC-B": 0.25, "PC-B": 0.25}


class PhantomError(ValueError):
    """Invalid phantom configuration."""


@dataclass
class PhantomConfig:
    image_side: int = 128
    frames_per_series: int = 8
    branch_depth: int = 5
    condition_mix: Optional[Dict[str, float]] = None
    frac_other_circulation: float = 0.0
    noise: float = 0.012
    vessel_strength: float = 0.85
    trunk_radius_frac: float = 0.016  # trunk radius as a fraction of image side

    def __post_init__(self):
        if self.image_side <= 0:
            raise PhantomError(f"image_side must be positive, got {self.image_side}")
        if self.frames_per_series < 2:
            raise PhantomError("need at least 2 frames per series")
        if self.branch_depth < 0:
            raise PhantomError(f"branch_depth must be >= 0, got {self.branch_depth}")
        if not 0.0 <= self.frac_other_circulation < 1.0:
            raise PhantomError("frac_other_circulation must be in [0, 1)")
        mix = self.condition_mix if self.condition_mix is not None else TABLE1_MIX
        if any(w < 0 for w in mix.values()) or sum(mix.values()) <= 0:
            raise PhantomError("condition mix weights must be non-negative, sum > 0")


# One vessel piece: endpoints and radius in unit coordinates, plus the
# normalized contrast arrival interval along the tree.
@dataclass
class _Segment:
    x0: float
    y0: float
    x1: float
    y1: float
    radius: float
    arrive0: float
    arrive1: float


def _grow_tree(rng: np.random.Generator, circulation: str,
               depth: int, trunk_radius: float) -> list:
    """Binary branching with Murray-law radius decay and mild tortuosity."""
    segments: list = []

    def add_path(x0, y0, x1, y1, radius, dist0):
        # subdivide with perpendicular jitter for an organic course
        n_sub = 3
        px, py = x0, y0
        length = math.hypot(x1 - x0, y1 - y0)
        nx, ny = -(y1 - y0), (x1 - x0)
        norm = math.hypot(nx, ny) or 1.0
        nx, ny = nx / norm, ny / norm
        dist = dist0
        for s in range(1, n_sub + 1):
            f = s / n_sub
            wob = 0.0 if s == n_sub else rng.normal(0.0, 0.05) * length
            qx = x0 + f * (x1 - x0) + wob * nx
            qy = y0 + f * (y1 - y0) + wob * ny
            step = math.hypot(qx - px, qy - py)
            segments.append(_Segment(px, py, qx, qy, radius, dist, dist + step))
            px, py = qx, qy
            dist += step
        return px, py, dist

    def branch(x, y, angle, length, radius, level, dist):
        if level > depth or length < 0.01 or radius < 0.0045:
            return
        x1 = x + length * math.sin(angle)
        y1 = y - length * math.cos(angle)
        ex, ey, dist1 = add_path(x, y, x1, y1, radius, dist)
        child_r = radius * (0.5 ** (1.0 / 3.0)) * rng.uniform(0.92, 1.05)
        spread = math.radians(rng.uniform(22.0, 38.0))
        asym = rng.uniform(-0.25, 0.25)
        for sign in (-1.0, 1.0):
            branch(ex, ey, angle + sign * spread * (1.0 + sign * asym),
                   length * rng.uniform(0.68, 0.8), child_r, level + 1, dist1)

    if circulation == "AC":
        # midline trunk, then bilateral subtrees filling both hemispheres
        ex, ey, d = add_path(0.5, 1.02, 0.5 + rng.normal(0, 0.01), 0.78,
                             trunk_radius, 0.0)
        for side in (-1.0, 1.0):
            angle = side * math.radians(rng.uniform(48.0, 62.0))
            branch(ex, ey, angle, 0.2, trunk_radius * 0.82, 1, d)
            branch(ex, ey, side * math.radians(rng.uniform(12.0, 22.0)),
                   0.22, trunk_radius * 0.7, 2, d)
    else:
        # single dorsal trunk with a narrow upward crown and small low branches
        ex, ey, d = add_path(0.5, 1.02, 0.5 + rng.normal(0, 0.008), 0.5,
                             trunk_radius * 0.95, 0.0)
        for angle_deg in (-16.0, 0.0, 16.0):
            angle = math.radians(angle_deg + rng.uniform(-5.0, 5.0))
            branch(ex, ey, angle, 0.17, trunk_radius * 0.66, 2, d)
        for side in (-1.0, 1.0):
            lx = 0.5 + side * 0.02
            branch(lx, 0.8, side * math.radians(rng.uniform(55.0, 75.0)),
                   0.12, trunk_radius * 0.5, 3, d * 0.6)

    # normalize arrival distances to [0, 1]
    dmax = max(s.arrive1 for s in segments)
    for s in segments:
        s.arrive0 /= dmax
        s.arrive1 /= dmax
    return segments


def _project(segments: list, plane: str) -> list:
    if plane == "A":
        return segments
    # lateral detector: rotate 90 degrees about the center, compress width
    out = []
    for s in segments:
        def rot(x, y):
            rx = 0.5 + (y - 0.5)
            ry = 0.5 - (x - 0.5)
            return 0.5 + 0.72 * (rx - 0.5), ry
        x0, y0 = rot(s.x0, s.y0)
        x1, y1 = rot(s.x1, s.y1)
        out.append(_Segment(x0, y0, x1, y1, s.radius, s.arrive0, s.arrive1))
    return out


def _frame_plan(n_frames: int) -> list:
    """(front, fade, phase) per frame: inflow -> arterial plateau -> washout."""
    n_inflow = max(1, round(0.4 * n_frames))
    n_plateau = max(1, round(0.25 * n_frames))
    n_washout = max(1, n_frames - n_inflow - n_plateau)
    n_plateau = n_frames - n_inflow - n_washout
    if n_plateau < 1:
        n_inflow = max(1, n_inflow - 1)
        n_plateau = n_frames - n_inflow - n_washout
    plan = []
    for i in range(n_inflow):
        plan.append(((i + 1) / (n_inflow + 1), 1.0, "NON_ARTERIAL"))
    for _ in range(n_plateau):
        plan.append((1.0, 1.0, "ARTERIAL"))
    for j in range(1, n_washout + 1):
        plan.append((1.0, 0.5 ** j, "NON_ARTERIAL"))
    return plan


def _render_frame(segments: list, front: float, fade: float,
                  config: PhantomConfig, rng: np.random.Generator) -> np.ndarray:
    side = config.image_side
    rows = []
    for s in segments:
        span = max(s.arrive1 - s.arrive0, 1e-9)
        reach = (front - s.arrive0) / span
        if reach <= 0.0:
            continue
        reach = min(reach, 1.0)
        x1 = s.x0 + reach * (s.x1 - s.x0)
        y1 = s.y0 + reach * (s.y1 - s.y0)
        weight = fade * config.vessel_strength
        rows.append((s.x0 * side, s.y0 * side, x1 * side, y1 * side,
                     max(s.radius * side, 0.35), weight))
    accum = np.zeros((side, side), dtype=np.float64)
    if rows:
        _kernels.draw_segments(accum, np.asarray(rows, dtype=np.float64))
    yy, xx = np.mgrid[0:side, 0:side]
    r2 = ((xx / side - 0.5) ** 2 + (yy / side - 0.5) ** 2)
    background = 0.92 - 0.08 * r2
    img = background - np.minimum(accum, 1.4)
    img += rng.normal(0.0, config.noise, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def _allocate_series(n_series: int, config: PhantomConfig) -> list:
    """Largest-remainder allocation of series to condition rows."""
    mix = dict(config.condition_mix if config.condition_mix is not None else TABLE1_MIX)
    n_other_circ = int(round(config.frac_other_circulation * n_series))
    n_cond = n_series - n_other_circ
    labels = sorted(mix)
    weights = np.array([mix[k] for k in labels], dtype=np.float64)
    weights = weights / weights.sum()
    quota = np.floor(weights * n_cond).astype(int)
    remainder = weights * n_cond - quota
    for k in np.argsort(-remainder)[: n_cond - quota.sum()]:
        quota[k] += 1
    assignments = []
    for label, q in zip(labels, quota):
        assignments.extend([label] * int(q))
    assignments.extend(["OTHER-CIRC"] * n_other_circ)
    return assignments


def _series_condition(label: str, rng: np.random.Generator):
    """(circulation, plane, primary, secondary) for an allocation label."""
    if label == "OTHER-CIRC":
        plane = "A" if rng.random() < 0.5 else "B"
        return "OTHER", plane, rng.uniform(-30, 30), rng.uniform(-5, 5)
    if label == "Others":
        circ = "AC" if rng.random() < 0.7 else "PC"
        plane = "A" if rng.random() < 0.5 else "B"
        primary = rng.uniform(10.0, 60.0) * (1 if rng.random() < 0.5 else -1)
        secondary = rng.uniform(-20.0, 20.0)
        return circ, plane, primary, secondary
    circ, plane = label.split("-")
    base = (0.0, 0.0) if plane == "A" else (-90.0, 0.0)
    return (circ, plane, base[0] + rng.uniform(-4.0, 4.0),
            base[1] + rng.uniform(-4.0, 4.0))


def generate_phantom_corpus(n_series: int, seed: int, config: PhantomConfig,
                            out_dir) -> CorpusManifest:
    """Write a phantom corpus under ``out_dir`` and return its manifest.

    Deterministic: identical (n_series, seed, config) produce byte-identical
    images and manifests.
    """
    if n_series < 1:
        raise PhantomError(f"n_series must be >= 1, got {n_series}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    assignments = _allocate_series(n_series, config)
    records = []
    for i, label in enumerate(assignments):
        rng = rng_for(seed, "series", i)
        circ, plane, primary, secondary = _series_condition(label, rng)
        tree_circ = circ if circ in ("AC", "PC") else ("AC" if rng.random() < 0.5 else "PC")
        trunk_radius = config.trunk_radius_frac * rng.uniform(0.85, 1.2)
        segments = _project(_grow_tree(rng, tree_circ, config.branch_depth,
                                       trunk_radius), plane)
        series_id = f"series{i:04d}"
        series_dir = out_dir / series_id
        series_dir.mkdir(exist_ok=True)
        for f, (front, fade, phase) in enumerate(_frame_plan(config.frames_per_series)):
            img = _render_frame(segments, front, fade, config, rng)
            path = series_dir / f"frame{f:02d}.png"
            Image.fromarray(np.round(img * 255.0).astype(np.uint8), mode="L").save(path)
            records.append(FrameRecord(
                study_id=f"study{i:04d}", series_id=series_id, frame_index=f,
                image_path=str(path), circulation=circ, plane=plane,
                primary_angle_deg=round(primary, 3),
                secondary_angle_deg=round(secondary, 3), phase=phase))
    stage = StageRecord(stage="phantom", unit="frames", input=len(records),
                        retained=len(records), excluded=0,
                        note=f"n_series={n_series} seed={seed}")
    return CorpusManifest(records=records, provenance=[stage])
