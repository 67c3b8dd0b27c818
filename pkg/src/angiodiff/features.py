"""Feature extractors mapping grayscale images to fixed-length embeddings.

The desk default is a deterministic hand-crafted filter-bank embedding so
the whole evaluation suite runs offline; an Inception-V3 pool3 plug-in is
available when pretrained weights are supplied. Distances are comparable
only within a single extractor, so every report carries the extractor
fingerprint.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

from . import _kernels


class FeatureError(ValueError):
    """Extractor unavailable or images not decodable."""


@dataclass(frozen=True)
class ExtractorInfo:
    """Identity + preprocessing fingerprint embedded in every FID report."""

    name: str
    version: str
    dim: int
    resize_side: int
    channel_rule: str
    normalization: str

    def fingerprint(self) -> str:
        return (f"{self.name}@{self.version} dim={self.dim} "
                f"resize={self.resize_side} channels={self.channel_rule} "
                f"norm={self.normalization}")


def load_grayscale(path) -> np.ndarray:
    """8-bit grayscale PNG -> float64 array in [0, 1]."""
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("L"), dtype=np.float64)
    except OSError as exc:
        raise FeatureError(f"cannot decode image {path}: {exc}") from exc
    return arr / 255.0


class MomentExtractor:
    """Toy 4-dim embedding: mean, std, gradient energy, intensity centroid."""

    info = ExtractorInfo(name="toy-moments", version="1", dim=4,
                         resize_side=0, channel_rule="grayscale",
                         normalization="[0,1]")
    dim = 4

    def __call__(self, images: Sequence[np.ndarray]) -> np.ndarray:
        rows = np.empty((len(images), 4), dtype=np.float64)
        for k, img in enumerate(images):
            img = np.asarray(img, dtype=np.float64)
            gx = 0.5 * (img[1:-1, 2:] - img[1:-1, :-2])
            gy = 0.5 * (img[2:, 1:-1] - img[:-2, 1:-1])
            grad_energy = float(np.mean(gx * gx + gy * gy))
            total = img.sum()
            if total > 0:
                ys = np.linspace(0.0, 1.0, img.shape[0])
                xs = np.linspace(0.0, 1.0, img.shape[1])
                cy = float((img.sum(axis=1) * ys).sum() / total)
                cx = float((img.sum(axis=0) * xs).sum() / total)
                centroid = 0.5 * (cx + cy)
            else:
                centroid = 0.5
            rows[k] = (float(img.mean()), float(img.std()), grad_energy, centroid)
        return rows


class FilterBankExtractor:
    """Desk default: 4x4 block means + 8 gradient-orientation energies +
    8 intensity-histogram bins on an area-resized 64x64 view (D=32)."""

    GRID = 4
    N_ORIENT = 8
    N_HIST = 8

    def __init__(self, resize_side: int = 64):
        self.resize_side = resize_side
        self.dim = self.GRID * self.GRID + self.N_ORIENT + self.N_HIST
        self.info = ExtractorInfo(name="desk-filterbank", version="1", dim=self.dim,
                                  resize_side=resize_side, channel_rule="grayscale",
                                  normalization="[0,1]")

    def __call__(self, images: Sequence[np.ndarray]) -> np.ndarray:
        rows = np.empty((len(images), self.dim), dtype=np.float64)
        for k, img in enumerate(images):
            img = np.ascontiguousarray(img, dtype=np.float64)
            if img.shape != (self.resize_side, self.resize_side):
                img = _kernels.box_resize(img, self.resize_side)
            rows[k] = _kernels.filterbank_features(img, self.GRID, self.N_ORIENT,
                                                   self.N_HIST)
        return rows


class InceptionExtractor:
    """ImageNet Inception-V3 pool3 features (D=2048), pluggable weights.

    Images are resized to ``resize_side`` and replicated to three channels
    before the network's own input transform. Weights must be available
    locally (``weights_path`` or ANGIODIFF_INCEPTION_WEIGHTS); without
    them this raises and callers should fall back to FilterBankExtractor.
    """

    dim = 2048

    def __init__(self, weights_path=None, resize_side: int = 256):
        import torch

        weights_path = weights_path or os.environ.get("ANGIODIFF_INCEPTION_WEIGHTS")
        if not weights_path or not Path(weights_path).exists():
            raise FeatureError(
                "Inception-V3 weights not available; pass weights_path or set "
                "ANGIODIFF_INCEPTION_WEIGHTS. Offline runs should use the "
                "'desk-filterbank' extractor instead.")
        try:
            from torchvision.models import inception_v3
        except ImportError as exc:
            raise FeatureError(
                "torchvision is required for the Inception extractor; "
                "use the 'desk-filterbank' extractor instead.") from exc
        self._torch = torch
        net = inception_v3(weights=None, aux_logits=True, init_weights=False)
        state = torch.load(weights_path, map_location="cpu")
        net.load_state_dict(state)
        net.fc = torch.nn.Identity()
        net.eval()
        self._net = net
        self.resize_side = resize_side
        self.info = ExtractorInfo(name="inception-v3-pool3", version="torchvision",
                                  dim=self.dim, resize_side=resize_side,
                                  channel_rule="replicate-3", normalization="[-1,1]")

    def __call__(self, images: Sequence[np.ndarray]) -> np.ndarray:
        torch = self._torch
        rows = []
        with torch.no_grad():
            for img in images:
                x = torch.from_numpy(np.asarray(img, dtype=np.float32))[None, None]
                x = torch.nn.functional.interpolate(
                    x, size=(self.resize_side, self.resize_side), mode="bilinear",
                    align_corners=False)
                x = torch.nn.functional.interpolate(
                    x, size=(299, 299), mode="bilinear", align_corners=False)
                x = x.repeat(1, 3, 1, 1) * 2.0 - 1.0
                rows.append(self._net(x).numpy()[0])
        return np.asarray(rows, dtype=np.float64)


_REGISTRY = {
    "toy-moments": MomentExtractor,
    "desk-filterbank": FilterBankExtractor,
    "inception-v3": InceptionExtractor,
}


def get_extractor(name: str = "desk-filterbank", **kwargs):
    if name not in _REGISTRY:
        raise FeatureError(f"unknown extractor {name!r}; choose from {sorted(_REGISTRY)}")
    return _REGISTRY[name](**kwargs)


def extract_features(images: Iterable, extractor) -> np.ndarray:
    """Row k of the result embeds image k; paths are loaded, arrays used as-is."""
    arrays = []
    for img in images:
        if isinstance(img, (str, os.PathLike)):
            arrays.append(load_grayscale(img))
        else:
            arrays.append(np.asarray(img, dtype=np.float64))
    if not arrays:
        return np.empty((0, extractor.dim), dtype=np.float64)
    return extractor(arrays)
