"""Frechet distance between Gaussian summaries of feature embeddings.

``d^2 = ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2})``

The trace of the matrix square root is computed from the eigenvalues of the
symmetrized product ``S_a^{1/2} S_b S_a^{1/2}`` (same spectrum as S_a S_b,
but symmetric PSD), which stays numerically robust for near-singular
covariances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .seeds import rng_for

SYMMETRY_TOL = 1e-8
EIG_CLAMP = -1e-10
NEGATIVE_FLOOR = -1e-6
SHRINKAGE = 1e-6


class FidError(ValueError):
    """Invalid Frechet-distance inputs."""


class ConditioningError(FidError):
    """Covariance is non-PSD beyond tolerance."""


@dataclass(frozen=True)
class GaussianSummary:
    """Mean vector, covariance matrix, and sample count of a feature set."""

    mu: np.ndarray
    sigma: np.ndarray
    n: int
    shrunk: bool = False

    def __post_init__(self):
        if self.mu.ndim != 1:
            raise FidError(f"mu must be a vector, got shape {self.mu.shape}")
        d = self.mu.shape[0]
        if self.sigma.shape != (d, d):
            raise FidError(f"sigma must be ({d}, {d}), got {self.sigma.shape}")
        if self.n < 2:
            raise FidError(f"need n >= 2 samples, got {self.n}")
        asym = np.max(np.abs(self.sigma - self.sigma.T)) if d else 0.0
        if asym > SYMMETRY_TOL:
            raise FidError(f"sigma asymmetric beyond {SYMMETRY_TOL} (max {asym:.3g})")

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def summarize_features(features: np.ndarray) -> GaussianSummary:
    """Gaussian fit of feature rows; covariance uses the n-1 denominator.

    When n <= D the covariance is rank-deficient, so diagonal shrinkage
    ``sigma + 1e-6 I`` is applied and flagged on the summary.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 2:
        raise FidError(f"need a (n >= 2, D) feature matrix, got shape {features.shape}")
    n, d = features.shape
    mu = features.mean(axis=0)
    sigma = np.cov(features, rowvar=False)
    sigma = np.atleast_2d(sigma)
    sigma = 0.5 * (sigma + sigma.T)
    shrunk = n <= d
    if shrunk:
        sigma = sigma + SHRINKAGE * np.eye(d)
    return GaussianSummary(mu=mu, sigma=sigma, n=n, shrunk=shrunk)


def _psd_sqrt(sigma: np.ndarray, what: str) -> np.ndarray:
    w, v = np.linalg.eigh(sigma)
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    if w.min() < EIG_CLAMP * scale * 100 and w.min() < -1e-8 * scale:
        raise ConditioningError(f"{what} covariance is non-PSD (min eig {w.min():.3g})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def frechet_distance(a: GaussianSummary, b: GaussianSummary) -> float:
    """Squared Frechet (Wasserstein-2) distance between two Gaussian fits."""
    if a.dim != b.dim:
        raise FidError(f"dimension mismatch: {a.dim} vs {b.dim}")
    diff = a.mu - b.mu
    a_half = _psd_sqrt(a.sigma, "first")
    m = a_half @ b.sigma @ a_half
    m = 0.5 * (m + m.T)
    w = np.linalg.eigvalsh(m)
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    if w.min() < EIG_CLAMP * scale * 100 and w.min() < -1e-8 * scale:
        raise ConditioningError(f"product matrix is non-PSD (min eig {w.min():.3g})")
    trace_sqrt = float(np.sqrt(np.clip(w, 0.0, None)).sum())
    value = float(diff @ diff + np.trace(a.sigma) + np.trace(b.sigma) - 2.0 * trace_sqrt)
    if value < NEGATIVE_FLOOR:
        raise ConditioningError(f"distance {value:.3g} below the numerical floor")
    return max(value, 0.0)


@dataclass
class FidRow:
    group: str
    value: float
    n_real: int
    n_synth: int
    shrunk: bool


@dataclass
class FidReport:
    extractor_fingerprint: str
    overall: FidRow
    per_condition: list = field(default_factory=list)

    def rows(self) -> list:
        return [self.overall] + list(self.per_condition)

    def to_records(self) -> list:
        return [
            {"group": r.group, "fid": r.value, "n_real": r.n_real,
             "n_synth": r.n_synth, "shrunk": r.shrunk,
             "extractor": self.extractor_fingerprint}
            for r in self.rows()
        ]

    def to_table(self) -> str:
        lines = [f"extractor: {self.extractor_fingerprint}",
                 f"{'group':<12} {'FID':>12} {'n_real':>8} {'n_synth':>8}  flags"]
        for r in self.rows():
            flag = "shrunk-cov" if r.shrunk else ""
            lines.append(f"{r.group:<12} {r.value:>12.4f} {r.n_real:>8d} "
                         f"{r.n_synth:>8d}  {flag}")
        return "\n".join(lines)


def stratified_reference_indices(real_groups: Sequence[str],
                                 synth_groups: Sequence[str],
                                 n_ref: int, seed: int = 0) -> np.ndarray:
    """Pick reference indices whose group mix matches the synthetic mix.

    Per-group quotas are proportional to the synthetic empirical
    distribution (largest-remainder rounding); groups short on real
    samples contribute all they have.
    """
    real_groups = np.asarray(real_groups, dtype=object)
    synth_groups = np.asarray(synth_groups, dtype=object)
    if n_ref > real_groups.size:
        n_ref = real_groups.size
    rng = rng_for(seed, "fid-reference")
    groups, counts = np.unique(synth_groups, return_counts=True)
    fractions = counts / counts.sum()
    quota = np.floor(fractions * n_ref).astype(int)
    remainder = fractions * n_ref - quota
    for k in np.argsort(-remainder)[: n_ref - quota.sum()]:
        quota[k] += 1
    picked = []
    for g, q in zip(groups, quota):
        pool = np.flatnonzero(real_groups == g)
        take = min(q, pool.size)
        if take:
            picked.append(rng.choice(pool, size=take, replace=False))
    if not picked:
        return np.empty(0, dtype=int)
    return np.sort(np.concatenate(picked))


def fid_report(real_features: np.ndarray, synth_features: np.ndarray,
               extractor_info, real_groups: Optional[Sequence[str]] = None,
               synth_groups: Optional[Sequence[str]] = None,
               per_condition: bool = True) -> FidReport:
    """Overall FID plus per-condition FIDs when group labels are supplied."""
    if len(real_features) == 0 or len(synth_features) == 0:
        raise FidError("both feature sets must be non-empty")
    overall = FidRow(
        group="overall",
        value=frechet_distance(summarize_features(real_features),
                               summarize_features(synth_features)),
        n_real=len(real_features), n_synth=len(synth_features),
        shrunk=(len(real_features) <= real_features.shape[1]
                or len(synth_features) <= synth_features.shape[1]))
    report = FidReport(extractor_fingerprint=extractor_info.fingerprint(),
                       overall=overall)
    if per_condition:
        if real_groups is None or synth_groups is None:
            raise FidError("per-condition FID needs group labels for both sets")
        real_groups = np.asarray(real_groups, dtype=object)
        synth_groups = np.asarray(synth_groups, dtype=object)
        if real_groups.size != len(real_features) or synth_groups.size != len(synth_features):
            raise FidError("group labels must align with feature rows")
        for g in sorted(set(map(str, synth_groups))):
            r = real_features[real_groups == g]
            s = synth_features[synth_groups == g]
            if len(r) < 2 or len(s) < 2:
                continue
            sr = summarize_features(r)
            ss = summarize_features(s)
            report.per_condition.append(FidRow(
                group=g, value=frechet_distance(sr, ss), n_real=len(r),
                n_synth=len(s), shrunk=sr.shrunk or ss.shrunk))
    return report
