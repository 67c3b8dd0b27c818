"""Linear noise schedule tables for the latent diffusion process.

Timesteps are 1-based throughout: ``t`` ranges over ``1..T`` and
``alpha_bar[t-1]`` holds the cumulative product up to step ``t``.
Tables are float64 so the sampling algebra stays exact to ~1e-12.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PAPER_T = 1000
PAPER_BETA_START = 0.0015
PAPER_BETA_END = 0.0195


class ScheduleError(ValueError):
    """Invalid noise-schedule parameters."""


@dataclass(frozen=True)
class NoiseSchedule:
    """Beta/alpha/alpha-bar tables of length T."""

    T: int
    beta: np.ndarray
    alpha: np.ndarray = field(repr=False)
    alpha_bar: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.T < 1:
            raise ScheduleError(f"T must be >= 1, got {self.T}")
        for name in ("beta", "alpha", "alpha_bar"):
            arr = getattr(self, name)
            if arr.shape != (self.T,):
                raise ScheduleError(f"{name} must have shape ({self.T},), got {arr.shape}")
        if not (np.all(self.beta > 0.0) and np.all(self.beta < 1.0)):
            raise ScheduleError("betas must lie strictly inside (0, 1)")

    def check_t(self, t: int) -> int:
        if not 1 <= t <= self.T:
            raise ScheduleError(f"t must be in [1, {self.T}], got {t}")
        return int(t)

    # Scalar lookups used by the sampling algebra; plain Python floats so the
    # same schedule drives numpy arrays and torch tensors alike.
    def beta_at(self, t: int) -> float:
        return float(self.beta[self.check_t(t) - 1])

    def alpha_at(self, t: int) -> float:
        return float(self.alpha[self.check_t(t) - 1])

    def alpha_bar_at(self, t: int) -> float:
        return float(self.alpha_bar[self.check_t(t) - 1])


def build_schedule(T: int = PAPER_T, beta_start: float = PAPER_BETA_START,
                   beta_end: float = PAPER_BETA_END) -> NoiseSchedule:
    """Linearly spaced betas from ``beta_start`` to ``beta_end`` over T steps."""
    if T < 1:
        raise ScheduleError(f"T must be >= 1, got {T}")
    if not np.isfinite(beta_start) or not np.isfinite(beta_end):
        raise ScheduleError("betas must be finite")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ScheduleError(
            f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})")
    beta = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    return schedule_from_betas(beta)


def schedule_from_betas(beta: np.ndarray) -> NoiseSchedule:
    """Build the alpha/alpha-bar tables for an explicit beta vector."""
    beta = np.ascontiguousarray(beta, dtype=np.float64)
    if beta.ndim != 1 or beta.size < 1:
        raise ScheduleError("beta must be a non-empty 1-D vector")
    if not np.all(np.isfinite(beta)):
        raise ScheduleError("betas must be finite")
    if not (np.all(beta > 0.0) and np.all(beta < 1.0)):
        raise ScheduleError("betas must lie strictly inside (0, 1)")
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    return NoiseSchedule(T=int(beta.size), beta=beta, alpha=alpha, alpha_bar=alpha_bar)
