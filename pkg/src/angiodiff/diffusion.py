"""Forward corruption, denoiser objective, and iterative reverse sampling in latent space.

``forward_diffuse``/``reverse_step`` are array-agnostic (numpy or torch):
schedule coefficients enter as Python floats, so the exact float64 algebra
used in tests is the same code path the float32 training loop runs.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
import torch

from .schedule import NoiseSchedule, ScheduleError
from .seeds import derive_seed, rng_for


class DiffusionError(ValueError):
    """Invalid diffusion inputs (shape, timestep, or conditioning mismatch)."""


def forward_diffuse(z0, t: int, epsilon, schedule: NoiseSchedule):
    """Corrupt z0 to step t: ``z_t = sqrt(ab_t) * z0 + sqrt(1 - ab_t) * eps``."""
    schedule.check_t(t)
    if getattr(epsilon, "shape", None) != z0.shape:
        raise DiffusionError(
            f"epsilon shape {getattr(epsilon, 'shape', None)} != z0 shape {z0.shape}")
    ab = schedule.alpha_bar_at(t)
    return math.sqrt(ab) * z0 + math.sqrt(1.0 - ab) * epsilon


def reverse_step(z_t, t: int, predicted_epsilon, schedule: NoiseSchedule,
                 eta=None, variance: str = "beta"):
    """One DDPM reverse update from z_t to z_{t-1}.

    ``z_{t-1} = (z_t - (1-a_t)/sqrt(1-ab_t) * eps_theta) / sqrt(a_t) + sigma_t * eta``

    ``variance`` selects sigma_t^2: ``"beta"`` uses beta_t (with sigma_1
    forced to 0 so the final step is deterministic), ``"posterior"`` uses
    beta_t * (1 - ab_{t-1}) / (1 - ab_t).
    """
    schedule.check_t(t)
    if getattr(predicted_epsilon, "shape", None) != z_t.shape:
        raise DiffusionError(
            f"predicted epsilon shape {getattr(predicted_epsilon, 'shape', None)} "
            f"!= z_t shape {z_t.shape}")
    a = schedule.alpha_at(t)
    ab = schedule.alpha_bar_at(t)
    mean = (z_t - ((1.0 - a) / math.sqrt(1.0 - ab)) * predicted_epsilon) / math.sqrt(a)
    sigma = reverse_sigma(t, schedule, variance)
    if eta is None or sigma == 0.0:
        return mean
    if getattr(eta, "shape", None) != z_t.shape:
        raise DiffusionError(f"eta shape {getattr(eta, 'shape', None)} != z_t shape {z_t.shape}")
    return mean + sigma * eta


def reverse_sigma(t: int, schedule: NoiseSchedule, variance: str = "beta") -> float:
    """Noise scale sigma_t for the reverse update (0 at the final step)."""
    schedule.check_t(t)
    if variance == "beta":
        return 0.0 if t == 1 else math.sqrt(schedule.beta_at(t))
    if variance == "posterior":
        ab_prev = 1.0 if t == 1 else schedule.alpha_bar_at(t - 1)
        ab = schedule.alpha_bar_at(t)
        return math.sqrt(schedule.beta_at(t) * (1.0 - ab_prev) / (1.0 - ab))
    raise DiffusionError(f"unknown variance choice {variance!r}")


def _gather_alpha_bar(schedule: NoiseSchedule, t: torch.Tensor, ndim: int,
                      dtype: torch.dtype) -> torch.Tensor:
    ab = torch.from_numpy(schedule.alpha_bar).to(dtype)[t - 1]
    return ab.reshape(-1, *([1] * (ndim - 1)))


def ddpm_loss(denoiser, z0: torch.Tensor, schedule: NoiseSchedule,
              context: Optional[torch.Tensor] = None,
              generator: Optional[torch.Generator] = None,
              t: Optional[torch.Tensor] = None,
              eps: Optional[torch.Tensor] = None) -> torch.Tensor:
    """Simplified noise-prediction objective: MSE between eps and eps_theta(z_t, t[, c]).

    t is sampled uniformly in {1..T} and eps ~ N(0, I) per sample unless
    passed explicitly (explicit values make the loss deterministic for
    gradient checks). The mean runs over batch and all elements.
    """
    if z0.ndim < 2:
        raise DiffusionError("z0 must be a batch (B, ...)")
    B = z0.shape[0]
    if t is None:
        t = torch.randint(1, schedule.T + 1, (B,), generator=generator, device=z0.device)
    else:
        t = torch.as_tensor(t, dtype=torch.long, device=z0.device)
        if t.shape != (B,):
            raise DiffusionError(f"t must have shape ({B},), got {tuple(t.shape)}")
        if bool((t < 1).any()) or bool((t > schedule.T).any()):
            raise ScheduleError(f"t must be in [1, {schedule.T}]")
    if eps is None:
        eps = torch.empty_like(z0).normal_(generator=generator)
    elif eps.shape != z0.shape:
        raise DiffusionError(f"eps shape {tuple(eps.shape)} != z0 shape {tuple(z0.shape)}")
    ab = _gather_alpha_bar(schedule, t, z0.ndim, z0.dtype)
    z_t = torch.sqrt(ab) * z0 + torch.sqrt(1.0 - ab) * eps
    pred = denoiser(z_t, t, context) if context is not None else denoiser(z_t, t)
    return torch.mean((eps - pred) ** 2)


def _check_conditioning(denoiser, context) -> None:
    context_dim = getattr(denoiser, "context_dim", None)
    if context is None and context_dim is not None:
        raise DiffusionError("conditional denoiser requires a conditioning embedding")
    if context is not None:
        if context_dim is None:
            raise DiffusionError("unconditional denoiser was given a conditioning embedding")
        if context.shape[-1] != context_dim:
            raise DiffusionError(
                f"conditioning dim {context.shape[-1]} != denoiser context_dim {context_dim}")


@torch.no_grad()
def sample(denoiser, schedule: NoiseSchedule, n: int, shape: Sequence[int],
           context: Optional[torch.Tensor] = None, seed: int = 0,
           seeds: Optional[Sequence[int]] = None, variance: str = "beta",
           dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Draw n latents by running the full T-step reverse loop from z_T ~ N(0, I).

    Noise comes from per-sample numpy streams, so any single output is
    reproducible in isolation: pass ``seeds`` to pin the stream of each
    sample, otherwise stream i derives from ``(seed, "sample", i)``.
    """
    _check_conditioning(denoiser, context)
    if n < 1:
        raise DiffusionError(f"n must be >= 1, got {n}")
    if context is not None and context.shape[0] not in (1, n):
        raise DiffusionError(f"context batch {context.shape[0]} incompatible with n={n}")
    if seeds is None:
        seeds = [derive_seed(seed, "sample", i) for i in range(n)]
    elif len(seeds) != n:
        raise DiffusionError(f"need {n} per-sample seeds, got {len(seeds)}")
    rngs = [np.random.default_rng(s) for s in seeds]
    shape = tuple(shape)

    z = torch.from_numpy(
        np.stack([rng.standard_normal(shape) for rng in rngs])).to(dtype)
    ctx = None
    if context is not None:
        ctx = context.to(dtype)
        if ctx.shape[0] == 1 and n > 1:
            ctx = ctx.expand(n, *ctx.shape[1:])
    for t in range(schedule.T, 0, -1):
        t_batch = torch.full((n,), t, dtype=torch.long)
        pred = denoiser(z, t_batch, ctx) if ctx is not None else denoiser(z, t_batch)
        sigma = reverse_sigma(t, schedule, variance)
        eta = None
        if sigma > 0.0:
            eta = torch.from_numpy(
                np.stack([rng.standard_normal(shape) for rng in rngs])).to(dtype)
        z = reverse_step(z, t, pred, schedule, eta=eta, variance=variance)
    return z


def make_rng(seed: int, *labels) -> np.random.Generator:
    """Re-export of the labeled stream helper for callers that sample noise directly."""
    return rng_for(seed, *labels)
