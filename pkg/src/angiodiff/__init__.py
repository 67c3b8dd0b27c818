"""Conditional latent diffusion for arterial-phase angiography synthesis.

Desk-scale pipeline: phantom corpus generation, arterial-phase frame
classification, VAE + latent diffusion training, stratified conditional
sampling, Frechet-distance evaluation, and a blinded multi-reader study
with ICC reliability analysis.
"""

__version__ = "0.1.0"
