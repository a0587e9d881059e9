"""Scheduled attention style injection on a toy latent diffusion model."""

__version__ = "0.1.0"
