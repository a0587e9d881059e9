import numpy as np
import pytest

from stylesched.procgen import make_content_image, make_style_image
from stylesched.toy_diffusion import (DenoiserConfig, LinearAutoencoder,
                                      build_denoiser)

TINY = DenoiserConfig(latent_size=8, base_channels=8)
SMALL = DenoiserConfig(latent_size=16, base_channels=8)


@pytest.fixture(scope="session")
def tiny_weights():
    """Seeded-random denoiser on 8x8 latents (16x16 images)."""
    return build_denoiser(7, model_cfg=TINY)


@pytest.fixture(scope="session")
def small_weights():
    """Seeded-random denoiser on 16x16 latents (32x32 images)."""
    return build_denoiser(7, model_cfg=SMALL)


@pytest.fixture(scope="session")
def tiny_autoencoder():
    return LinearAutoencoder(image_size=16)


@pytest.fixture(scope="session")
def small_autoencoder():
    return LinearAutoencoder(image_size=32)


@pytest.fixture(scope="session")
def tiny_images():
    return make_content_image(11, 16), make_style_image(12, 16)


@pytest.fixture(scope="session")
def small_images():
    return make_content_image(11, 32), make_style_image(12, 32)
