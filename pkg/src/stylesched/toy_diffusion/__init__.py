from .autoencoder import DEFAULT_AUTOENCODER_SEED, LinearAutoencoder
from .diffusion import (FeatureBank, LatentTrajectory, NoiseSchedule, QKV,
                        QKVCapture, adain_init, ddim_invert, ddim_sample)
from .unet import (DECODER_LAYER_LABELS, MODE_SEEDED_RANDOM, MODE_TOY_TRAINED,
                   DenoiserConfig, DenoiserWeights, ToyUNet, TrainConfig,
                   build_denoiser)

__all__ = [
    "DEFAULT_AUTOENCODER_SEED", "LinearAutoencoder", "FeatureBank",
    "LatentTrajectory", "NoiseSchedule", "QKV", "QKVCapture", "adain_init",
    "ddim_invert", "ddim_sample", "DECODER_LAYER_LABELS", "MODE_SEEDED_RANDOM",
    "MODE_TOY_TRAINED", "DenoiserConfig", "DenoiserWeights", "ToyUNet",
    "TrainConfig", "build_denoiser",
]
