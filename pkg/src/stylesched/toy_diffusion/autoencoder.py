"""Fixed seeded linear image autoencoder (stand-in for a learned VAE).

Encoding folds each 2x2 RGB pixel block into a 12-vector and projects it
onto ``latent_channels`` orthonormal directions; decoding applies the
transpose.  The first direction is pinned to the achromatic DC component so
flat images survive the round trip exactly.  Reconstruction of arbitrary
images is lossy by design; nothing downstream depends on perceptual
decoding quality.
"""

from __future__ import annotations

import numpy as np
import torch

DEFAULT_AUTOENCODER_SEED = 0
BLOCK = 2


class LinearAutoencoder:
    def __init__(self, seed: int = DEFAULT_AUTOENCODER_SEED, image_size: int = 64,
                 latent_channels: int = 4):
        d = 3 * BLOCK * BLOCK
        if latent_channels > d:
            raise ValueError(f"latent_channels must be <= {d}")
        if image_size % BLOCK != 0:
            raise ValueError(f"image_size must be divisible by {BLOCK}")
        self.seed = seed
        self.image_size = image_size
        self.latent_channels = latent_channels
        self.latent_size = image_size // BLOCK
        gen = torch.Generator().manual_seed(seed)
        raw = torch.randn(d, latent_channels, generator=gen, dtype=torch.float64)
        raw[:, 0] = 1.0 / np.sqrt(d)
        q, _ = torch.linalg.qr(raw)
        if q[0, 0] < 0:
            q = -q
        self.basis = q.to(torch.float32)  # (d, latent_channels), orthonormal columns

    def encode(self, image: np.ndarray) -> torch.Tensor:
        if image.shape != (self.image_size, self.image_size, 3):
            raise ValueError(
                f"expected ({self.image_size}, {self.image_size}, 3) image, got {image.shape}")
        x = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float32))
        x = (x - 0.5) * 2.0
        h = w = self.latent_size
        blocks = x.reshape(h, BLOCK, w, BLOCK, 3).permute(0, 2, 4, 1, 3).reshape(h, w, -1)
        latent = torch.einsum("hwd,dc->chw", blocks, self.basis)
        return latent.contiguous()

    def decode(self, latent: torch.Tensor) -> np.ndarray:
        expected = (self.latent_channels, self.latent_size, self.latent_size)
        if tuple(latent.shape) != expected:
            raise ValueError(f"expected latent shape {expected}, got {tuple(latent.shape)}")
        blocks = torch.einsum("chw,dc->hwd", latent.float(), self.basis)
        h = w = self.latent_size
        x = blocks.reshape(h, w, 3, BLOCK, BLOCK).permute(0, 3, 1, 4, 2)
        x = x.reshape(self.image_size, self.image_size, 3)
        img = torch.clamp(x / 2.0 + 0.5, 0.0, 1.0)
        return img.numpy().astype(np.float32)
