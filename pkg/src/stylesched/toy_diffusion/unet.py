"""Toy latent-space U-Net denoiser with six labeled decoder attention blocks.

The decoder's self-attention blocks carry labels 6..11 (two per resolution,
coarse to fine) so layer-axis schedules index them directly.  The model is
small enough to train on a desktop CPU in minutes against procedural
texture images, or to use untrained (seeded-random) for identity and
determinism tests.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..procgen import make_texture_dataset
from ..style_injection import injected_attention
from .autoencoder import LinearAutoencoder
from .diffusion import NoiseSchedule

DECODER_LAYER_LABELS = (6, 7, 8, 9, 10, 11)

MODE_SEEDED_RANDOM = "seeded-random"
MODE_TOY_TRAINED = "toy-trained"

AttnHook = Callable[[int, torch.Tensor, torch.Tensor, torch.Tensor], Optional[torch.Tensor]]
CondHook = Callable[[int], Optional[torch.Tensor]]


def _groups(channels: int) -> int:
    for g in (8, 4, 2, 1):
        if channels % g == 0:
            return g
    return 1


@dataclass(frozen=True)
class DenoiserConfig:
    latent_channels: int = 4
    latent_size: int = 32
    base_channels: int = 16
    time_dim: int = 48

    def __post_init__(self):
        if self.latent_size % 4 != 0:
            raise ValueError("latent_size must be divisible by 4 (two downsamples)")

    def decoder_layer_shapes(self) -> dict[int, tuple[int, int]]:
        """Map decoder layer label -> (channels, spatial resolution)."""
        c, s = self.base_channels, self.latent_size
        return {6: (4 * c, s // 4), 7: (4 * c, s // 4),
                8: (2 * c, s // 2), 9: (2 * c, s // 2),
                10: (c, s), 11: (c, s)}


def _time_embedding(u: torch.Tensor, dim: int) -> torch.Tensor:
    half = dim // 2
    freqs = torch.exp(torch.arange(half, dtype=torch.float32) * (-math.log(10000.0) / max(half - 1, 1)))
    angles = u[:, None] * 1000.0 * freqs[None, :]
    return torch.cat([torch.sin(angles), torch.cos(angles)], dim=1)


class ConvBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, time_dim: int):
        super().__init__()
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, padding=1)
        self.norm1 = nn.GroupNorm(_groups(out_ch), out_ch)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1)
        self.norm2 = nn.GroupNorm(_groups(out_ch), out_ch)
        self.time_proj = nn.Linear(time_dim, out_ch)
        self.skip = nn.Conv2d(in_ch, out_ch, 1) if in_ch != out_ch else nn.Identity()

    def forward(self, x, temb):
        h = F.silu(self.norm1(self.conv1(x)))
        h = h + self.time_proj(temb)[:, :, None, None]
        h = F.silu(self.norm2(self.conv2(h)))
        return h + self.skip(x)


class AttnBlock(nn.Module):
    """Single-head self-attention over spatial tokens, with a hook point.

    A hook may replace the attention computation for a single-sample batch;
    it receives the raw (q, k, v) token matrices and returns the attention
    output, or None to keep the native computation.  The native path and the
    hook path share one attention function so an identity hook reproduces
    the native result bit-exactly.
    """

    def __init__(self, channels: int, label: int):
        super().__init__()
        self.label = label
        self.norm = nn.GroupNorm(_groups(channels), channels)
        self.to_q = nn.Linear(channels, channels, bias=False)
        self.to_k = nn.Linear(channels, channels, bias=False)
        self.to_v = nn.Linear(channels, channels, bias=False)
        self.proj = nn.Linear(channels, channels)

    def forward(self, x, attn_hook: Optional[AttnHook] = None):
        b, c, h, w = x.shape
        tokens = self.norm(x).reshape(b, c, h * w).permute(0, 2, 1)
        q, k, v = self.to_q(tokens), self.to_k(tokens), self.to_v(tokens)
        if b == 1:
            out = None
            if attn_hook is not None:
                out = attn_hook(self.label, q[0], k[0], v[0])
            if out is None:
                out = injected_attention(q[0], k[0], v[0], 1.0)
            out = out.unsqueeze(0)
        else:
            if attn_hook is not None:
                raise ValueError("attention hooks require single-sample batches")
            out = injected_attention(q, k, v, 1.0)
        out = self.proj(out).permute(0, 2, 1).reshape(b, c, h, w)
        return x + out


class DecoderBlock(nn.Module):
    def __init__(self, channels: int, label: int, time_dim: int):
        super().__init__()
        self.label = label
        self.res = ConvBlock(channels, channels, time_dim)
        self.attn = AttnBlock(channels, label)

    def forward(self, x, temb, attn_hook=None, cond_hook: Optional[CondHook] = None):
        x = self.res(x, temb)
        x = self.attn(x, attn_hook)
        if cond_hook is not None:
            residual = cond_hook(self.label)
            if residual is not None:
                x = x + residual.unsqueeze(0)
        return x


class ToyUNet(nn.Module):
    def __init__(self, cfg: DenoiserConfig):
        super().__init__()
        self.cfg = cfg
        c, td = cfg.base_channels, cfg.time_dim
        self.time_mlp = nn.Sequential(nn.Linear(32, td), nn.SiLU(), nn.Linear(td, td))
        self.enc1 = ConvBlock(cfg.latent_channels, c, td)
        self.down1 = nn.Conv2d(c, 2 * c, 3, stride=2, padding=1)
        self.enc2 = ConvBlock(2 * c, 2 * c, td)
        self.down2 = nn.Conv2d(2 * c, 4 * c, 3, stride=2, padding=1)
        self.mid = ConvBlock(4 * c, 4 * c, td)
        self.dec6 = DecoderBlock(4 * c, 6, td)
        self.dec7 = DecoderBlock(4 * c, 7, td)
        self.up1 = nn.ConvTranspose2d(4 * c, 2 * c, 2, stride=2)
        self.fuse1 = ConvBlock(4 * c, 2 * c, td)
        self.dec8 = DecoderBlock(2 * c, 8, td)
        self.dec9 = DecoderBlock(2 * c, 9, td)
        self.up2 = nn.ConvTranspose2d(2 * c, c, 2, stride=2)
        self.fuse2 = ConvBlock(2 * c, c, td)
        self.dec10 = DecoderBlock(c, 10, td)
        self.dec11 = DecoderBlock(c, 11, td)
        self.head_norm = nn.GroupNorm(_groups(c), c)
        self.head = nn.Conv2d(c, cfg.latent_channels, 3, padding=1)

    def forward(self, x, u, attn_hook=None, cond_hook=None):
        if isinstance(u, float):
            u = torch.full((x.shape[0],), u, dtype=torch.float32)
        temb = self.time_mlp(_time_embedding(u, 32))
        e1 = self.enc1(x, temb)
        e2 = self.enc2(self.down1(e1), temb)
        h = self.mid(self.down2(e2), temb)
        h = self.dec6(h, temb, attn_hook, cond_hook)
        h = self.dec7(h, temb, attn_hook, cond_hook)
        h = self.fuse1(torch.cat([self.up1(h), e2], dim=1), temb)
        h = self.dec8(h, temb, attn_hook, cond_hook)
        h = self.dec9(h, temb, attn_hook, cond_hook)
        h = self.fuse2(torch.cat([self.up2(h), e1], dim=1), temb)
        h = self.dec10(h, temb, attn_hook, cond_hook)
        h = self.dec11(h, temb, attn_hook, cond_hook)
        return self.head(F.silu(self.head_norm(h)))


def _seeded_init(model: nn.Module, seed: int) -> None:
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for name, p in sorted(model.named_parameters(), key=lambda kv: kv[0]):
            if "norm" in name and name.endswith("weight"):
                p.fill_(1.0)
            elif p.dim() >= 2:
                fan_in = p.shape[1] * (p.shape[2] * p.shape[3] if p.dim() == 4 else 1)
                p.copy_(torch.randn(p.shape, generator=gen) * (1.0 / math.sqrt(fan_in)))
            else:
                p.zero_()


@dataclass
class TrainConfig:
    steps: int = 400
    batch_size: int = 8
    lr: float = 2e-3
    n_images: int = 64
    dataset_seed: int = 1
    n_levels: int = 50
    autoencoder_seed: int = 0

    def __post_init__(self):
        if self.steps < 1 or self.batch_size < 1 or self.n_images < 1:
            raise ValueError("training config requires positive steps, batch size and image count")
        if self.lr <= 0:
            raise ValueError("training config requires a positive learning rate")


@dataclass
class DenoiserWeights:
    """Immutable-by-convention bundle of the toy denoiser and its provenance."""

    model: ToyUNet
    config: DenoiserConfig
    seed: int
    mode: str
    train_losses: tuple[float, ...] = field(default_factory=tuple)

    def checksum(self) -> str:
        digest = hashlib.sha256()
        for name, p in sorted(self.model.named_parameters(), key=lambda kv: kv[0]):
            digest.update(name.encode())
            digest.update(p.detach().numpy().astype("<f4").tobytes())
        return digest.hexdigest()

    def save(self, path) -> None:
        torch.save({"config": vars(self.config), "seed": self.seed, "mode": self.mode,
                    "train_losses": self.train_losses,
                    "state_dict": self.model.state_dict()}, path)

    @classmethod
    def load(cls, path) -> "DenoiserWeights":
        blob = torch.load(path, map_location="cpu", weights_only=False)
        cfg = DenoiserConfig(**blob["config"])
        model = ToyUNet(cfg)
        model.load_state_dict(blob["state_dict"])
        model.eval()
        model.requires_grad_(False)
        return cls(model, cfg, blob["seed"], blob["mode"], tuple(blob["train_losses"]))


def build_denoiser(seed: int, mode: str = MODE_SEEDED_RANDOM,
                   train_cfg: TrainConfig | None = None,
                   model_cfg: DenoiserConfig | None = None) -> DenoiserWeights:
    """Deterministic denoiser weights for a (seed, mode) pair.

    ``seeded-random`` is instant and used by identity/determinism tests;
    ``toy-trained`` runs epsilon-prediction regression on procedural images
    so stylization output is qualitatively meaningful.
    """
    if mode not in (MODE_SEEDED_RANDOM, MODE_TOY_TRAINED):
        raise ValueError(f"unknown denoiser mode {mode!r}")
    cfg = model_cfg or DenoiserConfig()
    model = ToyUNet(cfg)
    _seeded_init(model, seed)
    if mode == MODE_SEEDED_RANDOM:
        model.eval()
        model.requires_grad_(False)
        return DenoiserWeights(model, cfg, seed, mode)
    tc = train_cfg or TrainConfig()
    losses = _train(model, cfg, seed, tc)
    model.eval()
    model.requires_grad_(False)
    return DenoiserWeights(model, cfg, seed, mode, tuple(losses))


def _train(model: ToyUNet, cfg: DenoiserConfig, seed: int, tc: TrainConfig) -> list[float]:
    autoenc = LinearAutoencoder(tc.autoencoder_seed, image_size=cfg.latent_size * 2,
                                latent_channels=cfg.latent_channels)
    images = make_texture_dataset(tc.dataset_seed, tc.n_images, size=cfg.latent_size * 2)
    latents = torch.stack([autoenc.encode(img) for img in images])
    ns = NoiseSchedule.cosine(tc.n_levels)
    alphas = torch.tensor(ns.alphas_bar, dtype=torch.float32)
    us = torch.tensor(ns.us, dtype=torch.float32)
    gen = torch.Generator().manual_seed(seed * 7919 + 13)
    opt = torch.optim.Adam(model.parameters(), lr=tc.lr)
    model.train()
    losses = []
    for _ in range(tc.steps):
        idx = torch.randint(0, latents.shape[0], (tc.batch_size,), generator=gen)
        lvl = torch.randint(0, tc.n_levels, (tc.batch_size,), generator=gen)
        noise = torch.randn(tc.batch_size, *latents.shape[1:], generator=gen)
        ab = alphas[lvl][:, None, None, None]
        x_t = torch.sqrt(ab) * latents[idx] + torch.sqrt(1.0 - ab) * noise
        pred = model(x_t, us[lvl])
        loss = F.mse_loss(pred, noise)
        opt.zero_grad()
        loss.backward()
        opt.step()
        losses.append(float(loss.item()))
    return losses
