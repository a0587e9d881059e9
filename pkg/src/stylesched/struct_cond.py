"""Toy structural-conditioning branch (the geometric-conditioning analogue).

A structure map extracted from the content image is encoded, per decoder
layer, by a fixed seeded bias-free convolution into an additive residual at
that layer's feature resolution.  Bias-free keeps the branch exactly
linear, so a zero map or a zero conditioning scale is an exact no-op.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import torch
import torch.nn.functional as F

from .schedule import (AXIS_LAYER, AXIS_TIMESTEP, LAYER_LABELS, Schedule,
                       WarpShape, layer_index, make_schedule, schedule_lookup)
from .style_injection import DIRECTIONS

KIND_EDGE = "edge"
KIND_DEPTH = "depth-proxy"
KINDS = (KIND_EDGE, KIND_DEPTH)
SCALE_AXES = ("none", AXIS_LAYER, AXIS_TIMESTEP)

_SOBEL_X = torch.tensor([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
_SOBEL_Y = _SOBEL_X.T.contiguous()


@dataclass(frozen=True)
class StructureMap:
    """Single-channel map at latent resolution, normalized to [0, 1]."""

    data: torch.Tensor
    kind: str

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ValueError(f"structure map must be rank-2, got shape {tuple(self.data.shape)}")
        if not torch.isfinite(self.data).all():
            raise ValueError("structure map contains non-finite values")


@dataclass(frozen=True)
class CondConfig:
    enabled: bool = False
    scale_base: float = 0.25
    scale_axis: str = "none"
    scale_direction: str = "decreasing"
    scale_shape: WarpShape = WarpShape.LINEAR
    kind: str = KIND_DEPTH
    active_layers: frozenset[int] = field(default_factory=lambda: frozenset(LAYER_LABELS))

    def __post_init__(self):
        if self.scale_base < 0.0:
            raise ValueError(f"scale_base must be non-negative, got {self.scale_base}")
        if self.scale_axis not in SCALE_AXES:
            raise ValueError(f"scale_axis must be one of {SCALE_AXES}, got {self.scale_axis!r}")
        if self.scale_direction not in DIRECTIONS:
            raise ValueError(
                f"scale_direction must be one of {DIRECTIONS}, got {self.scale_direction!r}")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.active_layers <= set(LAYER_LABELS):
            raise ValueError(f"active_layers must be a subset of {LAYER_LABELS}")


def _luminance(image: np.ndarray) -> torch.Tensor:
    x = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float32))
    return 0.2989 * x[..., 0] + 0.5870 * x[..., 1] + 0.1140 * x[..., 2]


def _conv_replicate(x: torch.Tensor, kernel: torch.Tensor) -> torch.Tensor:
    pad = kernel.shape[-1] // 2
    padded = F.pad(x[None, None], (pad, pad, pad, pad), mode="replicate")
    return F.conv2d(padded, kernel[None, None])[0, 0]


def _max_normalize(x: torch.Tensor) -> torch.Tensor:
    peak = float(x.max())
    return x / peak if peak > 0.0 else torch.zeros_like(x)


def extract_structure(image: np.ndarray, kind: str = KIND_EDGE,
                      latent_size: int | None = None) -> StructureMap:
    """Structure map from a content image, at latent resolution.

    ``edge``: Sobel gradient magnitude, pooled down, max-normalized.
    ``depth-proxy``: Gaussian-blurred luminance, pooled down, max-normalized.
    """
    if image.ndim != 3 or image.shape[2] != 3 or image.shape[0] != image.shape[1]:
        raise ValueError(f"expected square (H, H, 3) image, got shape {image.shape}")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    size = image.shape[0]
    target = latent_size if latent_size is not None else size // 2
    if size % target != 0:
        raise ValueError(f"image size {size} is not a multiple of latent size {target}")
    lum = _luminance(image)
    if kind == KIND_EDGE:
        gx = _conv_replicate(lum, _SOBEL_X)
        gy = _conv_replicate(lum, _SOBEL_Y)
        feat = torch.sqrt(gx * gx + gy * gy)
    else:
        radius = 4
        coords = torch.arange(-radius, radius + 1, dtype=torch.float32)
        g = torch.exp(-(coords**2) / (2.0 * 2.0**2))
        kernel = (g[:, None] * g[None, :]) / (g.sum() ** 2)
        feat = _conv_replicate(lum, kernel)
    pooled = F.avg_pool2d(feat[None, None], size // target)[0, 0]
    return StructureMap(_max_normalize(pooled), kind)


class CondWeights:
    """Seeded bias-free conv encoders, one per decoder layer."""

    def __init__(self, seed: int, layer_shapes: dict[int, tuple[int, int]]):
        self.seed = seed
        self.layer_shapes = dict(layer_shapes)
        gen = torch.Generator().manual_seed(seed)
        self.kernels = {}
        for label in sorted(layer_shapes):
            ch, _ = layer_shapes[label]
            self.kernels[label] = torch.randn(ch, 1, 3, 3, generator=gen) * (0.5 / 3.0)


def conditioning_residual(smap: StructureMap, layer: int, w: CondWeights) -> torch.Tensor:
    """Encode the structure map to the layer's feature shape.  Linear and
    bias-free: a zero map yields a zero residual and scaling commutes."""
    if layer not in w.layer_shapes:
        raise ValueError(f"unknown decoder layer {layer}")
    _, res = w.layer_shapes[layer]
    x = smap.data[None, None]
    h = x.shape[-1]
    if h % res != 0:
        raise ValueError(f"structure map size {h} is not a multiple of layer resolution {res}")
    if h != res:
        x = F.avg_pool2d(x, h // res)
    with torch.no_grad():
        out = F.conv2d(x, w.kernels[layer], padding=1)
    return out[0]


def scaled_residual(residual: torch.Tensor, scale: float) -> torch.Tensor:
    return scale * residual


def build_scale_schedule(cfg: CondConfig, n_steps: int) -> Optional[Schedule]:
    """Conditioning-scale schedule; decreasing spans (base, base / 2)."""
    if cfg.scale_axis == "none":
        return None
    lo = cfg.scale_base / 2.0
    start, end = ((cfg.scale_base, lo) if cfg.scale_direction == "decreasing"
                  else (lo, cfg.scale_base))
    n = len(LAYER_LABELS) if cfg.scale_axis == AXIS_LAYER else n_steps
    return make_schedule(start, end, n, cfg.scale_shape, cfg.scale_axis)


def resolve_scale(cfg: CondConfig, schedule: Optional[Schedule], t: int, layer: int) -> float:
    if cfg.scale_axis == "none":
        return cfg.scale_base
    if schedule is None:
        raise ValueError(f"scale_axis={cfg.scale_axis!r} requires a schedule")
    if cfg.scale_axis == AXIS_LAYER:
        return schedule_lookup(schedule, layer_index(layer))
    return schedule_lookup(schedule, t)


def conditioning_hook(cfg: CondConfig, weights: CondWeights, smap: StructureMap,
                      scale_schedule: Optional[Schedule] = None):
    """Per-(timestep, layer) residual callback for the sampler.

    Residuals only depend on the layer, so they are encoded once and reused
    across timesteps.  A resolved scale of zero skips the addition entirely,
    keeping scale-zero runs bit-identical to conditioning-off runs.
    """
    if not cfg.enabled:
        raise ValueError("conditioning_hook requires an enabled CondConfig")
    cache: dict[int, torch.Tensor] = {}

    def hook(t: int, layer: int):
        if layer not in cfg.active_layers:
            return None
        s = resolve_scale(cfg, scale_schedule, t, layer)
        if s == 0.0:
            return None
        if layer not in cache:
            cache[layer] = conditioning_residual(smap, layer, weights)
        return scaled_residual(cache[layer], s)

    return hook
