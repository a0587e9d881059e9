"""Attention-level style injection: KV substitution with query blending.

During stylized sampling the attention of each active decoder layer is
replaced: keys and values come from the style image's feature bank, and the
query is a convex blend of the content bank's query with the query the
stylized pass is currently producing.  The blend weight gamma is either
fixed or resolved per decoder layer / per denoising step from a schedule.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Optional

import torch

from .schedule import (AXIS_LAYER, AXIS_TIMESTEP, LAYER_LABELS, Schedule,
                       WarpShape, layer_index, make_schedule, schedule_lookup)

if TYPE_CHECKING:
    from .toy_diffusion.diffusion import FeatureBank

GAMMA_AXES = ("none", AXIS_LAYER, AXIS_TIMESTEP)
DIRECTIONS = ("decreasing", "increasing")


@dataclass(frozen=True)
class InjectionConfig:
    gamma_base: float = 0.75
    gamma_axis: str = "none"
    gamma_direction: str = "decreasing"
    gamma_shape: WarpShape = WarpShape.LINEAR
    tau: float = 1.5
    active_layers: frozenset[int] = field(default_factory=lambda: frozenset(LAYER_LABELS))

    def __post_init__(self):
        if not 0.0 <= self.gamma_base <= 1.0:
            raise ValueError(f"gamma_base must lie in [0, 1], got {self.gamma_base}")
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.gamma_axis not in GAMMA_AXES:
            raise ValueError(f"gamma_axis must be one of {GAMMA_AXES}, got {self.gamma_axis!r}")
        if self.gamma_direction not in DIRECTIONS:
            raise ValueError(
                f"gamma_direction must be one of {DIRECTIONS}, got {self.gamma_direction!r}")
        if not self.active_layers <= set(LAYER_LABELS):
            raise ValueError(f"active_layers must be a subset of {LAYER_LABELS}")


def blend_query(q_content: torch.Tensor, q_stylized: torch.Tensor, gamma: float) -> torch.Tensor:
    """gamma * q_content + (1 - gamma) * q_stylized.

    The endpoints return the corresponding source query exactly.
    """
    if q_content.shape != q_stylized.shape:
        raise ValueError(
            f"query shape mismatch: {tuple(q_content.shape)} vs {tuple(q_stylized.shape)}")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    if gamma == 1.0:
        return q_content.clone()
    if gamma == 0.0:
        return q_stylized.clone()
    return gamma * q_content + (1.0 - gamma) * q_stylized


def injected_attention(q: torch.Tensor, k: torch.Tensor, v: torch.Tensor,
                       tau: float) -> torch.Tensor:
    """softmax(tau * q k^T / sqrt(d)) v.

    The temperature multiplies the logits after the 1/sqrt(d) scaling; this
    placement is isolated here so it can be flipped in one spot.
    """
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    if q.shape[-1] != k.shape[-1]:
        raise ValueError(f"query dim {q.shape[-1]} does not match key dim {k.shape[-1]}")
    if k.shape[-2] != v.shape[-2]:
        raise ValueError(f"key count {k.shape[-2]} does not match value count {v.shape[-2]}")
    logits = q @ k.transpose(-2, -1) / math.sqrt(q.shape[-1])
    if tau != 1.0:
        logits = logits * tau
    return torch.softmax(logits, dim=-1) @ v


def build_gamma_schedule(cfg: InjectionConfig, n_steps: int) -> Optional[Schedule]:
    """Materialize the gamma schedule for a run, or None for fixed gamma.

    Decreasing direction spans (base, base / 2); increasing reverses it.
    """
    if cfg.gamma_axis == "none":
        return None
    lo = cfg.gamma_base / 2.0
    start, end = ((cfg.gamma_base, lo) if cfg.gamma_direction == "decreasing"
                  else (lo, cfg.gamma_base))
    n = len(LAYER_LABELS) if cfg.gamma_axis == AXIS_LAYER else n_steps
    return make_schedule(start, end, n, cfg.gamma_shape, cfg.gamma_axis)


def resolve_gamma(cfg: InjectionConfig, gamma_schedule: Optional[Schedule],
                  t: int, layer: int) -> float:
    if cfg.gamma_axis == "none":
        return cfg.gamma_base
    if gamma_schedule is None:
        raise ValueError(f"gamma_axis={cfg.gamma_axis!r} requires a schedule")
    if cfg.gamma_axis == AXIS_LAYER:
        return schedule_lookup(gamma_schedule, layer_index(layer))
    return schedule_lookup(gamma_schedule, t)


class InjectionLog:
    """Per-(timestep, layer) record of the resolved gamma and tau."""

    COLUMNS = ("t", "layer", "gamma", "tau")

    def __init__(self):
        self.rows: list[tuple[int, int, float, float]] = []

    def add(self, t: int, layer: int, gamma: float, tau: float) -> None:
        self.rows.append((t, layer, gamma, tau))

    def gammas_by_layer(self) -> dict[int, set[float]]:
        out: dict[int, set[float]] = {}
        for t, layer, gamma, _ in self.rows:
            out.setdefault(layer, set()).add(gamma)
        return out

    def gammas_by_timestep(self) -> dict[int, set[float]]:
        out: dict[int, set[float]] = {}
        for t, layer, gamma, _ in self.rows:
            out.setdefault(t, set()).add(gamma)
        return out

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            writer.writerows(self.rows)


def injection_hook(cfg: InjectionConfig, gamma_schedule: Optional[Schedule],
                   content_bank: "FeatureBank", style_bank: "FeatureBank",
                   log: InjectionLog | None = None):
    """Build the per-(timestep, layer) attention substitution callback.

    For active layers the callback swaps in the style bank's K/V, blends the
    content bank's query with the running query by the resolved gamma, and
    applies temperature-scaled attention.  Inactive layers pass through.
    """
    if content_bank.n_steps != style_bank.n_steps:
        raise ValueError("content and style banks cover different step counts")
    active = tuple(sorted(cfg.active_layers))
    for bank, name in ((content_bank, "content"), (style_bank, "style")):
        if not bank.is_complete(bank.n_steps, active):
            raise ValueError(f"{name} bank is incomplete over the active layers")
    if cfg.gamma_axis != "none":
        if gamma_schedule is None:
            raise ValueError(f"gamma_axis={cfg.gamma_axis!r} requires a schedule")
        expected = len(LAYER_LABELS) if cfg.gamma_axis == AXIS_LAYER else content_bank.n_steps
        if gamma_schedule.n_positions != expected:
            raise ValueError(
                f"gamma schedule covers {gamma_schedule.n_positions} positions, expected {expected}")

    def hook(t: int, layer: int, q_running: torch.Tensor,
             k_running: torch.Tensor, v_running: torch.Tensor):
        if layer not in cfg.active_layers:
            return None
        gamma = resolve_gamma(cfg, gamma_schedule, t, layer)
        q_content = content_bank.get(t, layer).q
        entry = style_bank.get(t, layer)
        out = injected_attention(blend_query(q_content, q_running, gamma),
                                 entry.k, entry.v, cfg.tau)
        if log is not None:
            log.add(t, layer, gamma, cfg.tau)
        return out

    return hook
