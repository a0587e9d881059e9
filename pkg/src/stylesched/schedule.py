"""Control-value schedules over decoder layers or denoising timesteps.

A schedule interpolates a control value (query-blend gamma or conditioning
scale) from ``start`` to ``end`` over ``n`` positions.  The normalized
position ``alpha = i / (n - 1)`` is passed through a warping function that
fixes where along the axis the transition is concentrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

AXIS_LAYER = "layer"
AXIS_TIMESTEP = "timestep"
AXES = (AXIS_LAYER, AXIS_TIMESTEP)

# Layer-axis schedules always span the six attention blocks of the decoder.
LAYER_LABELS = (6, 7, 8, 9, 10, 11)


class WarpShape(Enum):
    """Monotone warp f : [0,1] -> [0,1] with f(0)=0 and f(1)=1."""

    LINEAR = "linear"
    QUADRATIC = "quadratic"
    SQRT = "sqrt"
    COSINE = "cosine"
    EXPONENTIAL = "exponential"

    @classmethod
    def parse(cls, name: str) -> "WarpShape":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown warp shape {name!r} (expected one of: {valid})") from None


def warp(shape: WarpShape, alpha: float) -> float:
    """Evaluate the warp function of ``shape`` at ``alpha`` in [0, 1]."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if shape is WarpShape.LINEAR:
        return alpha
    if shape is WarpShape.QUADRATIC:
        return alpha * alpha
    if shape is WarpShape.SQRT:
        return math.sqrt(alpha)
    if shape is WarpShape.COSINE:
        return (1.0 - math.cos(alpha * math.pi)) / 2.0
    if shape is WarpShape.EXPONENTIAL:
        return math.expm1(alpha) / math.expm1(1.0)
    raise ValueError(f"unhandled warp shape {shape!r}")


@dataclass(frozen=True)
class Schedule:
    """A precomputed control-value sequence with its construction metadata.

    Schedules are materialized eagerly so every run can log the exact values
    it used.  ``axis`` records what the position index means: for ``layer``
    index 0 is decoder layer 6 and index 5 is layer 11; for ``timestep``
    index 0 is the first (highest-noise) denoising step.
    """

    values: tuple[float, ...]
    start: float
    end: float
    n_positions: int
    shape: WarpShape
    axis: str = field(default=AXIS_TIMESTEP)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if len(self.values) != self.n_positions:
            raise ValueError("values length does not match n_positions")


def make_schedule(start: float, end: float, n: int, shape: WarpShape,
                  axis: str = AXIS_TIMESTEP) -> Schedule:
    """Build the sequence ``start + (end - start) * f(i / (n - 1))``.

    The decreasing presets pair ``(base, base / 2)`` endpoints; this function
    accepts arbitrary endpoints in [0, 1].
    """
    if n < 2:
        raise ValueError(f"schedule needs at least 2 positions, got {n}")
    for name, v in (("start", start), ("end", end)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {v}")
    lo, hi = min(start, end), max(start, end)
    span = end - start
    values = []
    for i in range(n):
        v = start + span * warp(shape, i / (n - 1))
        # Clamping is a no-op for exact arithmetic; it guards float spill.
        values.append(min(max(v, lo), hi))
    return Schedule(tuple(values), start, end, n, shape, axis)


def schedule_lookup(s: Schedule, index: int) -> float:
    """Value at a position index (0 <= index < n_positions)."""
    if not 0 <= index < s.n_positions:
        raise IndexError(f"schedule index {index} out of range [0, {s.n_positions})")
    return s.values[index]


def layer_index(layer_label: int) -> int:
    """Map a decoder layer label (6..11) to its layer-axis schedule index."""
    if layer_label not in LAYER_LABELS:
        raise ValueError(f"unknown decoder layer label {layer_label}")
    return layer_label - LAYER_LABELS[0]
