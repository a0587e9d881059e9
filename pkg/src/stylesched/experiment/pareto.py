"""Pareto-frontier extraction and additivity analysis on metric records.

Both coordinates are minimized.  A point is dominated when another point is
no worse on both axes and strictly better on at least one; equal points do
not dominate each other, so exact ties survive together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..metrics import MetricRecord

METRIC_AXES = ("style", "content", "structure", "combined")


@dataclass(frozen=True)
class ParetoPoint:
    x: float  # style-axis value, minimized
    y: float  # content-axis value, minimized
    id: str

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"pareto point {self.id!r} has non-finite coordinates")


def dominates(a: ParetoPoint, b: ParetoPoint) -> bool:
    return a.x <= b.x and a.y <= b.y and (a.x < b.x or a.y < b.y)


def pareto_front(points: list[ParetoPoint]) -> list[ParetoPoint]:
    """Non-dominated subset, sorted by x (input order retained within ties).

    Sweep over x-groups in ascending order: within a group only the points
    tied for the group's minimal y can survive, and they survive exactly
    when no earlier group reached a y at or below theirs.
    """
    if not points:
        return []
    indexed = sorted(range(len(points)), key=lambda i: points[i].x)
    front: list[ParetoPoint] = []
    best_y = math.inf
    i = 0
    while i < len(indexed):
        j = i
        x = points[indexed[i]].x
        while j < len(indexed) and points[indexed[j]].x == x:
            j += 1
        group = [points[idx] for idx in indexed[i:j]]
        group_min = min(p.y for p in group)
        if group_min < best_y:
            front.extend(p for p in group if p.y == group_min)
            best_y = group_min
        i = j
    return front


def additivity_residual(base: MetricRecord, gamma_only: MetricRecord,
                        cn_only: MetricRecord, combined: MetricRecord) -> dict[str, float]:
    """Deviation of the combined run from the additive prediction, per axis.

    residual = combined - (base + (gamma_only - base) + (cn_only - base));
    a near-zero residual is evidence that the two mechanisms compose
    independently.
    """
    out = {}
    for axis in METRIC_AXES:
        b, g, c, comb = (getattr(r, axis) for r in (base, gamma_only, cn_only, combined))
        out[axis] = comb - (b + (g - b) + (c - b))
    return out
