"""Markdown + SVG reporting for grid results.

Output is deterministic byte-for-byte given identical inputs: no
timestamps, stable ordering, fixed float formatting.
"""

from __future__ import annotations

from dataclasses import dataclass

from .pareto import ParetoPoint, pareto_front
from .runner import RunConfig, RunResult

_SVG_W, _SVG_H, _MARGIN = 640, 480, 56


def _fmt(v: float) -> str:
    return f"{v:.6g}"


@dataclass(frozen=True)
class DirectionalComparison:
    axis: str
    shape: str
    base: float
    decreasing: RunResult
    increasing: RunResult


def compare_directions(results: list[RunResult],
                       configs: list[RunConfig]) -> list[DirectionalComparison]:
    """Pair decreasing/increasing runs that share axis, shape and base."""
    by_id = {r.config_id: r for r in results}
    cells: dict[tuple, dict[str, RunResult]] = {}
    for rc in configs:
        inj = rc.injection
        if inj.gamma_axis == "none" or rc.config_id not in by_id:
            continue
        key = (inj.gamma_axis, inj.gamma_shape.value, inj.gamma_base,
               rc.cond.enabled)
        cells.setdefault(key, {})[inj.gamma_direction] = by_id[rc.config_id]
    out = []
    for key in sorted(cells, key=str):
        pair = cells[key]
        if "decreasing" in pair and "increasing" in pair:
            out.append(DirectionalComparison(key[0], key[1], key[2],
                                             pair["decreasing"], pair["increasing"]))
    return out


def results_to_points(results: list[RunResult]) -> list[ParetoPoint]:
    return [ParetoPoint(r.record.style, r.record.content, r.config_id) for r in results]


def render_scatter_svg(points: list[ParetoPoint], front: list[ParetoPoint]) -> str:
    xs = [p.x for p in points] or [0.0, 1.0]
    ys = [p.y for p in points] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    pad_x = (x1 - x0) * 0.05 or 0.5
    pad_y = (y1 - y0) * 0.05 or 0.5
    x0, x1, y0, y1 = x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y

    def sx(x):
        return _MARGIN + (x - x0) / (x1 - x0) * (_SVG_W - 2 * _MARGIN)

    def sy(y):
        return _SVG_H - _MARGIN - (y - y0) / (y1 - y0) * (_SVG_H - 2 * _MARGIN)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
             f'viewBox="0 0 {_SVG_W} {_SVG_H}">',
             f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
             f'<line x1="{_MARGIN}" y1="{_SVG_H - _MARGIN}" x2="{_SVG_W - _MARGIN}" '
             f'y2="{_SVG_H - _MARGIN}" stroke="black"/>',
             f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" '
             f'y2="{_SVG_H - _MARGIN}" stroke="black"/>',
             f'<text x="{_SVG_W // 2}" y="{_SVG_H - 12}" text-anchor="middle" '
             f'font-size="13">style distance (minimize)</text>',
             f'<text x="16" y="{_SVG_H // 2}" text-anchor="middle" font-size="13" '
             f'transform="rotate(-90 16 {_SVG_H // 2})">content distance (minimize)</text>',
             f'<text x="{_MARGIN}" y="{_SVG_H - _MARGIN + 16}" font-size="11">{_fmt(x0)}</text>',
             f'<text x="{_SVG_W - _MARGIN}" y="{_SVG_H - _MARGIN + 16}" text-anchor="end" '
             f'font-size="11">{_fmt(x1)}</text>',
             f'<text x="{_MARGIN - 4}" y="{_SVG_H - _MARGIN}" text-anchor="end" '
             f'font-size="11">{_fmt(y0)}</text>',
             f'<text x="{_MARGIN - 4}" y="{_MARGIN + 4}" text-anchor="end" '
             f'font-size="11">{_fmt(y1)}</text>']
    if front:
        coords = " ".join(f"{sx(p.x):.2f},{sy(p.y):.2f}" for p in front)
        parts.append(f'<polyline points="{coords}" fill="none" stroke="#2a7e43" '
                     f'stroke-width="1.5"/>')
    front_ids = {p.id for p in front}
    for p in points:
        color = "#2a7e43" if p.id in front_ids else "#888888"
        parts.append(f'<circle cx="{sx(p.x):.2f}" cy="{sy(p.y):.2f}" r="3.5" '
                     f'fill="{color}"><title>{p.id}</title></circle>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(results: list[RunResult],
                front: list[ParetoPoint] | None = None,
                residuals: dict[str, float] | None = None,
                directional: list[DirectionalComparison] | None = None) -> tuple[str, str]:
    """Render (markdown, svg) for a set of run results."""
    if not results:
        raise ValueError("report needs at least one result")
    ordered = sorted(results, key=lambda r: r.config_id)
    points = results_to_points(ordered)
    if front is None:
        front = pareto_front(points)
    lines = ["# Stylization grid report", "",
             "Metrics come from a fixed seeded proxy extractor; absolute values are "
             "not comparable to published numbers computed with pretrained backbones. "
             "Orderings and identities are the meaningful quantities.", "",
             "## Results", "",
             "| config_id | S | C | structure | combined | wall_time_s |",
             "|---|---|---|---|---|---|"]
    for r in ordered:
        lines.append(f"| {r.config_id} | {_fmt(r.record.style)} | {_fmt(r.record.content)} | "
                     f"{_fmt(r.record.structure)} | {_fmt(r.record.combined)} | "
                     f"{r.wall_time_s:.3f} |")
    lines += ["", "## Pareto frontier (style vs content, both minimized)", ""]
    for p in front:
        lines.append(f"- {p.id}: ({_fmt(p.x)}, {_fmt(p.y)})")
    if directional:
        lines += ["", "## Direction comparison (decreasing vs increasing)", "",
                  "| axis | shape | base | S dec | S inc | dS | C dec | C inc | dC |",
                  "|---|---|---|---|---|---|---|---|---|"]
        for d in directional:
            rd, ri = d.decreasing.record, d.increasing.record
            lines.append(f"| {d.axis} | {d.shape} | {_fmt(d.base)} | {_fmt(rd.style)} | "
                         f"{_fmt(ri.style)} | {_fmt(rd.style - ri.style)} | "
                         f"{_fmt(rd.content)} | {_fmt(ri.content)} | "
                         f"{_fmt(rd.content - ri.content)} |")
    if residuals:
        lines += ["", "## Additivity residuals (combined minus additive prediction)", ""]
        for axis in sorted(residuals):
            lines.append(f"- {axis}: {_fmt(residuals[axis])}")
    lines.append("")
    return "\n".join(lines), render_scatter_svg(points, front)
