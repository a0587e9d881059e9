"""Command-line surface: stylize, invert, grid, pareto, report, validate-tables.

Exit codes: 0 success, 1 internal/numerical failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import config as C
from . import io as sio
from . import metrics as M
from .experiment import (BenchmarkSpec, ParetoPoint, RunConfig, RunResult,
                         additivity_residual, compare_directions,
                         directional_grid, emit_report, paper_preset_grid,
                         pareto_front, results_to_points, run_grid,
                         smoke_grid, stylize_pair)
from .schedule import WarpShape
from .struct_cond import build_scale_schedule
from .style_injection import build_gamma_schedule
from .toy_diffusion import LinearAutoencoder, NoiseSchedule, ddim_invert

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2


def _fail(message: str, code: int = EXIT_USAGE) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return p


def _load_cfg(config_path: str | None) -> dict:
    if config_path is not None:
        _require_file(config_path)
    return C.load_config(config_path)


def _run_config_from_cfg(cfg: dict, config_id: str) -> RunConfig:
    return RunConfig(config_id, C.injection_from_config(cfg), C.cond_from_config(cfg),
                     seed=cfg["seed"], steps=cfg["steps"])


def cmd_stylize(args) -> int:
    try:
        content_path = _require_file(args.content)
        style_path = _require_file(args.style)
        cfg = _load_cfg(args.config)
    except (FileNotFoundError, ValueError) as exc:
        return _fail(str(exc))
    try:
        content = sio.read_ppm(content_path)
        style = sio.read_ppm(style_path)
        if content.shape[0] != cfg["image_size"] or content.shape != style.shape:
            return _fail(f"images must both be {cfg['image_size']}x{cfg['image_size']}; "
                         f"got {content.shape} and {style.shape}")
        weights = C.weights_from_config(cfg)
        rc = _run_config_from_cfg(cfg, "cli_stylize")
        out_img = stylize_pair(content, style, rc, weights)
        sio.write_ppm(args.out, out_img)
        gamma_sched = build_gamma_schedule(rc.injection, rc.steps)
        cn_sched = build_scale_schedule(rc.cond, rc.steps) if rc.cond.enabled else None
        sidecar = {
            "config_text": C.serialize_config(cfg),
            "inputs": {"content": {"path": str(content_path),
                                   "sha256": sio.file_checksum(content_path)},
                       "style": {"path": str(style_path),
                                 "sha256": sio.file_checksum(style_path)}},
            "output": {"path": str(args.out), "sha256": sio.file_checksum(args.out)},
            "weights_checksum": weights.checksum(),
            "resolved_gamma_schedule": list(gamma_sched.values) if gamma_sched else None,
            "resolved_cn_schedule": list(cn_sched.values) if cn_sched else None,
            "seed": cfg["seed"],
            "steps": cfg["steps"],
        }
        Path(str(args.out) + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")
    except (ValueError, KeyError) as exc:
        return _fail(str(exc))
    except RuntimeError as exc:
        return _fail(str(exc), EXIT_INTERNAL)
    return EXIT_OK


def cmd_invert(args) -> int:
    try:
        image_path = _require_file(args.image)
        cfg = _load_cfg(args.config)
        image = sio.read_ppm(image_path)
        if image.shape[0] != cfg["image_size"]:
            return _fail(f"image must be {cfg['image_size']}x{cfg['image_size']}, "
                         f"got {image.shape}")
        weights = C.weights_from_config(cfg)
        enc = LinearAutoencoder(image_size=cfg["image_size"])
        ns = NoiseSchedule.cosine(cfg["steps"])
        terminal, _, _ = ddim_invert(enc.encode(image), weights, ns, capture=False)
        sio.write_tlat(args.out, terminal.numpy())
    except (FileNotFoundError, ValueError) as exc:
        return _fail(str(exc))
    except RuntimeError as exc:
        return _fail(str(exc), EXIT_INTERNAL)
    return EXIT_OK


def _grid_configs(args, cfg: dict) -> list[RunConfig]:
    if args.configs:
        _require_file(args.configs)
        entries = json.loads(Path(args.configs).read_text())
        if not isinstance(entries, list):
            raise ValueError("configs file must hold a JSON array")
        configs = []
        for entry in entries:
            merged = dict(cfg)
            config_id = entry.pop("config_id", None)
            if not config_id:
                raise ValueError("every grid entry needs a config_id")
            for key, value in entry.items():
                if key not in merged:
                    raise ValueError(f"unknown config key {key!r} in grid entry")
                merged[key] = value
            configs.append(_run_config_from_cfg(merged, config_id))
        return configs
    builders = {"paper": paper_preset_grid, "smoke": smoke_grid,
                "directional": directional_grid}
    if args.preset in ("paper", "smoke"):
        return builders[args.preset](seed=cfg["seed"], steps=cfg["steps"])
    return directional_grid(base=cfg["gamma_base"], seed=cfg["seed"], steps=cfg["steps"])


def cmd_grid(args) -> int:
    try:
        cfg = _load_cfg(args.config)
        configs = _grid_configs(args, cfg)
        if not configs:
            return _fail("config grid is empty")
        bench = BenchmarkSpec(cfg["n_content"], cfg["n_style"], cfg["image_size"],
                              cfg["benchmark_seed"])
        weights = C.weights_from_config(cfg)
        results = run_grid(configs, bench, weights,
                           results_dir=args.out or cfg["results_dir"])
    except (FileNotFoundError, ValueError, json.JSONDecodeError) as exc:
        return _fail(str(exc))
    except RuntimeError as exc:
        return _fail(str(exc), EXIT_INTERNAL)
    print(f"wrote {len(results)} aggregate rows to "
          f"{Path(args.out or cfg['results_dir']) / 'results.csv'}")
    return EXIT_OK


def _read_points(path: Path) -> list[ParetoPoint]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    cols = rows[0].keys()
    if {"x", "y"} <= set(cols):
        return [ParetoPoint(float(r["x"]), float(r["y"]), r.get("id", str(i)))
                for i, r in enumerate(rows)]
    if {"S", "C", "config_id"} <= set(cols):
        return [ParetoPoint(float(r["S"]), float(r["C"]), r["config_id"]) for r in rows]
    raise ValueError(f"{path}: expected columns (x, y[, id]) or (S, C, config_id)")


def cmd_pareto(args) -> int:
    try:
        points = _read_points(_require_file(args.results))
        front = pareto_front(points)
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "x", "y"])
            for p in front:
                writer.writerow([p.id, f"{p.x:.9g}", f"{p.y:.9g}"])
    except (FileNotFoundError, ValueError) as exc:
        return _fail(str(exc))
    print(f"frontier holds {len(front)} of {len(points)} points")
    return EXIT_OK


def _rows_to_results(rows: list[dict]) -> tuple[list[RunResult], list[RunConfig]]:
    results, configs = [], []
    for row in rows:
        record = M.MetricRecord.from_components(float(row["S"]), float(row["C"]),
                                                float(row["structure"]))
        results.append(RunResult(row["config_id"], record, float(row["wall_time_s"])))
        merged = C.default_config()
        merged.update({"gamma_base": float(row["gamma_base"]),
                       "gamma_axis": row["gamma_axis"],
                       "gamma_direction": row["gamma_direction"],
                       "gamma_shape": row["gamma_shape"],
                       "cn_enabled": row["cn_enabled"] == "true",
                       "cn_scale": float(row["cn_scale"]),
                       "cn_axis": row["cn_axis"],
                       "cn_direction": row["cn_direction"],
                       "cn_shape": row["cn_shape"],
                       "seed": int(row["seed"])})
        configs.append(_run_config_from_cfg(merged, row["config_id"]))
    return results, configs


def _find_additivity_anchors(results, configs):
    """Locate (base, gamma-only, cn-only, combined) rows if all are present."""
    by_id = {r.config_id: r for r in results}

    def match(pred):
        hits = [rc for rc in configs if pred(rc)]
        return by_id[hits[0].config_id] if len(hits) >= 1 else None

    base = match(lambda rc: rc.injection.gamma_axis == "none" and not rc.cond.enabled
                 and rc.injection.gamma_base == 0.75)
    gamma_only = match(lambda rc: rc.injection.gamma_axis == "timestep"
                       and rc.injection.gamma_direction == "decreasing"
                       and rc.injection.gamma_shape is WarpShape.LINEAR
                       and not rc.cond.enabled and rc.injection.gamma_base == 0.75)
    cn_only = match(lambda rc: rc.injection.gamma_axis == "none" and rc.cond.enabled
                    and rc.cond.scale_axis == "timestep")
    combined = match(lambda rc: rc.injection.gamma_axis == "timestep"
                     and rc.injection.gamma_shape is WarpShape.LINEAR
                     and rc.cond.enabled and rc.cond.scale_axis == "timestep")
    if None in (base, gamma_only, cn_only, combined):
        return None
    return additivity_residual(base.record, gamma_only.record, cn_only.record,
                               combined.record)


def cmd_report(args) -> int:
    try:
        results_path = _require_file(args.results)
        with open(results_path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            return _fail(f"{results_path}: no result rows")
        results, configs = _rows_to_results(rows)
        residuals = _find_additivity_anchors(results, configs)
        directional = compare_directions(results, configs)
        markdown, svg = emit_report(results, residuals=residuals,
                                    directional=directional or None)
        out_md = Path(args.out)
        out_md.write_text(markdown)
        out_md.with_suffix(".svg").write_text(svg)
    except (FileNotFoundError, ValueError, KeyError) as exc:
        return _fail(str(exc))
    print(f"wrote {args.out} and {Path(args.out).with_suffix('.svg')}")
    return EXIT_OK


def cmd_validate_tables(args) -> int:
    try:
        rows = M.load_paper_tables(args.fixture)
        checks = M.validate_table_identity(rows)
    except (FileNotFoundError, ValueError) as exc:
        return _fail(str(exc))
    for chk in checks:
        status = "OK" if chk.ok else "FAIL"
        print(f"{chk.row.source_table}/{chk.row.column_name}: "
              f"computed={chk.computed:.3f} published={chk.row.artfid:.3f} "
              f"residual={chk.residual:+.3f} {status}")
    bad = [c for c in checks if not c.ok]
    print(f"{len(checks) - len(bad)}/{len(checks)} rows within tolerance")
    return EXIT_OK if not bad else EXIT_INTERNAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stylesched",
                                     description="Scheduled attention style injection "
                                                 "on a toy latent diffusion model")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stylize", help="stylize one content/style image pair")
    p.add_argument("--content", required=True)
    p.add_argument("--style", required=True)
    p.add_argument("--config", default=None, help="key = value config file")
    p.add_argument("--out", required=True, help="output PPM path")
    p.set_defaults(func=cmd_stylize)

    p = sub.add_parser("invert", help="write the terminal noise latent of an image")
    p.add_argument("--image", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True, help="output TLAT path")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("grid", help="run a configuration grid over the benchmark")
    p.add_argument("--config", default=None)
    p.add_argument("--preset", default="paper", choices=("paper", "smoke", "directional"))
    p.add_argument("--configs", default=None, help="JSON array of grid entries")
    p.add_argument("--out", default=None, help="results directory")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("pareto", help="extract the non-dominated frontier from a CSV")
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("report", help="render markdown + SVG from a results CSV")
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True, help="output markdown path")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("validate-tables",
                       help="check the published-table combined-metric identity")
    p.add_argument("--fixture", default=None, help="override the shipped fixture CSV")
    p.set_defaults(func=cmd_validate_tables)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
