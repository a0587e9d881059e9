"""Grid orchestration: stylization runs, per-pair metrics, CSV results.

Each run stylizes every (content, style) pair of a seeded procedural
benchmark under one configuration, records per-pair metric rows, and
aggregates them as the deterministic mean in sorted pair order (so
execution order never changes the published numbers).
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import torch

from .. import metrics as M
from ..procgen import make_benchmark
from ..schedule import WarpShape
from ..struct_cond import (CondConfig, CondWeights, build_scale_schedule,
                           conditioning_hook, extract_structure)
from ..style_injection import (InjectionConfig, InjectionLog,
                               build_gamma_schedule, injection_hook)
from ..toy_diffusion import (LinearAutoencoder, NoiseSchedule, adain_init,
                             ddim_invert, ddim_sample)

RESULTS_COLUMNS = ("config_id", "gamma_base", "gamma_axis", "gamma_direction",
                   "gamma_shape", "cn_enabled", "cn_scale", "cn_axis",
                   "cn_direction", "cn_shape", "seed", "S", "C", "structure",
                   "combined", "wall_time_s")
PAIR_COLUMNS = ("config_id", "pair_id", "content_index", "style_index",
                "S", "C", "structure", "combined")


@dataclass(frozen=True)
class BenchmarkSpec:
    n_content: int = 20
    n_style: int = 20
    image_size: int = 64
    seed: int = 0

    def generate(self) -> tuple[list[np.ndarray], list[np.ndarray]]:
        if self.n_content < 1 or self.n_style < 1:
            raise ValueError("benchmark needs at least one content and one style image")
        return make_benchmark(self.seed, self.n_content, self.n_style, self.image_size)


@dataclass(frozen=True)
class RunConfig:
    config_id: str
    injection: InjectionConfig = field(default_factory=InjectionConfig)
    cond: CondConfig = field(default_factory=CondConfig)
    seed: int = 0
    steps: int = 50

    def __post_init__(self):
        if not self.config_id:
            raise ValueError("config_id must be non-empty")
        if self.steps < 1:
            raise ValueError("steps must be positive")


@dataclass(frozen=True)
class PairMetrics:
    pair_id: str
    content_index: int
    style_index: int
    record: M.MetricRecord


@dataclass(frozen=True)
class RunResult:
    config_id: str
    record: M.MetricRecord
    wall_time_s: float
    pairs: tuple[PairMetrics, ...] = ()


def _derive_seed(seed: int, label: str) -> int:
    import hashlib

    digest = hashlib.sha256(f"{seed}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def stylize_pair(content: np.ndarray, style: np.ndarray, rc: RunConfig, weights,
                 autoencoder: LinearAutoencoder | None = None,
                 prepared: tuple | None = None,
                 log: InjectionLog | None = None) -> np.ndarray:
    """Full pipeline for one (content, style) pair.

    Encode both images, invert both (capturing Q/K/V banks), renormalize the
    content's terminal noise to the style's channel statistics, then sample
    with the attention-injection hook and, if enabled, the structural
    conditioning hook.  ``prepared`` short-circuits the two inversions with
    precomputed (x_T, bank) tuples; banks do not depend on the config.
    """
    enc = autoencoder or LinearAutoencoder(image_size=content.shape[0],
                                           latent_channels=weights.config.latent_channels)
    ns = NoiseSchedule.cosine(rc.steps)
    if prepared is not None:
        (xt_c, bank_c), (xt_s, bank_s) = prepared
    else:
        xt_c, bank_c, _ = ddim_invert(enc.encode(content), weights, ns)
        xt_s, bank_s, _ = ddim_invert(enc.encode(style), weights, ns)
    x_init = adain_init(xt_c, xt_s)
    gamma_schedule = build_gamma_schedule(rc.injection, rc.steps)
    attn = injection_hook(rc.injection, gamma_schedule, bank_c, bank_s, log=log)
    cond = None
    if rc.cond.enabled:
        smap = extract_structure(content, rc.cond.kind, latent_size=enc.latent_size)
        cw = CondWeights(_derive_seed(rc.seed, "cond"),
                         weights.config.decoder_layer_shapes())
        cond = conditioning_hook(rc.cond, cw, smap, build_scale_schedule(rc.cond, rc.steps))
    out, _ = ddim_sample(x_init, weights, ns, attn_hook=attn, cond_hook=cond)
    return enc.decode(out)


class _PrepCache:
    """Bounded cache of (terminal latent, feature bank) per benchmark image."""

    def __init__(self, weights, enc, ns, maxsize: int = 8):
        self.weights, self.enc, self.ns = weights, enc, ns
        self.maxsize = maxsize
        self._data: dict[tuple[str, int], tuple] = {}

    def get(self, kind: str, index: int, image: np.ndarray):
        key = (kind, index)
        if key not in self._data:
            if len(self._data) >= self.maxsize:
                self._data.pop(next(iter(self._data)))
            xt, bank, _ = ddim_invert(self.enc.encode(image), self.weights, self.ns)
            self._data[key] = (xt, bank)
        return self._data[key]


def run_one(rc: RunConfig, contents: list[np.ndarray], styles: list[np.ndarray],
            weights, fx: M.FeatureExtractor, enc: LinearAutoencoder,
            cache: _PrepCache | None = None) -> RunResult:
    started = time.perf_counter()
    ns = NoiseSchedule.cosine(rc.steps)
    cache = cache or _PrepCache(weights, enc, ns, maxsize=len(styles) + 1)
    pairs = []
    for ci, content in enumerate(contents):
        prep_c = cache.get("content", ci, content)
        for si, style in enumerate(styles):
            prep_s = cache.get("style", si, style)
            out = stylize_pair(content, style, rc, weights, autoencoder=enc,
                               prepared=(prep_c, prep_s))
            record = M.MetricRecord.from_components(
                M.style_distance([out], [style], fx, min_images=1),
                M.content_distance(out, content, fx),
                M.structure_distance(out, content, fx))
            pairs.append(PairMetrics(f"c{ci:03d}_s{si:03d}", ci, si, record))
    pairs.sort(key=lambda p: p.pair_id)
    agg = M.MetricRecord.from_components(
        float(np.mean([p.record.style for p in pairs])),
        float(np.mean([p.record.content for p in pairs])),
        float(np.mean([p.record.structure for p in pairs])))
    return RunResult(rc.config_id, agg, time.perf_counter() - started, tuple(pairs))


def _result_row(rc: RunConfig, res: RunResult) -> dict:
    return {"config_id": rc.config_id,
            "gamma_base": f"{rc.injection.gamma_base:.6g}",
            "gamma_axis": rc.injection.gamma_axis,
            "gamma_direction": rc.injection.gamma_direction,
            "gamma_shape": rc.injection.gamma_shape.value,
            "cn_enabled": str(rc.cond.enabled).lower(),
            "cn_scale": f"{rc.cond.scale_base:.6g}",
            "cn_axis": rc.cond.scale_axis,
            "cn_direction": rc.cond.scale_direction,
            "cn_shape": rc.cond.scale_shape.value,
            "seed": str(rc.seed),
            "S": f"{res.record.style:.9g}", "C": f"{res.record.content:.9g}",
            "structure": f"{res.record.structure:.9g}",
            "combined": f"{res.record.combined:.9g}",
            "wall_time_s": f"{res.wall_time_s:.3f}"}


def _read_completed(path: Path) -> dict[str, dict]:
    if not path.exists():
        return {}
    with open(path, newline="") as fh:
        return {row["config_id"]: row for row in csv.DictReader(fh)}


def run_grid(configs: list[RunConfig], bench: BenchmarkSpec, weights,
             results_dir: str | Path | None = None,
             fx: M.FeatureExtractor | None = None,
             bank_cache_size: int | None = None) -> list[RunResult]:
    """Run every config over the benchmark; emit/extend the results CSV.

    Completed config_ids found in an existing results CSV are skipped, so
    interrupted grids resume where they stopped.
    """
    if not configs:
        raise ValueError("config grid is empty")
    ids = [rc.config_id for rc in configs]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate config_id(s): {dupes}")
    contents, styles = bench.generate()
    if bench.image_size != weights.config.latent_size * 2:
        raise ValueError("benchmark image size does not match the model's latent size")
    enc = LinearAutoencoder(image_size=bench.image_size,
                            latent_channels=weights.config.latent_channels)
    fx = fx or M.FeatureExtractor(_derive_seed(bench.seed, "metrics"))

    results_path = pairs_path = None
    completed: dict[str, dict] = {}
    if results_dir is not None:
        results_dir = Path(results_dir)
        results_dir.mkdir(parents=True, exist_ok=True)
        results_path = results_dir / "results.csv"
        pairs_path = results_dir / "results_pairs.csv"
        completed = _read_completed(results_path)

    step_counts = {rc.steps for rc in configs}
    caches = {n: _PrepCache(weights, enc, NoiseSchedule.cosine(n),
                            maxsize=bank_cache_size or (len(styles) + 2))
              for n in step_counts}
    results = []
    new_rows, new_pair_rows = [], []
    for rc in configs:
        if rc.config_id in completed:
            row = completed[rc.config_id]
            record = M.MetricRecord.from_components(
                float(row["S"]), float(row["C"]), float(row["structure"]))
            results.append(RunResult(rc.config_id, record, float(row["wall_time_s"])))
            continue
        res = run_one(rc, contents, styles, weights, fx, enc, caches[rc.steps])
        results.append(res)
        new_rows.append(_result_row(rc, res))
        for p in res.pairs:
            new_pair_rows.append({"config_id": rc.config_id, "pair_id": p.pair_id,
                                  "content_index": p.content_index,
                                  "style_index": p.style_index,
                                  "S": f"{p.record.style:.9g}",
                                  "C": f"{p.record.content:.9g}",
                                  "structure": f"{p.record.structure:.9g}",
                                  "combined": f"{p.record.combined:.9g}"})
    if results_path is not None and new_rows:
        fresh = not results_path.exists()
        with open(results_path, "a", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=RESULTS_COLUMNS)
            if fresh:
                writer.writeheader()
            writer.writerows(new_rows)
        fresh_pairs = not pairs_path.exists()
        with open(pairs_path, "a", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=PAIR_COLUMNS)
            if fresh_pairs:
                writer.writeheader()
            writer.writerows(new_pair_rows)
    return results


def _slug(value: float) -> str:
    return f"{int(round(value * 100)):03d}"


def _gamma_cfg(base: float, axis: str = "none", direction: str = "decreasing",
               shape: WarpShape = WarpShape.LINEAR, tau: float = 1.5) -> InjectionConfig:
    return InjectionConfig(gamma_base=base, gamma_axis=axis,
                           gamma_direction=direction, gamma_shape=shape, tau=tau)


def _cn_cfg(scale: float, axis: str = "none", direction: str = "decreasing",
            shape: WarpShape = WarpShape.LINEAR) -> CondConfig:
    return CondConfig(enabled=True, scale_base=scale, scale_axis=axis,
                      scale_direction=direction, scale_shape=shape)


def paper_preset_grid(seed: int = 0, steps: int = 50) -> list[RunConfig]:
    """The 35-configuration evaluation grid.

    Composition: 3 fixed-gamma baselines; 12 linear direction probes (both
    axes x both directions x three bases); 5 timestep-decreasing shapes at
    base 0.75 (linear repeated as the group's reference row); 3 fixed
    conditioning scales; 8 scheduled conditioning variants (both directions
    at the recommended scale, decreasing only at the larger scales); and
    4 combined gamma+conditioning configurations.
    """
    bases = (0.50, 0.75, 0.90)
    grid: list[RunConfig] = []

    def add(config_id: str, injection: InjectionConfig, cond: CondConfig | None = None):
        grid.append(RunConfig(config_id, injection, cond or CondConfig(),
                              seed=seed, steps=steps))

    for base in bases:
        add(f"fixed_g{_slug(base)}", _gamma_cfg(base))
    for base in bases:
        for axis in ("layer", "timestep"):
            for direction in ("decreasing", "increasing"):
                add(f"gamma_{axis}_{direction[:3]}_linear_g{_slug(base)}",
                    _gamma_cfg(base, axis, direction))
    shapes = (WarpShape.LINEAR, WarpShape.QUADRATIC, WarpShape.SQRT,
              WarpShape.COSINE, WarpShape.EXPONENTIAL)
    for shape in shapes:
        suffix = "_ref" if shape is WarpShape.LINEAR else ""
        add(f"gamma_timestep_dec_{shape.value}_g075{suffix}",
            _gamma_cfg(0.75, "timestep", "decreasing", shape))
    for scale in (0.25, 0.50, 1.00):
        add(f"cn_fixed_s{_slug(scale)}", _gamma_cfg(0.75), _cn_cfg(scale))
    for axis in ("layer", "timestep"):
        for direction in ("decreasing", "increasing"):
            add(f"cn_{axis}_{direction[:3]}_linear_s025",
                _gamma_cfg(0.75), _cn_cfg(0.25, axis, direction))
    for scale in (0.50, 1.00):
        for axis in ("layer", "timestep"):
            add(f"cn_{axis}_dec_linear_s{_slug(scale)}",
                _gamma_cfg(0.75), _cn_cfg(scale, axis, "decreasing"))
    combos = ((WarpShape.LINEAR, "layer"), (WarpShape.LINEAR, "timestep"),
              (WarpShape.COSINE, "timestep"), (WarpShape.SQRT, "timestep"))
    for shape, cn_axis in combos:
        add(f"combo_{shape.value}_cn_{cn_axis}_g075",
            _gamma_cfg(0.75, "timestep", "decreasing", shape),
            _cn_cfg(0.25, cn_axis, "decreasing"))
    return grid


def directional_grid(base: float = 0.75, seed: int = 0, steps: int = 50) -> list[RunConfig]:
    """Direction comparison grid: both directions per axis and shape."""
    grid = []
    for axis in ("layer", "timestep"):
        for shape in WarpShape:
            for direction in ("decreasing", "increasing"):
                cid = f"dir_{axis}_{shape.value}_{direction[:3]}_g{_slug(base)}"
                grid.append(RunConfig(cid, _gamma_cfg(base, axis, direction, shape),
                                      CondConfig(), seed=seed, steps=steps))
    return grid


def smoke_grid(seed: int = 0, steps: int = 50) -> list[RunConfig]:
    """Single-config grid for end-to-end smoke runs."""
    return [RunConfig("smoke_gamma_timestep_dec_g075",
                      _gamma_cfg(0.75, "timestep", "decreasing"),
                      CondConfig(), seed=seed, steps=steps)]
