"""Plain-text run configuration: ``key = value`` lines, ``#`` comments.

Every key has a documented default matching the published presets
(gamma 0.75, tau 1.5, 50 steps, decoder layers 6-11, conditioning scale
0.25).  Unknown keys are rejected so typos fail loudly.  All randomness
flows from the single ``seed`` key, expanded per purpose through
``derive_seed`` (sha256 of ``"{seed}/{label}"``, low 8 bytes).
"""

from __future__ import annotations

import hashlib
from pathlib import Path

from .schedule import LAYER_LABELS, WarpShape
from .struct_cond import CondConfig
from .style_injection import InjectionConfig
from .toy_diffusion import (DenoiserConfig, DenoiserWeights, TrainConfig,
                            build_denoiser)


def derive_seed(seed: int, label: str) -> int:
    """Deterministic child seed for one purpose (documented split rule)."""
    digest = hashlib.sha256(f"{seed}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_layers(s: str) -> tuple[int, ...]:
    labels = tuple(int(part) for part in s.split(",") if part.strip())
    if not labels or not set(labels) <= set(LAYER_LABELS):
        raise ValueError(f"active_layers must be a non-empty subset of {LAYER_LABELS}")
    return labels


def _in_range(lo, hi):
    def check(v):
        if not lo <= v <= hi:
            raise ValueError(f"value {v} outside [{lo}, {hi}]")
        return v
    return check


def _at_least(lo):
    def check(v):
        if v < lo:
            raise ValueError(f"value {v} below minimum {lo}")
        return v
    return check


def _choice(*options):
    def check(v):
        if v not in options:
            raise ValueError(f"value {v!r} not one of {options}")
        return v
    return check


def _identity(v):
    return v


# key -> (default string, parser, validator)
_SPEC: dict[str, tuple] = {
    "gamma_base": ("0.75", float, _in_range(0.0, 1.0)),
    "gamma_axis": ("none", str, _choice("none", "layer", "timestep")),
    "gamma_direction": ("decreasing", str, _choice("decreasing", "increasing")),
    "gamma_shape": ("linear", str, lambda v: WarpShape.parse(v).value),
    "tau": ("1.5", float, _at_least(1e-9)),
    "active_layers": ("6,7,8,9,10,11", _parse_layers, _identity),
    "cn_enabled": ("false", _parse_bool, _identity),
    "cn_scale": ("0.25", float, _at_least(0.0)),
    "cn_axis": ("none", str, _choice("none", "layer", "timestep")),
    "cn_direction": ("decreasing", str, _choice("decreasing", "increasing")),
    "cn_shape": ("linear", str, lambda v: WarpShape.parse(v).value),
    "cn_kind": ("depth-proxy", str, _choice("edge", "depth-proxy")),
    "seed": ("0", int, _identity),
    "steps": ("50", int, _at_least(1)),
    "image_size": ("64", int, _at_least(8)),
    "base_channels": ("16", int, _at_least(4)),
    "weights_mode": ("seeded-random", str, _choice("seeded-random", "toy-trained")),
    "train_steps": ("400", int, _at_least(1)),
    "train_batch": ("8", int, _at_least(1)),
    "train_lr": ("0.002", float, _at_least(1e-9)),
    "train_images": ("64", int, _at_least(1)),
    "n_content": ("20", int, _at_least(1)),
    "n_style": ("20", int, _at_least(1)),
    "benchmark_seed": ("0", int, _identity),
    "weights_path": ("", str, _identity),
    "benchmark_dir": ("", str, _identity),
    "results_dir": ("results", str, _identity),
}


def default_config() -> dict:
    return {key: validate(parse(raw)) for key, (raw, parse, validate) in _SPEC.items()}


def parse_config(text: str) -> dict:
    """Parse key = value lines over the defaults; unknown keys are errors."""
    cfg = default_config()
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, raw_value = (part.strip() for part in line.split("=", 1))
        if key not in _SPEC:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        _, parse, validate = _SPEC[key]
        try:
            cfg[key] = validate(parse(raw_value))
        except ValueError as exc:
            raise ValueError(f"config key {key!r}: {exc}") from None
    return cfg


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return default_config()
    return parse_config(Path(path).read_text())


def serialize_config(cfg: dict) -> str:
    lines = []
    for key in _SPEC:
        value = cfg[key]
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, tuple):
            text = ",".join(str(v) for v in value)
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def injection_from_config(cfg: dict) -> InjectionConfig:
    return InjectionConfig(gamma_base=cfg["gamma_base"], gamma_axis=cfg["gamma_axis"],
                           gamma_direction=cfg["gamma_direction"],
                           gamma_shape=WarpShape.parse(cfg["gamma_shape"]),
                           tau=cfg["tau"],
                           active_layers=frozenset(cfg["active_layers"]))


def cond_from_config(cfg: dict) -> CondConfig:
    return CondConfig(enabled=cfg["cn_enabled"], scale_base=cfg["cn_scale"],
                      scale_axis=cfg["cn_axis"], scale_direction=cfg["cn_direction"],
                      scale_shape=WarpShape.parse(cfg["cn_shape"]), kind=cfg["cn_kind"],
                      active_layers=frozenset(cfg["active_layers"]))


def denoiser_config_from_config(cfg: dict) -> DenoiserConfig:
    return DenoiserConfig(latent_size=cfg["image_size"] // 2,
                          base_channels=cfg["base_channels"])


def weights_from_config(cfg: dict) -> DenoiserWeights:
    """Load weights from ``weights_path`` or build them from the seed."""
    if cfg["weights_path"]:
        return DenoiserWeights.load(cfg["weights_path"])
    model_cfg = denoiser_config_from_config(cfg)
    train_cfg = None
    if cfg["weights_mode"] == "toy-trained":
        train_cfg = TrainConfig(steps=cfg["train_steps"], batch_size=cfg["train_batch"],
                                lr=cfg["train_lr"], n_images=cfg["train_images"],
                                dataset_seed=derive_seed(cfg["seed"], "train-data"))
    return build_denoiser(derive_seed(cfg["seed"], "denoiser") % (2**63),
                          cfg["weights_mode"], train_cfg, model_cfg)
