"""Seeded procedural images: geometric content scenes and texture styles.

Content images are gradient backgrounds with a few solid shapes; style
images are strongly textured fields (stripes, smoothed noise, stippling).
Everything is a pure function of its seed so benchmarks regenerate
identically from a config file.
"""

from __future__ import annotations

import numpy as np


def _grid(size: int):
    ys, xs = np.meshgrid(np.linspace(0.0, 1.0, size), np.linspace(0.0, 1.0, size), indexing="ij")
    return ys.astype(np.float32), xs.astype(np.float32)


def _color(rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.05, 0.95, size=3).astype(np.float32)


def make_content_image(seed: int, size: int = 64) -> np.ndarray:
    """Gradient background plus 2-4 axis-aligned rectangles and disks."""
    rng = np.random.default_rng(seed)
    ys, xs = _grid(size)
    c0, c1 = _color(rng), _color(rng)
    axis = ys if rng.random() < 0.5 else xs
    img = axis[..., None] * c1[None, None, :] + (1.0 - axis[..., None]) * c0[None, None, :]
    for _ in range(int(rng.integers(2, 5))):
        color = _color(rng)
        cy, cx = rng.uniform(0.15, 0.85, size=2)
        r = rng.uniform(0.08, 0.25)
        if rng.random() < 0.5:
            mask = (np.abs(ys - cy) < r) & (np.abs(xs - cx) < r * rng.uniform(0.5, 1.5))
        else:
            mask = (ys - cy) ** 2 + (xs - cx) ** 2 < r**2
        img[mask] = color
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def make_style_image(seed: int, size: int = 64) -> np.ndarray:
    """One of three texture families: stripes, noise field, stippling."""
    rng = np.random.default_rng(seed)
    ys, xs = _grid(size)
    kind = int(rng.integers(0, 3))
    c0, c1 = _color(rng), _color(rng)
    if kind == 0:  # stripes
        angle = rng.uniform(0.0, np.pi)
        freq = rng.uniform(6.0, 16.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        wave = np.sin(2.0 * np.pi * freq * (np.cos(angle) * xs + np.sin(angle) * ys) + phase)
        t = (wave > 0.0).astype(np.float32)
    elif kind == 1:  # smoothed noise field
        noise = rng.standard_normal((size, size)).astype(np.float32)
        k = np.array([0.25, 0.5, 0.25], dtype=np.float32)
        for _ in range(3):
            noise = np.apply_along_axis(lambda r: np.convolve(r, k, mode="same"), 0, noise)
            noise = np.apply_along_axis(lambda r: np.convolve(r, k, mode="same"), 1, noise)
        lo, hi = noise.min(), noise.max()
        t = (noise - lo) / (hi - lo) if hi > lo else np.zeros_like(noise)
    else:  # stippling
        t = np.zeros((size, size), dtype=np.float32)
        n_dots = int(rng.integers(60, 140))
        radius = rng.uniform(0.015, 0.04)
        for _ in range(n_dots):
            cy, cx = rng.uniform(0.0, 1.0, size=2)
            t[(ys - cy) ** 2 + (xs - cx) ** 2 < radius**2] = 1.0
    img = t[..., None] * c1[None, None, :] + (1.0 - t[..., None]) * c0[None, None, :]
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def make_benchmark(seed: int, n_content: int, n_style: int,
                   size: int = 64) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Seeded benchmark sets; content/style streams use disjoint seed ranges."""
    contents = [make_content_image(seed * 1_000_003 + i, size) for i in range(n_content)]
    styles = [make_style_image(seed * 1_000_003 + 500_000 + j, size) for j in range(n_style)]
    return contents, styles


def make_texture_dataset(seed: int, n_images: int, size: int = 64) -> list[np.ndarray]:
    """Mixed scenes and textures for toy denoiser training."""
    half = n_images // 2
    contents, styles = make_benchmark(seed + 777, half, n_images - half, size)
    return contents + styles
