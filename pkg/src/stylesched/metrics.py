"""Proxy style/content/structure metrics and the combined-metric identity.

The extractor is a fixed seeded conv pyramid, so absolute values are NOT
comparable to published numbers computed with pretrained backbones.  What
is preserved (and tested) is the metric algebra: the Fréchet form of the
style axis, the (1 + S) * (1 + C) combined identity, and orderings under
controlled perturbations.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

COMBINED_TOL = 1e-9
TABLE_TOL = 0.05


def _num_groups(channels: int) -> int:
    for g in (8, 4, 2, 1):
        if channels % g == 0:
            return g
    return 1


class FeatureExtractor:
    """Fixed seeded 3-stage conv pyramid over (H, W, 3) images in [0, 1].

    Stage s halves resolution and widens channels; weights are drawn once
    from a seeded generator and never trained.
    """

    def __init__(self, seed: int = 0, channels: tuple[int, int, int] = (12, 24, 48)):
        self.seed = seed
        self.channels = channels
        gen = torch.Generator().manual_seed(seed)
        self.kernels = []
        in_ch = 3
        for out_ch in channels:
            w = torch.randn(out_ch, in_ch, 3, 3, generator=gen)
            w = w * (2.0 / (in_ch * 9)) ** 0.5
            self.kernels.append(w)
            in_ch = out_ch

    def extract(self, image: np.ndarray) -> list[torch.Tensor]:
        if image.ndim != 3 or image.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) image, got shape {image.shape}")
        x = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float32))
        x = x.permute(2, 0, 1).unsqueeze(0) - 0.5
        stages = []
        with torch.no_grad():
            for w in self.kernels:
                x = F.conv2d(x, w, padding=1)
                x = F.relu(x)
                x = F.avg_pool2d(x, 2)
                stages.append(x[0])
        return stages


def fit_gaussian(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and (population) covariance of row-vector features, float64."""
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[0] < 1:
        raise ValueError(f"expected (n, d) feature array, got shape {feats.shape}")
    mu = feats.mean(axis=0)
    centered = feats - mu
    cov = centered.T @ centered / feats.shape[0]
    return mu, cov


def _sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((mat + mat.T) / 2.0)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_gaussian(mu1: np.ndarray, cov1: np.ndarray,
                     mu2: np.ndarray, cov2: np.ndarray,
                     eps_scale: float = 1e-6) -> float:
    """||mu1 - mu2||^2 + tr(C1 + C2 - 2 (C1 C2)^{1/2}).

    Each covariance gets ``eps_scale * trace / dim`` added to its diagonal
    before the square root; small sample sets make the fits rank-deficient.
    The cross term uses eigendecomposition of the symmetrized product
    sqrt(C1) C2 sqrt(C1), clipping tiny negative eigenvalues to zero.
    """
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=np.float64))
    mu2 = np.atleast_1d(np.asarray(mu2, dtype=np.float64))
    cov1 = np.atleast_2d(np.asarray(cov1, dtype=np.float64))
    cov2 = np.atleast_2d(np.asarray(cov2, dtype=np.float64))
    if mu1.shape != mu2.shape or cov1.shape != cov2.shape:
        raise ValueError("mismatched Gaussian parameter shapes")
    d = mu1.shape[0]
    c1 = cov1 + np.eye(d) * (eps_scale * np.trace(cov1) / d)
    c2 = cov2 + np.eye(d) * (eps_scale * np.trace(cov2) / d)
    root1 = _sqrtm_psd(c1)
    inner = root1 @ c2 @ root1
    vals = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    floor = -1e-8 * max(1.0, float(np.abs(vals).max()))
    if vals.min() < floor:
        raise RuntimeError("covariance product is not PSD after regularization")
    tr_cross = float(np.sqrt(np.clip(vals, 0.0, None)).sum())
    diff = mu1 - mu2
    return float(diff @ diff + np.trace(c1) + np.trace(c2) - 2.0 * tr_cross)


def _stage_vectors(stage: torch.Tensor) -> np.ndarray:
    c = stage.shape[0]
    return stage.reshape(c, -1).T.numpy().astype(np.float64)


def style_distance(stylized: list[np.ndarray], styles: list[np.ndarray],
                   fx: FeatureExtractor, min_images: int = 8) -> float:
    """Mean over stages of the Fréchet distance between per-position
    feature distributions pooled across each image set.

    ``min_images`` is the documented feature-fitting minimum for set-level
    use; callers computing per-pair distances may lower it explicitly.
    """
    if not stylized or not styles:
        raise ValueError("style_distance needs non-empty image sets")
    if len(stylized) < min_images or len(styles) < min_images:
        raise ValueError(
            f"style_distance needs at least {min_images} images per set, "
            f"got {len(stylized)} and {len(styles)}")
    feats_a = [fx.extract(img) for img in stylized]
    feats_b = [fx.extract(img) for img in styles]
    total = 0.0
    for s in range(len(fx.channels)):
        va = np.concatenate([_stage_vectors(f[s]) for f in feats_a], axis=0)
        vb = np.concatenate([_stage_vectors(f[s]) for f in feats_b], axis=0)
        total += frechet_gaussian(*fit_gaussian(va), *fit_gaussian(vb))
    return total / len(fx.channels)


def content_distance(stylized: np.ndarray, content: np.ndarray,
                     fx: FeatureExtractor) -> float:
    """Mean over stages of unit-normalized feature-difference energy."""
    if stylized.shape != content.shape:
        raise ValueError(f"resolution mismatch: {stylized.shape} vs {content.shape}")
    total = 0.0
    for fa, fb in zip(fx.extract(stylized), fx.extract(content)):
        na = F.normalize(fa, dim=0, eps=1e-8)
        nb = F.normalize(fb, dim=0, eps=1e-8)
        total += float(((na - nb) ** 2).mean().item())
    return total / len(fx.channels)


def structure_distance(stylized: np.ndarray, content: np.ndarray,
                       fx: FeatureExtractor, patch: int = 4) -> float:
    """Distance between patch self-correlation matrices of stage-1 features."""
    if stylized.shape != content.shape:
        raise ValueError(f"resolution mismatch: {stylized.shape} vs {content.shape}")

    def corr(img: np.ndarray) -> np.ndarray:
        feat = fx.extract(img)[0]
        c, h, w = feat.shape
        ph, pw = h // patch, w // patch
        tiles = feat[:, : ph * patch, : pw * patch]
        tiles = tiles.reshape(c, ph, patch, pw, patch).permute(1, 3, 0, 2, 4)
        vecs = tiles.reshape(ph * pw, -1).numpy().astype(np.float64)
        vecs = vecs - vecs.mean(axis=1, keepdims=True)
        norms = np.linalg.norm(vecs, axis=1, keepdims=True)
        vecs = vecs / np.maximum(norms, 1e-12)
        return vecs @ vecs.T

    ra, rb = corr(stylized), corr(content)
    return float(((ra - rb) ** 2).mean())


def combined_metric(style_dist: float, content_dist: float) -> float:
    """The product identity (1 + S) * (1 + C) used by the published tables."""
    if style_dist < 0.0 or content_dist < 0.0:
        raise ValueError("combined_metric requires non-negative distances")
    return (1.0 + style_dist) * (1.0 + content_dist)


@dataclass(frozen=True)
class MetricRecord:
    style: float
    content: float
    structure: float
    combined: float

    def __post_init__(self):
        if min(self.style, self.content, self.structure) < 0.0:
            raise ValueError("metric distances must be non-negative")
        expected = combined_metric(self.style, self.content)
        if abs(self.combined - expected) > COMBINED_TOL:
            raise ValueError(
                f"combined metric {self.combined} violates the product identity "
                f"(expected {expected})")

    @classmethod
    def from_components(cls, style: float, content: float, structure: float) -> "MetricRecord":
        return cls(style, content, structure, combined_metric(style, content))


@dataclass(frozen=True)
class TableRow:
    source_table: str
    column_name: str
    artfid: float
    fid: float
    lpips: float


@dataclass(frozen=True)
class TableCheck:
    row: TableRow
    computed: float
    residual: float
    ok: bool


def load_paper_tables(path: str | Path | None = None) -> list[TableRow]:
    """Published (ArtFID, FID, LPIPS) triples shipped as a data fixture."""
    if path is None:
        source = resources.files("stylesched.data").joinpath("paper_tables.csv")
        text = source.read_text()
    else:
        text = Path(path).read_text()
    rows = []
    for rec in csv.DictReader(text.splitlines()):
        rows.append(TableRow(rec["source_table"], rec["column_name"],
                             float(rec["artfid"]), float(rec["fid"]), float(rec["lpips"])))
    return rows


def validate_table_identity(rows: list[TableRow], tol: float = TABLE_TOL) -> list[TableCheck]:
    """Check |(1 + FID)(1 + LPIPS) - ArtFID| <= tol for every row."""
    checks = []
    for row in rows:
        computed = combined_metric(row.fid, row.lpips)
        residual = computed - row.artfid
        checks.append(TableCheck(row, computed, residual, abs(residual) <= tol))
    return checks
