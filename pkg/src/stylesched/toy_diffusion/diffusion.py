"""Deterministic DDIM sampling and inversion with per-step feature capture.

Timestep indices everywhere follow denoising order: index 0 is the first
(highest-noise) denoising step, index ``n - 1`` the last.  Noise levels in
the schedule are stored coarsest-last (``alphas_bar[0]`` near 1), so the
sampler walks levels from the end of the schedule down to the start.

Q/K/V feature banks are captured from the deterministic reconstruction pass
(vanilla sampling from the inverted noise) rather than from the
inversion-direction evaluations.  The two coincide in the exact-inversion
limit, and reconstruction-pass capture makes identity configurations
(own bank, gamma=1, tau=1) reproduce vanilla sampling bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import torch

TIMESTEPS_DEFAULT = 50
BANK_LAYERS = (6, 7, 8, 9, 10, 11)

InjectionHook = Callable[[int, int, torch.Tensor, torch.Tensor, torch.Tensor], Optional[torch.Tensor]]
ConditioningHook = Callable[[int, int], Optional[torch.Tensor]]


@dataclass(frozen=True)
class NoiseSchedule:
    """Cumulative signal fractions, strictly decreasing on (0, 1]."""

    alphas_bar: tuple[float, ...]
    us: tuple[float, ...]

    def __post_init__(self):
        prev = 1.0 + 1e-12
        for a in self.alphas_bar:
            if not 0.0 < a <= 1.0:
                raise ValueError(f"alphas_bar entries must lie in (0, 1], got {a}")
            if a >= prev:
                raise ValueError("alphas_bar must be strictly decreasing")
            prev = a
        if len(self.us) != len(self.alphas_bar):
            raise ValueError("us and alphas_bar must have equal length")

    @property
    def n_steps(self) -> int:
        return len(self.alphas_bar)

    @classmethod
    def cosine(cls, n_steps: int = TIMESTEPS_DEFAULT, s: float = 0.008,
               u_max: float = 0.9) -> "NoiseSchedule":
        """Cosine-shaped decay; the exact constants are a config default.

        Every step count subdivides the same diffusion-time span (0, u_max],
        so coarser and finer trajectories share their terminal noise level
        and round-trip errors are comparable across step counts.
        """
        if n_steps == 0:
            return cls((), ())
        f0 = math.cos(s / (1.0 + s) * math.pi / 2.0) ** 2
        us, alphas = [], []
        for i in range(n_steps):
            u = u_max * (i + 1) / n_steps
            f = math.cos((u + s) / (1.0 + s) * math.pi / 2.0) ** 2
            us.append(u)
            alphas.append(f / f0)
        return cls(tuple(alphas), tuple(us))


@dataclass(frozen=True)
class LatentTrajectory:
    latents: tuple[torch.Tensor, ...]
    direction: str  # "inversion" or "sampling"

    def __len__(self):
        return len(self.latents)


class QKV(NamedTuple):
    q: torch.Tensor
    k: torch.Tensor
    v: torch.Tensor


class FeatureBank:
    """Captured attention features keyed by (timestep index, layer label)."""

    def __init__(self, n_steps: int, layers: tuple[int, ...] = BANK_LAYERS):
        self.n_steps = n_steps
        self.layers = tuple(layers)
        self._store: dict[tuple[int, int], QKV] = {}
        self._frozen = False

    def add(self, t: int, layer: int, q: torch.Tensor, k: torch.Tensor, v: torch.Tensor) -> None:
        if self._frozen:
            raise ValueError("feature bank is frozen")
        key = (t, layer)
        if key in self._store:
            raise ValueError(f"feature bank already holds entry for {key}")
        self._store[key] = QKV(q.detach().clone(), k.detach().clone(), v.detach().clone())

    def freeze(self) -> "FeatureBank":
        self._frozen = True
        return self

    def get(self, t: int, layer: int) -> QKV:
        try:
            return self._store[(t, layer)]
        except KeyError:
            raise KeyError(f"feature bank has no entry for (t={t}, layer={layer})") from None

    def is_complete(self, n_steps: int | None = None,
                    layers: tuple[int, ...] | None = None) -> bool:
        steps = self.n_steps if n_steps is None else n_steps
        labels = self.layers if layers is None else layers
        return all((t, l) in self._store for t in range(steps) for l in labels)

    def __len__(self):
        return len(self._store)

    def __contains__(self, key):
        return key in self._store


class QKVCapture:
    """Injection hook that records features and leaves computation untouched."""

    def __init__(self, n_steps: int, layers: tuple[int, ...] = BANK_LAYERS):
        self.bank = FeatureBank(n_steps, layers)

    def __call__(self, t: int, layer: int, q, k, v):
        if layer in self.bank.layers:
            self.bank.add(t, layer, q, k, v)
        return None


def _check_latent(x: torch.Tensor, w) -> None:
    expected = (w.config.latent_channels, w.config.latent_size, w.config.latent_size)
    if tuple(x.shape) != expected:
        raise ValueError(f"latent shape {tuple(x.shape)} does not match model {expected}")


def _check_finite(x: torch.Tensor, where: str) -> None:
    if not torch.isfinite(x).all():
        raise RuntimeError(f"non-finite latent during {where}")


def _bind(hook, t):
    if hook is None:
        return None
    return lambda layer, *args: hook(t, layer, *args)


def _bind_cond(hook, t):
    if hook is None:
        return None
    return lambda layer: hook(t, layer)


def ddim_sample(x_T: torch.Tensor, w, ns: NoiseSchedule,
                attn_hook: InjectionHook | None = None,
                cond_hook: ConditioningHook | None = None) -> tuple[torch.Tensor, LatentTrajectory]:
    """Deterministic DDIM generation from a terminal noise latent.

    Hooks receive the denoising step index (0 = highest noise) and the
    decoder layer label; with no hooks this is vanilla generation.
    """
    _check_latent(x_T, w)
    n = ns.n_steps
    x = x_T
    traj = [x]
    with torch.no_grad():
        for i in range(n):
            lvl = n - 1 - i
            ab = ns.alphas_bar[lvl]
            ab_next = ns.alphas_bar[lvl - 1] if lvl > 0 else 1.0
            eps = w.model(x.unsqueeze(0), ns.us[lvl],
                          attn_hook=_bind(attn_hook, i), cond_hook=_bind_cond(cond_hook, i))[0]
            x0_hat = (x - math.sqrt(1.0 - ab) * eps) / math.sqrt(ab)
            x = math.sqrt(ab_next) * x0_hat + math.sqrt(1.0 - ab_next) * eps
            _check_finite(x, f"sampling step {i}")
            traj.append(x)
    return x, LatentTrajectory(tuple(traj), "sampling")


def ddim_invert(x0: torch.Tensor, w, ns: NoiseSchedule,
                capture: bool = True) -> tuple[torch.Tensor, FeatureBank | None, LatentTrajectory]:
    """Map a clean latent to its terminal noise latent.

    Returns the terminal latent, a complete Q/K/V bank over every
    (timestep, decoder layer) pair captured from the reconstruction pass
    (see module docstring), and the inversion trajectory.
    """
    _check_latent(x0, w)
    n = ns.n_steps
    x = x0
    traj = [x]
    with torch.no_grad():
        for j in range(n):
            ab_target = ns.alphas_bar[j]
            ab_from = ns.alphas_bar[j - 1] if j > 0 else 1.0
            eps = w.model(x.unsqueeze(0), ns.us[j])[0]
            x0_hat = (x - math.sqrt(1.0 - ab_from) * eps) / math.sqrt(ab_from)
            x = math.sqrt(ab_target) * x0_hat + math.sqrt(1.0 - ab_target) * eps
            _check_finite(x, f"inversion step {j}")
            traj.append(x)
    bank = None
    if capture:
        recorder = QKVCapture(n)
        ddim_sample(x, w, ns, attn_hook=recorder)
        bank = recorder.bank.freeze()
        if not bank.is_complete():
            raise RuntimeError("feature capture produced an incomplete bank")
    return x, bank, LatentTrajectory(tuple(traj), "inversion")


def adain_init(content_noise: torch.Tensor, style_noise: torch.Tensor) -> torch.Tensor:
    """Renormalize content noise channels to the style's mean and std.

    Statistics are population moments over spatial positions, computed in
    float64.  If the style statistics already equal the content's the input
    is returned unchanged (the exact value of the identity map).
    """
    if content_noise.shape != style_noise.shape:
        raise ValueError(
            f"shape mismatch: {tuple(content_noise.shape)} vs {tuple(style_noise.shape)}")
    c = content_noise.shape[0]
    flat_c = content_noise.reshape(c, -1).to(torch.float64)
    flat_s = style_noise.reshape(c, -1).to(torch.float64)
    mu_c, mu_s = flat_c.mean(dim=1), flat_s.mean(dim=1)
    sigma_c = flat_c.std(dim=1, correction=0)
    sigma_s = flat_s.std(dim=1, correction=0)
    if float(sigma_c.min()) < 1e-12:
        raise ValueError("content noise has a zero-variance channel")
    if torch.equal(mu_c, mu_s) and torch.equal(sigma_c, sigma_s):
        return content_noise.clone()
    out = (flat_c - mu_c[:, None]) / sigma_c[:, None] * sigma_s[:, None] + mu_s[:, None]
    return out.reshape(content_noise.shape).to(content_noise.dtype)
