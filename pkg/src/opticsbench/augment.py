"""Training-time blur augmentation with the benchmark kernel stack.

Each image draws one kernel uniformly from the configured severity, gets
convolved per channel, and is mixed back with the clean image by a
Beta(alpha, alpha) weight; the batch is then normalized to dataset mean and
standard deviation. All random draws are keyed on (seed, global sample
index) via a counter-based generator, so multi-worker loaders reproduce
single-worker results exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .convolve import convolve_reflect, counter_rng
from .errors import ConfigurationError, DomainError
from .pupil import KernelStack

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

# Philox stream tag for the augmentation pipeline gate.
_GATE_STREAM = 0x6A7E


@dataclass
class AugmentConfig:
    """Augmentation policy: kernels at one severity, mixing strength, stats."""

    stack: KernelStack
    severity: int = 3
    alpha: float = 1.0
    mean: tuple = IMAGENET_MEAN
    std: tuple = IMAGENET_STD
    rng_seed: int = 0
    corruptions: Optional[list[str]] = None  # restrict kernel pool; None = all optical
    force_p: Optional[float] = None          # pin the mixing weight (testing/ablation)

    def __post_init__(self):
        if self.alpha <= 0:
            raise ConfigurationError("alpha must be > 0")
        if len(self.mean) != 3 or len(self.std) != 3:
            raise ConfigurationError("mean and std must have 3 components")
        if any(s <= 0 for s in self.std):
            raise ConfigurationError("std components must be > 0")
        if self.force_p is not None and not 0.0 <= self.force_p <= 1.0:
            raise ConfigurationError("force_p must lie in [0, 1]")

    def kernel_keys(self) -> list[tuple[str, int, int]]:
        pool = self.corruptions
        if pool is None:
            pool = [c for c in self.stack.corruptions() if c != "disk_baseline"]
        keys = self.stack.keys_at(self.severity, corruptions=pool)
        if not keys:
            raise ConfigurationError(
                f"stack holds no kernels at severity {self.severity} for {pool}")
        return keys


@dataclass(frozen=True)
class MixDraw:
    """Per-image randomness: which kernel and how much of the blur to keep."""

    kernel_key: tuple
    p: float


def draw_for_sample(cfg: AugmentConfig, sample_index: int) -> MixDraw:
    """The (kernel, p) pair for one global sample index; pure function."""
    keys = cfg.kernel_keys()
    rng = counter_rng(cfg.rng_seed, sample_index)
    key = keys[int(rng.integers(len(keys)))]
    p = float(rng.beta(cfg.alpha, cfg.alpha))
    if cfg.force_p is not None:
        p = cfg.force_p
    return MixDraw(key, p)


def normalize_batch(batch: np.ndarray, mean, std) -> np.ndarray:
    """Per-channel (x - mean) / std on an Nx3xHxW batch."""
    arr = np.asarray(batch, dtype=float)
    if arr.ndim != 4 or arr.shape[1] != 3:
        raise DomainError(f"expected Nx3xHxW batch, got {arr.shape}")
    if any(s <= 0 for s in std):
        raise ConfigurationError("std components must be > 0")
    mean = np.asarray(mean, dtype=float).reshape(1, 3, 1, 1)
    std = np.asarray(std, dtype=float).reshape(1, 3, 1, 1)
    return (arr - mean) / std


def optics_augment_batch(batch: np.ndarray, cfg: AugmentConfig,
                         sample_offset: int = 0) -> np.ndarray:
    """Blur-and-mix a batch, then normalize it.

    ``batch`` is Nx3xHxW with values in [0, 1]. Image i uses the draws of
    global sample index ``sample_offset + i``, which makes results
    independent of batch splits and worker scheduling. The mixed image
    (before normalization) stays in [0, 1].
    """
    arr = np.asarray(batch, dtype=float)
    if arr.ndim != 4 or arr.shape[1] != 3:
        raise DomainError(f"expected Nx3xHxW batch, got {arr.shape}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise DomainError("batch values must lie in [0, 1]")
    cfg.kernel_keys()  # validates the pool up front
    out = np.empty_like(arr)
    for i in range(arr.shape[0]):
        draw = draw_for_sample(cfg, sample_offset + i)
        kernel = cfg.stack[draw.kernel_key]
        for c in range(3):
            blurred = convolve_reflect(arr[i, c], kernel.channel(c).astype(float))
            mixed = (1.0 - draw.p) * arr[i, c] + draw.p * blurred
            out[i, c] = np.clip(mixed, 0.0, 1.0)
    return normalize_batch(out, cfg.mean, cfg.std)


class OpticsAugment:
    """Stateful wrapper that advances the global sample counter per batch."""

    def __init__(self, cfg: AugmentConfig):
        self.cfg = cfg
        self._counter = 0

    def __call__(self, batch: np.ndarray) -> np.ndarray:
        out = optics_augment_batch(batch, self.cfg, sample_offset=self._counter)
        self._counter += np.asarray(batch).shape[0]
        return out


@dataclass(frozen=True)
class GateDraw:
    apply_external: bool
    apply_optics: bool
    weights: tuple  # the four Dirichlet components, sum 1


def pipeline_gate(rng: np.random.Generator) -> GateDraw:
    """Decide which augmenters run when chaining with an external one.

    Draws (q1..q4) from a flat Dirichlet in four dimensions; the external
    augmenter fires with probability q1 and the blur augmentation with q2.
    The two auxiliary components keep each marginal probability at 1/4, so
    stacking never saturates the corruption strength.
    """
    q = rng.dirichlet(np.ones(4))
    u = rng.uniform(size=2)
    return GateDraw(bool(u[0] < q[0]), bool(u[1] < q[1]), tuple(float(x) for x in q))


def gate_rng(seed: int) -> np.random.Generator:
    """Dedicated generator for the pipeline gate."""
    return counter_rng(seed, _GATE_STREAM)
