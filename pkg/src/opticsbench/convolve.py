"""Reflect-padded FFT convolution shared by the corruptor, augmentor and matcher."""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve

from .errors import DomainError


def convolve_reflect(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """2-D convolution with symmetric (reflect) border handling.

    The image is padded by half the kernel per side so border pixels see
    mirrored content instead of an implicit black frame.
    """
    if plane.ndim != 2 or kernel.ndim != 2:
        raise DomainError("convolve_reflect expects 2-D arrays")
    ph = kernel.shape[0] // 2
    pw = kernel.shape[1] // 2
    padded = np.pad(np.asarray(plane, dtype=float), ((ph, ph), (pw, pw)),
                    mode="symmetric")
    out = fftconvolve(padded, np.asarray(kernel, dtype=float), mode="same")
    return out[ph:ph + plane.shape[0], pw:pw + plane.shape[1]]


def counter_rng(seed: int, stream: int) -> np.random.Generator:
    """Philox generator keyed by (seed, stream): stateless, order-independent.

    Giving every image/sample index its own key makes draws reproducible no
    matter how work is scheduled across workers.
    """
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1),
                                                     stream & (2**64 - 1)]))
