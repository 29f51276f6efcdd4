"""Synthetic test charts: slanted edge and the spilled-coins dead-leaves chart.

Both generators are pure functions of their arguments. The coins chart uses
a counter-based Philox stream keyed on the seed, so regeneration is
bit-identical regardless of what else has drawn random numbers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from PIL import Image

from .errors import DomainError

CHART_SIZE = 224

# Stream tag separating chart draws from other Philox users of the same seed.
_COINS_STREAM = 0x5C01


@dataclass(frozen=True)
class ChartImage:
    pixels: np.ndarray  # uint8, (size, size)
    chart_kind: str     # "slanted_edge" | "spilled_coins"
    seed: Optional[int] = None

    def __post_init__(self):
        if self.pixels.dtype != np.uint8 or self.pixels.ndim != 2:
            raise DomainError("chart pixels must be a 2-D uint8 array")

    def save_png(self, path) -> None:
        Image.fromarray(self.pixels, mode="L").save(path, format="PNG")


def _clipped_linear_integral(a: float, s: float) -> float:
    """Integral of clip(a - s*t, 0, 1) dt over t in [0, 1], s >= 0."""
    if s < 1e-12:
        return min(max(a, 0.0), 1.0)
    # Value decreases linearly from a to a-s; integrate the clipped ramp.
    t_hi = min(max(a - 1.0, 0.0) / s, 1.0)      # region where value == 1
    t_lo = min(max(a, 0.0) / s, 1.0)            # end of the nonzero region
    mid = 0.0
    if t_lo > t_hi:
        v_start = min(max(a - s * t_hi, 0.0), 1.0)
        v_end = min(max(a - s * t_lo, 0.0), 1.0)
        mid = 0.5 * (v_start + v_end) * (t_lo - t_hi)
    return t_hi + mid


def gen_slanted_edge(angle_deg: float = 5.0, size: int = CHART_SIZE,
                     low: int = 0, high: int = 255) -> ChartImage:
    """Black/white edge through the image center, tilted off vertical.

    Pixels straddling the edge take their exact area-coverage gray level;
    the bright side lies to the right. Deterministic.
    """
    if not 2.0 <= angle_deg <= 10.0:
        raise DomainError("edge angle must lie in [2, 10] degrees")
    slope = np.tan(np.deg2rad(angle_deg))  # px of x drift per px of y
    center = size / 2.0
    img = np.empty((size, size), dtype=np.uint8)
    rows = np.arange(size)
    # Edge x-position at the top of each pixel row.
    edge_top = center + slope * (rows - center)
    for y in range(size):
        # Coverage of the bright half-plane x > edge(y') across the pixel.
        a = np.arange(size) + 1.0 - edge_top[y]
        cov = np.array([_clipped_linear_integral(ai, slope) for ai in a])
        img[y] = np.rint(low + (high - low) * cov).astype(np.uint8)
    return ChartImage(img, "slanted_edge")


def gen_spilled_coins(seed: int, size: int = CHART_SIZE,
                      r_min: float = 1.0, r_max: float = 40.0,
                      gray_lo: float = 50.0, gray_hi: float = 200.0) -> ChartImage:
    """Dead-leaves chart: occluding disks with a scale-invariant radius law.

    Radii follow pdf ~ r^-3 on [r_min, r_max]; intensities are uniform
    grays. Disks are accumulated until they jointly cover the frame, then
    painted back to front so earlier draws occlude later ones.
    """
    rng = np.random.Generator(np.random.Philox(key=[seed, _COINS_STREAM]))
    covered = np.zeros((size, size), dtype=bool)
    remaining = size * size
    disks = []
    while remaining > 0:
        cx = rng.uniform(0.0, size)
        cy = rng.uniform(0.0, size)
        u = rng.uniform()
        # Inverse CDF of pdf ~ r^-3 truncated to [r_min, r_max].
        r = (r_min**-2 - u * (r_min**-2 - r_max**-2)) ** -0.5
        gray = rng.uniform(gray_lo, gray_hi)
        x0 = max(int(np.floor(cx - r)), 0)
        x1 = min(int(np.ceil(cx + r)) + 1, size)
        y0 = max(int(np.floor(cy - r)), 0)
        y1 = min(int(np.ceil(cy + r)) + 1, size)
        if x0 >= x1 or y0 >= y1:
            continue
        yy, xx = np.mgrid[y0:y1, x0:x1]
        mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
        newly = mask & ~covered[y0:y1, x0:x1]
        remaining -= int(newly.sum())
        covered[y0:y1, x0:x1] |= mask
        disks.append((y0, y1, x0, x1, mask, gray))
    img = np.zeros((size, size))
    for y0, y1, x0, x1, mask, gray in reversed(disks):
        img[y0:y1, x0:x1][mask] = gray
    return ChartImage(np.clip(np.rint(img), 0, 255).astype(np.uint8),
                      "spilled_coins", seed)
