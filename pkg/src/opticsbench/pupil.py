"""Circular pupil construction and scalar-diffraction PSF kernels.

A pupil of ``pupil_diameter`` samples is embedded in a ``grid_size`` DFT
grid; the intensity PSF is |FFT(mask * exp(-i * 2*pi/lambda * W))|^2. With
the default 256/128 geometry the optical cutoff sits exactly at the image
Nyquist frequency (0.5 cycles/pixel), i.e. oversampling factor Q = 2.

Kernels are 25x25x3 crops around the intensity centroid, l1-normalized per
channel. The DFT maps a fixed pupil to an image-plane pitch proportional to
wavelength, so the red/blue planes are resampled onto the green channel's
pixel pitch; equal wave counts therefore still produce chromatic shape
differences, and the blue plane of a red/green-only aberration equals the
unaberrated kernel.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ConfigurationError, DegenerateKernelError, DomainError
from .zernike import DEFAULT_WAVELENGTHS_NM, FRINGE_MAX, ZernikeSpec, eval_fringe

DEFAULT_GRID_SIZE = 256
DEFAULT_PUPIL_DIAMETER = 128
KERNEL_SIZE = 25

# Reference channel whose image-plane pitch defines the kernel pixel.
REFERENCE_CHANNEL = 1

# (radius px, Gaussian sigma px) of the disk defocus baseline, severity 1..5,
# as used by the common-corruptions benchmark suite.
DISK_SEVERITIES = {
    1: (3, 0.1),
    2: (4, 0.5),
    3: (6, 0.5),
    4: (8, 0.5),
    5: (10, 0.5),
}

CORRUPTION_IDS = {
    "astigmatism": 0,
    "coma": 1,
    "defocus_spherical": 2,
    "trefoil": 3,
    "disk_baseline": 4,
}
CORRUPTION_NAMES = {v: k for k, v in CORRUPTION_IDS.items()}

# Fraction of PSF energy that should survive the 25x25 crop before we warn.
ENERGY_WARN_FRACTION = 0.9


@dataclass(frozen=True)
class PupilGrid:
    """Sampled circular aperture with precomputed polar coordinates."""

    grid_size: int
    pupil_diameter: int
    mask: np.ndarray
    rho: np.ndarray
    theta: np.ndarray

    @property
    def oversampling(self) -> float:
        return self.grid_size / self.pupil_diameter

    @property
    def cutoff_cycles_per_px(self) -> float:
        """Incoherent MTF cutoff of the aperture, in cycles per PSF pixel."""
        return self.pupil_diameter / self.grid_size


def build_pupil(grid_size: int = DEFAULT_GRID_SIZE,
                pupil_diameter: int = DEFAULT_PUPIL_DIAMETER) -> PupilGrid:
    """Build the circular aperture mask on a DFT grid.

    Requires even positive sizes and grid_size >= 2 * pupil_diameter so the
    PSF is sampled at or above Nyquist.
    """
    if grid_size <= 0 or pupil_diameter <= 0:
        raise ConfigurationError("grid_size and pupil_diameter must be positive")
    if grid_size % 2 or pupil_diameter % 2:
        raise ConfigurationError("grid_size and pupil_diameter must be even")
    if grid_size < 2 * pupil_diameter:
        raise ConfigurationError(
            f"oversampling {grid_size / pupil_diameter:.2f} < 2 would alias the PSF")
    radius = pupil_diameter / 2.0
    idx = np.arange(grid_size) - grid_size // 2
    x, y = np.meshgrid(idx, idx)
    rho = np.sqrt(x * x + y * y) / radius
    theta = np.arctan2(y, x)
    mask = rho <= 1.0
    rho = np.where(mask, rho, 0.0)
    for arr in (mask, rho, theta):
        arr.setflags(write=False)
    return PupilGrid(grid_size, pupil_diameter, mask, rho, theta)


def psf_mono(pupil: PupilGrid, spec: ZernikeSpec, channel: int) -> np.ndarray:
    """Monochromatic intensity PSF on the full grid, centered (DC-shifted).

    The phase factor is 2*pi/lambda * W with W the channel wavefront; the
    propagation distance is folded into normalized units.
    """
    if channel not in (0, 1, 2):
        raise DomainError(f"channel must be 0, 1 or 2, got {channel}")
    coeffs = spec.coefficients[channel]
    phase_waves = np.zeros_like(pupil.rho)
    for j in range(1, FRINGE_MAX + 1):
        a = coeffs[j - 1]
        if a != 0.0:
            phase_waves += a * eval_fringe(j, pupil.rho, pupil.theta)
    # W = lambda * sum(A_j Z_j), so 2*pi/lambda * W = 2*pi * sum(A_j Z_j).
    field = pupil.mask * np.exp(-2j * np.pi * phase_waves)
    psf = np.abs(np.fft.fftshift(np.fft.fft2(field))) ** 2
    return psf


def intensity_centroid(raw: np.ndarray) -> tuple[float, float]:
    """(row, col) centroid of a non-negative intensity array."""
    total = raw.sum()
    if total <= 0:
        raise DegenerateKernelError("cannot take the centroid of a zero array")
    rows = np.arange(raw.shape[0])
    cols = np.arange(raw.shape[1])
    cy = float(raw.sum(axis=1) @ rows / total)
    cx = float(raw.sum(axis=0) @ cols / total)
    return cy, cx


def _sample_window(raw: np.ndarray, center: tuple[float, float],
                   step: float, size: int) -> np.ndarray:
    """Bilinearly sample a size x size window around ``center``.

    ``step`` is the source-array spacing per output pixel; step != 1
    rescales the pattern about its centroid (used for per-wavelength
    image-plane pitch).
    """
    half = (size - 1) / 2.0
    offs = (np.arange(size) - half) * step
    ys = center[0] + offs
    xs = center[1] + offs
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    y0 = np.floor(yy).astype(int)
    x0 = np.floor(xx).astype(int)
    if y0.min() < 0 or x0.min() < 0 or y0.max() + 1 >= raw.shape[0] or x0.max() + 1 >= raw.shape[1]:
        raise DomainError("crop window exceeds the PSF grid")
    dy = yy - y0
    dx = xx - x0
    return (raw[y0, x0] * (1 - dy) * (1 - dx)
            + raw[y0, x0 + 1] * (1 - dy) * dx
            + raw[y0 + 1, x0] * dy * (1 - dx)
            + raw[y0 + 1, x0 + 1] * dy * dx)


def crop_energy_fraction(raw: np.ndarray, size: int = KERNEL_SIZE,
                         step: float = 1.0) -> float:
    """Estimate the fraction of total energy inside the centered crop."""
    window = _sample_window(raw, intensity_centroid(raw), step, size)
    return float(window.sum() * step * step / raw.sum())


def crop_normalize(raw: np.ndarray, size: int = KERNEL_SIZE) -> np.ndarray:
    """Center-crop ``raw`` around its intensity centroid and l1-normalize.

    ``size`` must be odd and fit in the array. Warns when less than 90% of
    the energy survives the crop; raises if essentially none does.
    """
    if size % 2 == 0:
        raise DomainError("crop size must be odd")
    if size > min(raw.shape):
        raise DomainError("crop size exceeds the input array")
    cy, cx = intensity_centroid(raw)
    iy, ix = int(round(cy)), int(round(cx))
    half = size // 2
    iy = min(max(iy, half), raw.shape[0] - half - 1)
    ix = min(max(ix, half), raw.shape[1] - half - 1)
    window = raw[iy - half:iy + half + 1, ix - half:ix + half + 1].astype(float)
    total = window.sum()
    if total < 1e-12:
        raise DegenerateKernelError("crop window holds no energy")
    fraction = float(total / raw.sum())
    if fraction < ENERGY_WARN_FRACTION:
        warnings.warn(f"only {fraction:.1%} of the PSF energy lies inside the "
                      f"{size}x{size} crop", stacklevel=2)
    return window / total


@dataclass
class Kernel:
    """25x25x3 l1-normalized convolution kernel with channel wavelengths."""

    data: np.ndarray  # float32, (size, size, 3), channel sums == 1
    wavelengths_nm: tuple[float, float, float] = DEFAULT_WAVELENGTHS_NM
    label: Optional[tuple[str, int, int]] = None  # (corruption, severity, variant)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 3 or data.shape[2] != 3:
            raise DomainError(f"kernel data must be (h, w, 3), got {data.shape}")
        if not np.all(np.isfinite(data)) or data.min() < 0:
            raise DomainError("kernel entries must be finite and non-negative")
        sums = data.sum(axis=(0, 1), dtype=np.float64)
        if np.any(np.abs(sums - 1.0) > 1e-6):
            raise DomainError(f"kernel channels must sum to 1 +- 1e-6, got {sums}")
        self.data = data

    def channel(self, c: int) -> np.ndarray:
        return self.data[:, :, c]

    def with_label(self, corruption: str, severity: int, variant: int) -> "Kernel":
        return Kernel(self.data, self.wavelengths_nm, (corruption, severity, variant))


def psf_rgb(spec: ZernikeSpec, pupil: PupilGrid, size: int = KERNEL_SIZE) -> Kernel:
    """Render the spec into an RGB kernel, one propagation per channel.

    Each channel's PSF is resampled onto the reference (green) channel's
    image-plane pitch, so shorter wavelengths come out narrower.
    """
    lam_ref = spec.wavelengths_nm[REFERENCE_CHANNEL]
    planes = []
    for c in range(3):
        raw = psf_mono(pupil, spec, c)
        # Detector offset d maps to DFT-bin offset d * lam_ref / lam_c.
        step = lam_ref / spec.wavelengths_nm[c]
        try:
            window = _sample_window(raw, intensity_centroid(raw), step, size)
        except DegenerateKernelError as exc:
            raise DegenerateKernelError(f"channel {c}: {exc}") from exc
        total = window.sum()
        if total < 1e-12:
            raise DegenerateKernelError(f"channel {c}: crop window holds no energy")
        fraction = float(total * step * step / raw.sum())
        if fraction < ENERGY_WARN_FRACTION:
            warnings.warn(f"channel {c}: only {fraction:.1%} of the PSF energy "
                          f"lies inside the {size}x{size} crop", stacklevel=2)
        planes.append(window / total)
    # Normalize in float64; the float32 cast then keeps channel sums within
    # a few 1e-8 of one.
    data = np.stack(planes, axis=-1).astype(np.float32)
    return Kernel(data, spec.wavelengths_nm)


def disk_kernel(radius: float, alias_blur: float,
                wavelengths_nm=DEFAULT_WAVELENGTHS_NM,
                size: int = KERNEL_SIZE) -> Kernel:
    """Uniform disk smoothed by a Gaussian, replicated over 3 channels.

    This is the geometric defocus prototype the optical kernels are matched
    against. The Gaussian anti-alias smoothing runs before normalization so
    the l1 invariant holds exactly.
    """
    if radius < 1:
        raise DomainError("disk radius must be >= 1 pixel")
    if radius > (size - 1) // 2:
        raise DomainError(f"disk radius {radius} exceeds the {size}x{size} support")
    if alias_blur < 0:
        raise DomainError("alias_blur must be >= 0")
    coords = np.arange(size) - size // 2
    x, y = np.meshgrid(coords, coords)
    plane = ((x * x + y * y) <= radius * radius).astype(float)
    if alias_blur > 0:
        plane = gaussian_filter(plane, alias_blur, mode="constant")
    plane = (plane / plane.sum()).astype(np.float32)
    data = np.repeat(plane[:, :, None], 3, axis=2)
    return Kernel(data, wavelengths_nm)


def disk_for_severity(severity: int, wavelengths_nm=DEFAULT_WAVELENGTHS_NM) -> Kernel:
    if severity not in DISK_SEVERITIES:
        raise DomainError(f"severity must be 1..5, got {severity}")
    radius, alias = DISK_SEVERITIES[severity]
    kernel = disk_kernel(radius, alias, wavelengths_nm)
    return kernel.with_label("disk_baseline", severity, 0)


class KernelStack:
    """Kernels indexed by (corruption, severity, variant).

    A complete benchmark stack holds 4 corruptions x 5 severities x
    2 variants = 40 kernels; disk baseline entries may ride along.
    """

    def __init__(self, kernels: Optional[dict] = None):
        self._kernels: dict[tuple[str, int, int], Kernel] = {}
        if kernels:
            for key, kernel in kernels.items():
                self[key] = kernel

    def __setitem__(self, key: tuple[str, int, int], kernel: Kernel):
        corruption, severity, variant = key
        if corruption not in CORRUPTION_IDS:
            raise DomainError(f"unknown corruption {corruption!r}")
        if not 1 <= severity <= 5:
            raise DomainError(f"severity must be 1..5, got {severity}")
        if variant not in (0, 1):
            raise DomainError(f"variant must be 0 or 1, got {variant}")
        if self._kernels:
            existing = next(iter(self._kernels.values()))
            if existing.wavelengths_nm != kernel.wavelengths_nm:
                raise DomainError("all kernels in a stack must share wavelengths")
        self._kernels[key] = kernel.with_label(*key)

    def __getitem__(self, key: tuple[str, int, int]) -> Kernel:
        return self._kernels[key]

    def __contains__(self, key) -> bool:
        return key in self._kernels

    def __len__(self) -> int:
        return len(self._kernels)

    def keys(self):
        return sorted(self._kernels.keys())

    def items(self):
        return [(k, self._kernels[k]) for k in self.keys()]

    @property
    def wavelengths_nm(self) -> tuple[float, float, float]:
        if not self._kernels:
            raise DomainError("empty stack has no wavelengths")
        return next(iter(self._kernels.values())).wavelengths_nm

    def corruptions(self) -> list[str]:
        return sorted({k[0] for k in self._kernels})

    def severities(self) -> list[int]:
        return sorted({k[1] for k in self._kernels})

    def keys_at(self, severity: int, corruptions=None) -> list[tuple[str, int, int]]:
        keys = [k for k in self.keys() if k[1] == severity]
        if corruptions is not None:
            keys = [k for k in keys if k[0] in corruptions]
        return keys

    def is_complete_benchmark(self) -> bool:
        wanted = {(c, s, v)
                  for c in CORRUPTION_IDS if c != "disk_baseline"
                  for s in range(1, 6) for v in (0, 1)}
        return wanted <= set(self._kernels.keys())
