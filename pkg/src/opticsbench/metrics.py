"""PSF-level and image-level quality metrics used for kernel matching.

MTF curves are DC-normalized magnitude spectra. Kernel MTFs are computed on
a zero-padded 64x64 grid and sliced along 0/45/90/135 degree rays; image
texture MTFs use the cross-spectral estimator on the dead-leaves chart.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.ndimage import correlate1d

from .errors import DomainError

MTF_PAD = 64
SLICE_ANGLES = (0.0, 45.0, 90.0, 135.0)

# Acutance weighting: CSF(f) = f * exp(-c*f), peaked at 1/c cycles/px.
CSF_PEAK_FREQ = 0.1

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 255.0


@dataclass(frozen=True)
class MtfCurve:
    """Sampled MTF along one direction (or radially averaged)."""

    frequencies: np.ndarray          # ascending, cycles/px, in [0, 0.5]
    values: np.ndarray               # DC-normalized, values[0] == 1
    angle_deg: Union[float, str]     # 0/45/90/135 or "radial"

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if f.shape != v.shape or f.ndim != 1:
            raise DomainError("frequencies and values must be 1-D and equal length")
        if np.any(np.diff(f) <= 0):
            raise DomainError("frequencies must be strictly increasing")
        if abs(v[0] - 1.0) > 1e-6:
            raise DomainError("curves must be DC-normalized (values[0] == 1)")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "values", v)


def mtf2d(kernel_channel: np.ndarray, pad: int = MTF_PAD) -> np.ndarray:
    """DC-centered MTF magnitude of one kernel channel.

    The channel is zero-padded to ``pad`` per side (or kept at its own size
    when larger) before the DFT; the result is normalized to 1 at DC.
    """
    arr = np.asarray(kernel_channel, dtype=float)
    if arr.ndim != 2:
        raise DomainError("kernel channel must be 2-D")
    total = arr.sum()
    if total <= 0 or not np.isfinite(total):
        raise DomainError("kernel channel must have positive finite sum")
    n = max(pad, *arr.shape)
    spectrum = np.abs(np.fft.fft2(arr, s=(n, n)))
    return np.fft.fftshift(spectrum / spectrum[0, 0])


def _ray_profile(mtf: np.ndarray, angle_deg: float) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear samples along a ray from DC, one point per frequency bin."""
    n = mtf.shape[0]
    center = n // 2
    steps = n // 2
    ext = np.pad(mtf, ((0, 2), (0, 2)), mode="wrap")
    a = np.deg2rad(angle_deg)
    k = np.arange(steps + 1)
    fx = center + np.cos(a) * k
    fy = center + np.sin(a) * k
    x0 = np.floor(fx).astype(int)
    y0 = np.floor(fy).astype(int)
    dx = fx - x0
    dy = fy - y0
    vals = (ext[y0, x0] * (1 - dy) * (1 - dx)
            + ext[y0, x0 + 1] * (1 - dy) * dx
            + ext[y0 + 1, x0] * dy * (1 - dx)
            + ext[y0 + 1, x0 + 1] * dy * dx)
    return k / n, vals


def mtf_slice(mtf: np.ndarray, angle_deg: float) -> MtfCurve:
    """Directional MTF slice sampled at the grid frequency step up to 0.5."""
    if angle_deg not in SLICE_ANGLES:
        raise DomainError(f"slice angle must be one of {SLICE_ANGLES}")
    if mtf.ndim != 2 or mtf.shape[0] != mtf.shape[1]:
        raise DomainError("mtf must be a square 2-D array")
    freqs, vals = _ray_profile(mtf, angle_deg)
    return MtfCurve(freqs, vals, angle_deg)


def mtf_radial(mtf: np.ndarray, angle_step_deg: float = 1.0) -> MtfCurve:
    """MTF averaged over rays spanning the full circle."""
    if mtf.ndim != 2 or mtf.shape[0] != mtf.shape[1]:
        raise DomainError("mtf must be a square 2-D array")
    angles = np.arange(0.0, 360.0, angle_step_deg)
    acc = None
    for a in angles:
        freqs, vals = _ray_profile(mtf, a)
        acc = vals if acc is None else acc + vals
    return MtfCurve(freqs, acc / len(angles), "radial")


def mtf50(curve: MtfCurve) -> Optional[float]:
    """Frequency of the first downward 0.5-crossing, or None if absent."""
    v = curve.values
    f = curve.frequencies
    for i in range(1, len(v)):
        if v[i - 1] >= 0.5 > v[i]:
            t = (v[i - 1] - 0.5) / (v[i - 1] - v[i])
            return float(f[i - 1] + t * (f[i] - f[i - 1]))
    return None


def auc(curve: MtfCurve) -> float:
    """Trapezoidal area under the curve over its frequency range."""
    return float(np.trapezoid(curve.values, curve.frequencies))


def acutance(curve: MtfCurve) -> float:
    """CSF-weighted MTF integral; 1 for an identity system.

    The contrast sensitivity model is the band-pass f * exp(-c*f) with its
    peak pinned at CSF_PEAK_FREQ cycles/px.
    """
    f = curve.frequencies
    csf = f * np.exp(-f / CSF_PEAK_FREQ)
    denom = np.trapezoid(csf, f)
    return float(np.trapezoid(curve.values * csf, f) / denom)


def _to_gray(img: np.ndarray) -> np.ndarray:
    arr = np.asarray(img, dtype=float)
    if arr.ndim == 3:
        arr = arr.mean(axis=2)
    if arr.ndim != 2:
        raise DomainError("images must be 2-D or HxWx3")
    return arr


def _gaussian_taps(size: int, sigma: float) -> np.ndarray:
    half = size // 2
    g = np.exp(-0.5 * (np.arange(-half, half + 1) / sigma) ** 2)
    return g / g.sum()


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local SSIM with the original 11x11 Gaussian window defaults."""
    x = _to_gray(a)
    y = _to_gray(b)
    if x.shape != y.shape:
        raise DomainError(f"image dimensions differ: {x.shape} vs {y.shape}")
    if min(x.shape) < SSIM_WINDOW:
        raise DomainError(f"images must be at least {SSIM_WINDOW} px per side")
    taps = _gaussian_taps(SSIM_WINDOW, SSIM_SIGMA)
    half = SSIM_WINDOW // 2
    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2

    def smooth(z):
        # Separable window; keep only fully-covered (valid) positions.
        out = correlate1d(correlate1d(z, taps, axis=0, mode="constant"),
                          taps, axis=1, mode="constant")
        return out[half:-half, half:-half]

    mu_x = smooth(x)
    mu_y = smooth(y)
    xx = smooth(x * x) - mu_x * mu_x
    yy = smooth(y * y) - mu_y * mu_y
    xy = smooth(x * y) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * xy + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (xx + yy + c2)
    return float(np.mean(num / den))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak SNR in dB for 8-bit range; +inf for identical inputs."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape:
        raise DomainError(f"image dimensions differ: {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(DYNAMIC_RANGE**2 / mse))


def texture_mtf(reference: np.ndarray, degraded: np.ndarray,
                clamp_max: float = 1.1) -> MtfCurve:
    """Radial texture MTF via the cross-spectral density estimator.

    Re{CSD(ref, degraded)} / PSD(ref), radially binned, clamped to
    [0, clamp_max] and DC-normalized. The cross-spectrum rejects additive
    noise that is uncorrelated with the reference.
    """
    ref = _to_gray(reference)
    deg = _to_gray(degraded)
    if ref.shape != deg.shape:
        raise DomainError(f"image dimensions differ: {ref.shape} vs {deg.shape}")
    n = ref.shape[0]
    if ref.shape[0] != ref.shape[1]:
        raise DomainError("texture charts must be square")
    f_ref = np.fft.fft2(ref)
    f_deg = np.fft.fft2(deg)
    csd = np.real(np.conj(f_ref) * f_deg)
    psd = np.abs(f_ref) ** 2

    fx = np.fft.fftfreq(n)
    fxx, fyy = np.meshgrid(fx, fx)
    bins = np.rint(np.sqrt(fxx**2 + fyy**2) * n).astype(int)
    n_bins = n // 2 + 1
    sel = bins < n_bins
    num = np.bincount(bins[sel], weights=csd[sel], minlength=n_bins)
    den = np.bincount(bins[sel], weights=psd[sel], minlength=n_bins)
    if np.any(den <= 0):
        raise DomainError("reference power spectrum has an empty band")
    curve = np.clip(num / den, 0.0, clamp_max)
    if curve[0] <= 0:
        raise DomainError("degenerate DC response")
    curve = curve / curve[0]
    return MtfCurve(np.arange(n_bins) / n, curve, "radial")


def curve_csv_rows(curve: MtfCurve, name: str) -> list[tuple[str, str, float]]:
    """(metric, angle, value) rows for CSV reports."""
    angle = str(curve.angle_deg)
    rows = []
    m50 = mtf50(curve)
    rows.append((f"{name}_mtf50", angle, float("nan") if m50 is None else m50))
    rows.append((f"{name}_auc", angle, auc(curve)))
    return rows
