"""Match aberration kernels to the disk defocus baseline per severity.

For every corruption and severity, each Zernike mode in the corruption's
mode pair gets its own kernel whose single coefficient is grid-searched in
0.1-wave steps around an initial guess until the candidate's optical
strength best agrees with the disk baseline. Agreement is a weighted blend
of three metric families: PSF-level MTF statistics, slanted-edge similarity
and spilled-coins texture response.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import metrics
from .charts import ChartImage, gen_slanted_edge, gen_spilled_coins
from .errors import MatchingError
from .pupil import (
    DISK_SEVERITIES,
    Kernel,
    KernelStack,
    PupilGrid,
    build_pupil,
    disk_for_severity,
    psf_rgb,
    _sample_window,
    intensity_centroid,
)
from .zernike import FRINGE_NAMES, ZernikeSpec

# Corruption -> pair of Fringe modes; variant 0 is the first mode.
CORRUPTION_MODES = {
    "astigmatism": (5, 6),
    "coma": (7, 8),
    "defocus_spherical": (4, 9),
    "trefoil": (10, 11),
}

METRIC_FAMILIES = {
    "psf": ("psf_mtf50", "psf_auc", "psf_ssim", "psf_psnr"),
    "slanted_edge": ("edge_ssim", "edge_psnr"),
    "spilled_coins": ("coins_mtf50", "coins_acutance"),
}

# Per-metric weights; families always contribute equally to the composite.
# The MTF50 terms anchor the optical-strength match, the remaining metrics
# break ties between equally sized kernels of different shape: a trefoil or
# coma kernel cannot reproduce both the disk's MTF50 and its ringing AUC,
# and the size agreement is the quantity the severity ladder is built on.
DEFAULT_METRIC_WEIGHTS = {
    "psf_mtf50": 2.0,
    "psf_auc": 0.5,
    "psf_ssim": 0.5,
    "psf_psnr": 0.5,
    "edge_ssim": 1.0,
    "edge_psnr": 1.0,
    "coins_mtf50": 1.0,
    "coins_acutance": 0.5,
}

DEFAULT_CHART_SEED = 1009


@dataclass
class MatchConfig:
    """Search and metric settings for kernel matching."""

    step: float = 0.1                  # coefficient offset step, waves
    search_half_width: float = 0.5     # grid half width, waves
    metric_weights: dict = field(default_factory=lambda: dict(DEFAULT_METRIC_WEIGHTS))
    channel: int = 1                   # which channel feeds the PSF metrics
    chart_seed: int = DEFAULT_CHART_SEED
    edge_angle_deg: float = 5.0
    # severity -> waves, or (mode, severity) -> waves; None = auto-calibrate
    # by bisecting the mean-slice MTF50 against the baseline.
    initial_guess: Optional[dict] = None
    wavelengths_nm: Optional[tuple] = None

    def __post_init__(self):
        if self.step <= 0:
            raise MatchingError("step must be positive")
        ratio = self.search_half_width / self.step
        if abs(ratio - round(ratio)) > 1e-9:
            raise MatchingError("search_half_width must be an integer multiple of step")
        known = {m for family in METRIC_FAMILIES.values() for m in family}
        unknown = set(self.metric_weights) - known
        if unknown:
            raise MatchingError(f"unknown metrics {sorted(unknown)}")
        if any(w < 0 for w in self.metric_weights.values()):
            raise MatchingError("metric weights must be non-negative")

    def guess_for(self, mode: int, severity: int) -> Optional[float]:
        if self.initial_guess is None:
            return None
        if (mode, severity) in self.initial_guess:
            return self.initial_guess[(mode, severity)]
        return self.initial_guess.get(severity)


@dataclass
class MetricRow:
    name: str
    angle: str
    candidate: float
    baseline: float
    distance: float
    flag: str = ""


@dataclass
class ModeMatch:
    mode: int
    mode_name: str
    coefficient: float
    offset: float
    composite: float
    metrics: list
    flags: list


@dataclass
class MatchReport:
    corruption: str
    severity: int
    modes: list  # ModeMatch per variant, in pair order

    @property
    def composite(self) -> float:
        return float(np.mean([m.composite for m in self.modes]))

    def chosen_coefficients(self) -> dict:
        return {m.mode: m.coefficient for m in self.modes}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["corruption", "severity", "mode", "metric", "angle",
                         "candidate", "baseline", "distance", "flag"])
        for m in self.modes:
            for row in m.metrics:
                writer.writerow([self.corruption, self.severity, m.mode, row.name,
                                 row.angle, f"{row.candidate:.6g}",
                                 f"{row.baseline:.6g}", f"{row.distance:.6g}", row.flag])
            writer.writerow([self.corruption, self.severity, m.mode, "composite", "",
                             f"{m.composite:.6g}", "0", f"{m.composite:.6g}",
                             ";".join(m.flags)])
        return buf.getvalue()


@dataclass
class _Bundle:
    """Metrics of one kernel channel, reused across grid candidates."""

    plane: np.ndarray
    mtf50s: dict       # angle -> mtf50 or None
    aucs: dict         # angle -> auc
    edge_conv: np.ndarray
    coins_t50: Optional[float]
    coins_acutance: float


class _ChartConvolver:
    """Linear convolution of fixed charts with many kernels.

    The reflect-padded chart spectra are cached, so each kernel costs one
    forward FFT plus one inverse FFT per chart. Results are identical to
    convolve_reflect on the raw chart.
    """

    def __init__(self, charts: dict, kernel_size: int = 25):
        from scipy import fft as sfft
        self._sfft = sfft
        self._half = kernel_size // 2
        self._spectra = {}
        first = next(iter(charts.values()))
        self._chart_size = first.shape[0]
        padded = self._chart_size + 2 * self._half
        full = padded + kernel_size - 1
        self._shape = (sfft.next_fast_len(full), sfft.next_fast_len(full))
        for name, chart in charts.items():
            pad = np.pad(chart, self._half, mode="symmetric")
            self._spectra[name] = sfft.rfft2(pad, self._shape)

    def convolve(self, plane: np.ndarray) -> dict:
        fk = self._sfft.rfft2(plane, self._shape)
        out = {}
        lo = 2 * self._half  # 'same' crop of the padded image, then unpad
        hi = lo + self._chart_size
        for name, spectrum in self._spectra.items():
            full = self._sfft.irfft2(spectrum * fk, self._shape)
            out[name] = full[lo:hi, lo:hi]
        return out


class MatchContext:
    """Shared pupil, charts and cached baseline bundles for one matching run."""

    def __init__(self, cfg: MatchConfig, pupil: Optional[PupilGrid] = None):
        self.cfg = cfg
        self.pupil = pupil if pupil is not None else build_pupil()
        self.edge = gen_slanted_edge(cfg.edge_angle_deg)
        self.coins = gen_spilled_coins(cfg.chart_seed)
        self._coins_float = self.coins.pixels.astype(float)
        self._edge_float = self.edge.pixels.astype(float)
        self._convolver = _ChartConvolver({"edge": self._edge_float,
                                           "coins": self._coins_float})
        self._baselines: dict[int, tuple[Kernel, _Bundle]] = {}
        self._mode_z: dict[int, np.ndarray] = {}

    def wavelengths(self):
        from .zernike import DEFAULT_WAVELENGTHS_NM
        return self.cfg.wavelengths_nm or DEFAULT_WAVELENGTHS_NM

    def mode_basis(self, mode: int) -> np.ndarray:
        if mode not in self._mode_z:
            from .zernike import eval_fringe
            z = eval_fringe(mode, self.pupil.rho, self.pupil.theta)
            self._mode_z[mode] = np.where(self.pupil.mask, z, 0.0)
        return self._mode_z[mode]

    def bundle(self, plane: np.ndarray) -> _Bundle:
        m2 = metrics.mtf2d(plane)
        m50s, aucs = {}, {}
        for angle in metrics.SLICE_ANGLES:
            curve = metrics.mtf_slice(m2, angle)
            m50s[angle] = metrics.mtf50(curve)
            aucs[angle] = metrics.auc(curve)
        convs = self._convolver.convolve(plane)
        tcurve = metrics.texture_mtf(self._coins_float, convs["coins"])
        return _Bundle(plane, m50s, aucs, convs["edge"],
                       metrics.mtf50(tcurve), metrics.acutance(tcurve))

    def baseline(self, severity: int) -> tuple[Kernel, _Bundle]:
        if severity not in self._baselines:
            kernel = disk_for_severity(severity, self.wavelengths())
            plane = kernel.channel(self.cfg.channel).astype(float)
            self._baselines[severity] = (kernel, self.bundle(plane))
        return self._baselines[severity]


def _distance_terms(cand: _Bundle, base: _Bundle) -> tuple[list, list]:
    """Per-metric rows; a missing MTF50 crossing gives a NaN-distance row."""
    rows, flags = [], []
    for angle in metrics.SLICE_ANGLES:
        c50, b50 = cand.mtf50s[angle], base.mtf50s[angle]
        if c50 is None or b50 is None:
            flags.append(f"mtf50_missing_{angle:g}")
            rows.append(MetricRow("psf_mtf50", f"{angle:g}",
                                  float("nan") if c50 is None else c50,
                                  float("nan") if b50 is None else b50,
                                  float("nan"), "no_crossing_auc_only"))
        else:
            rows.append(MetricRow("psf_mtf50", f"{angle:g}", c50, b50,
                                  abs(c50 - b50) / b50))
        rows.append(MetricRow("psf_auc", f"{angle:g}", cand.aucs[angle],
                              base.aucs[angle],
                              abs(cand.aucs[angle] - base.aucs[angle]) / base.aucs[angle]))
    # Shape similarity between the kernel arrays, rescaled to 8-bit range.
    peak = max(cand.plane.max(), base.plane.max())
    scale = metrics.DYNAMIC_RANGE / peak
    s = metrics.ssim(cand.plane * scale, base.plane * scale)
    p = metrics.psnr(cand.plane * scale, base.plane * scale)
    rows.append(MetricRow("psf_ssim", "", s, 1.0, 1.0 - s))
    rows.append(MetricRow("psf_psnr", "", p, float("inf"),
                          0.0 if np.isinf(p) else 1.0 / max(p, 1e-9)))

    s_e = metrics.ssim(cand.edge_conv, base.edge_conv)
    p_e = metrics.psnr(cand.edge_conv, base.edge_conv)
    rows.append(MetricRow("edge_ssim", "", s_e, 1.0, 1.0 - s_e))
    rows.append(MetricRow("edge_psnr", "", p_e, float("inf"),
                          0.0 if np.isinf(p_e) else 1.0 / max(p_e, 1e-9)))

    rows.append(MetricRow("coins_acutance", "", cand.coins_acutance,
                          base.coins_acutance,
                          abs(cand.coins_acutance - base.coins_acutance)
                          / base.coins_acutance))
    if cand.coins_t50 is None or base.coins_t50 is None:
        flags.append("coins_mtf50_missing")
        rows.append(MetricRow("coins_mtf50", "",
                              float("nan") if cand.coins_t50 is None else cand.coins_t50,
                              float("nan") if base.coins_t50 is None else base.coins_t50,
                              float("nan"), "no_crossing"))
    else:
        rows.append(MetricRow("coins_mtf50", "", cand.coins_t50, base.coins_t50,
                              abs(cand.coins_t50 - base.coins_t50) / base.coins_t50))
    return rows, flags


def _composite(rows: list, weights: dict) -> float:
    """Equal-weight mean over families of the weighted within-family mean.

    Rows with NaN distances (missing MTF50 crossings) drop out and their
    weight renormalizes onto the family's remaining metrics.
    """
    family_values = []
    for family, members in METRIC_FAMILIES.items():
        num = den = 0.0
        for row in rows:
            if row.name in members and np.isfinite(row.distance):
                w = weights.get(row.name, 0.0)
                num += w * row.distance
                den += w
        if den <= 0:
            raise MatchingError(f"no usable metrics in family {family!r}")
        family_values.append(num / den)
    return float(np.mean(family_values))


def kernel_distance(candidate: Kernel, baseline: Kernel,
                    charts: Optional[tuple[ChartImage, ChartImage]] = None,
                    weights: Optional[dict] = None,
                    channel: int = 1) -> tuple[list, float, list]:
    """All matching metrics between two kernels.

    Returns (metric rows, composite distance, flags). ``charts`` is the
    (slanted edge, spilled coins) pair; defaults are generated on the fly.
    """
    cfg = MatchConfig(channel=channel,
                      metric_weights=weights or dict(DEFAULT_METRIC_WEIGHTS))
    ctx = MatchContext(cfg)
    if charts is not None:
        ctx.edge, ctx.coins = charts
        ctx._edge_float = ctx.edge.pixels.astype(float)
        ctx._coins_float = ctx.coins.pixels.astype(float)
        ctx._convolver = _ChartConvolver({"edge": ctx._edge_float,
                                          "coins": ctx._coins_float})
    cand = ctx.bundle(candidate.channel(channel).astype(float))
    base = ctx.bundle(baseline.channel(channel).astype(float))
    rows, flags = _distance_terms(cand, base)
    return rows, _composite(rows, cfg.metric_weights), flags


def _mode_plane(ctx: MatchContext, mode: int, waves: float) -> np.ndarray:
    """Metric-channel kernel plane for a single-mode aberration.

    Wave counts are channel-independent here, so the metric channel needs
    no wavelength rescale; this matches psf_rgb's reference channel.
    """
    field = ctx.pupil.mask * np.exp(-2j * np.pi * waves * ctx.mode_basis(mode))
    raw = np.abs(np.fft.fftshift(np.fft.fft2(field))) ** 2
    window = _sample_window(raw, intensity_centroid(raw), 1.0, 25)
    total = window.sum()
    if total < 1e-12:
        raise MatchingError(f"mode {mode} at {waves} waves produced a degenerate kernel")
    return window / total


def _mean_slice_mtf50(plane: np.ndarray) -> Optional[float]:
    m2 = metrics.mtf2d(plane)
    vals = [metrics.mtf50(metrics.mtf_slice(m2, a)) for a in metrics.SLICE_ANGLES]
    present = [v for v in vals if v is not None]
    return float(np.mean(present)) if present else None


def _mtf50_guess(ctx: MatchContext, mode: int, severity: int) -> float:
    """Coefficient whose mean-slice MTF50 crosses the baseline's.

    Ascending scan brackets the first crossing, then bisection refines it.
    Robust to the non-monotonic tail that strong spherical shows.
    """
    _, base = ctx.baseline(severity)
    target = float(np.mean([v for v in base.mtf50s.values() if v is not None]))
    lo, hi = None, None
    prev_c = None
    c = 0.05
    while c <= 4.0 + 1e-9:
        v = _mean_slice_mtf50(_mode_plane(ctx, mode, c))
        if v is not None and v <= target:
            if prev_c is None:
                return float(c)
            lo, hi = prev_c, c
            break
        prev_c = c
        c *= 1.5
    if lo is None:
        raise MatchingError(f"mode {mode}: no coefficient in (0, 4] waves reaches "
                            f"the severity-{severity} baseline MTF50")
    for _ in range(16):
        mid = 0.5 * (lo + hi)
        v = _mean_slice_mtf50(_mode_plane(ctx, mode, mid))
        if v is None or v <= target:
            hi = mid
        else:
            lo = mid
    return float(0.5 * (lo + hi))


def _search_mode(ctx: MatchContext, mode: int, severity: int,
                 step: Optional[float] = None) -> ModeMatch:
    cfg = ctx.cfg
    step = cfg.step if step is None else step
    _, base = ctx.baseline(severity)
    cache: dict[float, tuple] = {}

    def evaluate(waves: float):
        key = round(waves, 6)
        if key not in cache:
            plane = _mode_plane(ctx, mode, waves)
            rows, flags = _distance_terms(ctx.bundle(plane), base)
            cache[key] = (_composite(rows, cfg.metric_weights), rows, flags)
        return cache[key]

    guess = cfg.guess_for(mode, severity)
    if guess is None:
        # Educated guess: bisect the mean-slice MTF50 onto the baseline's,
        # then shift to the composite minimum on the half-step lattice so
        # the stepped search is anchored where the objective bottoms out.
        guess = _mtf50_guess(ctx, mode, severity)
        lattice = cfg.step / 2.0
        k_max = int(round(cfg.search_half_width / lattice))
        best_node = None
        for k in range(-k_max, k_max + 1):
            waves = guess + k * lattice
            if waves <= 0:
                continue
            try:
                composite = evaluate(waves)[0]
            except MatchingError:
                continue
            node = (composite, abs(waves), k)
            if best_node is None or node < best_node:
                best_node = node
        if best_node is not None:
            guess = guess + best_node[2] * lattice

    k = int(round(cfg.search_half_width / step))
    best = None
    for offset in np.arange(-k, k + 1) * step:
        waves = guess + offset
        if waves <= 0:
            continue
        try:
            composite, rows, flags = evaluate(waves)
        except MatchingError:
            continue
        key = (composite, abs(waves), offset)
        if best is None or key < best[0]:
            best = (key, waves, offset, composite, rows, flags)
    if best is None:
        raise MatchingError(f"all candidates degenerate for mode {mode}, "
                            f"severity {severity}")
    _, waves, offset, composite, rows, flags = best
    return ModeMatch(mode, FRINGE_NAMES[mode], float(waves), float(offset),
                     composite, rows, flags)


def match_kernel(corruption: str, severity: int,
                 baseline: Optional[Kernel] = None,
                 cfg: Optional[MatchConfig] = None,
                 pupil: Optional[PupilGrid] = None,
                 ctx: Optional[MatchContext] = None) -> MatchReport:
    """Best-fit coefficients for one corruption/severity pair."""
    if corruption not in CORRUPTION_MODES:
        raise MatchingError(f"unknown corruption {corruption!r}; "
                            f"expected one of {sorted(CORRUPTION_MODES)}")
    if severity not in DISK_SEVERITIES:
        raise MatchingError(f"severity must be 1..5, got {severity}")
    if ctx is None:
        ctx = MatchContext(cfg or MatchConfig(), pupil)
    if baseline is not None:
        ctx._baselines[severity] = (baseline,
                                    ctx.bundle(baseline.channel(ctx.cfg.channel).astype(float)))
    modes = [_search_mode(ctx, mode, severity) for mode in CORRUPTION_MODES[corruption]]
    return MatchReport(corruption, severity, modes)


def build_benchmark_stack(cfg: Optional[MatchConfig] = None,
                          pupil: Optional[PupilGrid] = None,
                          rg: bool = False,
                          include_baseline: bool = False,
                          threads: Optional[int] = None,
                          corruptions: Optional[list] = None,
                          severities: Optional[list] = None
                          ) -> tuple[KernelStack, list[MatchReport]]:
    """Match every (corruption, severity) cell and render the kernel stack.

    ``rg`` zeroes the blue-channel coefficients so only red and green spread
    (the strong-chromatic-aberration variant). Cells are independent, so
    they may be matched in parallel; results are reduced in a fixed order.
    """
    cfg = cfg or MatchConfig()
    ctx = MatchContext(cfg, pupil)
    corruptions = sorted(corruptions or CORRUPTION_MODES)
    severities = sorted(severities or DISK_SEVERITIES)
    cells = [(c, s) for c in corruptions for s in severities]

    def run_cell(cell):
        return match_kernel(cell[0], cell[1], ctx=ctx)

    if threads and threads > 1:
        # Pre-warm shared baseline bundles to keep the cache single-writer.
        for s in severities:
            ctx.baseline(s)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(run_cell, cells))
    else:
        reports = [run_cell(cell) for cell in cells]

    channels = (0, 1) if rg else (0, 1, 2)
    stack = KernelStack()
    for report in reports:
        for variant, mode_match in enumerate(report.modes):
            spec = ZernikeSpec.from_mode(mode_match.mode, mode_match.coefficient,
                                         ctx.wavelengths(), channels=channels)
            kernel = psf_rgb(spec, ctx.pupil)
            stack[(report.corruption, report.severity, variant)] = kernel
    if include_baseline:
        for s in severities:
            stack[("disk_baseline", s, 0)] = disk_for_severity(s, ctx.wavelengths())
    return stack, reports
