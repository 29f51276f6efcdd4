"""Optical-aberration blur toolkit.

Generates wavefront-aberration blur kernels via scalar diffraction, matches
them in optical strength to a disk-shaped defocus baseline, builds
reproducible corrupted image datasets, augments training batches with the
kernels, and scores classifier prediction logs.
"""

from .augment import AugmentConfig, OpticsAugment, normalize_batch, optics_augment_batch, pipeline_gate
from .charts import ChartImage, gen_slanted_edge, gen_spilled_coins
from .corrupt import CorruptionJob, Manifest, assign_variant, convolve_rgb, corrupt_dataset, preprocess
from .errors import (
    ConfigurationError,
    DegenerateKernelError,
    DomainError,
    FormatError,
    MatchingError,
    OpticsBenchError,
)
from .kernel_io import expected_file_size, read_kernel_file, write_kernel_file
from .matching import (
    CORRUPTION_MODES,
    MatchConfig,
    MatchReport,
    build_benchmark_stack,
    kernel_distance,
    match_kernel,
)
from .metrics import MtfCurve, acutance, auc, mtf2d, mtf50, mtf_radial, mtf_slice, psnr, ssim, texture_mtf
from .pupil import (
    DISK_SEVERITIES,
    Kernel,
    KernelStack,
    PupilGrid,
    build_pupil,
    crop_normalize,
    disk_for_severity,
    disk_kernel,
    psf_mono,
    psf_rgb,
)
from .scoring import (
    PredictionLog,
    ScoreTable,
    accuracy,
    delta_vs_baseline,
    gain_table,
    kendall_tau,
    rank_models,
    rank_models_per_corruption,
    score_log,
)
from .zernike import BENCHMARK_MODES, FRINGE_NAMES, ZernikeSpec, eval_fringe, wavefront

__version__ = "0.1.0"
