import numpy as np
import pytest

from opticsbench.errors import ConfigurationError, DegenerateKernelError, DomainError
from opticsbench.pupil import (
    DISK_SEVERITIES,
    Kernel,
    KernelStack,
    build_pupil,
    crop_energy_fraction,
    crop_normalize,
    disk_for_severity,
    disk_kernel,
    psf_mono,
    psf_rgb,
)
from opticsbench.zernike import ZernikeSpec


def test_mask_area_matches_disk(default_pupil):
    expected = np.pi * (default_pupil.pupil_diameter / 2.0) ** 2
    assert abs(default_pupil.mask.sum() - expected) / expected < 0.01


def test_rejects_undersampled_pupil():
    with pytest.raises(ConfigurationError):
        build_pupil(256, 256)
    with pytest.raises(ConfigurationError):
        build_pupil(255, 128)
    with pytest.raises(ConfigurationError):
        build_pupil(-4, 2)


def test_finer_sampling_widens_peak_in_samples():
    # Doubling grid_size at fixed pupil diameter doubles Q; the same
    # physical peak then spans twice as many samples.
    def fwhm(psf):
        row = psf[psf.shape[0] // 2]
        half = row.max() / 2.0
        above = np.where(row >= half)[0]
        lo, hi = above[0], above[-1]
        # linear sub-sample interpolation at both flanks
        left = lo - (row[lo] - half) / (row[lo] - row[lo - 1])
        right = hi + (row[hi] - half) / (row[hi] - row[hi + 1])
        return right - left

    spec = ZernikeSpec.zero()
    psf_q2 = psf_mono(build_pupil(256, 128), spec, 1)
    psf_q4 = psf_mono(build_pupil(512, 128), spec, 1)
    ratio = fwhm(psf_q4) / fwhm(psf_q2)
    assert ratio == pytest.approx(2.0, rel=0.1)


def test_psf_energy_equals_mask_area_scaled(default_pupil):
    # Parseval: sum |FFT|^2 == N^2 * sum |field|^2, any aberration.
    spec = ZernikeSpec.from_mode(7, 0.8)
    psf = psf_mono(default_pupil, spec, 0)
    expected = default_pupil.grid_size**2 * default_pupil.mask.sum()
    assert psf.sum() == pytest.approx(expected, rel=1e-10)


def test_tilt_translates_psf(default_pupil):
    # One wave of x-tilt shifts the pattern by grid_size/(pupil radius)
    # samples; the Fourier shift theorem fixes both size and direction.
    base = psf_mono(default_pupil, ZernikeSpec.zero(), 1)
    tilted = psf_mono(default_pupil, ZernikeSpec.from_mode(2, 1.0), 1)
    # positive tilt advances phase with +x, moving the pattern toward -x
    shift = -int(2 * default_pupil.oversampling)  # 4 samples at Q=2
    rolled = np.roll(base, shift, axis=1)
    corr = np.corrcoef(rolled.ravel(), tilted.ravel())[0, 1]
    assert corr >= 0.999


def test_crop_normalize_delta():
    raw = np.zeros((64, 64))
    raw[30, 33] = 7.0
    out = crop_normalize(raw)
    assert out.shape == (25, 25)
    assert out.sum() == pytest.approx(1.0, abs=1e-6)
    assert out.max() == pytest.approx(1.0)


def test_crop_normalize_uniform():
    out = crop_normalize(np.ones((25, 25)))
    assert np.allclose(out, 1.0 / 625.0)


def test_crop_normalize_rejects_bad_sizes():
    with pytest.raises(DomainError):
        crop_normalize(np.ones((64, 64)), size=24)
    with pytest.raises(DomainError):
        crop_normalize(np.ones((16, 16)), size=25)
    with pytest.raises(DegenerateKernelError):
        crop_normalize(np.zeros((64, 64)))


def test_severity5_defocus_keeps_most_energy(default_pupil):
    # Coefficient on the severity-5 scale (matched vs the radius-10 disk).
    psf = psf_mono(default_pupil, ZernikeSpec.from_mode(4, 0.62), 1)
    assert crop_energy_fraction(psf) >= 0.9


def test_psf_rgb_zero_aberration_chromatic_order(default_pupil):
    kernel = psf_rgb(ZernikeSpec.zero(), default_pupil)
    assert np.allclose(kernel.data.sum(axis=(0, 1)), 1.0, atol=1e-6)

    def rms_radius(plane):
        c = np.arange(25) - 12
        x, y = np.meshgrid(c, c)
        return np.sqrt(float((plane * (x**2 + y**2)).sum()))

    widths = [rms_radius(kernel.channel(c)) for c in range(3)]
    assert widths[2] < widths[1] < widths[0]  # blue narrowest, red widest


def test_psf_rgb_rg_variant_blue_is_unaberrated(default_pupil):
    rg_spec = ZernikeSpec.from_mode(5, 0.8, channels=(0, 1))
    kernel = psf_rgb(rg_spec, default_pupil)
    reference = psf_rgb(ZernikeSpec.zero(), default_pupil)
    assert np.array_equal(kernel.channel(2), reference.channel(2))
    # red and green really are spread
    assert kernel.channel(0).max() < 0.5 * reference.channel(0).max()


def test_psf_rgb_channel_sums(default_pupil):
    kernel = psf_rgb(ZernikeSpec.from_mode(9, 0.3), default_pupil)
    assert np.allclose(kernel.data.sum(axis=(0, 1)), 1.0, atol=1e-6)


def test_psf_rgb_deterministic(default_pupil):
    spec = ZernikeSpec.from_mode(10, 0.7)
    a = psf_rgb(spec, default_pupil)
    b = psf_rgb(spec, default_pupil)
    assert np.array_equal(a.data, b.data)


def test_disk_kernel_flat_and_symmetric():
    kernel = disk_kernel(3, 0.0)
    plane = kernel.channel(0)
    inside = plane > 0
    values = plane[inside]
    assert np.allclose(values, values[0])
    assert np.array_equal(plane, np.rot90(plane))
    assert np.array_equal(plane, plane.T)


def test_disk_severity_table():
    # (radius, alias) pairs of the public disk-defocus corruption ladder.
    assert DISK_SEVERITIES == {1: (3, 0.1), 2: (4, 0.5), 3: (6, 0.5),
                               4: (8, 0.5), 5: (10, 0.5)}
    for severity in range(1, 6):
        kernel = disk_for_severity(severity)
        assert np.allclose(kernel.data.sum(axis=(0, 1)), 1.0, atol=1e-6)
        assert kernel.label == ("disk_baseline", severity, 0)


def test_disk_kernel_rejects_oversize():
    with pytest.raises(DomainError):
        disk_kernel(13, 0.5)
    with pytest.raises(DomainError):
        disk_kernel(0.5, 0.1)


def test_kernel_invariants_enforced():
    good = np.full((25, 25, 3), 1.0 / 625.0, dtype=np.float32)
    Kernel(good)
    with pytest.raises(DomainError):
        Kernel(good * 2.0)
    bad = good.copy()
    bad[0, 0, 0] = -bad[0, 0, 0]
    with pytest.raises(DomainError):
        Kernel(bad)


def test_stack_rejects_mixed_wavelengths():
    stack = KernelStack()
    stack[("coma", 1, 0)] = disk_kernel(3, 0.1)
    with pytest.raises(DomainError):
        stack[("coma", 1, 1)] = disk_kernel(3, 0.1, wavelengths_nm=(600.0, 500.0, 400.0))


def test_energy_warning_emitted(default_pupil):
    # Strong spherical pushes energy outside the 25x25 window.
    with pytest.warns(UserWarning, match="energy"):
        psf_rgb(ZernikeSpec.from_mode(9, 1.2), default_pupil)
