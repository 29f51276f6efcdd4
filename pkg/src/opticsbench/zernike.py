"""Zernike Fringe polynomials on the unit disk and wavefront assembly.

The first twelve Fringe modes are implemented as a fixed lookup with the
unnormalized edge-value-1 convention used by optical design tools
(Z4 = 2*rho^2 - 1, not sqrt(3)*(2*rho^2 - 1)). Coefficients are given in
waves, i.e. dimensionless multiples of the channel wavelength.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

FRINGE_MIN = 1
FRINGE_MAX = 12

# Benchmark aberrations: defocus through vertical trefoil.
BENCHMARK_MODES = tuple(range(4, 12))

FRINGE_NAMES = {
    1: "piston",
    2: "tilt_x",
    3: "tilt_y",
    4: "defocus",
    5: "oblique_astigmatism",
    6: "vertical_astigmatism",
    7: "horizontal_coma",
    8: "vertical_coma",
    9: "spherical",
    10: "oblique_trefoil",
    11: "vertical_trefoil",
    12: "secondary_vertical_astigmatism",
}

DEFAULT_WAVELENGTHS_NM = (610.0, 530.0, 470.0)


def _check_fringe_index(j: int) -> None:
    if not (FRINGE_MIN <= j <= FRINGE_MAX):
        raise DomainError(f"Fringe index {j} outside supported range "
                          f"[{FRINGE_MIN}, {FRINGE_MAX}]")


def eval_fringe(j: int, rho, theta=0.0):
    """Evaluate the j-th Fringe polynomial at polar coordinates (rho, theta).

    Accepts scalars or numpy arrays. ``rho`` must lie in [0, 1];
    a tiny tolerance absorbs floating-point grid round-off.
    """
    _check_fringe_index(j)
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(rho < 0.0) or np.any(rho > 1.0 + 1e-12):
        raise DomainError("rho outside [0, 1]")

    if j == 1:
        return np.full(np.broadcast(rho, theta).shape, 1.0)[()]
    if j == 2:
        return rho * np.cos(theta)
    if j == 3:
        return rho * np.sin(theta)
    if j == 4:
        return 2.0 * rho**2 - 1.0
    if j == 5:
        return rho**2 * np.cos(2.0 * theta)
    if j == 6:
        return rho**2 * np.sin(2.0 * theta)
    if j == 7:
        return (3.0 * rho**3 - 2.0 * rho) * np.cos(theta)
    if j == 8:
        return (3.0 * rho**3 - 2.0 * rho) * np.sin(theta)
    if j == 9:
        return 6.0 * rho**4 - 6.0 * rho**2 + 1.0
    if j == 10:
        return rho**3 * np.cos(3.0 * theta)
    if j == 11:
        return rho**3 * np.sin(3.0 * theta)
    # j == 12
    return (4.0 * rho**4 - 3.0 * rho**2) * np.cos(2.0 * theta)


@dataclass(frozen=True)
class ZernikeSpec:
    """Per-channel Fringe coefficient vectors plus channel wavelengths.

    ``coefficients`` is a (3, 12) array, channel-major, indexed by
    (channel, fringe_index - 1); entries are in waves of the channel
    wavelength. Absent aberrations are zeros.
    """

    coefficients: np.ndarray
    wavelengths_nm: tuple[float, float, float] = DEFAULT_WAVELENGTHS_NM

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=float)
        if coeffs.shape != (3, FRINGE_MAX):
            raise DomainError(f"coefficient array must be (3, {FRINGE_MAX}), "
                              f"got {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise DomainError("coefficients must be finite")
        if len(self.wavelengths_nm) != 3 or any(w <= 0 for w in self.wavelengths_nm):
            raise DomainError("exactly 3 strictly positive wavelengths required")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "wavelengths_nm", tuple(float(w) for w in self.wavelengths_nm))

    @classmethod
    def zero(cls, wavelengths_nm=DEFAULT_WAVELENGTHS_NM) -> "ZernikeSpec":
        return cls(np.zeros((3, FRINGE_MAX)), wavelengths_nm)

    @classmethod
    def from_mode(cls, j: int, waves: float,
                  wavelengths_nm=DEFAULT_WAVELENGTHS_NM,
                  channels=(0, 1, 2)) -> "ZernikeSpec":
        """Spec with a single mode set to ``waves`` on the given channels."""
        _check_fringe_index(j)
        coeffs = np.zeros((3, FRINGE_MAX))
        for c in channels:
            coeffs[c, j - 1] = waves
        return cls(coeffs, wavelengths_nm)

    def with_coefficient(self, j: int, waves: float, channels=(0, 1, 2)) -> "ZernikeSpec":
        _check_fringe_index(j)
        coeffs = self.coefficients.copy()
        for c in channels:
            coeffs[c, j - 1] = waves
        return ZernikeSpec(coeffs, self.wavelengths_nm)


def wavefront(spec: ZernikeSpec, channel: int, x, y):
    """Optical path difference in nanometers at pupil coordinates (x, y).

    Implements W = lambda * sum_j A_j * Z_j(rho, theta) for the channel's
    wavelength, with (rho, theta) the polar form of (x, y). Points must lie
    inside the unit pupil.
    """
    if channel not in (0, 1, 2):
        raise DomainError(f"channel must be 0, 1 or 2, got {channel}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = x * x + y * y
    if np.any(r2 > 1.0 + 1e-12):
        raise DomainError("point outside the unit pupil")
    rho = np.sqrt(r2)
    theta = np.arctan2(y, x)
    lam = spec.wavelengths_nm[channel]
    coeffs = spec.coefficients[channel]
    acc = np.zeros(np.broadcast(x, y).shape)
    for j in range(FRINGE_MIN, FRINGE_MAX + 1):
        a = coeffs[j - 1]
        if a != 0.0:
            acc = acc + a * eval_fringe(j, rho, theta)
    return (lam * acc)[()]
