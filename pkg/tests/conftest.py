import warnings

import numpy as np
import pytest

from opticsbench.matching import MatchConfig, MatchContext, build_benchmark_stack
from opticsbench.pupil import (
    DISK_SEVERITIES,
    Kernel,
    KernelStack,
    build_pupil,
    disk_for_severity,
    disk_kernel,
)


@pytest.fixture(scope="session")
def default_pupil():
    return build_pupil()


@pytest.fixture(scope="session")
def match_context(default_pupil):
    return MatchContext(MatchConfig(), default_pupil)


@pytest.fixture(scope="session")
def benchmark_stack(default_pupil):
    """Full matched 40-kernel stack; built once per session."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        stack, reports = build_benchmark_stack(pupil=default_pupil)
    return stack, reports


def make_toy_stack(severities=range(1, 6)) -> KernelStack:
    """Cheap stand-in stack (relabeled disk kernels) for plumbing tests.

    Variant 1 gets a slightly different radius so the two variants of a
    cell produce different output bytes.
    """
    stack = KernelStack()
    corruptions = ("astigmatism", "coma", "defocus_spherical", "trefoil")
    for severity in severities:
        radius, alias = DISK_SEVERITIES[severity]
        for corruption in corruptions:
            stack[(corruption, severity, 0)] = disk_kernel(radius, alias)
            stack[(corruption, severity, 1)] = disk_kernel(max(radius - 1, 1), alias)
        stack[("disk_baseline", severity, 0)] = disk_for_severity(severity)
    return stack


def delta_kernel() -> Kernel:
    data = np.zeros((25, 25, 3), dtype=np.float32)
    data[12, 12, :] = 1.0
    return Kernel(data)
