"""OKF1 binary kernel-stack format.

Layout (all integers little-endian):
    bytes 0-3   magic "OKF1"
    u32         kernel_count
    u32         height (25)
    u32         width (25)
    u32         channels (3)
    f32 x 3     channel wavelengths in nm
    per kernel:
        u8 corruption id   (0 astigmatism, 1 coma, 2 defocus_spherical,
                            3 trefoil, 4 disk_baseline)
        u8 severity        (1-5)
        u8 variant         (0/1)
        u8 pad             (0)
        f32 x c*h*w        plane data, channel-major, row-major
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .pupil import CORRUPTION_IDS, CORRUPTION_NAMES, Kernel, KernelStack

MAGIC = b"OKF1"
_HEADER = struct.Struct("<4sIIII3f")
_KERNEL_HEADER = struct.Struct("<BBBB")


def write_kernel_file(stack: KernelStack, path) -> None:
    """Serialize a stack; kernels are written in sorted key order."""
    items = stack.items()
    if not items:
        raise FormatError("refusing to write an empty stack", 0)
    wavelengths = stack.wavelengths_nm
    chunks = [_HEADER.pack(MAGIC, len(items), 25, 25, 3, *wavelengths)]
    for (corruption, severity, variant), kernel in items:
        if kernel.data.shape != (25, 25, 3):
            raise FormatError(f"kernel {corruption}/{severity}/{variant} is not 25x25x3",
                              len(b"".join(chunks)))
        chunks.append(_KERNEL_HEADER.pack(CORRUPTION_IDS[corruption], severity, variant, 0))
        planes = np.ascontiguousarray(kernel.data.transpose(2, 0, 1), dtype="<f4")
        chunks.append(planes.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def read_kernel_file(path) -> KernelStack:
    """Parse an OKF1 file back into a KernelStack; round trips are bit-exact."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise FormatError("file shorter than the header", len(blob))
    magic, count, height, width, channels, *wavelengths = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0)
    if (height, width, channels) != (25, 25, 3):
        raise FormatError(f"unsupported dimensions {height}x{width}x{channels}", 8)
    wavelengths = tuple(float(w) for w in wavelengths)

    plane_bytes = channels * height * width * 4
    stack = KernelStack()
    offset = _HEADER.size
    for i in range(count):
        if offset + _KERNEL_HEADER.size > len(blob):
            raise FormatError(f"truncated label block for kernel {i}", offset)
        cid, severity, variant, pad = _KERNEL_HEADER.unpack_from(blob, offset)
        if cid not in CORRUPTION_NAMES:
            raise FormatError(f"unknown corruption id {cid}", offset)
        offset += _KERNEL_HEADER.size
        if offset + plane_bytes > len(blob):
            raise FormatError(f"truncated plane data for kernel {i}", offset)
        planes = np.frombuffer(blob, dtype="<f4", count=channels * height * width,
                               offset=offset).reshape(channels, height, width)
        offset += plane_bytes
        data = planes.transpose(1, 2, 0).copy()
        key = (CORRUPTION_NAMES[cid], severity, variant)
        stack[key] = Kernel(data, wavelengths, key)
    if offset != len(blob):
        raise FormatError("trailing bytes after the last kernel", offset)
    return stack


def expected_file_size(kernel_count: int) -> int:
    """Exact byte size of an OKF1 file holding ``kernel_count`` kernels."""
    return _HEADER.size + kernel_count * (_KERNEL_HEADER.size + 3 * 25 * 25 * 4)
