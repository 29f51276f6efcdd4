import numpy as np
import pytest

from opticsbench.errors import FormatError
from opticsbench.kernel_io import expected_file_size, read_kernel_file, write_kernel_file

from conftest import make_toy_stack


def test_round_trip_bit_exact(tmp_path):
    stack = make_toy_stack(severities=(1, 3))
    path = tmp_path / "stack.okf"
    write_kernel_file(stack, path)
    loaded = read_kernel_file(path)
    assert loaded.keys() == stack.keys()
    for key in stack.keys():
        assert np.array_equal(loaded[key].data, stack[key].data)
        assert loaded[key].wavelengths_nm == stack[key].wavelengths_nm
        assert loaded[key].label == key


def test_file_size_formula(tmp_path):
    stack = make_toy_stack()  # 4 corruptions x 5 sev x 2 variants + 5 baselines
    path = tmp_path / "stack.okf"
    write_kernel_file(stack, path)
    # header 4 + 4*4 + 3*4 = 32 bytes; each kernel 4 + 3*25*25*4 = 7504.
    assert expected_file_size(45) == 32 + 45 * 7504
    assert path.stat().st_size == expected_file_size(len(stack))


def test_bad_magic_rejected(tmp_path):
    stack = make_toy_stack(severities=(1,))
    path = tmp_path / "stack.okf"
    write_kernel_file(stack, path)
    blob = bytearray(path.read_bytes())
    blob[:4] = b"XKF1"
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError) as err:
        read_kernel_file(path)
    assert err.value.offset == 0


def test_truncated_payload_reports_offset(tmp_path):
    stack = make_toy_stack(severities=(1,))
    path = tmp_path / "stack.okf"
    write_kernel_file(stack, path)
    blob = path.read_bytes()
    path.write_bytes(blob[:len(blob) - 100])
    with pytest.raises(FormatError, match="truncated"):
        read_kernel_file(path)


def test_dimension_mismatch_rejected(tmp_path):
    stack = make_toy_stack(severities=(1,))
    path = tmp_path / "stack.okf"
    write_kernel_file(stack, path)
    blob = bytearray(path.read_bytes())
    blob[8:12] = (24).to_bytes(4, "little")  # corrupt the height field
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError) as err:
        read_kernel_file(path)
    assert err.value.offset == 8


def test_trailing_garbage_rejected(tmp_path):
    stack = make_toy_stack(severities=(1,))
    path = tmp_path / "stack.okf"
    write_kernel_file(stack, path)
    path.write_bytes(path.read_bytes() + b"\x00\x01")
    with pytest.raises(FormatError, match="trailing"):
        read_kernel_file(path)
