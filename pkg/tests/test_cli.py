import numpy as np
import pytest
from PIL import Image

from opticsbench.cli import main
from opticsbench.kernel_io import write_kernel_file

from conftest import make_toy_stack


@pytest.fixture
def toy_okf(tmp_path):
    path = tmp_path / "toy.okf"
    write_kernel_file(make_toy_stack(), path)
    return path


@pytest.fixture
def image_tree(tmp_path):
    src = tmp_path / "images"
    rng = np.random.Generator(np.random.Philox(key=99))
    for cls in ("a", "b"):
        (src / cls).mkdir(parents=True)
        for i in range(2):
            arr = rng.integers(0, 256, (96, 96, 3), dtype=np.uint8)
            Image.fromarray(arr).save(src / cls / f"{i}.png")
    return src


def test_unknown_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2


def test_resolved_config_printed(tmp_path, capsys):
    assert main(["charts", "--out", str(tmp_path / "charts")]) == 0
    out = capsys.readouterr().out
    assert "resolved config:" in out
    assert (tmp_path / "charts" / "slanted_edge.png").exists()
    assert (tmp_path / "charts" / "spilled_coins.png").exists()


def test_generate_subset(tmp_path, capsys):
    out = tmp_path / "k.okf"
    reports = tmp_path / "reports"
    code = main(["generate", "--out", str(out), "--corruptions", "defocus_spherical",
                 "--severities", "1", "--report-dir", str(reports),
                 "--include-baseline"])
    assert code == 0
    from opticsbench.kernel_io import read_kernel_file
    stack = read_kernel_file(out)
    assert ("defocus_spherical", 1, 0) in stack
    assert ("defocus_spherical", 1, 1) in stack
    assert ("disk_baseline", 1, 0) in stack
    assert (reports / "match_defocus_spherical_s1.csv").exists()


def test_corrupt_and_score_flow(tmp_path, toy_okf, image_tree, capsys):
    dst = tmp_path / "corrupted"
    code = main(["corrupt", "--in", str(image_tree), "--out", str(dst),
                 "--kernels", str(toy_okf), "--corruptions", "coma",
                 "--severities", "2", "--seed", "42"])
    assert code == 0
    outputs = list(dst.rglob("*.png"))
    assert len(outputs) == 4
    assert (dst / "manifest.csv").exists()

    log = tmp_path / "preds.csv"
    lines = ["image,corruption,severity,true,pred"]
    for i in range(10):
        lines.append(f"img{i},coma,2,cat,{'cat' if i < 7 else 'dog'}")
        lines.append(f"img{i},disk_baseline,2,cat,{'cat' if i < 9 else 'dog'}")
    log.write_text("\n".join(lines) + "\n")
    code = main(["score", "--log", str(log), "--out", str(tmp_path / "reports")])
    assert code == 0
    report = (tmp_path / "reports" / "scores_preds.csv").read_text()
    assert "coma,2,70.0000,-20.0000" in report


def test_measure_images(tmp_path, capsys):
    rng = np.random.Generator(np.random.Philox(key=5))
    a = rng.integers(0, 256, (64, 64), dtype=np.uint8)
    pa = tmp_path / "a.png"
    pb = tmp_path / "b.png"
    Image.fromarray(a, mode="L").save(pa)
    Image.fromarray(a, mode="L").save(pb)
    assert main(["measure", str(pa), str(pb)]) == 0
    out = capsys.readouterr().out
    assert "ssim,,1.0" in out
    assert "psnr,,inf" in out


def test_measure_kernels(tmp_path, toy_okf, capsys):
    code = main(["measure", "--kind", "kernel", str(toy_okf), str(toy_okf),
                 "--key-a", "coma", "2", "0", "--key-b", "coma", "2", "0"])
    assert code == 0
    out = capsys.readouterr().out
    assert "composite,,0.0" in out


def test_augment_directory(tmp_path, toy_okf, image_tree, capsys):
    dst = tmp_path / "augmented"
    code = main(["augment", "--in", str(image_tree), "--out", str(dst),
                 "--kernels", str(toy_okf), "--severity", "3", "--seed", "1"])
    assert code == 0
    assert len(list(dst.rglob("*.png"))) == 4


def test_domain_error_exits_one(tmp_path, toy_okf, capsys):
    code = main(["corrupt", "--in", str(tmp_path / "missing"),
                 "--out", str(tmp_path / "dst"), "--kernels", str(toy_okf)])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_bad_kernel_file_exits_one(tmp_path, image_tree, capsys):
    bad = tmp_path / "bad.okf"
    bad.write_bytes(b"XXXXnot a kernel file")
    code = main(["corrupt", "--in", str(image_tree),
                 "--out", str(tmp_path / "dst"), "--kernels", str(bad)])
    assert code == 1
