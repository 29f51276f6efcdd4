"""Apply kernel stacks to an image tree, producing the corruption benchmark.

Output layout mirrors the common corruption-benchmark convention
``<dst>/<corruption>/<severity>/<class>/<file>``. Variant assignment is a
pure function of (seed, sorted image index), so re-runs and arbitrary
enumeration orders produce byte-identical trees.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .convolve import convolve_reflect, counter_rng
from .errors import ConfigurationError, DomainError
from .pupil import Kernel, KernelStack

IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png", ".bmp", ".webp", ".tif", ".tiff"}

RESIZE_TO = 256
CROP_TO = 224


def preprocess(image: Image.Image, anisotropic: bool = False) -> np.ndarray:
    """Resize-256 / center-crop-224 -> uint8 HxWx3.

    Default keeps aspect ratio (short side to 256); ``anisotropic``
    squashes to exactly 256x256 instead.
    """
    img = image.convert("RGB")
    w, h = img.size
    if min(w, h) < 32:
        raise DomainError(f"image too small ({w}x{h}); need min side >= 32")
    if anisotropic:
        new_w = new_h = RESIZE_TO
    else:
        scale = RESIZE_TO / min(w, h)
        new_w = round(w * scale)
        new_h = round(h * scale)
    if (new_w, new_h) != (w, h):
        img = img.resize((new_w, new_h), Image.Resampling.BILINEAR)
    left = (new_w - CROP_TO) // 2
    top = (new_h - CROP_TO) // 2
    img = img.crop((left, top, left + CROP_TO, top + CROP_TO))
    return np.asarray(img, dtype=np.uint8)


def convolve_rgb(image: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Per-channel reflect-border convolution, rounded and clamped to uint8."""
    arr = np.asarray(image, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DomainError(f"expected HxWx3 image, got {arr.shape}")
    out = np.empty_like(arr)
    for c in range(3):
        out[:, :, c] = convolve_reflect(arr[:, :, c], kernel.channel(c).astype(float))
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def assign_variant(seed: int, image_index: int) -> int:
    """Deterministic 0/1 draw for one image; marginally uniform."""
    return int(counter_rng(seed, image_index).integers(2))


@dataclass
class CorruptionJob:
    src_root: Path
    dst_root: Path
    stack: KernelStack
    seed: int = 42
    corruptions: Optional[list[str]] = None   # default: all optical ones in the stack
    severities: Optional[list[int]] = None    # default: all in the stack
    output_format: str = "png"                # "png" | "jpeg" (quality 95)
    anisotropic_resize: bool = False
    threads: int = 1

    def resolved_corruptions(self) -> list[str]:
        available = self.stack.corruptions()
        if self.corruptions is None:
            return [c for c in available if c != "disk_baseline"]
        missing = sorted(set(self.corruptions) - set(available))
        if missing:
            raise ConfigurationError(f"stack has no kernels for {missing}")
        return sorted(self.corruptions)

    def resolved_severities(self) -> list[int]:
        available = self.stack.severities()
        if self.severities is None:
            return available
        missing = sorted(set(self.severities) - set(available))
        if missing:
            raise ConfigurationError(f"stack has no severities {missing}")
        return sorted(self.severities)


@dataclass
class Manifest:
    rows: list = field(default_factory=list)    # (path, corruption, severity, variant, output)
    errors: list = field(default_factory=list)  # (path, message)

    def write_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["path", "corruption", "severity", "variant", "output"])
            writer.writerows(self.rows)
        if self.errors:
            with path.with_suffix(path.suffix + ".errors.csv").open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["path", "error"])
                writer.writerows(self.errors)

    @classmethod
    def read_csv(cls, path) -> "Manifest":
        manifest = cls()
        with Path(path).open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["path", "corruption", "severity", "variant", "output"]:
                raise DomainError(f"unexpected manifest header {header}")
            for row in reader:
                manifest.rows.append((row[0], row[1], int(row[2]), int(row[3]), row[4]))
        return manifest


def list_images(src_root: Path) -> list[str]:
    """Relative POSIX paths of all images under src_root, sorted."""
    src_root = Path(src_root)
    found = [p.relative_to(src_root).as_posix()
             for p in src_root.rglob("*")
             if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS]
    return sorted(found)


def corrupt_dataset(job: CorruptionJob, image_paths: Optional[list[str]] = None) -> Manifest:
    """Blur every image with every (corruption, severity) cell of the job.

    ``image_paths`` overrides filesystem enumeration (relative paths); the
    list is sorted internally, so the caller's ordering can never change
    variant assignments or any output byte.
    """
    src = Path(job.src_root)
    dst = Path(job.dst_root)
    if not src.is_dir():
        raise ConfigurationError(f"source root {src} does not exist")
    corruptions = job.resolved_corruptions()
    severities = job.resolved_severities()
    paths = sorted(image_paths) if image_paths is not None else list_images(src)

    fmt = job.output_format.lower()
    if fmt not in ("png", "jpeg"):
        raise ConfigurationError(f"unsupported output format {job.output_format!r}")
    suffix = ".png" if fmt == "png" else ".jpg"

    try:
        dst.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigurationError(f"cannot create destination {dst}: {exc}") from exc

    def process(item):
        index, rel = item
        rel_path = Path(rel)
        try:
            with Image.open(src / rel_path) as img:
                clean = preprocess(img, job.anisotropic_resize)
        except DomainError as exc:
            return rel, None, str(exc)
        except Exception as exc:
            return rel, None, f"undecodable: {exc}"
        variant = assign_variant(job.seed, index)
        rows = []
        for corruption in corruptions:
            for severity in severities:
                key = (corruption, severity, variant)
                if key not in job.stack:
                    # Single-variant entries (e.g. disk baseline) fall back to 0.
                    key = (corruption, severity, 0)
                blurred = convolve_rgb(clean, job.stack[key])
                out_rel = Path(corruption) / str(severity) / rel_path.with_suffix(suffix)
                out_path = dst / out_rel
                out_path.parent.mkdir(parents=True, exist_ok=True)
                out_img = Image.fromarray(blurred)
                if fmt == "png":
                    out_img.save(out_path, format="PNG")
                else:
                    out_img.save(out_path, format="JPEG", quality=95)
                rows.append((rel, corruption, severity, key[2], out_rel.as_posix()))
        return rel, rows, None

    manifest = Manifest()
    items = list(enumerate(paths))
    if job.threads > 1:
        with ThreadPoolExecutor(max_workers=job.threads) as pool:
            results = list(pool.map(process, items))
    else:
        results = [process(item) for item in items]
    for rel, rows, error in results:
        if error is not None:
            manifest.errors.append((rel, error))
        else:
            manifest.rows.extend(rows)
    return manifest
