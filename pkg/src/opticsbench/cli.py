"""Command-line front-end.

Subcommands: generate, match, corrupt, charts, measure, augment, score.
Every run prints its fully resolved configuration first so outputs are
auditable. Exit codes: 0 success, 1 domain/configuration error, 2 usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import OpticsBenchError


def _default_threads() -> int:
    env = os.environ.get("OPTICSBENCH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _print_config(args: argparse.Namespace) -> None:
    resolved = {k: (str(v) if isinstance(v, Path) else v)
                for k, v in sorted(vars(args).items()) if k != "func"}
    print("resolved config: " + json.dumps(resolved, default=str))


def _load_stack(path):
    from .kernel_io import read_kernel_file
    return read_kernel_file(path)


def cmd_generate(args) -> int:
    from .kernel_io import write_kernel_file
    from .matching import MatchConfig, build_benchmark_stack
    from .pupil import build_pupil

    cfg = MatchConfig(step=args.step, search_half_width=args.half_width)
    pupil = build_pupil(args.grid_size, args.pupil_diameter)
    stack, reports = build_benchmark_stack(
        cfg, pupil, rg=args.rg, include_baseline=args.include_baseline,
        threads=args.threads,
        corruptions=args.corruptions, severities=args.severities)
    write_kernel_file(stack, args.out)
    print(f"wrote {len(stack)} kernels to {args.out}")
    if args.report_dir:
        report_dir = Path(args.report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        for report in reports:
            path = report_dir / f"match_{report.corruption}_s{report.severity}.csv"
            path.write_text(report.to_csv())
        print(f"wrote {len(reports)} match reports to {report_dir}")
    for report in reports:
        coeffs = ", ".join(f"{m.mode_name}={m.coefficient:.3f}" for m in report.modes)
        print(f"  {report.corruption} s{report.severity}: {coeffs} "
              f"(composite {report.composite:.4f})")
    return 0


def cmd_match(args) -> int:
    from .matching import MatchConfig, match_kernel
    from .pupil import build_pupil

    cfg = MatchConfig(step=args.step, search_half_width=args.half_width)
    pupil = build_pupil(args.grid_size, args.pupil_diameter)
    report = match_kernel(args.corruption, args.severity, cfg=cfg, pupil=pupil)
    csv_text = report.to_csv()
    if args.out:
        Path(args.out).write_text(csv_text)
        print(f"wrote report to {args.out}")
    else:
        print(csv_text, end="")
    return 0


def cmd_corrupt(args) -> int:
    from .corrupt import CorruptionJob, corrupt_dataset

    job = CorruptionJob(
        src_root=Path(args.input), dst_root=Path(args.out),
        stack=_load_stack(args.kernels), seed=args.seed,
        corruptions=args.corruptions, severities=args.severities,
        output_format=args.format, anisotropic_resize=args.anisotropic,
        threads=args.threads)
    manifest = corrupt_dataset(job)
    manifest_path = Path(args.out) / "manifest.csv"
    manifest.write_csv(manifest_path)
    print(f"wrote {len(manifest.rows)} images; manifest at {manifest_path}")
    if manifest.errors:
        print(f"{len(manifest.errors)} inputs failed "
              f"(see {manifest_path}.errors.csv)", file=sys.stderr)
    return 0


def cmd_charts(args) -> int:
    from .charts import gen_slanted_edge, gen_spilled_coins

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    edge = gen_slanted_edge(args.angle, args.size)
    coins = gen_spilled_coins(args.seed, args.size)
    edge.save_png(out / "slanted_edge.png")
    coins.save_png(out / "spilled_coins.png")
    print(f"wrote {out / 'slanted_edge.png'} and {out / 'spilled_coins.png'}")
    return 0


def cmd_measure(args) -> int:
    from . import metrics

    if args.kind == "image":
        a = np.asarray(Image.open(args.a).convert("L"), dtype=float)
        b = np.asarray(Image.open(args.b).convert("L"), dtype=float)
        rows = [("ssim", "", metrics.ssim(a, b)), ("psnr", "", metrics.psnr(a, b))]
        if a.shape == b.shape and a.shape[0] == a.shape[1]:
            curve = metrics.texture_mtf(a, b)
            rows += [("texture_mtf50", "radial", metrics.mtf50(curve)),
                     ("acutance", "radial", metrics.acutance(curve))]
    else:
        from .matching import kernel_distance
        stack_a = _load_stack(args.a)
        stack_b = _load_stack(args.b)
        key_a = tuple(args.key_a) if args.key_a else stack_a.keys()[0]
        key_b = tuple(args.key_b) if args.key_b else stack_b.keys()[0]
        key_a = (key_a[0], int(key_a[1]), int(key_a[2]))
        key_b = (key_b[0], int(key_b[1]), int(key_b[2]))
        metric_rows, composite, flags = kernel_distance(stack_a[key_a], stack_b[key_b])
        rows = [(r.name, r.angle, r.distance) for r in metric_rows]
        rows.append(("composite", "", composite))
        if flags:
            rows.append(("flags", "", ";".join(flags)))
    print("metric,angle,value")
    for name, angle, value in rows:
        print(f"{name},{angle},{value}")
    return 0


def cmd_augment(args) -> int:
    from .augment import AugmentConfig, OpticsAugment
    from .corrupt import list_images, preprocess

    cfg = AugmentConfig(stack=_load_stack(args.kernels), severity=args.severity,
                        alpha=args.alpha, mean=tuple(args.mean), std=tuple(args.std),
                        rng_seed=args.seed)
    augment = OpticsAugment(cfg)
    src = Path(args.input)
    dst = Path(args.out)
    written = 0
    for rel in list_images(src):
        with Image.open(src / rel) as img:
            clean = preprocess(img)
        batch = (clean.astype(float) / 255.0).transpose(2, 0, 1)[None]
        mixed = augment(batch)
        # Undo normalization for file output; PNGs hold displayable pixels.
        arr = mixed[0] * np.asarray(cfg.std).reshape(3, 1, 1) \
            + np.asarray(cfg.mean).reshape(3, 1, 1)
        arr = np.clip(np.rint(arr.transpose(1, 2, 0) * 255.0), 0, 255).astype(np.uint8)
        out_path = dst / Path(rel).with_suffix(".png")
        out_path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(arr).save(out_path, format="PNG")
        written += 1
    print(f"augmented {written} images into {dst}")
    return 0


def cmd_score(args) -> int:
    from .scoring import PredictionLog, gain_table, score_log, write_reports

    log = PredictionLog.read_csv(args.log, model=args.model)
    table = score_log(log, baseline=args.baseline)
    csv_path, txt_path = write_reports(table, args.out)
    print(f"wrote {csv_path} and {txt_path}")
    if args.gain_log:
        augmented = PredictionLog.read_csv(args.gain_log)
        gains = gain_table(log, augmented, baseline=args.baseline)
        print("severity,mean_gain_points")
        for severity, gain in gains.items():
            print(f"{severity},{gain:.4f}")
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    # Also accepted after the subcommand; overrides the global value.
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                   help="RNG seed (default 42)")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                   help="worker parallelism (env OPTICSBENCH_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opticsbench",
        description="Optical-aberration kernels, corruption datasets, "
                    "augmentation and scoring")
    parser.add_argument("--seed", type=int, default=42, help="global RNG seed")
    parser.add_argument("--threads", type=int, default=_default_threads(),
                        help="worker parallelism (env OPTICSBENCH_THREADS)")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="match kernels and write the stack")
    p.add_argument("--out", required=True, help="output .okf path")
    p.add_argument("--rg", action="store_true",
                   help="spread only red/green channels (chromatic variant)")
    p.add_argument("--include-baseline", action="store_true",
                   help="append the disk baseline kernels to the stack")
    p.add_argument("--report-dir", help="directory for per-cell match report CSVs")
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--half-width", type=float, default=0.5)
    p.add_argument("--grid-size", type=int, default=256)
    p.add_argument("--pupil-diameter", type=int, default=128)
    p.add_argument("--corruptions", nargs="+")
    p.add_argument("--severities", nargs="+", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("match", help="verbose report for one corruption/severity")
    p.add_argument("--corruption", required=True)
    p.add_argument("--severity", type=int, required=True)
    p.add_argument("--out")
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--half-width", type=float, default=0.5)
    p.add_argument("--grid-size", type=int, default=256)
    p.add_argument("--pupil-diameter", type=int, default=128)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("corrupt", help="blur an image tree into the benchmark layout")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kernels", required=True, help="OKF kernel stack")
    p.add_argument("--corruptions", nargs="+")
    p.add_argument("--severities", nargs="+", type=int)
    p.add_argument("--format", choices=("png", "jpeg"), default="png")
    p.add_argument("--anisotropic", action="store_true",
                   help="resize to exactly 256x256 instead of short-side 256")
    _add_common(p)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("charts", help="write the slanted-edge and coins charts")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=224)
    p.add_argument("--angle", type=float, default=5.0)
    _add_common(p)
    p.set_defaults(func=cmd_charts)

    p = sub.add_parser("measure", help="metrics between two images or two kernels")
    p.add_argument("--kind", choices=("image", "kernel"), default="image")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--key-a", nargs=3, metavar=("CORRUPTION", "SEVERITY", "VARIANT"))
    p.add_argument("--key-b", nargs=3, metavar=("CORRUPTION", "SEVERITY", "VARIANT"))
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("augment", help="write blur-augmented copies of a directory")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kernels", required=True)
    p.add_argument("--severity", type=int, default=3)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--mean", nargs=3, type=float, default=[0.485, 0.456, 0.406])
    p.add_argument("--std", nargs=3, type=float, default=[0.229, 0.224, 0.225])
    _add_common(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("score", help="score a prediction log CSV")
    p.add_argument("--log", required=True)
    p.add_argument("--baseline", default="disk_baseline",
                   help="corruption name used as the accuracy baseline")
    p.add_argument("--model", help="model name (default: log filename)")
    p.add_argument("--out", default="reports")
    p.add_argument("--gain-log", help="augmented-run log for the gain table")
    p.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _print_config(args)
    try:
        return args.func(args)
    except OpticsBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
