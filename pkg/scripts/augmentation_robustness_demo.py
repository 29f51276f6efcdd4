#!/usr/bin/env python3
"""Desk-scale demo of the augmentation benefit.

Trains two linear probes over fixed random features on a synthetic
two-class striped-texture dataset: one on clean images, one with the blur
augmentation, and evaluates both on kernel-blurred test images. The
augmented probe should come out ahead on the blurred set (the direction of
the effect, not its magnitude, is the point of the demo).
"""

import argparse
import time
import warnings

import numpy as np

from opticsbench.augment import AugmentConfig, OpticsAugment, normalize_batch
from opticsbench.convolve import convolve_reflect
from opticsbench.kernel_io import read_kernel_file
from opticsbench.matching import build_benchmark_stack

MEAN, STD = (0.5, 0.5, 0.5), (0.25, 0.25, 0.25)


def make_dataset(n_per_class, size=224, key=7):
    rng = np.random.Generator(np.random.Philox(key=key))
    images, labels = [], []
    yy, xx = np.mgrid[0:size, 0:size]
    for cls in (0, 1):
        for _ in range(n_per_class):
            freq = rng.uniform(0.09, 0.13)
            phase = rng.uniform(0, 2 * np.pi)
            amp = rng.uniform(0.30, 0.45)
            coord = xx if cls == 0 else yy
            img = 0.5 + amp * np.sin(2 * np.pi * freq * coord + phase)
            img = np.clip(img + rng.normal(0, 0.08, (size, size)), 0, 1)
            images.append(img)
            labels.append(cls)
    order = rng.permutation(len(images))
    gray = np.array(images)[order]
    return np.repeat(gray[:, None], 3, axis=1), np.array(labels)[order]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--kernels", help="OKF stack (default: build in-process)")
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--severity", type=int, default=3)
    args = parser.parse_args()

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if args.kernels:
            stack = read_kernel_file(args.kernels)
        else:
            print("matching kernel stack (one-off, ~20 s) ...")
            stack, _ = build_benchmark_stack()

    batch, labels = make_dataset(100)
    train, test = np.arange(140), np.arange(140, 200)
    cfg = AugmentConfig(stack=stack, severity=args.severity, alpha=1.0,
                        mean=MEAN, std=STD, rng_seed=13)
    keys = cfg.kernel_keys()

    rng = np.random.Generator(np.random.Philox(key=14))
    blurred = np.empty_like(batch[test])
    for i, idx in enumerate(test):
        kernel = stack[keys[int(rng.integers(len(keys)))]]
        for c in range(3):
            blurred[i, c] = np.clip(
                convolve_reflect(batch[idx, c], kernel.channel(c).astype(float)), 0, 1)

    proj = np.random.Generator(np.random.Philox(key=11)).normal(
        0, 1, (112 * 112, 256)) / np.sqrt(112 * 112)

    def features(normalized):
        pooled = normalized.mean(axis=1).reshape(-1, 112, 2, 112, 2).mean(axis=(2, 4))
        return np.maximum(pooled.reshape(len(normalized), -1) @ proj, 0)

    def fit(x, y):
        a = np.hstack([x, np.ones((len(x), 1))])
        return np.linalg.solve(a.T @ a + np.eye(a.shape[1]), a.T @ (2.0 * y - 1.0))

    def score(w, x, y):
        a = np.hstack([x, np.ones((len(x), 1))])
        return 100.0 * np.mean((a @ w > 0) == (y == 1))

    start = time.perf_counter()
    w_plain = fit(features(normalize_batch(batch[train], MEAN, STD)), labels[train])

    augmenter = OpticsAugment(cfg)
    feats, labs = [], []
    for _ in range(args.epochs):
        feats.append(features(augmenter(batch[train])))
        labs.append(labels[train])
    w_aug = fit(np.vstack(feats), np.concatenate(labs))

    clean_feats = features(normalize_batch(batch[test], MEAN, STD))
    blur_feats = features(normalize_batch(blurred, MEAN, STD))
    print(f"evaluated in {time.perf_counter() - start:.1f} s")
    print(f"{'probe':12s} {'clean acc':>10s} {'blurred acc':>12s}")
    print(f"{'plain':12s} {score(w_plain, clean_feats, labels[test]):>9.1f}% "
          f"{score(w_plain, blur_feats, labels[test]):>11.1f}%")
    print(f"{'augmented':12s} {score(w_aug, clean_feats, labels[test]):>9.1f}% "
          f"{score(w_aug, blur_feats, labels[test]):>11.1f}%")


if __name__ == "__main__":
    main()
