"""Score prediction logs: per-cell accuracy, baseline deltas, rank correlation.

A prediction log is a CSV with header ``image,corruption,severity,true,pred``;
severity 0 is reserved for clean rows. Scoring is a pure function of the log
contents, so row order never changes any output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import DomainError

CLEAN_NAME = "clean"
DEFAULT_BASELINE = "disk_baseline"

LOG_HEADER = ["image", "corruption", "severity", "true", "pred"]


@dataclass
class PredictionLog:
    model: str
    rows: list = field(default_factory=list)  # (image, corruption, severity, true, pred)

    def append(self, image, corruption, severity, true, pred):
        self.rows.append((str(image), str(corruption), int(severity), str(true), str(pred)))

    def corruptions(self) -> list[str]:
        return sorted({r[1] for r in self.rows if r[1] != CLEAN_NAME})

    def severities(self, corruption: str) -> list[int]:
        return sorted({r[2] for r in self.rows if r[1] == corruption})

    @classmethod
    def read_csv(cls, path, model: Optional[str] = None) -> "PredictionLog":
        path = Path(path)
        log = cls(model or path.stem)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != LOG_HEADER:
                raise DomainError(f"unexpected log header {header}; want {LOG_HEADER}")
            for row in reader:
                log.append(*row)
        return log

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(LOG_HEADER)
            writer.writerows(self.rows)


def accuracy(log: PredictionLog, corruption: str, severity: int) -> float:
    """Top-1 accuracy in percent over the rows matching the filter."""
    matching = [r for r in log.rows if r[1] == corruption and r[2] == severity]
    if not matching:
        raise DomainError(f"log {log.model!r} has no rows for "
                          f"({corruption!r}, severity {severity})")
    correct = sum(1 for r in matching if r[3] == r[4])
    return 100.0 * correct / len(matching)


def delta_vs_baseline(acc_corruption: float, acc_baseline: float) -> float:
    """Signed accuracy deviation in percentage points (negative = harder)."""
    return acc_corruption - acc_baseline


@dataclass
class ScoreTable:
    model: str
    acc: dict                      # (corruption, severity) -> percent
    delta: dict                    # (corruption, severity) -> points vs baseline, or None
    delta_clean: dict              # (corruption, severity) -> points vs clean, or None
    clean_acc: Optional[float]
    baseline_name: str


def score_log(log: PredictionLog, baseline: str = DEFAULT_BASELINE) -> ScoreTable:
    """Accuracy per (corruption, severity) plus baseline and clean deltas."""
    acc, delta, delta_clean = {}, {}, {}
    clean_acc = None
    if any(r[1] == CLEAN_NAME for r in log.rows):
        clean_acc = accuracy(log, CLEAN_NAME, 0)
    for corruption in log.corruptions():
        if corruption == baseline:
            continue
        for severity in log.severities(corruption):
            cell = (corruption, severity)
            acc[cell] = accuracy(log, corruption, severity)
            try:
                base_acc = accuracy(log, baseline, severity)
                delta[cell] = delta_vs_baseline(acc[cell], base_acc)
            except DomainError:
                delta[cell] = None
            delta_clean[cell] = None if clean_acc is None else acc[cell] - clean_acc
    return ScoreTable(log.model, acc, delta, delta_clean, clean_acc, baseline)


def _merge_count(seq: list) -> tuple[list, int]:
    if len(seq) <= 1:
        return seq, 0
    mid = len(seq) // 2
    left, n_left = _merge_count(seq[:mid])
    right, n_right = _merge_count(seq[mid:])
    merged = []
    inversions = n_left + n_right
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            merged.append(right[j])
            j += 1
            inversions += len(left) - i
    merged.extend(left[i:])
    merged.extend(right[j:])
    return merged, inversions


def kendall_tau(ranking_a: list, ranking_b: list) -> float:
    """Rank correlation between two tie-free orderings of the same items.

    tau = (concordant - discordant) / (n(n-1)/2), computed by counting
    inversions of b's items in a's order (merge sort, O(n log n)).
    """
    if len(set(ranking_a)) != len(ranking_a) or len(set(ranking_b)) != len(ranking_b):
        raise DomainError("rankings must not contain duplicates")
    if set(ranking_a) != set(ranking_b):
        only_a = sorted(set(ranking_a) - set(ranking_b))
        only_b = sorted(set(ranking_b) - set(ranking_a))
        raise DomainError(f"rankings cover different items; "
                          f"only in a: {only_a}, only in b: {only_b}")
    n = len(ranking_a)
    if n < 2:
        raise DomainError("need at least two items to correlate")
    position = {item: i for i, item in enumerate(ranking_a)}
    sequence = [position[item] for item in ranking_b]
    _, discordant = _merge_count(sequence)
    total = n * (n - 1) // 2
    return (total - 2 * discordant) / total


def rank_models(tables: list[ScoreTable], corruption: Optional[str] = None,
                severity: Optional[int] = None) -> list[str]:
    """Models ordered best-first by accuracy; ties break on the model name.

    With no filter the ranking uses the mean over every scored cell; with a
    corruption (and optionally a severity) it uses just those cells.
    """
    def key_acc(table: ScoreTable) -> float:
        cells = [v for (c, s), v in sorted(table.acc.items())
                 if (corruption is None or c == corruption)
                 and (severity is None or s == severity)]
        if not cells:
            raise DomainError(f"model {table.model!r} has no cells for "
                              f"({corruption}, {severity})")
        return sum(cells) / len(cells)

    return [t.model for t in sorted(tables, key=lambda t: (-key_acc(t), t.model))]


def rank_models_per_corruption(tables: list[ScoreTable]) -> dict[str, list[str]]:
    """Best-first model ranking for each corruption separately.

    This is the default ranking flavor for rank-correlation comparisons;
    an aggregate ranking is available via rank_models(tables).
    """
    corruptions = sorted({c for t in tables for (c, _) in t.acc})
    return {c: rank_models(tables, corruption=c) for c in corruptions}


def gain_table(log_plain: PredictionLog, log_augmented: PredictionLog,
               baseline: Optional[str] = None) -> dict[int, float]:
    """Mean per-severity accuracy gain (augmented - plain) across corruptions."""
    grid_plain = {(c, s) for c in log_plain.corruptions()
                  for s in log_plain.severities(c)}
    grid_aug = {(c, s) for c in log_augmented.corruptions()
                for s in log_augmented.severities(c)}
    if grid_plain != grid_aug:
        raise DomainError(f"logs cover different grids; "
                          f"plain only: {sorted(grid_plain - grid_aug)}, "
                          f"augmented only: {sorted(grid_aug - grid_plain)}")
    cells = [(c, s) for (c, s) in sorted(grid_plain) if c != baseline]
    if not cells:
        raise DomainError("no corruption cells shared by the two logs")
    gains: dict[int, list] = {}
    for corruption, severity in cells:
        g = accuracy(log_augmented, corruption, severity) \
            - accuracy(log_plain, corruption, severity)
        gains.setdefault(severity, []).append(g)
    return {s: sum(v) / len(v) for s, v in sorted(gains.items())}


def write_reports(table: ScoreTable, out_dir) -> tuple[Path, Path]:
    """CSV (machine) and aligned-text (human) score reports.

    Rows are ordered corruption-alphabetical, severity-ascending, with the
    clean row appended; two runs over the same table are byte-identical.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"scores_{table.model}.csv"
    txt_path = out_dir / f"scores_{table.model}.txt"

    def fmt(value):
        return "" if value is None else f"{value:.4f}"

    rows = []
    for (corruption, severity) in sorted(table.acc):
        rows.append([corruption, severity, f"{table.acc[(corruption, severity)]:.4f}",
                     fmt(table.delta[(corruption, severity)]),
                     fmt(table.delta_clean[(corruption, severity)])])
    if table.clean_acc is not None:
        rows.append([CLEAN_NAME, 0, f"{table.clean_acc:.4f}", "", ""])

    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["corruption", "severity", "acc",
                         f"delta_vs_{table.baseline_name}", "delta_vs_clean"])
        writer.writerows(rows)

    widths = (22, 8, 10, 12, 12)
    header = ("corruption", "severity", "acc", "d_baseline", "d_clean")
    lines = ["model: " + table.model,
             "  ".join(h.ljust(w) for h, w in zip(header, widths))]
    for row in rows:
        lines.append("  ".join(str(v).ljust(w) for v, w in zip(row, widths)))
    txt_path.write_text("\n".join(lines) + "\n")
    return csv_path, txt_path
