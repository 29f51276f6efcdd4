import itertools

import numpy as np
import pytest

from opticsbench.errors import DomainError
from opticsbench.scoring import (
    PredictionLog,
    accuracy,
    delta_vs_baseline,
    gain_table,
    kendall_tau,
    rank_models,
    rank_models_per_corruption,
    score_log,
    write_reports,
)

CORRUPTIONS = ("astigmatism", "coma", "defocus_spherical", "trefoil")


def synthetic_log(model="resnet", acc_map=None, n=40, baseline=True, clean=True):
    """Log with an exact, known number of correct rows per cell."""
    log = PredictionLog(model)
    acc_map = acc_map or {}
    cells = [(c, s) for c in CORRUPTIONS for s in range(1, 6)]
    if baseline:
        cells += [("disk_baseline", s) for s in range(1, 6)]
    for corruption, severity in cells:
        pct = acc_map.get((corruption, severity), 50.0)
        correct = round(n * pct / 100.0)
        for i in range(n):
            pred = "label" if i < correct else "wrong"
            log.append(f"img{i}", corruption, severity, "label", pred)
    if clean:
        for i in range(n):
            pred = "label" if i < int(0.9 * n) else "wrong"
            log.append(f"img{i}", "clean", 0, "label", pred)
    return log


def test_accuracy_all_correct_and_fractional():
    log = PredictionLog("m")
    for i in range(4):
        log.append(f"i{i}", "coma", 2, "a", "a")
    assert accuracy(log, "coma", 2) == 100.0
    log.rows[-1] = ("i3", "coma", 2, "a", "b")
    assert accuracy(log, "coma", 2) == 75.0


def test_accuracy_missing_cell_names_it():
    log = synthetic_log()
    with pytest.raises(DomainError, match="trefoil.*severity 9"):
        accuracy(log, "trefoil", 9)


def test_accuracy_matches_bruteforce_tally():
    rng = np.random.Generator(np.random.Philox(key=31))
    log = PredictionLog("m")
    rows = []
    for i in range(500):
        corruption = CORRUPTIONS[rng.integers(4)]
        severity = int(rng.integers(1, 6))
        true = str(rng.integers(3))
        pred = str(rng.integers(3))
        log.append(f"img{i}", corruption, severity, true, pred)
        rows.append((corruption, severity, true, pred))
    for corruption in CORRUPTIONS:
        for severity in range(1, 6):
            cell = [(t, p) for c, s, t, p in rows if c == corruption and s == severity]
            if not cell:
                continue
            expected = 100.0 * sum(t == p for t, p in cell) / len(cell)
            assert accuracy(log, corruption, severity) == pytest.approx(expected)


def test_delta_sign_convention():
    assert delta_vs_baseline(70.0, 70.0) == 0.0
    assert delta_vs_baseline(65.1, 70.2) == pytest.approx(-5.1)
    # corruption harder than the baseline => negative
    assert delta_vs_baseline(40.0, 60.0) < 0


def test_kendall_endpoints():
    ranking = ["m1", "m2", "m3", "m4", "m5"]
    assert kendall_tau(ranking, list(ranking)) == 1.0
    assert kendall_tau(ranking, ranking[::-1]) == -1.0


def test_kendall_single_swap():
    a = ["m1", "m2", "m3", "m4"]
    b = ["m1", "m3", "m2", "m4"]
    # 5 concordant, 1 discordant over 6 pairs
    assert kendall_tau(a, b) == pytest.approx(4.0 / 6.0)


def bruteforce_tau(a, b):
    pos_a = {m: i for i, m in enumerate(a)}
    pos_b = {m: i for i, m in enumerate(b)}
    concordant = discordant = 0
    for x, y in itertools.combinations(a, 2):
        s = (pos_a[x] - pos_a[y]) * (pos_b[x] - pos_b[y])
        if s > 0:
            concordant += 1
        else:
            discordant += 1
    return (concordant - discordant) / (len(a) * (len(a) - 1) / 2)


def test_kendall_matches_pair_enumeration():
    rng = np.random.Generator(np.random.Philox(key=33))
    for _ in range(200):
        n = int(rng.integers(2, 11))
        items = [f"m{i}" for i in range(n)]
        a = list(rng.permutation(items))
        b = list(rng.permutation(items))
        assert kendall_tau(a, b) == pytest.approx(bruteforce_tau(a, b), abs=1e-12)


def test_kendall_symmetry():
    rng = np.random.Generator(np.random.Philox(key=34))
    items = [f"m{i}" for i in range(8)]
    for _ in range(20):
        a = list(rng.permutation(items))
        b = list(rng.permutation(items))
        assert kendall_tau(a, b) == pytest.approx(kendall_tau(b, a), abs=1e-12)


def test_kendall_rejects_mismatched_sets():
    with pytest.raises(DomainError, match="m3"):
        kendall_tau(["m1", "m2"], ["m1", "m3"])
    with pytest.raises(DomainError):
        kendall_tau(["m1", "m1"], ["m1", "m1"])


def test_score_log_deltas():
    # accuracies on the 2.5%-grid exactly representable with n=40 rows
    acc_map = {(c, s): 50.0 + 2.5 * s for c in CORRUPTIONS for s in range(1, 6)}
    acc_map.update({("disk_baseline", s): 60.0 for s in range(1, 6)})
    table = score_log(synthetic_log(acc_map=acc_map))
    for c in CORRUPTIONS:
        for s in range(1, 6):
            assert table.acc[(c, s)] == pytest.approx(50.0 + 2.5 * s)
            assert table.delta[(c, s)] == pytest.approx(50.0 + 2.5 * s - 60.0)
    assert table.clean_acc == pytest.approx(90.0)


def test_rank_models_and_tie_break():
    t1 = score_log(synthetic_log("alpha", {(c, s): 70.0 for c in CORRUPTIONS
                                           for s in range(1, 6)}))
    t2 = score_log(synthetic_log("beta", {(c, s): 80.0 for c in CORRUPTIONS
                                          for s in range(1, 6)}))
    t3 = score_log(synthetic_log("gamma", {(c, s): 70.0 for c in CORRUPTIONS
                                           for s in range(1, 6)}))
    assert rank_models([t1, t2, t3]) == ["beta", "alpha", "gamma"]
    assert rank_models([t1, t2, t3], corruption="coma") == ["beta", "alpha", "gamma"]
    per_corruption = rank_models_per_corruption([t1, t2, t3])
    assert set(per_corruption) == set(CORRUPTIONS)
    for ranking in per_corruption.values():
        assert ranking == ["beta", "alpha", "gamma"]


def test_gain_table_identity_and_offset():
    base_map = {(c, s): 50.0 for c in CORRUPTIONS for s in range(1, 6)}
    plain = synthetic_log("plain", base_map, n=40, baseline=False)
    same = synthetic_log("same", base_map, n=40, baseline=False)
    gains = gain_table(plain, same)
    assert gains == {s: pytest.approx(0.0) for s in range(1, 6)}
    lifted = synthetic_log("aug", {k: v + 10.0 for k, v in base_map.items()},
                           n=40, baseline=False)
    gains = gain_table(plain, lifted)
    for s in range(1, 6):
        assert gains[s] == pytest.approx(10.0)


def test_gain_table_rejects_grid_mismatch():
    plain = synthetic_log("plain", n=10, baseline=False)
    partial = PredictionLog("partial")
    partial.append("i", "coma", 1, "a", "a")
    with pytest.raises(DomainError):
        gain_table(plain, partial)


def test_reports_shape_and_determinism(tmp_path):
    table = score_log(synthetic_log())
    csv_a, txt_a = write_reports(table, tmp_path / "a")
    csv_b, txt_b = write_reports(table, tmp_path / "b")
    lines = csv_a.read_text().strip().splitlines()
    assert len(lines) == 1 + 4 * 5 + 1  # header + grid + clean row
    assert csv_a.read_bytes() == csv_b.read_bytes()
    assert txt_a.read_bytes() == txt_b.read_bytes()


def test_report_round_trip(tmp_path):
    import csv as csv_mod

    table = score_log(synthetic_log())
    csv_path, _ = write_reports(table, tmp_path)
    with csv_path.open() as fh:
        rows = list(csv_mod.DictReader(fh))
    for row in rows:
        if row["corruption"] == "clean":
            assert float(row["acc"]) == pytest.approx(table.clean_acc)
            continue
        cell = (row["corruption"], int(row["severity"]))
        assert float(row["acc"]) == pytest.approx(table.acc[cell], abs=5e-5)


def test_log_csv_round_trip(tmp_path):
    log = synthetic_log(n=7)
    path = tmp_path / "preds.csv"
    log.write_csv(path)
    loaded = PredictionLog.read_csv(path, model=log.model)
    assert loaded.rows == log.rows
    assert loaded.model == log.model


def test_row_order_never_matters():
    rng = np.random.Generator(np.random.Philox(key=35))
    log = synthetic_log(n=15)
    shuffled = PredictionLog(log.model, rows=[log.rows[i]
                                              for i in rng.permutation(len(log.rows))])
    a = score_log(log)
    b = score_log(shuffled)
    assert a.acc == b.acc
    assert a.delta == b.delta
