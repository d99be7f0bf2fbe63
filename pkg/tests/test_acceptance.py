"""Release acceptance checks.

One test per gate, in order. Each computes its measurement, records a single
PASS/FAIL line with the observed numbers (repeated in the terminal summary),
then asserts. Thresholds and tolerances are stated inline and are never
loosened to make a gate pass: a red gate here is a finding, not a test bug.
"""

import contextlib
import io
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from acsdx.cli import main as cli_main
from acsdx.dataset import SensorFrame
from acsdx.forest import ForestClassifier, best_split, classify, trees_equal
from acsdx.metrics import ConfusionMatrix, compute_metrics, roc_points
from acsdx.model_io import decode_model, encode_model, model_digest
from acsdx.rng import SplitMix64
from acsdx.simulate import generate_dataset
from acsdx.telemetry import (
    DiagnosticEvent,
    decode_stream,
    encode_diagnostic_event,
    encode_sensor_frame,
)
from helpers import brute_force_split

DATA = Path(__file__).parent / "data"


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def _run(*argv) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli_main(list(argv))
    return code, out.getvalue(), err.getvalue()


def test_criterion_01_motionless_accuracy(study42, criterion):
    m = study42.motionless.metrics
    ok = m.accuracy >= 0.95 and m.precision >= 0.92 and study42.elapsed_s < 10.0
    line = (
        f"criterion 1 motionless accuracy: {_status(ok)} "
        f"(accuracy {m.accuracy:.4f} >= 0.95, precision {m.precision:.4f} >= 0.92, "
        f"study ran in {study42.elapsed_s:.2f} s < 10 s)"
    )
    criterion(line)
    assert ok, line


def test_criterion_02_motion_robustness(study42, criterion):
    m = study42.motion.metrics
    auc_still = study42.motionless.roc.auc
    auc_motion = study42.motion.roc.auc
    ok = (
        m.sensitivity >= 0.90
        and m.specificity >= 0.78
        and m.f1 >= 0.88
        and auc_motion < auc_still
        and auc_motion > 0.9
        and auc_still > 0.9
    )
    line = (
        f"criterion 2 motion robustness: {_status(ok)} "
        f"(sensitivity {m.sensitivity:.4f} >= 0.90, "
        f"specificity {m.specificity:.4f} >= 0.78, f1 {m.f1:.4f} >= 0.88, "
        f"auc motion {auc_motion:.4f} < motionless {auc_still:.4f}, both > 0.9)"
    )
    criterion(line)
    assert ok, line


def test_criterion_03_scenario_parity(study42, criterion):
    names = ("accuracy", "precision", "sensitivity", "f1")
    flagged = [name for name in names if study42.verdicts[name]]
    ok = not flagged
    detail = (
        "all insignificant at the 10% error-bar rule"
        if ok
        else f"significant drop in {', '.join(flagged)}"
    )
    line = (
        f"criterion 3 scenario parity: {_status(ok)} "
        f"(motionless vs motion on {', '.join(names)}: {detail})"
    )
    criterion(line)
    assert ok, line


def test_criterion_04_margin_over_baseline(study42, criterion):
    spec = study42.motion.metrics.specificity
    base = study42.baseline_motion.metrics.specificity
    gap = spec - base
    ok = gap >= 0.20
    line = (
        f"criterion 4 margin over baseline: {_status(ok)} "
        f"(motion specificity gap {gap:+.4f} >= 0.20; "
        f"forest {spec:.4f}, baseline {base:.4f})"
    )
    criterion(line)
    assert ok, line


def test_criterion_05_metric_arithmetic(criterion):
    def exact(num: int, den: int) -> Fraction:
        return Fraction(num, den) if den else Fraction(0)

    worst = Fraction(0)
    checked = 0
    for tp in range(31):
        for tn in range(31 - tp):
            for fp in range(31 - tp - tn):
                for fn in range(31 - tp - tn - fp):
                    total = tp + tn + fp + fn
                    if total == 0:
                        continue
                    m = compute_metrics(ConfusionMatrix(tp, tn, fp, fn))
                    ref = {
                        "accuracy": exact(tp + tn, total),
                        "precision": exact(tp, tp + fp),
                        "sensitivity": exact(tp, tp + fn),
                        "specificity": exact(tn, tn + fp),
                        "f1": exact(2 * tp, 2 * tp + fp + fn),
                    }
                    for name, want in ref.items():
                        dev = abs(Fraction(m.value(name)) - want)
                        if dev > worst:
                            worst = dev
                    checked += 1
    ok = checked == 46_375 and float(worst) <= 1e-15
    line = (
        f"criterion 5 metric arithmetic: {_status(ok)} "
        f"({checked} matrices with up to 30 samples, "
        f"max deviation from exact rationals {float(worst):.2e} <= 1e-15)"
    )
    criterion(line)
    assert ok, line


def test_criterion_06_auc_concordance(criterion):
    rng = SplitMix64(20260817)
    worst = 0.0
    checked = 0
    for _ in range(1000):
        n = 2 + rng.below(49)
        scores = [rng.below(8) / 7 for _ in range(n)]
        labels = [rng.below(2) for _ in range(n)]
        if len(set(labels)) < 2:
            continue
        auc = roc_points(scores, labels).auc
        pos = [s for s, lab in zip(scores, labels) if lab == 1]
        neg = [s for s, lab in zip(scores, labels) if lab == 0]
        wins = sum(
            1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg
        )
        worst = max(worst, abs(auc - wins / (len(pos) * len(neg))))
        checked += 1
    ok = checked > 900 and worst <= 1e-12
    line = (
        f"criterion 6 auc concordance: {_status(ok)} "
        f"({checked} score sets, max |trapezoid - rank concordance| "
        f"{worst:.2e} <= 1e-12)"
    )
    criterion(line)
    assert ok, line


def test_criterion_07_split_search(criterion):
    rng = SplitMix64(77)
    mismatches = 0
    for _ in range(500):
        n = 1 + rng.below(20)
        d = 1 + rng.below(5)
        X = [[float(rng.below(11)) for _ in range(d)] for _ in range(n)]
        y = [rng.below(2) for _ in range(n)]
        got = best_split(X, y, range(d))
        want = brute_force_split(X, y, range(d))
        if want is None:
            agree = got is None
        else:
            agree = (
                got is not None
                and got.weighted_impurity == want[0]
                and got.feature == want[1]
                and got.threshold == want[2]
            )
        mismatches += not agree
    ok = mismatches == 0
    line = (
        f"criterion 7 split search: {_status(ok)} "
        f"(500 random datasets, {mismatches} disagreements with the "
        f"exhaustive reference, exact equality required)"
    )
    criterion(line)
    assert ok, line


def test_criterion_08_training_repeatability(criterion, tmp_path):
    data = tmp_path / "train.csv"
    code, _, _ = _run(
        "simulate", "--scenario", "motionless", "--seed", "11",
        "--rows-per-level", "10", "--out", str(data),
    )
    assert code == 0
    digests = []
    for name in ("a.rfm", "b.rfm"):
        model = tmp_path / name
        code, _, _ = _run(
            "train", "--data", str(data), "--out", str(model),
            "--seed", "2", "--trees", "25",
        )
        assert code == 0
        digests.append(model_digest(model.read_bytes()))
    ok = digests[0] == digests[1]
    line = (
        f"criterion 8 training repeatability: {_status(ok)} "
        f"(two CLI train runs, digests {digests[0][:16]}... and "
        f"{digests[1][:16]}...)"
    )
    criterion(line)
    assert ok, line


def test_criterion_09_serialization_inverses(criterion):
    golden_ok = True
    for name in ("single_leaf.rfm", "three_node.rfm"):
        blob = (DATA / name).read_bytes()
        golden_ok &= encode_model(decode_model(blob)) == blob
    for name in ("sensor_zero.bin", "sensor_rich.bin", "diag_full.bin"):
        blob = (DATA / name).read_bytes()
        frames, skipped = decode_stream([blob])
        golden_ok &= skipped == 0 and len(frames) == 1
        redone = (
            encode_sensor_frame(frames[0])
            if isinstance(frames[0], SensorFrame)
            else encode_diagnostic_event(frames[0])
        )
        golden_ok &= redone == blob

    rng = SplitMix64(4242)
    frames = []
    for _ in range(10_000):
        if rng.below(4) == 0:
            frames.append(
                DiagnosticEvent(rng.below(2**32), rng.below(2), rng.below(10_001) / 10_000)
            )
        else:
            frames.append(
                SensorFrame(rng.below(2**32), tuple(rng.below(4096) for _ in range(5)))
            )
    stream = b"".join(
        encode_sensor_frame(f) if isinstance(f, SensorFrame) else encode_diagnostic_event(f)
        for f in frames
    )
    whole = decode_stream([stream])
    frames_ok = whole == (frames, 0)
    chunk_ok = all(
        decode_stream([stream[i : i + size] for i in range(0, len(stream), size)]) == whole
        for size in (1, 7, 64)
    )

    forests_ok = True
    for i in range(100):
        ds = generate_dataset(
            "motionless", seed=1000 + i, levels=(0.0, 50.0), rows_per_level=4 + i % 5
        )
        forest = ForestClassifier(
            n_trees=1 + i % 5, max_depth=1 + i % 4, seed=i
        ).fit(ds.features(), ds.labels)
        loaded = decode_model(encode_model(forest))
        forests_ok &= all(
            trees_equal(a, b) for a, b in zip(loaded.trees_, forest.trees_)
        )
        forests_ok &= bool(
            np.array_equal(loaded.predict(ds.features()), forest.predict(ds.features()))
        )

    ok = golden_ok and frames_ok and chunk_ok and forests_ok
    line = (
        f"criterion 9 serialization inverses: {_status(ok)} "
        f"(5 golden files {'ok' if golden_ok else 'BAD'}, "
        f"10000 mixed frames {'ok' if frames_ok else 'BAD'}, "
        f"chunk sizes 1/7/64 {'ok' if chunk_ok else 'BAD'}, "
        f"100 trained forests {'ok' if forests_ok else 'BAD'})"
    )
    criterion(line)
    assert ok, line


def test_criterion_10_stream_throughput(study42, criterion):
    forest = decode_model(study42.model_blob)
    X = np.tile(study42.datasets["motionless"].features(), (500, 1))
    started = time.perf_counter()
    pred = classify(forest, X)
    elapsed = time.perf_counter() - started
    rate = len(X) / elapsed
    ok = rate >= 50_000 and len(pred) == len(X) and set(np.unique(pred)) <= {0, 1}
    line = (
        f"criterion 10 stream throughput: {_status(ok)} "
        f"({len(X)} frames in {elapsed:.2f} s, {rate:,.0f} frames/s >= 50,000)"
    )
    criterion(line)
    assert ok, line
