"""Command-line entry point.

One executable, nine subcommands covering the whole pipeline: simulate,
train, evaluate, roc, compare, baseline, export, stream, replicate.

Exit codes: 0 success, 1 usage or bad parameter, 2 data or schema problem,
3 model or wire-format problem. Diagnostics go to stderr; stdout carries
only results.

Every value a flag can set may also come from a key=value config file
(--config); explicit flags win over the file, the file wins over built-in
defaults. Each run can record a JSON manifest of its resolved arguments,
inputs, outputs, and results (--manifest PATH, or automatically next to the
primary output file).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

from . import __version__
from .baseline import AverageBaseline
from .dataset import SensorFrame, read_csv, write_csv
from .errors import DataError, ModelError, ModelFormatError, WireFormatError
from .forest import ForestClassifier, classify, dump_tree
from .metrics import (
    METRIC_NAMES,
    compute_metrics,
    confusion_matrix,
    is_significant_difference,
    metrics_from_csv,
    metrics_to_csv,
    roc_points,
    roc_to_csv,
    train_test_split,
)
from .model_io import decode_model, encode_model, model_digest
from .simulate import (
    CONFIG_KEYS,
    DEFAULT_LEVELS,
    DEFAULT_ROWS_PER_LEVEL,
    config_from_mapping,
    generate_dataset,
    parse_config_text,
)
from .study import run_study, render_report
from .telemetry import (
    StreamDecoder,
    encode_diagnostic_event,
    replay,
    run_pipeline,
)

PROG = "acsdx"


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- casters

def _uint64(raw: str) -> int:
    value = int(raw)
    if not 0 <= value < 2**64:
        raise ValueError(f"seed out of range: {raw}")
    return value


def _positive_int(raw: str) -> int:
    value = int(raw)
    if value < 1:
        raise ValueError(f"expected a positive integer, got {raw}")
    return value


def _fraction(raw: str) -> float:
    value = float(raw)
    if not 0 < value < 1:
        raise ValueError(f"expected a fraction in (0, 1), got {raw}")
    return value


def _unit_interval(raw: str) -> float:
    value = float(raw)
    if not 0 < value <= 1:
        raise ValueError(f"expected a value in (0, 1], got {raw}")
    return value


def _positive_float(raw: str) -> float:
    value = float(raw)
    if not value > 0:
        raise ValueError(f"expected a positive number, got {raw}")
    return value


def _levels(raw: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in raw.split(","))
    except ValueError:
        raise ValueError(f"bad pressure levels {raw!r}") from None
    if not values:
        raise ValueError("pressure levels cannot be empty")
    return values


# ------------------------------------------------------- config/manifest

def _load_pairs(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config_text(text)


def _resolve(args, table, allow_sim: bool):
    """Fill unset flags from the config file, then from defaults.

    table rows are (dest, caster, default). Returns the SimConfig built from
    any simulator keys (identity config when none / not allowed).
    """
    pairs = _load_pairs(getattr(args, "config", None))
    sim_cfg = None
    if allow_sim:
        sim_cfg = config_from_mapping(pairs)
        pairs = {k: v for k, v in pairs.items() if k not in CONFIG_KEYS}
    known = {dest for dest, _, _ in table}
    unknown = sorted(set(pairs) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    for dest, caster, default in table:
        if getattr(args, dest, None) is not None:
            continue
        if dest in pairs:
            try:
                setattr(args, dest, caster(pairs[dest]))
            except ValueError as exc:
                raise ValueError(f"config key {dest!r}: {exc}") from None
        else:
            setattr(args, dest, default)
    return sim_cfg


def _jsonable(value):
    if isinstance(value, tuple):
        return list(value)
    return value


def _write_manifest(args, command: str, *, arguments: dict, inputs: dict,
                    outputs: dict, results: dict, primary: str | None) -> None:
    path = getattr(args, "manifest", None)
    if path is None:
        if primary is None:
            return
        path = primary + ".manifest.json"
    doc = {
        "tool": PROG,
        "version": __version__,
        "command": command,
        "arguments": {k: _jsonable(v) for k, v in arguments.items()},
        "inputs": inputs,
        "outputs": outputs,
        "results": results,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ------------------------------------------------------------------- I/O

def _read_model(path: str) -> tuple[ForestClassifier, bytes]:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc.strerror or exc}") from None
    return decode_model(blob), blob


def _emit_text(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _emit_bytes(blob: bytes, path: str | None) -> None:
    if path is None:
        sys.stdout.buffer.write(blob)
        sys.stdout.buffer.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(blob)


def _file_sha256(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _metrics_doc(metrics, cm) -> dict:
    doc = {name: metrics.value(name) for name in METRIC_NAMES}
    doc["undefined"] = list(metrics.undefined)
    doc["confusion"] = {"tp": cm.tp, "tn": cm.tn, "fp": cm.fp, "fn": cm.fn}
    return doc


# ------------------------------------------------------------ subcommands

def _cmd_simulate(args) -> int:
    table = (
        ("seed", _uint64, 0),
        ("levels", _levels, DEFAULT_LEVELS),
        ("rows_per_level", _positive_int, DEFAULT_ROWS_PER_LEVEL),
    )
    cfg = _resolve(args, table, allow_sim=True)
    ds = generate_dataset(args.scenario, cfg, args.seed, args.levels, args.rows_per_level)
    write_csv(ds, args.out)
    _write_manifest(
        args, "simulate",
        arguments={"scenario": args.scenario, "seed": args.seed,
                   "levels": args.levels, "rows_per_level": args.rows_per_level,
                   "config": getattr(args, "config", None)},
        inputs={}, outputs={"data": args.out},
        results={"rows": len(ds), "sha256": _file_sha256(args.out)},
        primary=args.out,
    )
    return 0


def _cmd_train(args) -> int:
    table = (
        ("seed", _uint64, 0),
        ("trees", _positive_int, 100),
        ("max_depth", _positive_int, 5),
        ("max_features", _positive_int, 2),
        ("split_seed", _uint64, 0),
    )
    _resolve(args, table, allow_sim=False)
    ds = read_csv(args.data)
    train_ds = ds
    holdout_rows = None
    if args.test_fraction is not None:
        train_ds, held = train_test_split(ds, args.test_fraction, args.split_seed)
        holdout_rows = len(held)
        if args.holdout:
            write_csv(held, args.holdout)
    forest = ForestClassifier(
        n_trees=args.trees, max_depth=args.max_depth,
        max_features=args.max_features, seed=args.seed,
    ).fit(train_ds.features(), train_ds.labels)
    blob = encode_model(forest)
    _emit_bytes(blob, args.out)
    digest = model_digest(blob)
    print(f"trained {args.trees} trees on {len(train_ds)} rows", file=sys.stderr)
    _write_manifest(
        args, "train",
        arguments={"seed": args.seed, "trees": args.trees,
                   "max_depth": args.max_depth, "max_features": args.max_features,
                   "test_fraction": args.test_fraction, "split_seed": args.split_seed},
        inputs={"data": args.data},
        outputs={"model": args.out, "holdout": args.holdout},
        results={"model_digest": digest, "trained_rows": len(train_ds),
                 "holdout_rows": holdout_rows},
        primary=args.out,
    )
    return 0


def _cmd_evaluate(args) -> int:
    table = (("threshold", _unit_interval, 0.5),)
    _resolve(args, table, allow_sim=False)
    forest, blob = _read_model(args.model)
    ds = read_csv(args.data)
    pred = classify(forest, ds.features(), args.threshold)
    cm = confusion_matrix(ds.labels, pred)
    metrics = compute_metrics(cm)
    _emit_text(metrics_to_csv(metrics, cm), args.out)
    _write_manifest(
        args, "evaluate",
        arguments={"threshold": args.threshold},
        inputs={"model": args.model, "data": args.data},
        outputs={"metrics": args.out},
        results={"model_digest": model_digest(blob), **_metrics_doc(metrics, cm)},
        primary=args.out,
    )
    return 0


def _cmd_roc(args) -> int:
    _resolve(args, (), allow_sim=False)
    forest, blob = _read_model(args.model)
    ds = read_csv(args.data)
    curve = roc_points(forest.predict_proba(ds.features()), ds.labels)
    _emit_text(roc_to_csv(curve), args.out)
    print(f"auc {curve.auc!r}")
    _write_manifest(
        args, "roc",
        arguments={},
        inputs={"model": args.model, "data": args.data},
        outputs={"roc": args.out},
        results={"auc": curve.auc, "model_digest": model_digest(blob)},
        primary=args.out,
    )
    return 0


def _cmd_compare(args) -> int:
    table = (("rel", _positive_float, 0.10),)
    _resolve(args, table, allow_sim=False)
    docs = []
    for path in (args.a, args.b):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                docs.append(metrics_from_csv(fh.read()))
        except OSError as exc:
            raise DataError(f"cannot read metrics {path}: {exc.strerror or exc}") from None
    lines = []
    verdicts = {}
    for name in METRIC_NAMES:
        va, vb = docs[0].value(name), docs[1].value(name)
        significant = is_significant_difference(va, vb, args.rel)
        verdicts[name] = significant
        word = "significant" if significant else "insignificant"
        lines.append(f"{name},{va!r},{vb!r},{word}")
    sys.stdout.write("metric,a,b,verdict\n" + "\n".join(lines) + "\n")
    _write_manifest(
        args, "compare",
        arguments={"rel": args.rel},
        inputs={"a": args.a, "b": args.b},
        outputs={}, results={"verdicts": verdicts},
        primary=None,
    )
    return 0


def _cmd_baseline(args) -> int:
    table = (("alarm", _positive_float, 30.0),)
    _resolve(args, table, allow_sim=False)
    train_ds = read_csv(args.train)
    test_ds = read_csv(args.data)
    base = AverageBaseline(alarm_mmhg=args.alarm, mode=args.mode)
    base.fit(train_ds.features(), train_ds.pressures)
    pred = base.predict(test_ds.features())
    cm = confusion_matrix(test_ds.labels, pred)
    metrics = compute_metrics(cm)
    _emit_text(metrics_to_csv(metrics, cm), args.out)
    _write_manifest(
        args, "baseline",
        arguments={"alarm": args.alarm, "mode": args.mode},
        inputs={"train": args.train, "data": args.data},
        outputs={"metrics": args.out},
        results=_metrics_doc(metrics, cm),
        primary=args.out,
    )
    return 0


def _cmd_export(args) -> int:
    _resolve(args, (), allow_sim=False)
    forest, blob = _read_model(args.model)
    digest = model_digest(blob)
    parts = [
        f"digest {digest}",
        f"trees {len(forest.trees_)} features {forest.n_features_in_} "
        f"max_depth {forest.max_depth} seed {forest.seed}",
    ]
    for idx, tree in enumerate(forest.trees_):
        parts.append(f"tree {idx}")
        parts.append(dump_tree(tree))
    _emit_text("\n".join(parts) + "\n", args.out)
    _write_manifest(
        args, "export",
        arguments={},
        inputs={"model": args.model},
        outputs={"dump": args.out},
        results={"model_digest": digest},
        primary=args.out,
    )
    return 0


def _read_wire_frames(path: str) -> tuple[list[SensorFrame], int]:
    try:
        with open(path, "rb") as fh:
            payload = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read stream {path}: {exc.strerror or exc}") from None
    dec = StreamDecoder()
    frames = dec.feed(payload)
    dec.close()
    sensor = [f for f in frames if isinstance(f, SensorFrame)]
    return sensor, dec.skipped


def _cmd_stream(args) -> int:
    table = (
        ("threshold", _unit_interval, 0.5),
        ("debounce", _positive_int, 1),
        ("rate", _positive_float, None),
    )
    _resolve(args, table, allow_sim=False)
    forest, blob = _read_model(args.model)
    if args.wire_in:
        frames, skipped_octets = _read_wire_frames(args.infile)
    else:
        frames, skipped_octets = read_csv(args.infile).frames(), 0
    result = run_pipeline(
        replay(frames, args.rate), forest,
        threshold=args.threshold, debounce_window=args.debounce,
    )
    if args.emit == "wire":
        blob_out = b"".join(encode_diagnostic_event(ev) for ev in result.events)
        _emit_bytes(blob_out, args.out)
    else:
        lines = ["timestamp_ms,label,probability"]
        lines += [f"{ev.timestamp_ms},{ev.label},{ev.probability!r}"
                  for ev in result.events]
        _emit_text("\n".join(lines) + "\n", args.out)
    if skipped_octets or result.skipped:
        print(f"skipped {skipped_octets} octets, {result.skipped} frames",
              file=sys.stderr)
    positives = sum(ev.label for ev in result.events)
    _write_manifest(
        args, "stream",
        arguments={"threshold": args.threshold, "debounce": args.debounce,
                   "rate": args.rate, "wire_in": args.wire_in, "emit": args.emit},
        inputs={"model": args.model, "stream": args.infile},
        outputs={"events": args.out},
        results={"events": len(result.events), "positives": positives,
                 "skipped_octets": skipped_octets, "skipped_frames": result.skipped,
                 "model_digest": model_digest(blob)},
        primary=args.out,
    )
    return 0


def _cmd_replicate(args) -> int:
    table = (
        ("seed", _uint64, 42),
        ("trees", _positive_int, 100),
        ("max_depth", _positive_int, 5),
        ("test_fraction", _fraction, 0.2),
        ("threshold", _unit_interval, 0.5),
        ("levels", _levels, DEFAULT_LEVELS),
        ("rows_per_level", _positive_int, DEFAULT_ROWS_PER_LEVEL),
    )
    cfg = _resolve(args, table, allow_sim=True)
    report = run_study(
        args.seed, cfg, args.levels, args.rows_per_level,
        args.test_fraction, args.threshold, args.trees, args.max_depth,
    )
    sys.stdout.write(render_report(report))
    if args.save_model:
        _emit_bytes(report.model_blob, args.save_model)
    _write_manifest(
        args, "replicate",
        arguments={"seed": args.seed, "trees": args.trees,
                   "max_depth": args.max_depth, "test_fraction": args.test_fraction,
                   "threshold": args.threshold, "levels": args.levels,
                   "rows_per_level": args.rows_per_level,
                   "config": getattr(args, "config", None)},
        inputs={},
        outputs={"model": args.save_model},
        results={
            "model_digest": report.model_digest,
            "motionless": _metrics_doc(report.motionless.metrics, report.motionless.cm),
            "motion": _metrics_doc(report.motion.metrics, report.motion.cm),
            "baseline_motion": _metrics_doc(report.baseline_motion.metrics,
                                            report.baseline_motion.cm),
            "auc": {"motionless": report.motionless.roc.auc,
                    "motion": report.motion.roc.auc,
                    "baseline_motion": report.baseline_motion.roc.auc},
            "significance": report.verdicts,
            "elapsed_s": report.elapsed_s,
        },
        primary=args.save_model,
    )
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> _Parser:
    parser = _Parser(prog=PROG, description=__doc__.split("\n", 1)[0])
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="key=value file with default overrides")
        p.add_argument("--manifest", help="write the run manifest to this path")
        return p

    p = add("simulate", _cmd_simulate, "generate a synthetic sleeve dataset CSV")
    p.add_argument("--scenario", required=True, choices=("motionless", "motion"))
    p.add_argument("--seed", type=_uint64)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--levels", type=_levels, help="comma-separated pressures, mmHg")
    p.add_argument("--rows-per-level", type=_positive_int)

    p = add("train", _cmd_train, "fit a random forest on a dataset CSV")
    p.add_argument("--data", required=True, help="training CSV")
    p.add_argument("--out", required=True, help="output model path")
    p.add_argument("--seed", type=_uint64)
    p.add_argument("--trees", type=_positive_int)
    p.add_argument("--max-depth", type=_positive_int)
    p.add_argument("--max-features", type=_positive_int)
    p.add_argument("--test-fraction", type=_fraction,
                   help="hold out this fraction before training")
    p.add_argument("--split-seed", type=_uint64)
    p.add_argument("--holdout", help="write held-out rows to this CSV")

    p = add("evaluate", _cmd_evaluate, "score a model on a labelled CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--threshold", type=_unit_interval)
    p.add_argument("--out", help="metrics CSV path (default stdout)")

    p = add("roc", _cmd_roc, "write the ROC curve and print the AUC")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="ROC CSV path")

    p = add("compare", _cmd_compare, "judge significance between two metric reports")
    p.add_argument("--a", required=True, help="first metrics CSV")
    p.add_argument("--b", required=True, help="second metrics CSV")
    p.add_argument("--rel", type=_positive_float,
                   help="relative interval half-width (default 0.10)")

    p = add("baseline", _cmd_baseline, "score the calibrated-average baseline")
    p.add_argument("--train", required=True, help="calibration CSV (needs pressures)")
    p.add_argument("--data", required=True, help="evaluation CSV")
    p.add_argument("--mode", choices=("mean", "any"), default="mean")
    p.add_argument("--alarm", type=_positive_float, help="alarm pressure, mmHg")
    p.add_argument("--out", help="metrics CSV path (default stdout)")

    p = add("export", _cmd_export, "print a model digest and tree dump")
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="dump path (default stdout)")

    p = add("stream", _cmd_stream, "run the frame-to-event pipeline")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True,
                   help="sensor frames: CSV, or wire bytes with --wire-in")
    p.add_argument("--wire-in", action="store_true",
                   help="input is the binary wire format")
    p.add_argument("--emit", choices=("text", "wire"), default="text")
    p.add_argument("--out", help="events path (default stdout)")
    p.add_argument("--threshold", type=_unit_interval)
    p.add_argument("--debounce", type=_positive_int, help="odd majority window")
    p.add_argument("--rate", type=_positive_float, help="frames per second")

    p = add("replicate", _cmd_replicate, "run the motionless + motion study")
    p.add_argument("--seed", type=_uint64)
    p.add_argument("--trees", type=_positive_int)
    p.add_argument("--max-depth", type=_positive_int)
    p.add_argument("--test-fraction", type=_fraction)
    p.add_argument("--threshold", type=_unit_interval)
    p.add_argument("--levels", type=_levels)
    p.add_argument("--rows-per-level", type=_positive_int)
    p.add_argument("--save-model", help="also write the trained model here")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except (ModelError, WireFormatError) as exc:
        print(f"{PROG}: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"{PROG}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"{PROG}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{PROG}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
