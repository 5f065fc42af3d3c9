"""``bradyquant`` command line: synth, extract, train-arrest, train-classifier,
score, evaluate, sigtest.

Exit codes: 0 success (including batches where some inputs failed),
1 every input failed or a stage could not run on the data given,
2 usage / config / missing artifact / misaligned inputs,
3 internal invariant violation.

Every primary output is written with sorted keys and no timestamps, so a
rerun with the same inputs, config and seed reproduces it byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, arrest_net, config as config_mod, synth
from .config import PipelineConfig
from .exceptions import (BradyError, ConfigError, DegenerateGroups, LengthMismatch,
                         MalformedInput, MissingArtifact, ModelFileError)
from .features import FeatureRow, read_feature_csv, write_feature_csv
from .landmarks import MovementKind, load_recording, save_recording
from .pipeline import HierarchicalScorer, cross_validate, extract, predict_arrests, train_arrest
from .signal import debug_csv
from .stats import metrics
from .stats.mixed import fit_mixed
from .stats.plam import bootstrap_inference, deviance_explained, fit_plam

log = logging.getLogger("bradyquant")

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
USAGE_ERRORS = (ConfigError, MissingArtifact, LengthMismatch, ModelFileError, MalformedInput)
SCORESHEET_FORMAT = "bradyquant-scoresheet"


class AllInputsFailed(BradyError):
    pass


# -- output helpers ------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, NaN/inf to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _read_text(path, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise MissingArtifact(f"{what} {path}: {exc.strerror}") from None


def _read_bytes(path, what: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise MissingArtifact(f"{what} {path}: {exc.strerror}") from None


def _expand_inputs(paths) -> list[Path]:
    """Files as given; directories contribute their *.jsonl and *.csv recordings, sorted."""
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            found = [q for q in p.iterdir()
                     if q.suffix.lower() in (".jsonl", ".csv") and q.is_file()]
            out.extend(sorted(found))
        elif p.is_file():
            out.append(p)
        else:
            raise MissingArtifact(f"input {p}: no such file or directory")
    if not out:
        raise MissingArtifact("no input recordings")
    return out


def _pmap(fn, items, threads: int):
    # ordered results regardless of worker count
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _guarded(fn):
    def run(x):
        try:
            return fn(x), None
        except BradyError as exc:
            return None, exc

    return run


def _report_failures(results, paths):
    failed = [(p, e) for p, (_, e) in zip(paths, results) if e is not None]
    for p, e in failed:
        print(f"bradyquant: {p}: {type(e).__name__}: {e}", file=sys.stderr)
    if failed and len(failed) == len(paths):
        raise AllInputsFailed(f"all {len(paths)} input(s) failed")
    return [{"file": str(p), "error": type(e).__name__, "message": str(e)} for p, e in failed]


# -- subcommands ---------------------------------------------------------------


def cmd_synth(args, cfg: PipelineConfig) -> dict:
    if args.counts:
        try:
            counts = [int(v) for v in args.counts.split(",")]
        except ValueError:
            raise ConfigError("--counts expects four comma-separated integers") from None
        if len(counts) != 4:
            raise ConfigError("--counts expects four comma-separated integers")
        spec = dict(enumerate(counts))
    else:
        spec = synth.clinical_mix_counts(args.n)
    movements = [MovementKind.parse(m) for m in args.movements.split(",")]
    data = synth.generate_dataset(spec, cfg.seed, movements, fps=args.fps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for s in data:
        save_recording(s.recording, out / f"{s.recording.subject_id}.jsonl")
    return {"written": len(data), "out": str(out), "counts_per_movement": spec}


def _arrest_for(x, model_arrest):
    if model_arrest is not None:
        return int(model_arrest), []
    if x.recording.arrest is not None:
        return int(x.recording.arrest), []
    return 0, ["arrest_unknown"]


def cmd_extract(args, cfg: PipelineConfig) -> dict:
    paths = _expand_inputs(args.inputs)
    results = _pmap(_guarded(lambda p: extract(load_recording(p), cfg)), paths, args.threads)
    failures = _report_failures(results, paths)
    ok = [(p, x) for p, (x, _) in zip(paths, results) if x is not None]

    arrests = [None] * len(ok)
    if args.arrest_model:
        params = arrest_net.loads_params(_read_bytes(args.arrest_model, "arrest model"))
        arrests = predict_arrests(params, [x for _, x in ok]).tolist()

    rows = []
    for (p, x), a in zip(ok, arrests):
        arrest, extra = _arrest_for(x, a)
        row = x.row(arrest)
        row.flags = row.flags + extra
        rows.append(row)
    _write(args.out, write_feature_csv(rows))

    if args.debug:
        ddir = Path(args.debug_dir or f"{args.out}.debug")
        ddir.mkdir(parents=True, exist_ok=True)
        for p, x in ok:
            _write(ddir / f"{p.stem}.signal.csv", debug_csv(x.trace))
    return {"rows": len(rows), "failed": failures, "out": str(args.out)}


def cmd_train_arrest(args, cfg: PipelineConfig) -> dict:
    paths = _expand_inputs(args.inputs)
    results = _pmap(_guarded(lambda p: extract(load_recording(p), cfg)), paths, args.threads)
    failures = _report_failures(results, paths)
    items = [x for x, _ in results if x is not None]
    res = train_arrest(items, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(arrest_net.dumps_params(res.params))
    history = Path(args.history or out.with_suffix(".history.json"))
    _write(history, dumps_json({
        "loss": res.loss_history,
        "val_loss": res.val_history,
        "best_epoch": res.best_epoch,
        "n_train": len(items),
    }))
    return {"model": str(out), "history": str(history), "n_train": len(items),
            "final_loss": res.loss_history[-1] if res.loss_history else None, "failed": failures}


def _feature_rows(path) -> list[FeatureRow]:
    rows = read_feature_csv(_read_text(path, "feature CSV"))
    if not rows:
        raise MalformedInput(f"{path}: no feature rows")
    return rows


def _matrix(rows):
    F = np.array([r.features.as_array() for r in rows], dtype=float)
    mv = [r.movement for r in rows]
    return F, mv


def _predictions_csv(rows, pred, probs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["subject_id", "movement", "side", "truth", "pred", "p0", "p1", "p2", "p3"])
    for r, p, pr in zip(rows, pred, probs):
        w.writerow([r.subject_id, r.movement.value, r.side.value, r.score, int(p)]
                   + [repr(float(v)) for v in pr])
    return buf.getvalue()


def cmd_train_classifier(args, cfg: PipelineConfig) -> dict:
    rows = _feature_rows(args.features)
    if any(r.score is None for r in rows):
        raise MalformedInput("every training row needs a score")
    F, mv = _matrix(rows)
    y = np.array([r.score for r in rows])
    keys = [r.subject_id for r in rows]
    cv = cross_validate(F, y, mv, cfg, args.feature_set, keys)
    model = HierarchicalScorer.from_config(cfg, args.feature_set).fit(F, y, mv)

    out = Path(args.out_dir)
    _write(out / "classifier.json", model.dumps())
    report = {"feature_set": args.feature_set, "folds": cfg.cv.folds, "seed": cfg.seed} | cv.as_dict()
    _write(out / "cv_report.json", dumps_json(report))
    _write(out / "cv_predictions.csv", _predictions_csv(rows, cv.pred, cv.probs))
    return {"out_dir": str(out), "cv_accuracy": cv.overall.accuracy,
            "cv_within_one": cv.overall.within_one, "cv_auc": cv.overall.auc}


def cmd_score(args, cfg: PipelineConfig) -> dict:
    rows = _feature_rows(args.features)
    model = HierarchicalScorer.loads(_read_text(args.model, "classifier model"))
    F, mv = _matrix(rows)
    probs = model.predict_proba(F, mv)
    pred = np.argmax(probs, axis=1)
    entries = []
    for r, p, pr in zip(rows, pred, probs):
        entries.append({
            "subject_id": r.subject_id,
            "movement": r.movement.value,
            "side": r.side.value,
            "features": r.features.to_dict(),
            "arrest": r.features.arrest,
            "score": int(p),
            "probabilities": [float(v) for v in pr],
            "flags": list(r.flags),
        })
    sheet = {"format": SCORESHEET_FORMAT, "version": 1, "entries": entries}
    _write(args.out, dumps_json(sheet))
    return {"scored": len(entries), "out": str(args.out)}


def load_scoresheet(path) -> list[dict]:
    try:
        doc = json.loads(_read_text(path, "score sheet"))
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path}: {exc.msg}") from None
    if not isinstance(doc, dict) or doc.get("format") != SCORESHEET_FORMAT:
        raise MalformedInput(f"{path}: not a score sheet")
    return doc["entries"]


def _truth_rows(path):
    """(subject_id, movement, score) from any CSV with those columns."""
    text = _read_text(path, "truth CSV")
    reader = csv.DictReader(io.StringIO(text))
    need = {"subject_id", "movement", "score"}
    if reader.fieldnames is None or not need <= set(reader.fieldnames):
        raise MalformedInput(f"{path}: truth CSV needs columns {sorted(need)}")
    out = []
    for n, rec in enumerate(reader, 2):
        try:
            out.append((rec["subject_id"], MovementKind.parse(rec["movement"]).value, int(rec["score"])))
        except ValueError as exc:
            raise MalformedInput(f"{path} row {n}: {exc}") from None
    return out


def _aligned(truth, entries):
    if len(truth) != len(entries):
        raise LengthMismatch(f"truth has {len(truth)} rows, predictions have {len(entries)}")
    for i, ((sid, _, _), e) in enumerate(zip(truth, entries)):
        if sid != e["subject_id"]:
            raise LengthMismatch(f"row {i}: truth {sid!r} does not match prediction {e['subject_id']!r}")


def _roc_csv(reports: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["group", "fpr", "tpr"])
    for name, rep in reports.items():
        for f, t in zip(rep.roc_fpr, rep.roc_tpr):
            w.writerow([name, repr(float(f)), repr(float(t))])
    return buf.getvalue()


def cmd_evaluate(args, cfg: PipelineConfig) -> dict:
    truth = _truth_rows(args.truth)
    entries = load_scoresheet(args.pred)
    _aligned(truth, entries)
    y = np.array([t[2] for t in truth])
    pred = np.array([e["score"] for e in entries])
    probs = np.array([e["probabilities"] for e in entries], dtype=float).reshape(-1, 4)
    mv = np.array([t[1] for t in truth])
    reports = {"overall": metrics.EvalReport.from_predictions(y, pred, probs)}
    for m in sorted(set(mv)):
        sel = mv == m
        reports[m] = metrics.EvalReport.from_predictions(y[sel], pred[sel], probs[sel])
    _write(args.out, dumps_json({k: v.as_dict() for k, v in reports.items()}))
    if args.roc_csv:
        _write(args.roc_csv, _roc_csv(reports))
    o = reports["overall"]
    return {"out": str(args.out), "accuracy": o.accuracy, "within_one": o.within_one, "auc": o.auc}


def _sig_row(X, y, cfg: PipelineConfig, B: int) -> dict:
    pc = cfg.stats.plam(cfg.seed)
    full = fit_plam(X, y, pc)
    boot = bootstrap_inference(X, y, pc, B=B, seed=cfg.seed, full=full)
    p = dict(zip(("fatigue_p", "arrest_cat1_p", "arrest_cat2_p", "arrest_cat3_p"), boot.p_values))
    return p | {
        "deviance_explained": deviance_explained(full, X, y),
        "n": int(len(y)),
        "coefficients": boot.as_dict(),
        "lambdas": list(full.lambdas),
        "converged": full.converged,
        "separation": full.separation,
    }


def cmd_sigtest(args, cfg: PipelineConfig) -> dict:
    rows = _feature_rows(args.features)
    if any(r.score is None for r in rows):
        raise MalformedInput("every row needs a score")
    B = args.bootstrap or cfg.stats.bootstrap
    groups = {}
    for i, r in enumerate(rows):
        key = (r.movement.value, "both") if args.pool_sides else (r.movement.value, r.side.value)
        groups.setdefault(key, []).append(i)
    table = []
    for (m, side), idx in sorted(groups.items()):
        X = np.array([rows[i].features.as_array() for i in idx])
        y = np.array([rows[i].score for i in idx])
        entry = {"movement": m, "side": side}
        try:
            entry |= _sig_row(X, y, cfg, B)
        except BradyError as exc:
            # a group that cannot support the model is reported, not fatal
            entry |= {"n": len(idx), "skipped": f"{type(exc).__name__}: {exc}"}
        table.append(entry)
    report = {"bootstrap_replicates": B, "seed": cfg.seed, "rows": table}

    if args.pred:
        entries = load_scoresheet(args.pred)
        truth = [(r.subject_id, r.movement.value, r.score) for r in rows]
        _aligned(truth, entries)
        diff = [e["score"] - t[2] for t, e in zip(truth, entries)]
        groups_mv = [MovementKind.parse(t[1]).short for t in truth]
        try:
            report["mixed_model"] = fit_mixed(diff, groups_mv).as_dict()
        except DegenerateGroups as exc:
            report["mixed_model"] = {"skipped": str(exc)}
    _write(args.out, dumps_json(report))
    return {"out": str(args.out), "groups": len(table)}


# -- argument parsing ----------------------------------------------------------


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the global flags with suppressed defaults so a flag
    # given before the subcommand is not reset by the subparser
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--config", metavar="PATH", default=d(None), help="JSON config file (see --dump-config)")
    g.add_argument("--seed", type=int, default=d(None), help="override every seed in the config")
    g.add_argument("--json", action="store_true", default=d(False),
                   help="machine-readable summary / error on stdout")
    g.add_argument("--debug", action="store_true", default=d(False), help="debug logging and debug CSVs")
    g.add_argument("--threads", type=int, default=d(1), metavar="N", help="worker threads")
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(True)
    ap = argparse.ArgumentParser(prog="bradyquant", parents=[_global_flags(False)],
                                 description="Bradykinesia scoring from hand-landmark recordings.")
    ap.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic JSONL dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, default=200, help="recordings per movement, clinical score mix")
    p.add_argument("--counts", help="explicit per-score counts per movement, e.g. 10,10,10,10")
    p.add_argument("--movements", default="finger_tapping,hand_movement,rapid_am")
    p.add_argument("--fps", type=float, default=30.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", parents=[common], help="recordings -> feature CSV")
    p.add_argument("inputs", nargs="+", help="recording files or directories")
    p.add_argument("--out", required=True, help="feature CSV path")
    p.add_argument("--arrest-model", help="arrest network file; otherwise metadata labels are used")
    p.add_argument("--debug-dir", help="where --debug writes per-recording signal CSVs")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train-arrest", parents=[common], help="train the arrest network")
    p.add_argument("inputs", nargs="+", help="labelled recording files or directories")
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--history", help="loss history JSON (default: next to the model)")
    p.set_defaults(func=cmd_train_arrest)

    p = sub.add_parser("train-classifier", parents=[common], help="cross-validate and fit the score classifier")
    p.add_argument("features", help="feature CSV with scores")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--feature-set", choices=("full", "no_fatigue_arrest"), default="full")
    p.set_defaults(func=cmd_train_classifier)

    p = sub.add_parser("score", parents=[common], help="feature CSV -> score sheet")
    p.add_argument("features")
    p.add_argument("--model", required=True, help="classifier.json from train-classifier")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", parents=[common], help="compare a score sheet with true scores")
    p.add_argument("truth", help="CSV with subject_id, movement, score columns")
    p.add_argument("pred", help="score sheet JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--roc-csv", help="also write ROC points as CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sigtest", parents=[common], help="ordinal regression significance table")
    p.add_argument("features", help="feature CSV with scores")
    p.add_argument("--out", required=True)
    p.add_argument("--pred", help="score sheet; adds a random-intercept test of pred - truth")
    p.add_argument("--bootstrap", type=int, help="replicates (default from config)")
    p.add_argument("--pool-sides", action="store_true", help="one row per movement instead of per side")
    p.set_defaults(func=cmd_sigtest)
    return ap


def _load_config(args) -> PipelineConfig:
    cfg = config_mod.load(args.config) if args.config else PipelineConfig().validate()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, USAGE_ERRORS):
        return EXIT_USAGE
    if isinstance(exc, BradyError):
        return EXIT_FAILED
    return EXIT_INTERNAL


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.debug else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.threads < 1:
        ap.error("--threads must be >= 1")
    try:
        cfg = _load_config(args)
        if args.dump_config:
            sys.stdout.write(cfg.dumps())
            return EXIT_OK
        if args.command is None:
            ap.print_usage(sys.stderr)
            return EXIT_USAGE
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=args.threads):
            summary = args.func(args, cfg)
    except Exception as exc:  # every failure becomes an exit code plus a diagnostic
        code = _exit_code(exc)
        if code == EXIT_INTERNAL:
            log.debug("internal error", exc_info=True)
        if args.json:
            sys.stdout.write(dumps_json({"error": type(exc).__name__, "message": str(exc), "exit_code": code}))
        print(f"bradyquant: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    if args.json:
        sys.stdout.write(dumps_json({"command": args.command, "ok": True} | summary))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
