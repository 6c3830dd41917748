"""Command-line entry point.

Exit codes: 0 success, 1 data or validation error, 2 usage error.
Randomised steps take ``--seed`` (default 0, never the clock).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bootstrap import UNITS, BootstrapConfig
from .calibration import LEVELS, calibrate, calibrate_all, dump_artifacts, load_artifacts
from .dataset import Dataset, load_dataset, partition_and_group, serialize, validate
from .errors import DatasetError, ScreenEvalError
from .metrics import THRESHOLD_MODES
from .report import build_confusion_report, build_performance_report, export_roc
from .simulate import load_config, simulate_cohort
from .voting import vote

log = logging.getLogger("screeneval")


def _write(path: str | Path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _emit(args, payload: dict, text: str) -> None:
    if getattr(args, "json", False):
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _load_valid(args) -> Dataset:
    d = load_dataset(args.input, args.format)
    report = validate(d)
    if not report.ok:
        raise DatasetError(report.render())
    if getattr(args, "cohort", None):
        d = d.filter(cohort=args.cohort)
        if not d.records:
            raise DatasetError(f"no records for cohort {args.cohort!r}")
    return d


# --------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    d = load_dataset(args.input, args.format)
    report = validate(d)
    payload = {"input": str(args.input), "records": len(d), **report.as_dict()}
    if report.ok:
        _emit(args, payload, f"{len(d)} records, 0 violations")
        return 0
    if args.json:
        _emit(args, payload, "")
    sys.stderr.write(report.render() + "\n")
    return 1


def cmd_calibrate(args) -> int:
    d = _load_valid(args)
    if args.level == "all":
        if args.strategy:
            raise ScreenEvalError("--strategy applies only with --level subject")
        arts = calibrate_all(d, args.threshold_mode)
    else:
        arts = [calibrate(d, args.level, args.strategy, args.threshold_mode)]
    text = dump_artifacts(arts)
    if args.out:
        _write(args.out, text)
    summary = "\n".join(f"{a.label}: threshold={a.threshold!r} F1={a.achieved_f1:.3f}" for a in arts)
    _emit(args, {"artifacts": [a.as_dict() for a in arts]}, summary)
    return 0


def _bootstrap_cfg(args) -> BootstrapConfig:
    return BootstrapConfig(replicates=args.replicates, confidence=args.confidence, seed=args.seed, unit=args.unit)


def cmd_evaluate(args) -> int:
    d = _load_valid(args)
    arts = load_artifacts(args.artifacts)
    report = build_performance_report(d, arts, _bootstrap_cfg(args), split=args.split, mode=args.threshold_mode)
    text = report.to_json()
    if args.out:
        _write(args.out, text)
    if args.confusion_out:
        conf = build_confusion_report(d, arts, split=args.split, mode=args.threshold_mode)
        _write(args.confusion_out, conf.to_json())
    if args.json:
        sys.stdout.write(text)
    else:
        sys.stdout.write(report.render())
    for n in report.notices:
        log.warning("%s", n)
    return 0


def cmd_screen(args) -> int:
    arts = load_artifacts(args.artifacts)
    art = arts.require("subject", args.strategy)
    rows = []
    if args.scores is not None:
        try:
            scores = [float(x) for x in args.scores.split(",") if x.strip()]
        except ValueError:
            raise ScreenEvalError(f"--scores must be comma-separated numbers, got {args.scores!r}") from None
        if any(not 0.0 <= s <= 1.0 for s in scores):
            raise ScreenEvalError("score out of [0,1]")
        rows.append((args.subject_id, scores))
    else:
        if not args.input:
            raise ScreenEvalError("screen needs --scores or --input")
        d = _load_valid(args)
        rows = [(g.subject_id, g.values) for g in partition_and_group(d, split=args.split)]
    results = []
    for sid, scores in rows:
        value = vote(scores, args.strategy)
        results.append({"subject_id": sid, "subject_score": value,
                        "decision": "positive" if art.decide(value) else "negative",
                        "threshold": art.threshold, "strategy": art.strategy.value})
    if args.out:
        lines = ["subject_id,subject_score,decision"]
        lines += [f"{r['subject_id']},{r['subject_score']!r},{r['decision']}" for r in results]
        _write(args.out, "\n".join(lines) + "\n")
    text = "\n".join(f"{r['subject_id']}: {r['decision']} (score {r['subject_score']:.3f}, "
                     f"threshold {r['threshold']:.3f}, {r['strategy']}-voting)" for r in results)
    _emit(args, {"results": results}, text)
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    d = simulate_cohort(cfg)
    fmt = args.format or ("json" if str(args.out).endswith(".json") else "csv")
    _write(args.out, serialize(d, fmt))
    n_subj = len({r.subject_id for r in d.records})
    _emit(args, {"out": str(args.out), "records": len(d), "subjects": n_subj},
          f"wrote {len(d)} records for {n_subj} subjects to {args.out}")
    return 0


def cmd_roc(args) -> int:
    d = _load_valid(args)
    if args.level == "subject" and not args.strategy:
        raise ScreenEvalError("--level subject needs --strategy")
    strategy = args.strategy if args.level == "subject" else None
    csv_text, svg_text = export_roc(d, args.level, strategy, split=args.split)
    out = Path(args.out)
    stem = out.with_suffix("") if out.suffix in (".csv", ".svg") else out
    csv_path, svg_path = stem.with_name(stem.name + ".csv"), stem.with_name(stem.name + ".svg")
    _write(csv_path, csv_text)
    _write(svg_path, svg_text)
    _emit(args, {"csv": str(csv_path), "svg": str(svg_path)}, f"wrote {csv_path} and {svg_path}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    arts = load_artifacts(args.artifacts or [])
    host, _, port = args.listen.rpartition(":")
    if not port.isdigit():
        raise ScreenEvalError(f"--listen must be HOST:PORT, got {args.listen!r}")
    app = create_app(arts, max_body_bytes=args.max_body, max_replicates=args.max_replicates)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="info")
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="screeneval", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def data_args(sp, required=True):
        sp.add_argument("--input", required=required, help="dataset file (.csv or .json)")
        sp.add_argument("--format", choices=("csv", "json"), help="override format inferred from extension")
        sp.add_argument("--json", action="store_true", help="machine-readable output on stdout")

    def mode_arg(sp, default):
        sp.add_argument("--threshold-mode", choices=THRESHOLD_MODES, default=default,
                        help="decision rule: ge (score >= t) or gt (score > t)")

    sp = sub.add_parser("validate", help="check a dataset against the record schema and invariants")
    data_args(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("calibrate", help="pick best-F1 thresholds on the validation split")
    data_args(sp)
    sp.add_argument("--level", choices=LEVELS + ("all",), default="all")
    sp.add_argument("--strategy", choices=("max", "mean"))
    sp.add_argument("--cohort", help="calibrate on one cohort only")
    sp.add_argument("--out", help="artifact JSON path")
    mode_arg(sp, "ge")
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("evaluate", help="performance report with bootstrap intervals")
    data_args(sp)
    sp.add_argument("--artifacts", nargs="+", required=True, help="calibration artifact JSON file(s)")
    sp.add_argument("--out", help="report JSON path")
    sp.add_argument("--confusion-out", help="confusion table JSON path")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--replicates", type=int, default=1000)
    sp.add_argument("--confidence", type=float, default=0.95)
    sp.add_argument("--unit", choices=UNITS, default="photo", help="bootstrap resampling unit")
    sp.add_argument("--cohort", help="restrict to one cohort")
    sp.add_argument("--split", default="test", help="split to evaluate (default test)")
    mode_arg(sp, None)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("screen", help="subject-level decisions from image scores")
    data_args(sp, required=False)
    sp.add_argument("--artifacts", nargs="+", required=True)
    sp.add_argument("--strategy", choices=("max", "mean"), required=True)
    sp.add_argument("--scores", help="comma-separated image scores for one subject")
    sp.add_argument("--subject-id", default="subject")
    sp.add_argument("--cohort")
    sp.add_argument("--split", default=None, help="only screen subjects of this split")
    sp.add_argument("--out", help="decisions CSV path")
    sp.set_defaults(func=cmd_screen)

    sp = sub.add_parser("simulate", help="generate a synthetic scored dataset")
    sp.add_argument("--config", required=True, help="simulation config JSON")
    sp.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    sp.add_argument("--out", required=True)
    sp.add_argument("--format", choices=("csv", "json"))
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("roc", help="export ROC curve as CSV and SVG")
    data_args(sp)
    sp.add_argument("--level", choices=LEVELS, default="image")
    sp.add_argument("--strategy", choices=("max", "mean"))
    sp.add_argument("--cohort")
    sp.add_argument("--split", default="test")
    sp.add_argument("--out", required=True, help="output prefix; writes PREFIX.csv and PREFIX.svg")
    sp.set_defaults(func=cmd_roc)

    sp = sub.add_parser("serve", help="run the HTTP API")
    sp.add_argument("--listen", default="127.0.0.1:8000", help="HOST:PORT")
    sp.add_argument("--artifacts", nargs="*", help="calibration artifact JSON file(s)")
    sp.add_argument("--max-body", type=int, default=32 * 1024 * 1024, help="request body cap in bytes")
    sp.add_argument("--max-replicates", type=int, default=10_000)
    sp.set_defaults(func=cmd_serve)
    return p


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ScreenEvalError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
