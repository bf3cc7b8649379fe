"""Command-line entry points: make-dataset, calibrate, evaluate, report, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .reports import load_case_results, write_study_report
from .segment import PredictorHandle
from .study import aggregate_results, calibrate_threshold, evaluate, load_manifest, make_dataset


def parse_predictor_spec(spec: str) -> tuple[str, PredictorHandle]:
    """Parse ``[name=]kind[:key=value,...]`` into a named predictor handle.

    Values are parsed as JSON when possible (numbers, booleans), else kept
    as strings; commas inside quoted values are preserved, so command
    templates like ``command="mytool {input} {output}"`` work.
    """
    name = None
    if "=" in spec.split(":", 1)[0]:
        name, spec = spec.split("=", 1)
    kind, _, rest = spec.partition(":")
    params = {}
    for part in _split_params(rest):
        if not part:
            continue
        key, _, value = part.partition("=")
        value = value.strip()
        if value.startswith('"') and value.endswith('"') and len(value) >= 2:
            params[key.strip()] = value[1:-1]
        else:
            try:
                params[key.strip()] = json.loads(value)
            except (json.JSONDecodeError, ValueError):
                params[key.strip()] = value
    return name or kind, PredictorHandle(kind=kind.strip(), params=params)


def _split_params(rest: str) -> list[str]:
    parts, cur, quoted = [], [], False
    for ch in rest:
        if ch == '"':
            quoted = not quoted
            cur.append(ch)
        elif ch == "," and not quoted:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def _cmd_make_dataset(args) -> int:
    manifest = make_dataset(args.out_dir, args.n_train, args.n_val, args.n_test, seed=args.seed)
    print(f"wrote {manifest}")
    return 0


def _cmd_calibrate(args) -> int:
    manifest = load_manifest(args.manifest)
    _, handle = parse_predictor_spec(args.predictor)
    result = calibrate_threshold(manifest, handle, out_dir=args.out_dir)
    print(
        f"threshold={result.threshold} f1={result.f1:.4f} "
        f"auc_pr={result.auc_pr:.4f} auc_roc={result.auc_roc:.4f}"
    )
    return 0


def _cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    methods = dict(parse_predictor_spec(spec) for spec in args.predictor)
    if args.threshold is not None:
        threshold = args.threshold
    else:
        tpath = Path(args.out_dir) / "threshold.json"
        if not tpath.is_file():
            print("no --threshold given and no threshold.json in --out-dir", file=sys.stderr)
            return 1
        threshold = json.loads(tpath.read_text())["threshold"]
    workers = 1 if args.serial else args.workers
    report = evaluate(manifest, methods, threshold, workers=workers)
    write_study_report(report, args.out_dir)
    print((Path(args.out_dir) / "report.txt").read_text())
    if report.failures:
        print(f"{len(report.failures)} case(s) failed; see report.txt", file=sys.stderr)
        return 2
    return 0


def _cmd_report(args) -> int:
    out = Path(args.out_dir)
    results = load_case_results(out / "percase.csv", out / "timings.csv")
    report = aggregate_results(results)
    write_study_report(report, out)
    print((out / "report.txt").read_text())
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    serve(host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segbench",
        description="Phantom-based ultrasound segmentation workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-dataset", help="generate a phantom dataset with splits")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-train", type=int, default=50)
    p.add_argument("--n-val", type=int, default=10)
    p.add_argument("--n-test", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_make_dataset)

    p = sub.add_parser("calibrate", help="select the max-F1 threshold on the validation split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictor", required=True, help="kind[:key=value,...]")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("evaluate", help="evaluate predictors over the test split")
    p.add_argument("--manifest", required=True)
    p.add_argument(
        "--predictor",
        action="append",
        required=True,
        help="[name=]kind[:key=value,...]; repeatable",
    )
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--serial", action="store_true", help="force sequential per-case timing runs")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", help="re-emit report tables from percase.csv")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", help="run the interactive navigation service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8077)
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
