"""Study report emission: machine CSVs plus an aligned human-readable table.

Everything except the timing artifacts is deterministic for a fixed dataset
seed; measured wall-clock goes to ``timings.csv`` / ``timing_summary.txt``
only. Batch compute timing is not comparable to interactive timing that
includes human interaction, and the human-readable report says so.
"""

from __future__ import annotations

from pathlib import Path

from .metrics import CaseMetrics
from .study import METRIC_NAMES, CaseResult, StudyReport

DETERMINISTIC_FILES = ("report.txt", "report.csv", "percase.csv", "significance.csv")
TIMING_FILES = ("timings.csv", "timing_summary.txt")

_METRIC_LABELS = {
    "dice": "Dice",
    "precision": "Precision",
    "recall": "Recall",
    "rvd": "RVD",
    "hd95": "HD95 (mm)",
}


def write_study_report(report: StudyReport, out_dir) -> list[Path]:
    """Write all report artifacts; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        _write_percase_csv(report, out / "percase.csv"),
        _write_report_csv(report, out / "report.csv"),
        _write_significance_csv(report, out / "significance.csv"),
        _write_report_txt(report, out / "report.txt"),
        _write_timings_csv(report, out / "timings.csv"),
        _write_timing_summary(report, out / "timing_summary.txt"),
    ]
    return written


def _write_percase_csv(report: StudyReport, path: Path) -> Path:
    lines = ["case_id,method,dice,precision,recall,rvd,hd95_mm,detected,error"]
    for r in report.results:
        m = r.metrics
        hd = "" if m.hd95_mm is None else repr(m.hd95_mm)
        err = (r.error or "").replace(",", ";").replace("\n", " ")
        lines.append(
            f"{r.case_id},{r.method},{m.dice!r},{m.precision!r},{m.recall!r},"
            f"{m.rvd!r},{hd},{int(m.detected)},{err}"
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_report_csv(report: StudyReport, path: Path) -> Path:
    lines = ["metric,method,q25,median,q75"]
    for metric in METRIC_NAMES:
        for method in report.methods:
            q = report.metric_quartiles.get(metric, {}).get(method)
            if q is None:
                lines.append(f"{metric},{method},,,")
            else:
                lines.append(f"{metric},{method},{q.q25!r},{q.median!r},{q.q75!r}")
    for method in report.methods:
        s = report.detection_sensitivity[method]
        lines.append(f"detection_sensitivity,{method},{s!r},{s!r},{s!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_significance_csv(report: StudyReport, path: Path) -> Path:
    lines = ["metric,method_a,method_b,n_pairs,p_value,significant"]
    for row in report.significance:
        lines.append(
            f"{row.metric},{row.method_a},{row.method_b},{row.n_pairs},"
            f"{row.p_value!r},{int(row.significant)}"
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_report_txt(report: StudyReport, path: Path) -> Path:
    col = 8
    methods = report.methods
    lines = []
    lines.append("Evaluation metrics over the test set (quartiles per method)")
    lines.append("")
    header = f"{'':12s}"
    sub = f"{'':12s}"
    for m in methods:
        header += f"| {m:^{3 * col + 2}s} "
        sub += f"| {'25%':>{col}s} {'Med.':>{col}s} {'75%':>{col}s} "
    lines.append(header.rstrip())
    lines.append(sub.rstrip())
    lines.append("-" * len(sub))
    for metric in METRIC_NAMES:
        row = f"{_METRIC_LABELS[metric]:12s}"
        for method in methods:
            q = report.metric_quartiles.get(metric, {}).get(method)
            if q is None:
                row += f"| {'n/a':>{col}s} {'n/a':>{col}s} {'n/a':>{col}s} "
            else:
                row += f"| {q.q25:>{col}.3f} {q.median:>{col}.3f} {q.q75:>{col}.3f} "
        lines.append(row.rstrip())
    lines.append("")
    lines.append("Lesion detection sensitivity (Dice > 0.5):")
    for method in methods:
        lines.append(f"  {method:24s} {report.detection_sensitivity[method]:.3f}")
    lines.append("")
    lines.append("Paired Wilcoxon signed-rank tests (Bonferroni-adjusted):")
    lines.append(f"  {'metric':10s} {'comparison':40s} {'n':>4s} {'p':>12s}  significant")
    for row in report.significance:
        cmp_label = f"{row.method_a} vs {row.method_b}"
        lines.append(
            f"  {row.metric:10s} {cmp_label:40s} {row.n_pairs:>4d} {row.p_value:>12.6g}  "
            + ("yes" if row.significant else "no")
        )
    if report.failures:
        lines.append("")
        lines.append("Per-case failures (scored as misses):")
        for case_id, method, error in report.failures:
            lines.append(f"  {case_id} [{method}]: {error}")
    lines.append("")
    lines.append(
        "Timing is reported separately in timing_summary.txt; batch compute time"
    )
    lines.append(
        "is not comparable to interactive segmentation time that includes human input."
    )
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_timings_csv(report: StudyReport, path: Path) -> Path:
    lines = ["case_id,method,elapsed_s"]
    for r in report.results:
        lines.append(f"{r.case_id},{r.method},{r.metrics.elapsed_s!r}")
    path.write_text("\n".join(lines) + "\n")
    return path


def load_case_results(percase_csv, timings_csv=None) -> list[CaseResult]:
    """Reload per-case results written by :func:`write_study_report`."""
    lines = Path(percase_csv).read_text().splitlines()
    timings: dict[tuple[str, str], float] = {}
    if timings_csv is not None and Path(timings_csv).is_file():
        for line in Path(timings_csv).read_text().splitlines()[1:]:
            case_id, method, elapsed = line.split(",")
            timings[(case_id, method)] = float(elapsed)
    results = []
    for line in lines[1:]:
        case_id, method, dice, precision, recall, rvd, hd, detected, error = line.split(",", 8)
        metrics = CaseMetrics(
            dice=float(dice),
            precision=float(precision),
            recall=float(recall),
            rvd=float(rvd),
            hd95_mm=float(hd) if hd else None,
            detected=detected == "1",
            elapsed_s=timings.get((case_id, method), 0.0),
        )
        results.append(CaseResult(case_id, method, metrics, error=error or None))
    return results


def _write_timing_summary(report: StudyReport, path: Path) -> Path:
    col = 10
    lines = ["Wall-clock seconds per case (quartiles per method; not deterministic)", ""]
    lines.append(f"{'method':24s} {'25%':>{col}s} {'Med.':>{col}s} {'75%':>{col}s}")
    for method in report.methods:
        q = report.timing_quartiles[method]
        lines.append(f"{method:24s} {q.q25:>{col}.3f} {q.median:>{col}.3f} {q.q75:>{col}.3f}")
    path.write_text("\n".join(lines) + "\n")
    return path
