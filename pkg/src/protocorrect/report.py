"""Rendering and persistence of metrics reports.

Three interchangeable encodings: an aligned text table, a machine-readable
JSON document (byte-deterministic, round-trips losslessly), and a per-run CSV.
The figure renderer draws the error-correction accuracy and forgetting curves
to PNG files next to the report.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .errors import FormatError, InvalidConfig
from .harness import MetricsReport, ShotRun

REPORT_VERSION = 1
FORMATS = ("table", "json", "csv")


def _mean_std(values: list[float]) -> tuple[float | None, float | None]:
    """Mean and sample std (n>=2) of the non-None values; (None, None) if empty."""
    if not values:
        return None, None
    m = sum(values) / len(values)
    if len(values) < 2:
        return m, None
    var = sum((v - m) ** 2 for v in values) / (len(values) - 1)
    return m, math.sqrt(var)


def shot_summary(report: MetricsReport, shot: int) -> dict:
    runs = report.runs_for_shot(shot)
    acc_e_m, acc_e_s = _mean_std([r.acc_e for r in runs if r.acc_e is not None])
    for_m, for_s = _mean_std([r.forgetting for r in runs])
    return {
        "shot": shot,
        "acc_e_mean": acc_e_m,
        "acc_e_std": acc_e_s,
        "forgetting_mean": for_m,
        "forgetting_std": for_s,
    }


def render_table(report: MetricsReport) -> str:
    """Aligned text table: one row per shot count, in configured order."""
    multi_seed = len(report.seeds) > 1
    lines = [
        f"base accuracy: {report.acc_base:.3f}%   "
        f"test {report.test_size} = correct {report.d_c_size} + misclassified {report.d_e_size}",
        f"seeds: {', '.join(str(s) for s in report.seeds)}   "
        f"budget: {report.budget if report.budget is not None else 'unlimited'}   "
        f"Acc_E {'includes' if report.include_support_in_acc_e else 'excludes'} support samples",
        "",
    ]
    if multi_seed:
        header = f"{'shots':>6}  {'Acc_E':>8} {'±std':>7}  {'For':>8} {'±std':>7}"
    else:
        header = f"{'shots':>6}  {'Acc_E':>8}  {'For':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    for shot in report.shots:
        s = shot_summary(report, shot)
        acc = "n/a" if s["acc_e_mean"] is None else f"{s['acc_e_mean']:8.3f}"
        fg = f"{s['forgetting_mean']:8.3f}"
        if multi_seed:
            acc_sd = "" if s["acc_e_std"] is None else f"{s['acc_e_std']:7.3f}"
            fg_sd = "" if s["forgetting_std"] is None else f"{s['forgetting_std']:7.3f}"
            lines.append(f"{shot:>6}  {acc:>8} {acc_sd:>7}  {fg:>8} {fg_sd:>7}")
        else:
            lines.append(f"{shot:>6}  {acc:>8}  {fg:>8}")
    return "\n".join(lines) + "\n"


def report_to_document(report: MetricsReport) -> dict:
    return {
        "version": REPORT_VERSION,
        "acc_base": report.acc_base,
        "test_size": report.test_size,
        "d_c_size": report.d_c_size,
        "d_e_size": report.d_e_size,
        "shots": list(report.shots),
        "seeds": list(report.seeds),
        "include_support_in_acc_e": report.include_support_in_acc_e,
        "budget": report.budget,
        "runs": [
            {
                "shot": r.shot,
                "seed": r.seed,
                "acc_e": r.acc_e,
                "acc_c": r.acc_c,
                "forgetting": r.forgetting,
                "support_count": r.support_count,
                "store_size": r.store_size,
            }
            for r in report.runs
        ],
    }


def report_from_document(doc: dict) -> MetricsReport:
    if not isinstance(doc, dict):
        raise FormatError("report document must be a JSON object")
    if doc.get("version") != REPORT_VERSION:
        raise FormatError(f"unsupported report document: version {doc.get('version')!r}")
    try:
        report = MetricsReport(
            acc_base=doc["acc_base"],
            test_size=doc["test_size"],
            d_c_size=doc["d_c_size"],
            d_e_size=doc["d_e_size"],
            shots=tuple(doc["shots"]),
            seeds=tuple(doc["seeds"]),
            include_support_in_acc_e=doc["include_support_in_acc_e"],
            budget=doc["budget"],
            runs=[ShotRun(**run) for run in doc["runs"]],
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed report document: {exc}") from exc
    return report


def render_json(report: MetricsReport) -> str:
    # sorted keys + fixed separators keep identical reports byte-identical
    return json.dumps(report_to_document(report), indent=2, sort_keys=True) + "\n"


def render_csv(report: MetricsReport) -> str:
    """Delimited per-run rows (one line per shot x seed)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["shot", "seed", "acc_e", "acc_c", "forgetting", "support_count", "store_size"]
    )
    for r in report.runs:
        writer.writerow(
            [r.shot, r.seed, "" if r.acc_e is None else r.acc_e, r.acc_c, r.forgetting,
             r.support_count, r.store_size]
        )
    return buf.getvalue()


def emit_report(report: MetricsReport, path: str | Path, fmt: str = "table") -> Path:
    """Write the report to a file in the requested format."""
    if fmt not in FORMATS:
        raise InvalidConfig(f"format must be one of {FORMATS}, got {fmt!r}")
    render = {"table": render_table, "json": render_json, "csv": render_csv}[fmt]
    path = Path(path)
    path.write_text(render(report), encoding="utf-8")
    return path


def load_report(path: str | Path) -> MetricsReport:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    return report_from_document(doc)


def render_figures(report: MetricsReport, path_stem: str | Path) -> list[Path]:
    """Draw Acc_E and forgetting curves vs shot count to <stem>_*.png files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    stem = Path(path_stem)
    out: list[Path] = []
    curves = [
        ("acc_e", "error-correction accuracy Acc_E (%)", "tab:blue"),
        ("forgetting", "forgetting rate For (%)", "tab:red"),
    ]
    for key, ylabel, color in curves:
        xs, means, stds = [], [], []
        for shot in report.shots:
            s = shot_summary(report, shot)
            mean = s[f"{key}_mean"]
            if mean is None:
                continue
            xs.append(shot)
            means.append(mean)
            stds.append(s[f"{key}_std"] or 0.0)
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        if xs:
            ax.plot(xs, means, marker="o", color=color)
            if len(report.seeds) > 1:
                lo = [m - s for m, s in zip(means, stds)]
                hi = [m + s for m, s in zip(means, stds)]
                ax.fill_between(xs, lo, hi, alpha=0.2, color=color)
            if key == "acc_e":
                ax.axhline(report.acc_base, linestyle=":", color="gray", linewidth=1,
                           label=f"base accuracy {report.acc_base:.1f}%")
                ax.legend(loc="lower right", fontsize=8)
            ax.set_xscale("log")
            ax.set_xticks(list(report.shots))
            ax.get_xaxis().set_major_formatter(plt.ScalarFormatter())
        else:
            ax.text(0.5, 0.5, "not applicable\n(no misclassified samples)",
                    ha="center", va="center", transform=ax.transAxes, color="gray")
        ax.set_xlabel("annotated samples per class (s)")
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        target = stem.with_name(stem.name + f"_{key}.png")
        fig.savefig(target, dpi=120)
        plt.close(fig)
        out.append(target)
    return out
