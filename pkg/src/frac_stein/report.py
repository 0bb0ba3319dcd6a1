"""Result serialization: results.json, results.csv, plot-ready CSV series, and
rendered PNG figures.

Output is deterministic: no timestamps, numbers written with 17 significant
digits, infinite bounds as the literal ``inf``.  Re-running the same
configuration reproduces the files byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .montecarlo import DivergenceRow, RiskReport, SteinReport

__all__ = ["write_run_outputs", "write_divergence_outputs", "write_stein_outputs"]

CSV_HEADER = [
    "experiment", "model", "estimator", "energy", "alpha", "p", "m",
    "reps", "seed", "estimate", "stderr", "ci_lo", "ci_hi", "bound", "ratio",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(float(value), ".17g")


def _jsonable(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def report_row(report: RiskReport) -> list[str]:
    return [
        report.label,
        report.model,
        report.estimator,
        report.energy_kind,
        _fmt(report.alpha),
        _fmt(report.p),
        str(report.cells),
        str(report.replications),
        str(report.seed),
        _fmt(report.estimate),
        _fmt(report.stderr),
        _fmt(report.ci_lo),
        _fmt(report.ci_hi),
        _fmt(report.bound),
        _fmt(report.ratio),
    ]


def report_json(report: RiskReport) -> dict:
    return {
        "experiment": report.label,
        "model": report.model,
        "estimator": report.estimator,
        "energy": report.energy_kind,
        "alpha": report.alpha,
        "p": report.p,
        "m": report.cells,
        "reps": report.replications,
        "seed": report.seed,
        "estimate": report.estimate,
        "stderr": report.stderr,
        "ci": [report.ci_lo, report.ci_hi],
        "bound": _jsonable(report.bound),
        "ratio": report.ratio,
        "extras": {k: _jsonable(v) for k, v in report.extras.items()},
    }


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _series_groups(entries):
    """Experiments identical up to the grid resolution form one plot series."""
    groups: dict = {}
    for config, report in entries:
        key = (
            report.model, report.estimator, report.energy_kind,
            report.alpha, report.p, report.seed is not None,
        )
        groups.setdefault(key, []).append(report)
    return {k: sorted(v, key=lambda r: r.cells) for k, v in groups.items() if len(v) >= 2}


def write_run_outputs(outdir, entries, figures: bool = True) -> None:
    """Write results.json / results.csv / plotdata/*.csv (and figures/*.png)
    for a list of (experiment config, RiskReport) pairs."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "plotdata").mkdir(exist_ok=True)

    payload = {
        "experiments": [
            {"config": config, "result": report_json(report)} for config, report in entries
        ]
    }
    with open(outdir / "results.json", "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")

    _write_csv(outdir / "results.csv", CSV_HEADER, [report_row(r) for _, r in entries])

    summary_rows = [
        [r.label, str(r.cells), _fmt(r.estimate), _fmt(r.stderr), _fmt(r.ci_lo),
         _fmt(r.ci_hi), _fmt(r.bound)]
        for _, r in entries
    ]
    _write_csv(
        outdir / "plotdata" / "summary.csv",
        ["experiment", "m", "estimate", "stderr", "ci_lo", "ci_hi", "bound"],
        summary_rows,
    )

    groups = _series_groups(entries)
    for index, (key, reports) in enumerate(sorted(groups.items(), key=str)):
        rows = [
            [str(r.cells), _fmt(r.estimate), _fmt(r.ci_lo), _fmt(r.ci_hi), _fmt(r.bound)]
            for r in reports
        ]
        _write_csv(
            outdir / "plotdata" / f"series_{index}.csv",
            ["m", "estimate", "ci_lo", "ci_hi", "bound"],
            rows,
        )

    if figures:
        (outdir / "figures").mkdir(exist_ok=True)
        _summary_figure(outdir / "figures" / "summary.png", [r for _, r in entries])
        for index, (key, reports) in enumerate(sorted(groups.items(), key=str)):
            _series_figure(outdir / "figures" / f"series_{index}.png", key, reports)


def _summary_figure(path: Path, reports) -> None:
    fig, ax = plt.subplots(figsize=(max(6.0, 1.2 * len(reports)), 4.0))
    xs = range(len(reports))
    ax.errorbar(
        xs,
        [r.estimate for r in reports],
        yerr=[[r.estimate - r.ci_lo for r in reports], [r.ci_hi - r.estimate for r in reports]],
        fmt="o",
        capsize=4,
        label="Monte Carlo estimate (95% CI)",
    )
    finite = [(x, r.bound) for x, r in zip(xs, reports) if math.isfinite(r.bound)]
    if finite:
        ax.plot(*zip(*finite), "k_", markersize=18, label="lower bound")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([r.label for r in reports], rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("risk")
    ax.legend(fontsize=8)
    ax.set_title("estimated risk vs. lower bound")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _series_figure(path: Path, key, reports) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    cells = [r.cells for r in reports]
    ax.errorbar(
        cells,
        [r.estimate for r in reports],
        yerr=[[r.estimate - r.ci_lo for r in reports], [r.ci_hi - r.estimate for r in reports]],
        fmt="o-",
        capsize=4,
        label="estimate",
    )
    bounds = [r.bound for r in reports if math.isfinite(r.bound)]
    if bounds:
        ax.axhline(bounds[0], color="k", linestyle="--", linewidth=1, label="bound")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("grid cells m")
    ax.set_ylabel("risk")
    ax.set_title(f"{key[0]} / {key[1]} / {key[2]}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_divergence_outputs(outdir, rows: list[DivergenceRow], label: str, figures=True) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "plotdata").mkdir(exist_ok=True)
    _write_csv(
        outdir / "plotdata" / f"divergence_{label}.csv",
        ["m", "mean", "stderr"],
        [[str(r.cells), _fmt(r.mean), _fmt(r.stderr)] for r in rows],
    )
    if figures:
        (outdir / "figures").mkdir(exist_ok=True)
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ax.errorbar(
            [r.cells for r in rows],
            [r.mean for r in rows],
            yerr=[3 * r.stderr for r in rows],
            fmt="o-",
            capsize=4,
        )
        ax.set_xscale("log", base=2)
        ax.set_yscale("log", base=2)
        ax.set_xlabel("grid cells m")
        ax.set_ylabel("mean discrete energy")
        ax.set_title(f"divergence probe: {label}")
        fig.tight_layout()
        fig.savefig(outdir / "figures" / f"divergence_{label}.png", dpi=150)
        plt.close(fig)


def write_stein_outputs(outdir, reports: list[SteinReport], figures=True) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "plotdata").mkdir(exist_ok=True)
    header = [
        "experiment", "estimate", "stderr", "corrected", "predicted",
        "predicted_stderr", "bound", "super_efficient", "matches_prediction",
    ]
    rows = [
        [
            r.label, _fmt(r.risk.estimate), _fmt(r.risk.stderr), _fmt(r.corrected_estimate),
            _fmt(r.predicted.value), _fmt(r.predicted.stderr), _fmt(r.bound),
            str(r.super_efficient).lower(), str(r.matches_prediction).lower(),
        ]
        for r in reports
    ]
    _write_csv(outdir / "plotdata" / "stein.csv", header, rows)
    if figures:
        (outdir / "figures").mkdir(exist_ok=True)
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        xs = range(len(reports))
        ax.errorbar(
            xs,
            [r.corrected_estimate for r in reports],
            yerr=[3 * r.risk.stderr for r in reports],
            fmt="o",
            capsize=4,
            label="shrunk-estimator risk",
        )
        ax.plot(
            xs, [r.predicted.value for r in reports], "s", fillstyle="none",
            label="predicted risk",
        )
        if reports:
            ax.axhline(reports[0].bound, color="k", linestyle="--", linewidth=1, label="bound")
        ax.set_xticks(list(xs))
        ax.set_xticklabels([r.label for r in reports], fontsize=8)
        ax.set_ylabel("quadratic fractional risk")
        ax.legend(fontsize=8)
        ax.set_title("shrinkage estimator vs. unbiased bound")
        fig.tight_layout()
        fig.savefig(outdir / "figures" / "stein.png", dpi=150)
        plt.close(fig)
