"""Report writers: per-task CSV, key=value summary, JSON, and rendered figures.

The CSV and summary bodies are deterministic given (config, seed); wall-clock
goes on its own line so byte comparison of report bodies can exclude it.
Figures are rendered to PNG files next to the delimited output.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

from .harness import ROW_HEADER, RunReport


def write_report_csv(report: RunReport, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ROW_HEADER)
        for row in report.rows:
            writer.writerow(row)


def summary_text(report: RunReport) -> str:
    lines = report.body_lines()
    lines.append(f"wall_clock_seconds={report.wall_clock:.3f}")
    return "\n".join(lines) + "\n"


def write_summary(report: RunReport, path):
    with open(path, "w") as fh:
        fh.write(summary_text(report))


def summary_json(report: RunReport) -> str:
    payload = {
        "config": report.config,
        "seeds": report.seeds,
        "aggregates": report.aggregates,
        "checks": [
            {"name": c.name, "measured": c.measured, "bound": c.bound,
             "verdict": c.verdict()}
            for c in report.checks
        ],
        "ok": report.ok,
        "wall_clock_seconds": round(report.wall_clock, 3),
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_summary_json(report: RunReport, path):
    with open(path, "w") as fh:
        fh.write(summary_json(report))


def render_figures(report: RunReport, outdir) -> list[str]:
    """Render run figures (samples per task, scratch progress, bound margins)
    as PNG files; returns the written paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    trials = sorted({r[0] for r in report.rows})
    paths_seen = sorted({r[2] for r in report.rows})
    colors = {p: c for p, c in zip(paths_seen, plt.rcParams["axes.prop_cycle"].by_key()["color"])}

    fig, ax = plt.subplots(figsize=(7, 4))
    first = trials[0] if trials else 0
    for p in paths_seen:
        xs = [r[1] for r in report.rows if r[0] == first and r[2] == p]
        ys = [r[3] for r in report.rows if r[0] == first and r[2] == p]
        ax.scatter(xs, ys, s=12, label=p, color=colors[p])
    ax.set_xlabel("task index")
    ax.set_ylabel("samples / queries")
    if any(r[3] for r in report.rows):
        ax.set_yscale("log")
    ax.set_title(f"{report.config['scenario']}: per-task cost (trial {first})")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    p1 = outdir / "samples_per_task.png"
    fig.savefig(p1, dpi=120)
    plt.close(fig)
    written.append(str(p1))

    fig, ax = plt.subplots(figsize=(7, 4))
    for t in trials:
        xs, ys, acc = [], [], 0
        for r in report.rows:
            if r[0] != t:
                continue
            acc += int(r[2] == "scratch")
            xs.append(r[1])
            ys.append(acc)
        ax.step(xs, ys, where="post", alpha=0.5, linewidth=1)
    ax.set_xlabel("task index")
    ax.set_ylabel("cumulative scratch events")
    ax.set_title(f"{report.config['scenario']}: representation growth")
    fig.tight_layout()
    p2 = outdir / "scratch_progress.png"
    fig.savefig(p2, dpi=120)
    plt.close(fig)
    written.append(str(p2))

    if report.checks:
        fig, ax = plt.subplots(figsize=(7, 4))
        names = [c.name for c in report.checks]
        measured = [c.measured for c in report.checks]
        bounds = [c.bound for c in report.checks]
        xs = range(len(names))
        ax.bar([x - 0.2 for x in xs], measured, width=0.4, label="measured")
        ax.bar([x + 0.2 for x in xs], bounds, width=0.4, label="bound")
        ax.set_xticks(list(xs))
        ax.set_xticklabels(names, rotation=20, ha="right", fontsize=7)
        ax.set_title(f"{report.config['scenario']}: measured vs bound")
        ax.legend(fontsize=8)
        fig.tight_layout()
        p3 = outdir / "bounds.png"
        fig.savefig(p3, dpi=120)
        plt.close(fig)
        written.append(str(p3))
    return written


def write_all(report: RunReport, outdir, json_summary: bool = False,
              figures: bool = True) -> dict:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = {"csv": str(outdir / "report.csv"), "summary": str(outdir / "summary.txt")}
    write_report_csv(report, files["csv"])
    write_summary(report, files["summary"])
    if json_summary:
        files["json"] = str(outdir / "summary.json")
        write_summary_json(report, files["json"])
    if figures:
        files["figures"] = render_figures(report, outdir / "figures")
    return files
