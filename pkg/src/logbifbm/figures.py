"""Figure rendering for the report path.

``export`` takes a report JSON (and optionally the raw-sample CSV written
beside it) and renders matplotlib figures into the output directory,
together with a delimited summary table:

* ``summary.tsv``            one row per report (name, estimate, se, target, z),
* ``estimates.png``          estimates with 4-SE bars against their targets,
* ``chf.png``                characteristic-function probes vs the Gaussian
                             target curve (when the report carries chf rows),
* ``samples_hist.png``       histogram per coordinate (when a CSV is given).

Rendering is deterministic: fixed figure sizes, dpi and the Agg backend.
"""

from __future__ import annotations

import csv
import math
import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .stats import reports_from_json

__all__ = ["export_report"]

_CHF_RE = re.compile(r"chf_re\[(?P<theta>[^\]]+)\]")


def _summary_table(path: Path, reports):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(["name", "estimate", "se", "target", "z"])
        for r in reports:
            writer.writerow(
                [
                    r.name,
                    repr(r.estimate),
                    repr(r.se),
                    "" if r.target is None else repr(r.target),
                    "" if r.z is None else repr(r.z),
                ]
            )


def _estimates_figure(path: Path, reports):
    rows = [r for r in reports if r.target is not None]
    if not rows:
        rows = reports
    fig, ax = plt.subplots(figsize=(max(6.0, 0.45 * len(rows) + 2.0), 4.0))
    xs = np.arange(len(rows))
    est = np.array([r.estimate for r in rows])
    se = np.array([r.se for r in rows])
    ax.errorbar(xs, est, yerr=4.0 * se, fmt="o", ms=4, capsize=3,
                lw=1, label="estimate (4 se)")
    tgt = [r.target for r in rows]
    if any(t is not None for t in tgt):
        ax.plot(xs, [t if t is not None else np.nan for t in tgt], "k_",
                ms=12, label="target")
    ax.set_xticks(xs)
    ax.set_xticklabels([r.name for r in rows], rotation=60, ha="right",
                       fontsize=7)
    ax.set_ylabel("value")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _chf_figure(path: Path, reports):
    pts = []
    for r in reports:
        m = _CHF_RE.fullmatch(r.name)
        if m:
            pts.append((float(m.group("theta")), r.estimate, r.se, r.target))
    if not pts:
        return False
    pts.sort()
    th = np.array([p[0] for p in pts])
    re_v = np.array([p[1] for p in pts])
    se = np.array([p[2] for p in pts])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.errorbar(th, re_v, yerr=4.0 * se, fmt="o", capsize=3, label="empirical re c(theta)")
    if all(p[3] is not None for p in pts) and len(pts) >= 2:
        # smooth Gaussian target curve through the reported targets
        tgt = np.array([p[3] for p in pts])
        good = tgt > 0
        if good.all():
            sigma2 = -2.0 * np.log(tgt) / th**2
            s2 = float(np.median(sigma2))
            grid = np.linspace(0.0, th.max() * 1.1, 200)
            ax.plot(grid, np.exp(-grid**2 * s2 / 2.0), "k--", lw=1,
                    label="Gaussian target")
    ax.set_xlabel("theta")
    ax.set_ylabel("Re c(theta)")
    ax.grid(alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return True


def _hist_figure(path: Path, csv_path: str):
    with open(csv_path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        labels = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    k = data.shape[1]
    fig, axes = plt.subplots(1, k, figsize=(3.2 * k, 3.2), squeeze=False)
    for i in range(k):
        col = data[:, i]
        # robust display range against heavy tails
        lo, hi = np.percentile(col, [0.5, 99.5])
        axes[0, i].hist(col, bins=80, range=(lo, hi), density=True,
                        color="#4878a8")
        axes[0, i].set_title(labels[i], fontsize=8)
        axes[0, i].grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def export_report(report_path: str, csv_path: str | None, out_dir: str):
    """Render figures + summary table; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports, _meta = reports_from_json(Path(report_path).read_text())
    written = []
    p = out / "summary.tsv"
    _summary_table(p, reports)
    written.append(p)
    p = out / "estimates.png"
    _estimates_figure(p, reports)
    written.append(p)
    p = out / "chf.png"
    if _chf_figure(p, reports):
        written.append(p)
    if csv_path:
        p = out / "samples_hist.png"
        _hist_figure(p, csv_path)
        written.append(p)
    return written
