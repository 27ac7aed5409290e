"""Report generation: summary tables, R² statistics, histograms, plot data.

Everything is emitted as CSV (header row, fixed column order, floats at
12 significant digits) plus a fixed-width text table for the terminal.
Every row carries the job_id and backend_id it derives from; rows without
provenance are refused.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .backend import JobRecord
from .errors import DegenerateDataError, ReportError
from .fitting import JobFits, fit_job, format_mean_std, r_squared, shift_model

R2_FAMILIES = ("ideal", "shift", "ibm")


def fmt(value) -> str:
    """Canonical CSV cell: floats at 12 significant digits."""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


@dataclass
class PlotSeries:
    name: str
    x: list[float]
    y: list[float]
    job_id: str
    backend_id: str


@dataclass
class ReportBundle:
    summary_rows: list[dict] = field(default_factory=list)
    chsh_rows: list[dict] = field(default_factory=list)
    plot_series: list[PlotSeries] = field(default_factory=list)
    r2_stats: dict[str, dict] = field(default_factory=dict)


SUMMARY_COLUMNS = (
    "computer", "qubit", "alpha", "p0_prime", "p1_prime",
    "alpha_mean", "alpha_std", "r2_shift_mean", "r2_ibm_mean",
    "n_sweeps", "job_id", "backend_id",
)

CHSH_COLUMNS = (
    "computer", "qubits", "alpha_0", "alpha_1", "c_raw", "c_corr",
    "job_id", "backend_id",
)


def _job_fits(job: JobRecord) -> JobFits:
    if job.fits is not None:
        return JobFits.from_dict(job.fits)
    return fit_job(job)


def _check_provenance(job: JobRecord):
    if not job.job_id or not job.backend_id:
        raise ReportError("job lacks provenance (job_id/backend_id); refusing to report it")


def summary_row(job: JobRecord) -> dict:
    _check_provenance(job)
    fits = _job_fits(job)
    s = fits.summary
    return {
        "computer": job.metadata.get("computer", job.backend_id),
        "qubit": job.metadata.get("qubit", 0),
        "alpha": s["alpha"],
        "p0_prime": s["p0_prime"],
        "p1_prime": s["p1_prime"],
        "alpha_mean": s["alpha_mean"],
        "alpha_std": s["alpha_std"],
        "r2_shift_mean": s["r2_shift_mean"],
        "r2_ibm_mean": s["r2_ibm_mean"],
        "n_sweeps": s["n_sweeps"],
        "job_id": job.job_id,
        "backend_id": job.backend_id,
    }


def chsh_row(result, job_id: str, backend_id: str, computer: str | None = None,
             qubits=(0, 1), c_std: float = 0.0) -> dict:
    """Benchmark table row; shifts and correlations in concise notation when
    a spread is available, raw numbers otherwise."""
    if not job_id or not backend_id:
        raise ReportError("chsh row lacks provenance (job_id/backend_id)")
    alpha = result.policy.alpha
    return {
        "computer": computer or backend_id,
        "qubits": f"{qubits[0]},{qubits[1]}",
        "alpha_0": alpha.get(qubits[0], float("nan")),
        "alpha_1": alpha.get(qubits[1], float("nan")),
        "c_raw": format_mean_std(result.c_raw, c_std) if c_std else result.c_raw,
        "c_corr": format_mean_std(result.c_mitigated, c_std) if c_std else result.c_mitigated,
        "job_id": job_id,
        "backend_id": backend_id,
    }


def r2_statistics(jobs: list[JobRecord]) -> dict[str, dict]:
    """mean/std/min/max of R² per fit family over all sweeps of all jobs.

    The ideal baseline is the noise-free curve cos²((θ+offset)/2), i.e.
    both readout probabilities set to one and no shift.
    """
    values: dict[str, list[float]] = {name: [] for name in R2_FAMILIES}
    for job in jobs:
        _check_provenance(job)
        fits = _job_fits(job)
        offset = float(job.metadata.get("sweep_spec", {}).get("initial_state_prep") or 0.0)
        for sweep, f_shift, f_ibm in zip(job.sweeps, fits.shift, fits.ibm):
            if f_shift.ok:
                values["shift"].append(f_shift.r_squared)
            if f_ibm.ok:
                values["ibm"].append(f_ibm.r_squared)
            try:
                ideal = shift_model(sweep.thetas, 0.0, 1.0, 1.0, offset)
                values["ideal"].append(r_squared(sweep.p0_estimates, ideal))
            except DegenerateDataError:
                pass
    if not any(values.values()):
        raise ReportError("no fitted sweeps to report")
    stats = {}
    for name, vals in values.items():
        arr = np.asarray(vals)
        stats[name] = {
            "n": arr.size,
            "mean": float(arr.mean()) if arr.size else float("nan"),
            "std": float(arr.std()) if arr.size else float("nan"),
            "min": float(arr.min()) if arr.size else float("nan"),
            "max": float(arr.max()) if arr.size else float("nan"),
        }
    return stats


def alpha_histogram(jobs: list[JobRecord], bins: int = 20,
                    bounds: tuple[float, float] = (-math.pi / 2, math.pi / 2)):
    """Histogram of per-sweep fitted shifts; counts sum to the number of
    non-flagged sweeps."""
    alphas = []
    for job in jobs:
        _check_provenance(job)
        fits = _job_fits(job)
        alphas.extend(f.alpha for f in fits.shift if f.ok)
    counts, edges = np.histogram(alphas, bins=bins, range=bounds)
    return counts, edges


def sweep_plot_series(jobs: list[JobRecord]) -> list[PlotSeries]:
    """Per-sweep (θ, P0) data with both fitted curves, for external plotting."""
    series = []
    for job in jobs:
        _check_provenance(job)
        fits = _job_fits(job)
        offset = float(job.metadata.get("sweep_spec", {}).get("initial_state_prep") or 0.0)
        for s, (sweep, f_shift, f_ibm) in enumerate(zip(job.sweeps, fits.shift, fits.ibm)):
            series.append(PlotSeries(f"{job.job_id}/sweep{s}/data", sweep.thetas,
                                     list(sweep.p0_estimates), job.job_id, job.backend_id))
            if f_shift.ok:
                curve = shift_model(sweep.thetas, f_shift.alpha, f_shift.p0_prime,
                                    f_shift.p1_prime, offset)
                series.append(PlotSeries(f"{job.job_id}/sweep{s}/shift-fit", sweep.thetas,
                                         [float(v) for v in curve], job.job_id, job.backend_id))
            if f_ibm.ok:
                curve = shift_model(sweep.thetas, 0.0, f_ibm.p0_prime, f_ibm.p1_prime, offset)
                series.append(PlotSeries(f"{job.job_id}/sweep{s}/ibm-fit", sweep.thetas,
                                         [float(v) for v in curve], job.job_id, job.backend_id))
    return series


def build_report(jobs: list[JobRecord], bins: int = 20,
                 with_series: bool = False) -> ReportBundle:
    if not jobs:
        raise ReportError("no jobs to report")
    bundle = ReportBundle()
    bundle.summary_rows = [summary_row(job) for job in jobs]
    bundle.r2_stats = r2_statistics(jobs)
    if with_series:
        bundle.plot_series = sweep_plot_series(jobs)
    return bundle


def write_summary_csv(rows: list[dict], path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow([fmt(row[c]) for c in SUMMARY_COLUMNS])


def write_chsh_csv(rows: list[dict], path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CHSH_COLUMNS)
        for row in rows:
            writer.writerow([fmt(row[c]) for c in CHSH_COLUMNS])


def write_r2_csv(stats: dict[str, dict], path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("family", "n", "mean", "std", "min", "max"))
        for family in R2_FAMILIES:
            s = stats[family]
            writer.writerow([family] + [fmt(s[k]) for k in ("n", "mean", "std", "min", "max")])


def write_histogram_csv(counts, edges, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("bin_left", "bin_right", "count"))
        for i, c in enumerate(counts):
            writer.writerow([fmt(float(edges[i])), fmt(float(edges[i + 1])), int(c)])


def write_series_csv(series: list[PlotSeries], path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("series", "x", "y", "job_id", "backend_id"))
        for s in series:
            for x, y in zip(s.x, s.y):
                writer.writerow([s.name, fmt(float(x)), fmt(float(y)), s.job_id, s.backend_id])


def read_series_csv(path) -> list[PlotSeries]:
    by_name: dict[str, PlotSeries] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            s = by_name.setdefault(
                row["series"],
                PlotSeries(row["series"], [], [], row["job_id"], row["backend_id"]),
            )
            s.x.append(float(row["x"]))
            s.y.append(float(row["y"]))
    return list(by_name.values())


def format_table(rows: list[dict], columns) -> str:
    """Fixed-width text table with a header and a separator line."""
    cells = [[fmt(r[c]) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) if cells else len(c)
              for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)
