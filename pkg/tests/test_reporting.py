import numpy as np
import pytest

from shiftcal.backend import JobRecord, SimulatorBackend, SweepRecord
from shiftcal.errors import ReportError
from shiftcal.experiments import SweepSpec, analytic_sweep, derive_seed, run_job
from shiftcal.fitting import attach_fits
from shiftcal.noise import NoiseConfig, ReadoutCal
from shiftcal.experiments import ChshResult
from shiftcal.mitigation import MitigationPolicy
from shiftcal.reporting import (
    CHSH_COLUMNS,
    R2_FAMILIES,
    SUMMARY_COLUMNS,
    alpha_histogram,
    build_report,
    chsh_row,
    format_table,
    r2_statistics,
    read_series_csv,
    summary_row,
    sweep_plot_series,
    write_chsh_csv,
    write_series_csv,
    write_summary_csv,
)


def _noiseless_job(job_id="job-noiseless", n_sweeps=2):
    sweep = analytic_sweep(SweepSpec(), None)
    return JobRecord(job_id=job_id, backend_id="simulator", timestamp="t",
                     noise_config=NoiseConfig(), sweeps=[sweep] * n_sweeps)


def _noisy_job(seed, delta=0.08, p0=0.9, p1=0.88, n_sweeps=2):
    noise = NoiseConfig(delta=(delta,), readout=ReadoutCal(((p0, p1),)))
    return run_job(SimulatorBackend(), SweepSpec(), n_sweeps, noise, seed=seed)


def test_r2_statistics_noiseless_all_one():
    stats = r2_statistics([_noiseless_job()])
    for family in R2_FAMILIES:
        assert stats[family]["mean"] == pytest.approx(1.0, abs=1e-10)


def test_r2_statistics_ordering_on_noisy_corpus():
    rng = np.random.default_rng(31)
    jobs = [
        _noisy_job(seed=derive_seed(66, j), delta=float(rng.uniform(0.05, 0.15)),
                   p0=float(rng.uniform(0.8, 0.99)), p1=float(rng.uniform(0.8, 0.99)),
                   n_sweeps=1)
        for j in range(20)
    ]
    stats = r2_statistics(jobs)
    assert stats["shift"]["mean"] > stats["ibm"]["mean"] > stats["ideal"]["mean"]


def test_r2_statistics_needs_jobs():
    with pytest.raises(ReportError):
        r2_statistics([])


def test_single_sweep_job_has_zero_std():
    row = summary_row(_noisy_job(seed=4, n_sweeps=1))
    assert row["alpha_std"] == 0.0
    assert row["n_sweeps"] == 1


def test_summary_row_fields_and_provenance():
    job = _noisy_job(seed=9)
    job.metadata["computer"] = "bench"
    job.metadata["qubit"] = 5
    row = summary_row(job)
    assert set(SUMMARY_COLUMNS) == set(row)
    assert row["computer"] == "bench" and row["qubit"] == 5
    assert row["job_id"] == job.job_id and row["backend_id"] == "simulator"


def test_report_refuses_missing_provenance():
    job = _noiseless_job()
    job.job_id = ""
    with pytest.raises(ReportError):
        summary_row(job)


def test_histogram_counts_sum_to_sweeps():
    jobs = [_noisy_job(seed=2, n_sweeps=3), _noisy_job(seed=3, n_sweeps=2)]
    counts, edges = alpha_histogram(jobs, bins=20)
    assert counts.sum() == 5
    assert len(edges) == 21
    assert edges[0] == pytest.approx(-np.pi / 2) and edges[-1] == pytest.approx(np.pi / 2)


def test_series_csv_round_trip(tmp_path):
    job = _noisy_job(seed=12)
    series = sweep_plot_series([job])
    path = tmp_path / "series.csv"
    write_series_csv(series, path)
    back = {s.name: s for s in read_series_csv(path)}
    assert set(back) == {s.name for s in series}
    for s in series:
        got = back[s.name]
        # 12 significant digits: per-entry error below half a unit in the 12th place
        assert np.allclose(got.x, s.x, rtol=5e-12, atol=1e-12)
        assert np.allclose(got.y, s.y, rtol=5e-12, atol=1e-12)
        assert got.job_id == s.job_id


def test_csv_deterministic_bytes(tmp_path):
    rows = [summary_row(_noisy_job(seed=8))]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_summary_csv(rows, a)
    write_summary_csv(rows, b)
    assert a.read_bytes() == b.read_bytes()


def test_build_report_uses_embedded_fits():
    job = _noisy_job(seed=14)
    attach_fits(job)
    bundle = build_report([job], with_series=True)
    assert len(bundle.summary_rows) == 1
    assert bundle.plot_series
    assert set(bundle.r2_stats) == set(R2_FAMILIES)


def test_format_table_alignment():
    rows = [{"a": 1.0, "b": "x"}, {"a": 123.456, "b": "longer"}]
    text = format_table(rows, ("a", "b"))
    lines = text.splitlines()
    assert len(lines) == 4
    assert len(set(len(l) for l in lines)) == 1


def test_chsh_row_and_csv(tmp_path):
    result = ChshResult(
        c_raw=2.52, c_mitigated=2.62,
        expectations_raw={}, expectations_mitigated={},
        policy=MitigationPolicy(alpha={0: 0.052, 1: -0.072}),
    )
    row = chsh_row(result, job_id="chsh-1", backend_id="simulator", c_std=0.02)
    assert row["c_raw"] == "2.52(2)" and row["c_corr"] == "2.62(2)"
    assert row["alpha_0"] == 0.052 and row["alpha_1"] == -0.072
    path = tmp_path / "chsh.csv"
    write_chsh_csv([row], path)
    header = path.read_text().splitlines()[0]
    assert header == ",".join(CHSH_COLUMNS)
    with pytest.raises(ReportError):
        chsh_row(result, job_id="", backend_id="simulator")


def test_flagged_sweeps_excluded_from_histogram():
    thetas = [np.pi * i / 30 for i in range(31)]
    flat = SweepRecord(thetas=thetas, p0_estimates=[0.5] * 31, shots=10)
    job = JobRecord(job_id="j", backend_id="b", timestamp="t",
                    noise_config=NoiseConfig(), sweeps=[flat])
    counts, _ = alpha_histogram([job])
    assert counts.sum() == 0
