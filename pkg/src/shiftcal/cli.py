"""Command-line interface.

Subcommands: sweep, fit, mitigate, chsh, report.  Every flag can also be
given in a JSON or TOML config file (--config); flags override the file.
Output paths default into $SHIFTCAL_OUT_DIR (or the working directory).

Exit codes: 0 success, 2 bad configuration or flags, 3 missing input
file, 4 fit failure (degenerate data flagged), 5 backend error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import experiments, mitigation, reporting
from .backend import (
    RecordingBackend,
    SimulatorBackend,
    circuit_from_dict,
    load_job,
    store_job,
)
from .errors import (
    CapabilityError,
    DegenerateDataError,
    InvalidParameterError,
    MissingRecordError,
    ReportError,
    SchemaVersionError,
    ShiftcalError,
)
from .fitting import attach_fits, fit_job
from .noise import NoiseConfig, ReadoutCal

EXIT_OK = 0
EXIT_BAD_CONFIG = 2
EXIT_MISSING_INPUT = 3
EXIT_FIT_FAILURE = 4
EXIT_BACKEND = 5


class ConfigError(Exception):
    pass


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in str(text).split(",") if tok != ""]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _parse_readout(text) -> ReadoutCal | None:
    if text is None:
        return None
    vals = _parse_floats(text) if isinstance(text, str) else [float(v) for v in text]
    if len(vals) % 2 != 0 or not vals:
        raise ConfigError("--readout takes p0,p1 pairs (2 or 4 numbers)")
    return ReadoutCal(tuple((vals[i], vals[i + 1]) for i in range(0, len(vals), 2)))


def _parse_delta(text) -> tuple[float, ...]:
    if text is None:
        return ()
    if isinstance(text, str):
        return tuple(_parse_floats(text))
    if isinstance(text, (int, float)):
        return (float(text),)
    return tuple(float(v) for v in text)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(path)
    if p.suffix == ".toml":
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    with open(p) as fh:
        return json.load(fh)


def _merged(args: argparse.Namespace, defaults: dict) -> dict:
    """Flag > config file > default, keyed by the Python attribute name."""
    config = _load_config(getattr(args, "config", None))
    unknown = set(config) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        merged[key] = flag if flag is not None else config.get(key, default)
    return merged


def _out_path(path: str | None, default_name: str) -> Path:
    if path is not None:
        return Path(path)
    return Path(os.environ.get("SHIFTCAL_OUT_DIR", ".")) / default_name


def _noise_from(options: dict) -> NoiseConfig:
    return NoiseConfig(delta=_parse_delta(options["delta"]),
                       readout=_parse_readout(options["readout"]))


SWEEP_DEFAULTS = {
    "delta": None, "readout": None, "shots": 8192, "grid": 31,
    "meridian": -1.5707963267948966, "repeat_m": 1, "prep": None,
    "sweeps": 1, "seed": 0, "qubit": 0, "computer": None,
    "timestamp": None, "record": None, "out": None,
}


def _add_sweep_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON or TOML file mirroring the flags")
    parser.add_argument("--delta", help="per-qubit ORR strength, comma separated")
    parser.add_argument("--readout", help="readout fidelities p0,p1[,p0,p1]")
    parser.add_argument("--shots", type=int)
    parser.add_argument("--grid", type=int, help="number of theta grid points")
    parser.add_argument("--meridian", type=float, help="meridian azimuth phi")
    parser.add_argument("--repeat-m", dest="repeat_m", type=int)
    parser.add_argument("--prep", type=float, help="initial-state Rx angle")
    parser.add_argument("--sweeps", type=int, help="sweeps per job")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--qubit", type=int, help="device qubit label for reports")
    parser.add_argument("--computer", help="computer label for reports")
    parser.add_argument("--timestamp", help="fix the job timestamp (reproducible output)")
    parser.add_argument("--record", help="also record per-circuit counts to this store file")
    parser.add_argument("-o", "--out", help="job file to write")


def _spec_from(options: dict) -> experiments.SweepSpec:
    return experiments.SweepSpec(
        n_points=options["grid"],
        meridian=options["meridian"],
        shots=options["shots"],
        initial_state_prep=options["prep"],
        repeat_M=options["repeat_m"],
    )


def cmd_sweep(args) -> int:
    options = _merged(args, SWEEP_DEFAULTS)
    spec = _spec_from(options)
    noise = _noise_from(options)
    backend = SimulatorBackend()
    if options["record"]:
        backend = RecordingBackend(backend)
    metadata = {"qubit": options["qubit"]}
    if options["computer"]:
        metadata["computer"] = options["computer"]
    job = experiments.run_job(
        backend, spec, options["sweeps"], noise, options["seed"],
        metadata=metadata, timestamp=options["timestamp"],
    )
    out = _out_path(options["out"], f"{job.job_id}.json")
    store_job(job, out)
    if options["record"]:
        backend.store.save(options["record"])
    print(f"wrote {out} ({job.n_sweeps} sweep(s), backend {job.backend_id})")
    return EXIT_OK


FIT_DEFAULTS = {"model": "both", "cal_from": None, "out": None}


def cmd_fit(args) -> int:
    options = _merged(args, FIT_DEFAULTS)
    job = load_job(args.job)
    cal = load_job(options["cal_from"]).noise_config.readout if options["cal_from"] else None
    fits = attach_fits(job, cal=cal)
    out = Path(options["out"]) if options["out"] else Path(args.job)
    store_job(job, out)

    s = fits.summary
    if options["model"] in ("shift", "both"):
        print(f"shift-fit: alpha = {s['alpha']}  p0' = {s['p0_prime']}  "
              f"p1' = {s['p1_prime']}  mean R^2 = {s['r2_shift_mean']:.6f}")
    if options["model"] in ("ibm", "both"):
        print(f"ibm-fit:   mean R^2 = {s['r2_ibm_mean']:.6f}")
    if s["n_flagged"]:
        print(f"warning: {s['n_flagged']} sweep fit(s) flagged degenerate", file=sys.stderr)
        return EXIT_FIT_FAILURE
    return EXIT_OK


MITIGATE_DEFAULTS = dict(SWEEP_DEFAULTS, alpha_from=None, alpha=None,
                         readout_mode="none", circuit=None)


def _policy_from(options: dict) -> mitigation.MitigationPolicy:
    alpha: dict[int, float] = {}
    if options["alpha_from"]:
        for path in str(options["alpha_from"]).split(","):
            job = load_job(path)
            qubit = int(job.metadata.get("qubit", 0))
            summary = (job.fits or {}).get("summary") or fit_job(job).summary
            alpha[qubit] = summary["alpha_mean"]
    if options["alpha"] is not None:
        for q, a in enumerate(_parse_delta(options["alpha"])):
            alpha[q] = a
    if not alpha:
        raise ConfigError("mitigation needs --alpha-from or --alpha")
    return mitigation.MitigationPolicy(
        alpha=alpha,
        readout_mode=options["readout_mode"],
        cal=_parse_readout(options["readout"]) if options["readout_mode"] != "none" else None,
    )


def cmd_mitigate(args) -> int:
    options = _merged(args, MITIGATE_DEFAULTS)
    policy = _policy_from(options)
    noise = _noise_from(options)
    backend = SimulatorBackend()

    if options["circuit"]:
        with open(options["circuit"]) as fh:
            circuit = circuit_from_dict(json.load(fh))
        mitigated = mitigation.apply_alpha_shift(circuit, policy)
        counts = backend.run(mitigated, options["shots"], options["seed"], noise)
        if policy.readout_mode != "none":
            counts = mitigation.mitigate_counts(policy, counts)
        out = _out_path(options["out"], "mitigated_counts.json")
        with open(out, "w") as fh:
            json.dump({"counts": [float(c) for c in counts],
                       "policy": policy.to_dict()}, fh, indent=1)
            fh.write("\n")
        print(f"wrote {out}")
        return EXIT_OK

    spec = _spec_from(options)
    job = experiments.run_job(
        backend, spec, options["sweeps"], noise, options["seed"], policy=policy,
        metadata={"qubit": options["qubit"], "mitigation": policy.to_dict()},
        timestamp=options["timestamp"],
    )
    fits = attach_fits(job)
    out = _out_path(options["out"], f"{job.job_id}.json")
    store_job(job, out)
    print(f"wrote {out}; residual alpha = {fits.summary['alpha']}")
    return EXIT_OK


CHSH_DEFAULTS = {
    "delta": None, "readout": None, "shots_per_basis": 819_200, "seed": 0,
    "alpha": None, "alpha_from": None, "calibrate": None, "readout_mode": "none",
    "shots": 8192, "grid": 31, "out": None,
}


def cmd_chsh(args) -> int:
    options = _merged(args, CHSH_DEFAULTS)
    noise = _noise_from(options)
    backend = SimulatorBackend()
    spec = experiments.ChshSpec(shots_per_basis=options["shots_per_basis"])

    alpha: dict[int, float] = {}
    if options["calibrate"]:
        cal_spec = experiments.SweepSpec(n_points=options["grid"], shots=options["shots"])
        alpha = experiments.calibrate_alpha(
            backend, noise, spec.qubits, options["seed"],
            spec=cal_spec, n_sweeps=int(options["calibrate"]),
        )
    if options["alpha_from"]:
        for path in str(options["alpha_from"]).split(","):
            job = load_job(path)
            qubit = int(job.metadata.get("qubit", 0))
            summary = (job.fits or {}).get("summary") or fit_job(job).summary
            alpha[qubit] = summary["alpha_mean"]
    if options["alpha"] is not None:
        for q, a in enumerate(_parse_delta(options["alpha"])):
            alpha[q] = a
    if not alpha:
        alpha = {q: 0.0 for q in spec.qubits}

    policy = mitigation.MitigationPolicy(
        alpha=alpha,
        readout_mode=options["readout_mode"],
        cal=noise.readout if options["readout_mode"] != "none" else None,
    )
    result = experiments.run_chsh(backend, spec, policy, noise, options["seed"])
    print(f"C_raw  = {result.c_raw:.4f}")
    print(f"C_corr = {result.c_mitigated:.4f}  "
          f"(alpha = {', '.join(f'{q}: {a:.4f}' for q, a in sorted(alpha.items()))}, "
          f"readout mitigation: {policy.readout_mode})")
    if options["out"]:
        with open(options["out"], "w") as fh:
            json.dump(result.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")
        print(f"wrote {options['out']}")
    return EXIT_OK


REPORT_DEFAULTS = {"histogram": None, "bins": 20, "series": False, "outdir": None}


def cmd_report(args) -> int:
    options = _merged(args, REPORT_DEFAULTS)
    jobs = [load_job(path) for path in args.jobs]
    bundle = reporting.build_report(jobs, with_series=bool(options["series"]))
    outdir = Path(options["outdir"] or os.environ.get("SHIFTCAL_OUT_DIR", "."))
    outdir.mkdir(parents=True, exist_ok=True)

    reporting.write_summary_csv(bundle.summary_rows, outdir / "summary.csv")
    reporting.write_r2_csv(bundle.r2_stats, outdir / "r2_stats.csv")
    written = ["summary.csv", "r2_stats.csv"]
    if options["histogram"]:
        if options["histogram"] != "alpha":
            raise ConfigError(f"unknown histogram quantity {options['histogram']!r}")
        counts, edges = reporting.alpha_histogram(jobs, bins=int(options["bins"]))
        reporting.write_histogram_csv(counts, edges, outdir / "alpha_histogram.csv")
        written.append("alpha_histogram.csv")
    if options["series"]:
        reporting.write_series_csv(bundle.plot_series, outdir / "sweep_series.csv")
        written.append("sweep_series.csv")

    print(reporting.format_table(bundle.summary_rows, reporting.SUMMARY_COLUMNS))
    print()
    r2_rows = [dict(family=f, **bundle.r2_stats[f]) for f in reporting.R2_FAMILIES]
    print(reporting.format_table(r2_rows, ("family", "n", "mean", "std", "min", "max")))
    print(f"\nwrote {', '.join(written)} to {outdir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shiftcal",
        description="Calibrate, mitigate and benchmark the systematic U3 angle shift.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a sweep job on the simulator")
    _add_sweep_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_fit = sub.add_parser("fit", help="fit a stored job with both models")
    p_fit.add_argument("job", help="job JSON file")
    p_fit.add_argument("--config")
    p_fit.add_argument("--model", choices=("shift", "ibm", "both"))
    p_fit.add_argument("--cal-from", dest="cal_from",
                       help="job file supplying the readout calibration")
    p_fit.add_argument("-o", "--out", help="write the fitted job here instead of in place")
    p_fit.set_defaults(func=cmd_fit)

    p_mit = sub.add_parser("mitigate", help="re-run a sweep or circuit with the shift corrected")
    _add_sweep_flags(p_mit)
    p_mit.add_argument("--alpha-from", dest="alpha_from",
                       help="fitted job file(s) supplying alpha, comma separated")
    p_mit.add_argument("--alpha", help="explicit per-qubit alpha values")
    p_mit.add_argument("--readout-mode", dest="readout_mode",
                       choices=("none", "inversion", "bounded"))
    p_mit.add_argument("--circuit", help="circuit JSON file to run mitigated")
    p_mit.set_defaults(func=cmd_mitigate)

    p_chsh = sub.add_parser("chsh", help="CHSH benchmark, raw and mitigated")
    p_chsh.add_argument("--config")
    p_chsh.add_argument("--delta", help="per-qubit ORR strength d0,d1")
    p_chsh.add_argument("--readout", help="readout fidelities p0,p1,p0,p1")
    p_chsh.add_argument("--shots-per-basis", dest="shots_per_basis", type=int)
    p_chsh.add_argument("--seed", type=int)
    p_chsh.add_argument("--alpha", help="per-qubit shift to correct, a0,a1")
    p_chsh.add_argument("--alpha-from", dest="alpha_from",
                        help="fitted job file(s) supplying alpha")
    p_chsh.add_argument("--calibrate", type=int,
                        help="calibrate alpha first with this many sweeps per qubit")
    p_chsh.add_argument("--readout-mode", dest="readout_mode",
                        choices=("none", "inversion", "bounded"))
    p_chsh.add_argument("--shots", type=int, help="shots per calibration point")
    p_chsh.add_argument("--grid", type=int, help="calibration grid points")
    p_chsh.add_argument("-o", "--out", help="write the result JSON here")
    p_chsh.set_defaults(func=cmd_chsh)

    p_rep = sub.add_parser("report", help="aggregate job files into CSV reports")
    p_rep.add_argument("jobs", nargs="+", help="job JSON files")
    p_rep.add_argument("--config")
    p_rep.add_argument("--histogram", help="histogram quantity (alpha)")
    p_rep.add_argument("--bins", type=int)
    p_rep.add_argument("--series", action="store_const", const=True,
                       help="emit per-sweep plot data CSV")
    p_rep.add_argument("-o", "--outdir", help="directory for the CSV files")
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing input file: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except (ConfigError, SchemaVersionError, InvalidParameterError,
            json.JSONDecodeError, ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except DegenerateDataError as exc:
        print(f"error: degenerate fit: {exc}", file=sys.stderr)
        return EXIT_FIT_FAILURE
    except (CapabilityError, MissingRecordError) as exc:
        print(f"error: backend: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except ShiftcalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
