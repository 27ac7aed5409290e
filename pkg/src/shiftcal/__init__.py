"""shiftcal: calibration and mitigation of a systematic U3 angle shift.

Workflow: sweep a Bloch-sphere meridian on a (noisy) backend, fit the
shifted-cosine model to extract the systematic shift α, correct
subsequent circuits with θ → θ − α, and benchmark the improvement with
the CHSH correlation.
"""

from .backend import (
    BackendCapability,
    CountsStore,
    JobRecord,
    RecordingBackend,
    ReplayBackend,
    SimulatorBackend,
    SweepRecord,
    circuit_fingerprint,
    load_job,
    store_job,
)
from .experiments import (
    ChshResult,
    ChshSpec,
    SweepSpec,
    analytic_sweep,
    calibrate_alpha,
    derive_seed,
    run_chsh,
    run_initial_state_study,
    run_job,
    run_meridian_scan,
    run_repeated_gate_study,
    run_sweep,
)
from .fitting import FitResult, JobFits, fit_job, format_mean_std, ibm_fit, r_squared, shift_fit
from .gates import Circuit, GateOp, StateVector, ideal_probabilities, transpile_u3, u3_matrix
from .mitigation import (
    MitigationPolicy,
    apply_alpha_shift,
    mitigate_readout_bounded,
    mitigate_readout_inversion,
)
from .noise import NoiseConfig, ReadoutCal, apply_readout, noisy_p0_orr, orr_rx_matrix, sample_counts
from .reporting import ReportBundle, build_report, r2_statistics

__version__ = "0.1.0"

__all__ = [
    "BackendCapability", "ChshResult", "ChshSpec", "Circuit", "CountsStore",
    "FitResult", "GateOp", "JobFits", "JobRecord", "MitigationPolicy",
    "NoiseConfig", "ReadoutCal", "RecordingBackend", "ReplayBackend",
    "ReportBundle", "SimulatorBackend", "StateVector", "SweepRecord", "SweepSpec",
    "analytic_sweep", "apply_alpha_shift", "apply_readout", "build_report",
    "calibrate_alpha", "circuit_fingerprint", "derive_seed", "fit_job",
    "format_mean_std", "ibm_fit", "ideal_probabilities", "load_job",
    "mitigate_readout_bounded", "mitigate_readout_inversion", "noisy_p0_orr",
    "orr_rx_matrix", "r2_statistics", "r_squared", "run_chsh",
    "run_initial_state_study", "run_job", "run_meridian_scan",
    "run_repeated_gate_study", "run_sweep", "sample_counts", "shift_fit",
    "store_job", "transpile_u3", "u3_matrix",
]
