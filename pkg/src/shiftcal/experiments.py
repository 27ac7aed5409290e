"""Experiment orchestration: sweeps, jobs, gate studies, and the CHSH benchmark.

A sweep measures P0 on the grid θ_i = πi/N along one Bloch-sphere
meridian; a job is n_s consecutive sweeps under one noise configuration.
Seeds derive from the job seed through a documented counter scheme
(``derive_seed``), so every circuit execution is individually
reproducible and sweeps can run concurrently without sharing generator
state.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from . import gates
from .backend import JobRecord, SimulatorBackend, SweepRecord, utc_now
from .errors import InvalidParameterError
from .fitting import fit_job
from .gates import Circuit
from .mitigation import MitigationPolicy, apply_alpha_shift, mitigate_counts
from .noise import NoiseConfig

ALLOWED_PREPS = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4)


def derive_seed(root: int, *path: int) -> int:
    """Independent 64-bit seed for the execution unit addressed by path.

    Counter scheme: SeedSequence(root, spawn_key=path); e.g. point i of
    sweep s of a job seeded r uses derive_seed(derive_seed(r, s), i).
    """
    state = np.random.SeedSequence(entropy=root, spawn_key=tuple(path)).generate_state(2)
    return int(state[0]) << 32 | int(state[1])


@dataclass(frozen=True)
class SweepSpec:
    """Shape of one meridian sweep.

    The swept gate is U3(θ, φ, −φ) with φ the meridian azimuth, which at
    the default φ = −π/2 is the x rotation Rx(θ).  repeat_M splits the
    rotation into M gates of θ/M.  initial_state_prep, when set, starts
    the sweep from Rx(prep)|0> via a separate (equally noisy) U3 gate.
    """

    n_points: int = 31
    meridian: float = -math.pi / 2
    shots: int = 8192
    initial_state_prep: float | None = None
    repeat_M: int = 1

    def __post_init__(self):
        if self.n_points < 4:
            raise InvalidParameterError("a sweep needs at least 4 grid points")
        if self.shots < 1:
            raise InvalidParameterError("shots must be positive")
        if not 1 <= self.repeat_M <= 10:
            raise InvalidParameterError("repeat_M must lie in [1, 10]")
        if self.initial_state_prep is not None and not any(
            abs(self.initial_state_prep - p) < 1e-9 for p in ALLOWED_PREPS
        ):
            raise InvalidParameterError(
                f"initial_state_prep must be one of {ALLOWED_PREPS}"
            )

    @property
    def thetas(self) -> list[float]:
        n = self.n_points - 1
        return [math.pi * i / n for i in range(self.n_points)]

    def to_dict(self) -> dict:
        return asdict(self)


def build_sweep_circuit(spec: SweepSpec, theta: float) -> Circuit:
    ops = []
    if spec.initial_state_prep is not None:
        ops.append(gates.u3(0, spec.initial_state_prep, -math.pi / 2, math.pi / 2))
    for _ in range(spec.repeat_M):
        ops.append(gates.u3(0, theta / spec.repeat_M, spec.meridian, -spec.meridian))
    ops.append(gates.measure())
    return Circuit(1, tuple(ops), spec.shots)


def run_sweep(backend, spec: SweepSpec, noise: NoiseConfig | None, seed: int,
              policy: MitigationPolicy | None = None) -> SweepRecord:
    """One sweep over the θ grid; point i runs with derive_seed(seed, i)."""
    estimates = []
    for i, theta in enumerate(spec.thetas):
        circuit = build_sweep_circuit(spec, theta)
        if policy is not None:
            circuit = apply_alpha_shift(circuit, policy)
        counts = backend.run(circuit, spec.shots, derive_seed(seed, i), noise)
        estimates.append(int(counts[0]) / spec.shots)
    return SweepRecord(thetas=spec.thetas, p0_estimates=estimates, shots=spec.shots)


def analytic_sweep(spec: SweepSpec, noise: NoiseConfig | None,
                   policy: MitigationPolicy | None = None) -> SweepRecord:
    """Infinite-shot sweep: exact observed probabilities, no sampling."""
    sim = SimulatorBackend()
    estimates = []
    for theta in spec.thetas:
        circuit = build_sweep_circuit(spec, theta)
        if policy is not None:
            circuit = apply_alpha_shift(circuit, policy)
        estimates.append(float(sim.probabilities(circuit, noise)[0]))
    return SweepRecord(thetas=spec.thetas, p0_estimates=estimates, shots=0)


def _default_job_id(backend_id: str, spec: SweepSpec, n_sweeps: int, seed: int,
                    noise: NoiseConfig | None) -> str:
    blob = json.dumps(
        {
            "backend": backend_id,
            "spec": spec.to_dict(),
            "n_sweeps": n_sweeps,
            "seed": seed,
            "noise": noise.to_dict() if noise else None,
        },
        sort_keys=True,
    )
    return "job-" + hashlib.sha256(blob.encode()).hexdigest()[:12]


def run_job(backend, spec: SweepSpec, n_sweeps: int, noise: NoiseConfig | None,
            seed: int, policy: MitigationPolicy | None = None,
            metadata: dict | None = None, job_id: str | None = None,
            timestamp: str | None = None) -> JobRecord:
    """n_sweeps consecutive sweeps; sweep s runs with derive_seed(seed, s).

    job_id defaults to a hash of the run inputs and timestamp to the
    current UTC time; pass both explicitly when byte-identical job files
    across re-runs are required.
    """
    if n_sweeps < 1:
        raise InvalidParameterError("a job needs at least one sweep")
    sweeps = [
        run_sweep(backend, spec, noise, derive_seed(seed, s), policy)
        for s in range(n_sweeps)
    ]
    meta = {"sweep_spec": spec.to_dict(), "seed": seed}
    if metadata:
        meta.update(metadata)
    return JobRecord(
        job_id=job_id or _default_job_id(backend.capability.id, spec, n_sweeps, seed, noise),
        backend_id=backend.capability.id,
        timestamp=timestamp or utc_now(),
        noise_config=noise if noise is not None else NoiseConfig(),
        sweeps=sweeps,
        metadata=meta,
    )


def run_repeated_gate_study(backend, m_range, noise: NoiseConfig | None, seed: int,
                            spec: SweepSpec | None = None,
                            n_sweeps: int = 10) -> list[tuple[int, float]]:
    """Fitted shift α_M for each gate count M: the θ rotation is split into
    M gates of θ/M, each contributing its own pulse errors."""
    base = spec or SweepSpec()
    results = []
    for j, m in enumerate(m_range):
        if not 1 <= m <= 10:
            raise InvalidParameterError("repeat counts must lie in [1, 10]")
        mspec = SweepSpec(
            n_points=base.n_points, meridian=base.meridian, shots=base.shots,
            initial_state_prep=base.initial_state_prep, repeat_M=m,
        )
        job = run_job(backend, mspec, n_sweeps, noise, derive_seed(seed, j),
                      metadata={"repeat_M": m})
        results.append((m, fit_job(job).summary["alpha_mean"]))
    return results


def run_initial_state_study(backend, preps, noise: NoiseConfig | None, seed: int,
                            spec: SweepSpec | None = None,
                            n_sweeps: int = 10) -> list[tuple[float, float]]:
    """Fitted α per initial state Rx(prep)|0>.

    Delegates to run_job with the prep recorded in the spec, so prep = 0
    is exactly a plain sweep job with an explicit identity preparation.
    The fit compensates the phase offset (model θ → θ + prep), keeping
    the fitted α comparable across preparations.
    """
    base = spec or SweepSpec()
    results = []
    for j, prep in enumerate(preps):
        pspec = SweepSpec(
            n_points=base.n_points, meridian=base.meridian, shots=base.shots,
            initial_state_prep=prep, repeat_M=base.repeat_M,
        )
        job = run_job(backend, pspec, n_sweeps, noise, derive_seed(seed, j))
        results.append((prep, fit_job(job).summary["alpha_mean"]))
    return results


def run_meridian_scan(backend, phis, noise: NoiseConfig | None, seed: int,
                      spec: SweepSpec | None = None,
                      n_sweeps: int = 10) -> list[tuple[float, float]]:
    """Fitted α along different meridians; the sweep gate is U3(θ, φ, −φ)."""
    base = spec or SweepSpec()
    results = []
    for j, phi in enumerate(phis):
        pspec = SweepSpec(
            n_points=base.n_points, meridian=phi, shots=base.shots,
            initial_state_prep=base.initial_state_prep, repeat_M=base.repeat_M,
        )
        job = run_job(backend, pspec, n_sweeps, noise, derive_seed(seed, j))
        results.append((phi, fit_job(job).summary["alpha_mean"]))
    return results


# CHSH measurement settings: labels, basis-change gate params (θ, φ, λ) per
# qubit (None = measure Z directly), and the sign of the term in C.
# A = Z, A' = X (Hadamard), B = (X+Z)/√2 and B' = (−X+Z)/√2 (Ry(∓π/4)).
HADAMARD_PARAMS = (math.pi / 2, 0.0, math.pi)
CHSH_SETTINGS = (
    ("AB", None, (-math.pi / 4, 0.0, 0.0), +1),
    ("AB'", None, (math.pi / 4, 0.0, 0.0), +1),
    ("A'B", HADAMARD_PARAMS, (-math.pi / 4, 0.0, 0.0), +1),
    ("A'B'", HADAMARD_PARAMS, (math.pi / 4, 0.0, 0.0), -1),
)


@dataclass(frozen=True)
class ChshSpec:
    qubits: tuple[int, int] = (0, 1)
    shots_per_basis: int = 819_200
    settings: tuple = CHSH_SETTINGS

    def __post_init__(self):
        if self.shots_per_basis < 1:
            raise InvalidParameterError("shots_per_basis must be positive")
        if len(self.settings) != 4:
            raise InvalidParameterError("the correlation function takes four settings")


def build_chsh_circuit(spec: ChshSpec, m0_params, m1_params, shots: int) -> Circuit:
    q0, q1 = spec.qubits
    ops = [gates.u3(q0, *HADAMARD_PARAMS), gates.cx(q0, q1)]
    if m0_params is not None:
        ops.append(gates.u3(q0, *m0_params))
    if m1_params is not None:
        ops.append(gates.u3(q1, *m1_params))
    ops.append(gates.measure())
    return Circuit(2, tuple(ops), shots)


def expectation_from_vector(vector, q0: int = 0, q1: int = 1) -> float:
    """⟨AB⟩ = Σ (−1)^(a⊕b) v_k / Σ v_k over the 2-qubit outcome vector."""
    v = np.asarray(vector, dtype=float)
    signs = np.array([1 if (((k >> q0) ^ (k >> q1)) & 1) == 0 else -1 for k in range(v.size)])
    return float((signs * v).sum() / v.sum())


@dataclass
class ChshResult:
    c_raw: float
    c_mitigated: float
    expectations_raw: dict[str, float]
    expectations_mitigated: dict[str, float]
    policy: MitigationPolicy

    def to_dict(self) -> dict:
        return {
            "c_raw": self.c_raw,
            "c_mitigated": self.c_mitigated,
            "expectations_raw": self.expectations_raw,
            "expectations_mitigated": self.expectations_mitigated,
            "policy": self.policy.to_dict(),
        }


def run_chsh(backend, spec: ChshSpec, policy: MitigationPolicy,
             noise: NoiseConfig | None, seed: int) -> ChshResult:
    """Correlation C = ⟨AB⟩ + ⟨AB'⟩ + ⟨A'B⟩ − ⟨A'B'⟩, raw and mitigated.

    The mitigated pass re-runs the four circuits with the shift correction
    applied to every U3 (Bell preparation included) and, when the policy
    asks for it, post-processes the counts with readout mitigation.
    """
    q0, q1 = spec.qubits
    exp_raw: dict[str, float] = {}
    exp_mit: dict[str, float] = {}
    c_raw = 0.0
    c_mit = 0.0
    for i, (label, m0, m1, sign) in enumerate(spec.settings):
        circuit = build_chsh_circuit(spec, m0, m1, spec.shots_per_basis)
        counts = backend.run(circuit, spec.shots_per_basis, derive_seed(seed, 0, i), noise)
        e = expectation_from_vector(counts, q0, q1)
        exp_raw[label] = e
        c_raw += sign * e

        mitigated_circuit = apply_alpha_shift(circuit, policy)
        counts = backend.run(mitigated_circuit, spec.shots_per_basis,
                             derive_seed(seed, 1, i), noise)
        e = expectation_from_vector(mitigate_counts(policy, counts), q0, q1)
        exp_mit[label] = e
        c_mit += sign * e
    return ChshResult(c_raw, c_mit, exp_raw, exp_mit, policy)


def calibrate_alpha(backend, noise: NoiseConfig | None, qubits, seed: int,
                    spec: SweepSpec | None = None, n_sweeps: int = 10) -> dict[int, float]:
    """Per-qubit shift calibration: a sweep job on each qubit's own noise
    slice, returning the mean fitted α keyed by qubit."""
    base = spec or SweepSpec()
    alpha = {}
    for j, q in enumerate(qubits):
        qnoise = noise.single_qubit(q) if noise is not None else None
        job = run_job(backend, base, n_sweeps, qnoise, derive_seed(seed, 100 + j),
                      metadata={"qubit": q})
        alpha[q] = fit_job(job).summary["alpha_mean"]
    return alpha
