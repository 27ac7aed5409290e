"""Execution backends and persistence for jobs and recorded counts.

Two backends share one interface:

* SimulatorBackend transpiles logical U3 ops to the physical set,
  stamps the per-qubit ORR delta onto the resulting pulses, applies the
  readout confusion matrix to the exact outcome distribution and draws
  seeded multinomial counts.
* ReplayBackend re-serves counts previously captured by a
  RecordingBackend, keyed by (circuit fingerprint, shots, seed), so data
  with hardware provenance can flow through the identical analysis path.

Persistence is JSON with an explicit schema_version.  Counts are integer
arrays in little-endian basis order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import gates
from .errors import (
    CapabilityError,
    InvalidCircuitError,
    MissingRecordError,
    SchemaVersionError,
)
from .gates import Circuit, GateOp
from .noise import NoiseConfig, apply_readout, sample_counts

JOB_SCHEMA_VERSION = 1
STORE_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class BackendCapability:
    n_qubits_max: int
    supports_noise_injection: bool
    id: str


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "n_qubits": circuit.n_qubits,
        "shots": circuit.shots,
        "ops": [
            {"kind": op.kind, "qubits": list(op.qubits), "params": list(op.params)}
            for op in circuit.ops
        ],
    }


def circuit_from_dict(data: dict) -> Circuit:
    ops = tuple(
        GateOp(o["kind"], tuple(o["qubits"]), tuple(float(p) for p in o["params"]))
        for o in data["ops"]
    )
    return Circuit(n_qubits=data["n_qubits"], ops=ops, shots=data.get("shots", 8192))


def circuit_fingerprint(circuit: Circuit) -> str:
    """Content hash of (n_qubits, ops) with params rounded to 12 decimals.

    Rounding makes the key survive float formatting differences: circuits
    whose parameters agree to 1e-12 hash identically.
    """
    payload = {
        "n_qubits": circuit.n_qubits,
        "ops": [
            [op.kind, list(op.qubits), [round(p, 12) for p in op.params]]
            for op in circuit.ops
        ],
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def execution_key(circuit: Circuit, shots: int, seed: int) -> str:
    """Replay key.  A job repeats the same circuit across sweeps with distinct
    seeds, so the fingerprint alone would collide; shots and seed disambiguate."""
    return f"{circuit_fingerprint(circuit)}|shots={shots}|seed={seed}"


class SimulatorBackend:
    """Noisy statevector execution of 1-2 qubit circuits."""

    def __init__(self, backend_id: str = "simulator", n_qubits_max: int = 2):
        self.capability = BackendCapability(
            n_qubits_max=n_qubits_max, supports_noise_injection=True, id=backend_id
        )

    def _check(self, circuit: Circuit):
        if circuit.n_qubits > self.capability.n_qubits_max:
            raise CapabilityError(
                f"{self.capability.id} supports at most "
                f"{self.capability.n_qubits_max} qubits, circuit has {circuit.n_qubits}"
            )

    def transpile(self, circuit: Circuit, noise: NoiseConfig | None = None) -> Circuit:
        """Rewrite U3 ops to the physical sequence, stamping per-qubit delta.

        Pre-existing physical pulses keep the delta they were built with;
        only U3-derived pulses receive the configured noise.
        """
        ops: list[GateOp] = []
        for op in circuit.ops:
            if op.kind == gates.U3:
                q = op.qubits[0]
                delta = noise.delta_for(q) if noise is not None else 0.0
                ops.extend(gates.transpile_u3(*op.params, qubit=q, delta=delta))
            else:
                ops.append(op)
        return circuit.with_ops(ops)

    def probabilities(self, circuit: Circuit, noise: NoiseConfig | None = None) -> np.ndarray:
        """Exact observed outcome distribution (infinite-shot limit)."""
        self._check(circuit)
        physical = self.transpile(circuit, noise)
        probs = gates.ideal_probabilities(physical)
        if noise is not None and noise.readout is not None:
            if noise.readout.n_qubits != circuit.n_qubits:
                raise InvalidCircuitError(
                    f"readout calibration covers {noise.readout.n_qubits} qubit(s), "
                    f"circuit has {circuit.n_qubits}"
                )
            probs = apply_readout(noise.readout, probs)
        return probs

    def run(self, circuit: Circuit, shots: int, seed: int,
            noise: NoiseConfig | None = None) -> np.ndarray:
        return sample_counts(self.probabilities(circuit, noise), shots, seed)


@dataclass
class CountsStore:
    """Recorded execution results, keyed by execution_key."""

    backend_id: str = "simulator"
    records: dict[str, list[int]] = field(default_factory=dict)

    def save(self, path):
        payload = {
            "schema_version": STORE_SCHEMA_VERSION,
            "backend_id": self.backend_id,
            "records": self.records,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "CountsStore":
        with open(path) as fh:
            payload = json.load(fh)
        version = payload.get("schema_version")
        if version != STORE_SCHEMA_VERSION:
            raise SchemaVersionError(version, STORE_SCHEMA_VERSION)
        return cls(backend_id=payload["backend_id"], records=payload["records"])


class RecordingBackend:
    """Wraps a backend, capturing every result into a CountsStore."""

    def __init__(self, inner, store: CountsStore | None = None):
        self.inner = inner
        self.store = store if store is not None else CountsStore(inner.capability.id)
        self.capability = inner.capability

    def run(self, circuit: Circuit, shots: int, seed: int,
            noise: NoiseConfig | None = None) -> np.ndarray:
        counts = self.inner.run(circuit, shots, seed, noise)
        self.store.records[execution_key(circuit, shots, seed)] = [int(c) for c in counts]
        return counts


class ReplayBackend:
    """Serves stored counts; noise arguments are ignored (already baked in)."""

    def __init__(self, store: CountsStore):
        self.store = store
        self.capability = BackendCapability(
            n_qubits_max=2, supports_noise_injection=False,
            id=f"replay({store.backend_id})",
        )

    def run(self, circuit: Circuit, shots: int, seed: int,
            noise: NoiseConfig | None = None) -> np.ndarray:
        key = execution_key(circuit, shots, seed)
        if key not in self.store.records:
            raise MissingRecordError(key)
        return np.array(self.store.records[key], dtype=int)


@dataclass
class SweepRecord:
    """P0 estimates of one meridian sweep.  shots == 0 marks an analytic
    (infinite-shot) sweep whose estimates are exact probabilities."""

    thetas: list[float]
    p0_estimates: list[float]
    shots: int

    def __post_init__(self):
        if len(self.thetas) != len(self.p0_estimates):
            raise InvalidCircuitError("thetas and p0_estimates must have equal length")
        if any(b <= a for a, b in zip(self.thetas, self.thetas[1:])):
            raise InvalidCircuitError("thetas must be strictly increasing")
        if self.thetas and not (-1e-12 <= self.thetas[0] and self.thetas[-1] <= np.pi + 1e-12):
            raise InvalidCircuitError("theta grid must lie in [0, pi]")
        if any(not -1e-12 <= p <= 1 + 1e-12 for p in self.p0_estimates):
            raise InvalidCircuitError("p0 estimates must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "thetas": list(self.thetas),
            "p0_estimates": list(self.p0_estimates),
            "shots": self.shots,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SweepRecord":
        return cls(
            thetas=[float(t) for t in data["thetas"]],
            p0_estimates=[float(p) for p in data["p0_estimates"]],
            shots=int(data["shots"]),
        )


@dataclass
class JobRecord:
    """A timestamped bundle of consecutive sweeps under one noise config."""

    job_id: str
    backend_id: str
    timestamp: str
    noise_config: NoiseConfig
    sweeps: list[SweepRecord]
    metadata: dict = field(default_factory=dict)
    fits: dict | None = None

    def __post_init__(self):
        if not self.sweeps:
            raise InvalidCircuitError("a job needs at least one sweep")
        grid = self.sweeps[0].thetas
        for s in self.sweeps[1:]:
            if s.thetas != grid:
                raise InvalidCircuitError("all sweeps in a job must share one theta grid")

    @property
    def n_sweeps(self) -> int:
        return len(self.sweeps)

    def to_dict(self) -> dict:
        out = {
            "schema_version": JOB_SCHEMA_VERSION,
            "job_id": self.job_id,
            "backend_id": self.backend_id,
            "timestamp": self.timestamp,
            "noise_config": self.noise_config.to_dict(),
            "sweeps": [s.to_dict() for s in self.sweeps],
            "metadata": self.metadata,
        }
        if self.fits is not None:
            out["fits"] = self.fits
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "JobRecord":
        version = data.get("schema_version")
        if version != JOB_SCHEMA_VERSION:
            raise SchemaVersionError(version, JOB_SCHEMA_VERSION)
        return cls(
            job_id=data["job_id"],
            backend_id=data["backend_id"],
            timestamp=data["timestamp"],
            noise_config=NoiseConfig.from_dict(data["noise_config"]),
            sweeps=[SweepRecord.from_dict(s) for s in data["sweeps"]],
            metadata=data.get("metadata", {}),
            fits=data.get("fits"),
        )


def store_job(record: JobRecord, path) -> None:
    with open(path, "w") as fh:
        json.dump(record.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_job(path) -> JobRecord:
    with open(path) as fh:
        return JobRecord.from_dict(json.load(fh))


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")
