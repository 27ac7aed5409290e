"""Mitigation of the systematic angle shift and of readout confusion.

The angle shift is compensated in software: every logical U3(θ, φ, λ)
on a calibrated qubit is replaced by U3(θ − α, φ, λ), with α taken from
the most recent calibration fit of that qubit.  Readout confusion is
undone either by inverting the calibration matrix (unbiased, but the
result may leave the probability simplex) or by bounded least squares
(projected-gradient descent constrained to nonnegative vectors of
preserved total).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import gates
from .backend import JobRecord
from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    MissingCalibrationError,
    SingularCalibrationError,
)
from .fitting import fit_job
from .gates import Circuit, GateOp
from .noise import ReadoutCal

READOUT_MODES = ("none", "inversion", "bounded")

_PGD_MAX_ITER = 10_000
_PGD_RESIDUAL_STOP = 1e-10
_SINGULAR_DET_TOL = 1e-12


@dataclass
class MitigationPolicy:
    """Per-qubit shift corrections plus a readout-mitigation mode."""

    alpha: dict[int, float] = field(default_factory=dict)
    readout_mode: str = "none"
    cal: ReadoutCal | None = None

    def __post_init__(self):
        for q, a in self.alpha.items():
            if not math.isfinite(a) or abs(a) > math.pi / 2:
                raise InvalidParameterError(f"alpha for qubit {q} must lie in [-pi/2, pi/2]")
        if self.readout_mode not in READOUT_MODES:
            raise InvalidParameterError(
                f"readout_mode must be one of {READOUT_MODES}, got {self.readout_mode!r}"
            )
        if self.readout_mode != "none" and self.cal is None:
            raise MissingCalibrationError(f"readout_mode={self.readout_mode!r} needs a calibration")
        if self.readout_mode == "inversion":
            if abs(np.linalg.det(self.cal.matrix())) <= _SINGULAR_DET_TOL:
                raise SingularCalibrationError("calibration matrix is singular; inversion impossible")

    def to_dict(self) -> dict:
        return {
            "alpha": {str(q): a for q, a in self.alpha.items()},
            "readout_mode": self.readout_mode,
            "cal": [list(f) for f in self.cal.fidelities] if self.cal else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MitigationPolicy":
        cal = data.get("cal")
        return cls(
            alpha={int(q): float(a) for q, a in data.get("alpha", {}).items()},
            readout_mode=data.get("readout_mode", "none"),
            cal=ReadoutCal(tuple((f[0], f[1]) for f in cal)) if cal else None,
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "MitigationPolicy":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def alpha_policy_from_jobs(jobs: dict[int, JobRecord], readout_mode: str = "none",
                           cal: ReadoutCal | None = None) -> MitigationPolicy:
    """Build a policy from per-qubit calibration jobs (mean fitted shift)."""
    alpha = {}
    for qubit, job in jobs.items():
        summary = (job.fits or {}).get("summary") or fit_job(job).summary
        alpha[qubit] = summary["alpha_mean"]
    return MitigationPolicy(alpha=alpha, readout_mode=readout_mode, cal=cal)


def apply_alpha_shift(circuit: Circuit, policy: MitigationPolicy) -> Circuit:
    """θ → θ − α_q on every logical U3; all other ops pass through."""
    ops: list[GateOp] = []
    for op in circuit.ops:
        if op.kind == gates.U3:
            q = op.qubits[0]
            if q not in policy.alpha:
                raise MissingCalibrationError(f"no alpha calibrated for qubit {q}")
            theta, phi, lam = op.params
            ops.append(gates.u3(q, theta - policy.alpha[q], phi, lam))
        else:
            ops.append(op)
    return circuit.with_ops(ops)


def mitigate_counts(policy: MitigationPolicy, counts) -> np.ndarray:
    """Apply the policy's readout mitigation to a counts vector."""
    if policy.readout_mode == "inversion":
        return mitigate_readout_inversion(policy.cal, counts)
    if policy.readout_mode == "bounded":
        return mitigate_readout_bounded(policy.cal, counts)
    return np.asarray(counts, dtype=float)


def mitigate_readout_inversion(cal: ReadoutCal, counts) -> np.ndarray:
    """M_cal⁻¹ · counts.  Unbiased; entries may be negative, the total is
    preserved (columns of M_cal sum to one)."""
    m = cal.matrix()
    v = np.asarray(counts, dtype=float)
    if v.shape != (m.shape[0],):
        raise DimensionMismatchError(
            f"counts of length {v.shape} do not match {cal.n_qubits} qubit(s)"
        )
    if abs(np.linalg.det(m)) <= _SINGULAR_DET_TOL:
        raise SingularCalibrationError("calibration matrix is singular")
    return np.linalg.solve(m, v)


def project_simplex(v: np.ndarray, total: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = total} (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    idx = np.arange(1, v.size + 1)
    cond = u - css / idx > 0
    rho = int(idx[cond][-1])
    lam = css[rho - 1] / rho
    return np.maximum(v - lam, 0.0)


def _clip_renormalize(v: np.ndarray, total: float) -> np.ndarray:
    clipped = np.clip(v, 0.0, None)
    s = clipped.sum()
    if s == 0.0:
        return np.full_like(clipped, total / clipped.size)
    return clipped * (total / s)


def mitigate_readout_bounded(cal: ReadoutCal, counts) -> np.ndarray:
    """Bounded least squares: argmin ‖M_cal·v − counts‖₂ with v >= 0 and
    sum v = sum counts.

    Projected-gradient descent with the fixed step 1/(2‖MᵀM‖₂), warm-started
    from the best of {raw counts, projected inversion, clipped-renormalized
    inversion, uniform}; descent is monotone, so the result never trails
    any of those candidates.
    """
    m = cal.matrix()
    v = np.asarray(counts, dtype=float)
    if v.shape != (m.shape[0],):
        raise DimensionMismatchError(
            f"counts of length {v.shape} do not match {cal.n_qubits} qubit(s)"
        )
    total = float(v.sum())
    if total <= 0.0:
        raise InvalidParameterError("counts must have a positive total")

    y = v / total
    mtm = m.T @ m

    def objective(p: np.ndarray) -> float:
        r = m @ p - y
        return float(r @ r)

    candidates = [np.full(y.size, 1.0 / y.size), y.copy()]
    if abs(np.linalg.det(m)) > _SINGULAR_DET_TOL:
        inv = np.linalg.solve(m, y)
        candidates.append(project_simplex(inv))
        candidates.append(_clip_renormalize(inv, 1.0))
    p = min(candidates, key=objective)

    step = 1.0 / (2.0 * float(np.linalg.eigvalsh(mtm)[-1]))
    best_p, best_f = p, objective(p)
    prev = best_f
    for _ in range(_PGD_MAX_ITER):
        grad = 2.0 * (mtm @ p - m.T @ y)
        p = project_simplex(p - step * grad)
        cur = objective(p)
        if cur < best_f:
            best_p, best_f = p, cur
        if abs(prev - cur) <= _PGD_RESIDUAL_STOP:
            break
        prev = cur
    return best_p * total
