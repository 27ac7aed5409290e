"""Noise channels: off-resonance pulse error (ORR) and readout confusion.

The ORR channel perturbs the physical Rx(±π/2) pulses.  With off-resonance
strength δ and d = √(1+δ²) the noisy pulse is

    Rx(±π/2, δ) = [[cos(πd/4) − i(δ/d)sin(πd/4),   ∓(i/d)sin(πd/4)      ],
                   [∓(i/d)sin(πd/4),                cos(πd/4) + i(δ/d)sin(πd/4)]]

which reduces to the ideal quarter rotation at δ = 0 and equals
exp[(iπ/4)(∓σX − δσZ)].  Readout confusion is a column-stochastic
calibration matrix built per qubit from (p0, p1) and tensored for
multi-qubit registers.  Shot sampling is a seeded multinomial draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvalidParameterError


def orr_rx_matrix(sign: int, delta: float) -> np.ndarray:
    """Physical Rx(sign·π/2) pulse with off-resonance strength delta.

    Unitary for every finite delta; delta=0 gives the ideal pulse with
    diagonal cos(π/4) and off-diagonal −sign·i·sin(π/4).
    """
    if sign not in (1, -1):
        raise InvalidParameterError(f"pulse sign must be +1 or -1, got {sign!r}")
    if not math.isfinite(delta):
        raise InvalidParameterError(f"delta must be finite, got {delta!r}")
    d = math.sqrt(1.0 + delta * delta)
    c = math.cos(math.pi * d / 4.0)
    s = math.sin(math.pi * d / 4.0) / d
    return np.array(
        [[c - 1j * delta * s, -sign * 1j * s],
         [-sign * 1j * s, c + 1j * delta * s]],
        dtype=complex,
    )


@dataclass(frozen=True)
class OrrParams:
    """Off-resonance strength for one qubit; d = √(1+δ²) ≥ 1."""

    delta: float

    def __post_init__(self):
        if not math.isfinite(self.delta):
            raise InvalidParameterError(f"delta must be finite, got {self.delta!r}")

    @property
    def d(self) -> float:
        return math.sqrt(1.0 + self.delta * self.delta)


@dataclass(frozen=True)
class ReadoutCal:
    """Per-qubit readout fidelities (p0, p1).

    p0 is the probability a prepared |0> reads as 0, p1 that a prepared
    |1> reads as 1.  The single-qubit calibration matrix

        [[p0, 1 − p1],
         [1 − p0, p1]]

    has unit column sums; multi-qubit matrices are tensor products in
    little-endian order (qubit 0 = least significant bit).
    """

    fidelities: tuple[tuple[float, float], ...]

    def __post_init__(self):
        for q, (p0, p1) in enumerate(self.fidelities):
            if not (0.0 <= p0 <= 1.0 and 0.0 <= p1 <= 1.0):
                raise InvalidParameterError(
                    f"qubit {q}: readout fidelities must lie in [0, 1], got ({p0}, {p1})"
                )

    @property
    def n_qubits(self) -> int:
        return len(self.fidelities)

    @classmethod
    def ideal(cls, n_qubits: int) -> "ReadoutCal":
        return cls(tuple((1.0, 1.0) for _ in range(n_qubits)))

    def single_qubit_matrix(self, qubit: int) -> np.ndarray:
        p0, p1 = self.fidelities[qubit]
        return np.array([[p0, 1.0 - p1], [1.0 - p0, p1]])

    def matrix(self) -> np.ndarray:
        """Full 2^n x 2^n calibration matrix, little-endian basis order."""
        m = self.single_qubit_matrix(0)
        for q in range(1, self.n_qubits):
            m = np.kron(self.single_qubit_matrix(q), m)
        return m

    def for_qubit(self, qubit: int) -> "ReadoutCal":
        """Single-qubit slice, e.g. for a calibration sweep of one device qubit."""
        return ReadoutCal((self.fidelities[qubit],))


@dataclass(frozen=True)
class NoiseConfig:
    """Execution noise: per-qubit ORR strength plus optional readout confusion."""

    delta: tuple[float, ...] = ()
    readout: ReadoutCal | None = None

    def __post_init__(self):
        for d in self.delta:
            if not math.isfinite(d):
                raise InvalidParameterError(f"delta entries must be finite, got {d!r}")

    def delta_for(self, qubit: int) -> float:
        return self.delta[qubit] if qubit < len(self.delta) else 0.0

    def single_qubit(self, qubit: int) -> "NoiseConfig":
        """Noise seen by a 1-qubit circuit running on the given device qubit."""
        return NoiseConfig(
            delta=(self.delta_for(qubit),),
            readout=self.readout.for_qubit(qubit) if self.readout is not None else None,
        )

    def to_dict(self) -> dict:
        return {
            "delta": list(self.delta),
            "readout": [list(f) for f in self.readout.fidelities] if self.readout else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseConfig":
        readout = data.get("readout")
        return cls(
            delta=tuple(data.get("delta", ())),
            readout=ReadoutCal(tuple((f[0], f[1]) for f in readout)) if readout else None,
        )


def apply_readout(cal: ReadoutCal, true_probs) -> np.ndarray:
    """Observed probabilities M_cal @ true_probs; preserves the total."""
    p = np.asarray(true_probs, dtype=float)
    if p.shape != (2**cal.n_qubits,):
        raise DimensionMismatchError(
            f"probability vector of length {p.shape} does not match {cal.n_qubits} qubit(s)"
        )
    return cal.matrix() @ p


def sample_counts(probabilities, shots: int, seed: int) -> np.ndarray:
    """Multinomial counts for the outcome distribution, seeded and reproducible.

    Identical (probabilities, shots, seed) give identical counts on a given
    build; cross-platform bit-exactness is best effort (numpy Generator).
    """
    p = np.asarray(probabilities, dtype=float)
    if shots < 1:
        raise InvalidParameterError(f"shots must be >= 1, got {shots}")
    if np.any(p < 0):
        raise InvalidParameterError("probabilities must be nonnegative")
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise InvalidParameterError(f"probabilities must sum to 1 within 1e-9, got {total}")
    rng = np.random.default_rng(seed)
    return rng.multinomial(shots, p / total)


def noisy_p0_orr(theta: float, delta: float, cal: ReadoutCal | None = None) -> float:
    """Exact P0 of the meridian sweep gate U3(θ, −π/2, π/2) under ORR + readout.

    Both transpiled π/2 pulses carry the same delta; virtual-Z frames are
    exact, so the |0> amplitude collapses to (c − iδs)² + s²·e^{iθ} with
    c = cos(πd/4), s = sin(πd/4)/d.  Differs from the second-order
    small-delta expansion by O(δ³).
    """
    if not (math.isfinite(theta) and math.isfinite(delta)):
        raise InvalidParameterError("theta and delta must be finite")
    d = math.sqrt(1.0 + delta * delta)
    c = math.cos(math.pi * d / 4.0)
    s = math.sin(math.pi * d / 4.0) / d
    amp = (c - 1j * delta * s) ** 2 + s * s * np.exp(1j * theta)
    p0 = abs(amp) ** 2
    if cal is None:
        return float(p0)
    if cal.n_qubits != 1:
        raise DimensionMismatchError("noisy_p0_orr is a single-qubit quantity")
    q0, q1 = cal.fidelities[0]
    return float(q0 * p0 + (1.0 - q1) * (1.0 - p0))


def p0_orr_expansion(theta: float, delta: float, cal: ReadoutCal | None = None) -> float:
    """Second-order small-delta expansion of the ORR sweep curve."""
    p0, p1 = cal.fidelities[0] if cal is not None else (1.0, 1.0)
    return (
        (1.0 + p0 - p1) / 2.0
        + (p0 + p1 - 1.0) / 2.0
        * ((1.0 - 2.0 * delta * delta) * math.cos(theta) - 2.0 * delta * math.sin(theta))
    )
