"""Statevector core for 1-2 qubit circuits and the device gate set.

Gate model: logical U3(θ, φ, λ) instructions are rewritten by
transpilation into the physical set {virtual-Z, Rx(±π/2) pulse, CX}:

    U3(θ, φ, λ) = VZ(φ) · Rx(−π/2) · VZ(θ) · Rx(π/2) · VZ(λ)

up to global phase, with virtual-Z realized as the exact phase
diag(1, e^{iω}) (a software frame change, assumed error-free) and the
pulses as orr_rx_matrix (ideal at δ=0).  Basis ordering is little-endian:
qubit 0 is the least significant bit of the state index.

Angle convention: sweep grids use θ ∈ [0, π] and phases in (−2π, 2π];
constructors only require finiteness, since shift mitigation legitimately
produces θ slightly outside the canonical window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidCircuitError, InvalidParameterError
from .noise import orr_rx_matrix

U3 = "u3"
VZ = "vz"
RX = "rx"
CX = "cx"
MEASURE = "measure"

_KINDS = (U3, VZ, RX, CX, MEASURE)


@dataclass(frozen=True)
class GateOp:
    """One tagged gate instruction.

    kind/params:
      u3      params=(theta, phi, lam), one qubit; logical instruction
      vz      params=(omega,), one qubit; exact frame change
      rx      params=(sign, delta), one qubit; physical ±π/2 pulse
      cx      qubits=(control, target)
      measure terminal, reads the full register
    """

    kind: str
    qubits: tuple[int, ...] = ()
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidParameterError(f"unknown gate kind {self.kind!r}")
        for p in self.params:
            if not math.isfinite(p):
                raise InvalidParameterError(f"{self.kind}: non-finite parameter {p!r}")
        n_params = {U3: 3, VZ: 1, RX: 2, CX: 0, MEASURE: 0}[self.kind]
        if len(self.params) != n_params:
            raise InvalidParameterError(
                f"{self.kind} takes {n_params} parameter(s), got {len(self.params)}"
            )
        if self.kind == RX and self.params[0] not in (1.0, -1.0):
            raise InvalidParameterError(f"rx pulse sign must be ±1, got {self.params[0]!r}")
        if self.kind == CX and (len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]):
            raise InvalidParameterError(f"cx needs two distinct qubits, got {self.qubits}")
        if self.kind in (U3, VZ, RX) and len(self.qubits) != 1:
            raise InvalidParameterError(f"{self.kind} acts on exactly one qubit")


def u3(qubit: int, theta: float, phi: float, lam: float) -> GateOp:
    return GateOp(U3, (qubit,), (theta, phi, lam))


def vz(qubit: int, omega: float) -> GateOp:
    return GateOp(VZ, (qubit,), (omega,))


def rx_pulse(qubit: int, sign: int, delta: float = 0.0) -> GateOp:
    return GateOp(RX, (qubit,), (float(sign), delta))


def cx(control: int, target: int) -> GateOp:
    return GateOp(CX, (control, target))


def measure() -> GateOp:
    return GateOp(MEASURE)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    ops: tuple[GateOp, ...] = ()
    shots: int = 8192

    def __post_init__(self):
        if not isinstance(self.ops, tuple):
            object.__setattr__(self, "ops", tuple(self.ops))
        if self.n_qubits not in (1, 2):
            raise InvalidCircuitError(f"only 1 or 2 qubits supported, got {self.n_qubits}")
        if self.shots < 1:
            raise InvalidCircuitError(f"shots must be positive, got {self.shots}")
        for i, op in enumerate(self.ops):
            if any(q >= self.n_qubits or q < 0 for q in op.qubits):
                raise InvalidCircuitError(f"op {i} ({op.kind}) addresses qubit outside register")
            if op.kind == MEASURE and i != len(self.ops) - 1:
                raise InvalidCircuitError("measure must be the final op")

    def with_ops(self, ops) -> "Circuit":
        return replace(self, ops=tuple(ops))


@dataclass
class StateVector:
    """Normalized complex amplitudes of a 1-2 qubit register."""

    amps: np.ndarray
    n_qubits: int

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(amps, n_qubits)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    """General single-qubit unitary:

    [[cos(θ/2),            −e^{iλ} sin(θ/2)      ],
     [e^{iφ} sin(θ/2),      e^{i(λ+φ)} cos(θ/2)  ]]
    """
    for name, v in (("theta", theta), ("phi", phi), ("lambda", lam)):
        if not math.isfinite(v):
            raise InvalidParameterError(f"{name} must be finite, got {v!r}")
    ct, st = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array(
        [[ct, -np.exp(1j * lam) * st],
         [np.exp(1j * phi) * st, np.exp(1j * (lam + phi)) * ct]]
    )


def vz_matrix(omega: float) -> np.ndarray:
    return np.array([[1.0, 0.0], [0.0, np.exp(1j * omega)]])


def transpile_u3(theta: float, phi: float, lam: float, qubit: int = 0,
                 delta: float = 0.0) -> list[GateOp]:
    """Physical sequence for U3(θ, φ, λ), in application order.

    [VZ(λ), Rx(+π/2), VZ(θ), Rx(−π/2), VZ(φ)]; composing the matrices
    (last op leftmost) reproduces u3_matrix up to global phase.  delta is
    stamped onto both pulses (0 = ideal).
    """
    return [
        vz(qubit, lam),
        rx_pulse(qubit, +1, delta),
        vz(qubit, theta),
        rx_pulse(qubit, -1, delta),
        vz(qubit, phi),
    ]


def _op_matrix_1q(op: GateOp) -> np.ndarray:
    if op.kind == U3:
        return u3_matrix(*op.params)
    if op.kind == VZ:
        return vz_matrix(op.params[0])
    if op.kind == RX:
        return orr_rx_matrix(int(op.params[0]), op.params[1])
    raise InvalidCircuitError(f"{op.kind} has no single-qubit matrix")


def _embed_1q(matrix: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    if n_qubits == 1:
        return matrix
    eye = np.eye(2)
    return np.kron(matrix, eye) if qubit == 1 else np.kron(eye, matrix)


def _cx_matrix(control: int, target: int) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    for b in range(4):
        cbit = (b >> control) & 1
        out = b ^ (1 << target) if cbit else b
        m[out, b] = 1.0
    return m


def apply_gate(state: StateVector, op: GateOp) -> StateVector:
    """Apply one op, returning a new normalized state."""
    if op.kind == MEASURE:
        raise InvalidCircuitError("measure is not a unitary; use probabilities instead")
    if any(q >= state.n_qubits for q in op.qubits):
        raise InvalidCircuitError(f"{op.kind} on qubit {op.qubits} exceeds register size")
    if op.kind == CX:
        full = _cx_matrix(*op.qubits)
    else:
        full = _embed_1q(_op_matrix_1q(op), op.qubits[0], state.n_qubits)
    return StateVector(full @ state.amps, state.n_qubits)


def run_statevector(circuit: Circuit) -> StateVector:
    state = StateVector.zero(circuit.n_qubits)
    for op in circuit.ops:
        if op.kind == MEASURE:
            break
        state = apply_gate(state, op)
    return state


def ideal_probabilities(circuit: Circuit) -> np.ndarray:
    """Exact outcome distribution of the circuit with every pulse as written."""
    return run_statevector(circuit).probabilities


def phase_aligned(matrix: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Rescale matrix by a global phase so its largest-|entry| matches reference."""
    k = np.unravel_index(np.abs(matrix).argmax(), matrix.shape)
    if abs(matrix[k]) == 0 or abs(reference[k]) == 0:
        return matrix
    phase = reference[k] / matrix[k]
    return matrix * (phase / abs(phase))


def composed_matrix(ops, n_qubits: int = 1) -> np.ndarray:
    """Product of the ops' matrices in application order (first op rightmost)."""
    full = np.eye(2**n_qubits, dtype=complex)
    for op in ops:
        if op.kind == CX:
            m = _cx_matrix(*op.qubits)
        else:
            m = _embed_1q(_op_matrix_1q(op), op.qubits[0], n_qubits)
        full = m @ full
    return full
