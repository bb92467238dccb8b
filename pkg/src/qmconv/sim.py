"""Dense statevector simulation: states, gates, expectation values.

Index convention (used everywhere in this package): qubit 0 is the least
significant bit of the amplitude index, so for a 2-qubit state the
amplitudes are ordered |q1 q0> = |00>, |01>, |10>, |11> and applying X to
qubit 0 of |00> puts the amplitude at index 1.

Amplitudes are complex128. States are capped at 20 qubits (16 MiB) as a
resource guard; the largest circuit this package builds is 15 qubits.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_QUBITS = 20

_SQRT2_INV = 1.0 / np.sqrt(2.0)


@dataclass
class Statevector:
    """Dense amplitude vector over ``num_qubits`` qubits."""

    num_qubits: int
    amplitudes: np.ndarray

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def copy(self) -> "Statevector":
        return Statevector(self.num_qubits, self.amplitudes.copy())


@dataclass(frozen=True)
class GateOp:
    """A 2x2 unitary bound to a target qubit and an optional control qubit."""

    matrix: np.ndarray
    target: int
    control: int | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.shape != (2, 2):
            raise ValueError(f"gate matrix must be 2x2, got {m.shape}")
        if not np.allclose(m.conj().T @ m, np.eye(2), atol=1e-12):
            raise ValueError("gate matrix is not unitary to 1e-12")
        if self.control is not None and self.control == self.target:
            raise ValueError("control qubit must differ from target qubit")
        object.__setattr__(self, "matrix", m)


def new_statevector(num_qubits: int) -> Statevector:
    """All-zeros basis state |0...0>."""
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}], got {num_qubits}")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(num_qubits, amps)


# -- gate matrices -----------------------------------------------------------

def rx_matrix(theta: float) -> np.ndarray:
    """Rotation about the Pauli-X axis by ``theta`` radians."""
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def rz_matrix(theta: float) -> np.ndarray:
    """Rotation about the Pauli-Z axis by ``theta`` radians."""
    return np.array(
        [[np.exp(-0.5j * theta), 0.0], [0.0, np.exp(0.5j * theta)]],
        dtype=np.complex128,
    )


def h_matrix() -> np.ndarray:
    """Hadamard transformation."""
    return np.array(
        [[_SQRT2_INV, _SQRT2_INV], [_SQRT2_INV, -_SQRT2_INV]], dtype=np.complex128
    )


def phase_matrix(theta: float) -> np.ndarray:
    """Single-qubit phase gate diag(1, e^{i theta})."""
    return np.array([[1.0, 0.0], [0.0, np.exp(1j * theta)]], dtype=np.complex128)


def xpow_matrix(theta: float) -> np.ndarray:
    """Power of an X gate, X^theta, including the e^{i pi theta / 2} phase.

    X^0 = I, X^1 = X; the global phase becomes a relative phase when the
    gate is controlled, so it is kept explicitly.
    """
    e = np.exp(0.5j * np.pi * theta)
    c, s = np.cos(np.pi * theta / 2.0), np.sin(np.pi * theta / 2.0)
    return np.array([[e * c, -1j * e * s], [-1j * e * s, e * c]], dtype=np.complex128)


def gate_rx(theta: float, target: int, control: int | None = None) -> GateOp:
    return GateOp(rx_matrix(theta), target, control)


def gate_rz(theta: float, target: int, control: int | None = None) -> GateOp:
    return GateOp(rz_matrix(theta), target, control)


def gate_h(target: int) -> GateOp:
    return GateOp(h_matrix(), target)


def gate_phase(theta: float, target: int, control: int | None = None) -> GateOp:
    return GateOp(phase_matrix(theta), target, control)


def gate_xpow(theta: float, target: int, control: int | None = None) -> GateOp:
    return GateOp(xpow_matrix(theta), target, control)


# -- derivative matrices (w.r.t. the angle; not unitary) ---------------------

def rx_deriv(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return 0.5 * np.array([[-s, -1j * c], [-1j * c, -s]], dtype=np.complex128)


def rz_deriv(theta: float) -> np.ndarray:
    return np.array(
        [[-0.5j * np.exp(-0.5j * theta), 0.0], [0.0, 0.5j * np.exp(0.5j * theta)]],
        dtype=np.complex128,
    )


def phase_deriv(theta: float) -> np.ndarray:
    return np.array([[0.0, 0.0], [0.0, 1j * np.exp(1j * theta)]], dtype=np.complex128)


def xpow_deriv(theta: float) -> np.ndarray:
    e = np.exp(0.5j * np.pi * theta)
    c, s = np.cos(np.pi * theta / 2.0), np.sin(np.pi * theta / 2.0)
    d_diag = 0.5 * np.pi * e * (1j * c - s)
    d_off = 0.5 * np.pi * e * (s - 1j * c)
    return np.array([[d_diag, d_off], [d_off, d_diag]], dtype=np.complex128)


# -- gate application and measurement ----------------------------------------

def _apply_matrix(amps: np.ndarray, m: np.ndarray, target: int, num_qubits: int,
                  control: int | None) -> np.ndarray:
    view = amps.reshape(1 << (num_qubits - target - 1), 2, 1 << target)
    a, b = view[:, 0], view[:, 1]
    if control is None:
        new_a = m[0, 0] * a + m[0, 1] * b
        new_b = m[1, 0] * a + m[1, 1] * b
        view[:, 0], view[:, 1] = new_a, new_b
    else:
        # apply the 2x2 block only where the control bit is 1 (Eq.-4 layout)
        idx = np.arange(a.shape[0])[:, None] * (2 << target) + np.arange(1 << target)
        mask = (idx >> control) & 1 == 1
        new_a = np.where(mask, m[0, 0] * a + m[0, 1] * b, a)
        new_b = np.where(mask, m[1, 0] * a + m[1, 1] * b, b)
        view[:, 0], view[:, 1] = new_a, new_b
    return amps


def apply_gate(state: Statevector, gate: GateOp) -> Statevector:
    """Return a new statevector with the gate applied."""
    n = state.num_qubits
    if not 0 <= gate.target < n:
        raise ValueError(f"target qubit {gate.target} out of range for {n} qubits")
    if gate.control is not None and not 0 <= gate.control < n:
        raise ValueError(f"control qubit {gate.control} out of range for {n} qubits")
    amps = state.amplitudes.copy()
    _apply_matrix(amps, gate.matrix, gate.target, n, gate.control)
    return Statevector(n, amps)


def apply_sequence(state: Statevector, gates) -> Statevector:
    out = state.copy()
    for g in gates:
        _apply_matrix(out.amplitudes, g.matrix, g.target, out.num_qubits, g.control)
    return out


def expectation_z(state: Statevector, qubit: int) -> float:
    """<Z_qubit> = sum over basis states of |amp|^2 * (+1 if bit 0 else -1)."""
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range")
    probs = np.abs(state.amplitudes) ** 2
    bits = (np.arange(probs.size) >> qubit) & 1
    return float(np.sum(probs * (1.0 - 2.0 * bits)))


def expectation_hadamard_basis(state: Statevector, qubit: int) -> float:
    """Rotate ``qubit`` with H, then take <Z>; equals <X> of the input state."""
    rotated = apply_gate(state, gate_h(qubit))
    return expectation_z(rotated, qubit)
