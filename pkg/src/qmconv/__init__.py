"""Multi-channel quantum convolution circuits and a hybrid training harness."""

from qmconv.sim import (
    GateOp,
    Statevector,
    apply_gate,
    expectation_hadamard_basis,
    expectation_z,
    gate_h,
    gate_phase,
    gate_rx,
    gate_rz,
    gate_xpow,
    new_statevector,
)

__all__ = [
    "GateOp",
    "Statevector",
    "apply_gate",
    "expectation_hadamard_basis",
    "expectation_z",
    "gate_h",
    "gate_phase",
    "gate_rx",
    "gate_rz",
    "gate_xpow",
    "new_statevector",
]

__version__ = "0.1.0"
