"""Symbolic circuit descriptions: gates bound to named parameters or inputs.

A GateSpec is one gate of a parameterized circuit. Its rotation angle comes
from exactly one of three sources: a named learnable parameter, an input
data slot (angle-encoded as pi * x), or a fixed constant. A MethodCircuit
bundles a gate list with the qubit count, the measured qubit, and the
ordered learnable-parameter names; any basis rotation before measurement
(e.g. the Hadamard for an X-basis readout) is part of the gate list, so the
observable is always Pauli-Z on ``measure_qubit``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from qmconv import sim

GATE_KINDS = ("h", "rx", "rz", "phase", "xpow")

_MATRIX = {
    "h": lambda theta: sim.h_matrix(),
    "rx": sim.rx_matrix,
    "rz": sim.rz_matrix,
    "phase": sim.phase_matrix,
    "xpow": sim.xpow_matrix,
}


@dataclass(frozen=True)
class GateSpec:
    kind: str
    target: int
    control: int | None = None
    param: str | None = None
    input_slot: int | None = None
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.param is not None and self.input_slot is not None:
            raise ValueError("gate angle cannot come from both a parameter and an input")


@dataclass(frozen=True)
class MethodCircuit:
    num_qubits: int
    gates: tuple[GateSpec, ...]
    measure_qubit: int
    param_names: tuple[str, ...]
    num_inputs: int


def spec_theta(spec: GateSpec, params: Mapping[str, float], inputs: np.ndarray) -> float:
    if spec.param is not None:
        return float(params[spec.param])
    if spec.input_slot is not None:
        return float(np.pi * inputs[spec.input_slot])
    return spec.theta


def spec_gate(spec: GateSpec, params: Mapping[str, float], inputs: np.ndarray) -> sim.GateOp:
    theta = spec_theta(spec, params, inputs)
    return sim.GateOp(_MATRIX[spec.kind](theta), spec.target, spec.control)


def run_reference(mc: MethodCircuit, params: Mapping[str, float],
                  inputs: np.ndarray) -> float:
    """Evaluate a circuit with the plain statevector simulator."""
    state = sim.new_statevector(mc.num_qubits)
    for spec in mc.gates:
        state = sim.apply_gate(state, spec_gate(spec, params, inputs))
    return sim.expectation_z(state, mc.measure_qubit)


def circuit_depth(gates) -> int:
    """Longest qubit-wise gate chain (ASAP levels over qubit dependencies)."""
    level: dict[int, int] = {}
    depth = 0
    for g in gates:
        qubits = (g.target,) if g.control is None else (g.target, g.control)
        lvl = 1 + max((level.get(q, 0) for q in qubits), default=0)
        for q in qubits:
            level[q] = lvl
        depth = max(depth, lvl)
    return depth
