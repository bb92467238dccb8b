"""Compiled circuit execution: flat programs driven through jitted kernels.

``compile_circuit`` lowers a MethodCircuit to parallel arrays once per model;
``forward_many``/``adjoint_many`` then evaluate a whole batch of windows per
call (one row of the input matrix per window). Window rows are processed in
independent per-window slots, so results do not depend on the number of
worker threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from qmconv import _kernels
from qmconv._kernels import (
    HAVE_NUMBA,
    KIND_H,
    KIND_PHASE,
    KIND_RX,
    KIND_RZ,
    KIND_XPOW,
    SRC_CONST,
    SRC_INPUT,
    SRC_PARAM,
)
from qmconv.circuits import MethodCircuit

_KIND_CODES = {"h": KIND_H, "rx": KIND_RX, "rz": KIND_RZ, "phase": KIND_PHASE,
               "xpow": KIND_XPOW}


@dataclass(frozen=True)
class CompiledCircuit:
    num_qubits: int
    measure_qubit: int
    param_names: tuple[str, ...]
    num_inputs: int
    kinds: np.ndarray
    targets: np.ndarray
    ctrls: np.ndarray
    srcs: np.ndarray
    slots: np.ndarray
    consts: np.ndarray

    @property
    def num_params(self) -> int:
        return len(self.param_names)

    @property
    def num_gates(self) -> int:
        return int(self.kinds.shape[0])


def compile_circuit(mc: MethodCircuit) -> CompiledCircuit:
    g = len(mc.gates)
    kinds = np.empty(g, dtype=np.int8)
    targets = np.empty(g, dtype=np.int32)
    ctrls = np.empty(g, dtype=np.int32)
    srcs = np.empty(g, dtype=np.int8)
    slots = np.empty(g, dtype=np.int32)
    consts = np.empty(g, dtype=np.float64)
    slot_of = {name: i for i, name in enumerate(mc.param_names)}
    for i, spec in enumerate(mc.gates):
        kinds[i] = _KIND_CODES[spec.kind]
        targets[i] = spec.target
        ctrls[i] = -1 if spec.control is None else spec.control
        if spec.param is not None:
            srcs[i], slots[i], consts[i] = SRC_PARAM, slot_of[spec.param], 0.0
        elif spec.input_slot is not None:
            srcs[i], slots[i], consts[i] = SRC_INPUT, spec.input_slot, 0.0
        else:
            srcs[i], slots[i], consts[i] = SRC_CONST, -1, spec.theta
    return CompiledCircuit(mc.num_qubits, mc.measure_qubit, mc.param_names,
                           mc.num_inputs, kinds, targets, ctrls, srcs, slots, consts)


def param_vector(params: Mapping[str, float], names) -> np.ndarray:
    return np.array([params[name] for name in names], dtype=np.float64)


def _as_input_matrix(cc: CompiledCircuit, inputs) -> np.ndarray:
    m = np.ascontiguousarray(np.atleast_2d(np.asarray(inputs, dtype=np.float64)))
    if m.shape[1] != cc.num_inputs:
        raise ValueError(f"expected {cc.num_inputs} input slots per row, got {m.shape[1]}")
    return m


def forward_many(cc: CompiledCircuit, params: np.ndarray, inputs) -> np.ndarray:
    inputs = _as_input_matrix(cc, inputs)
    params = np.ascontiguousarray(params, dtype=np.float64)
    out = np.empty(inputs.shape[0], dtype=np.float64)
    _kernels.forward_batch(cc.kinds, cc.targets, cc.ctrls, cc.srcs, cc.slots,
                           cc.consts, cc.num_qubits, cc.measure_qubit,
                           params, inputs, out)
    return out


def adjoint_many(cc: CompiledCircuit, params: np.ndarray, inputs):
    """Expectations and exact d<Z>/d(param) for every input row."""
    inputs = _as_input_matrix(cc, inputs)
    params = np.ascontiguousarray(params, dtype=np.float64)
    out = np.empty(inputs.shape[0], dtype=np.float64)
    grads = np.zeros((inputs.shape[0], max(cc.num_params, 1)), dtype=np.float64)
    _kernels.adjoint_batch(cc.kinds, cc.targets, cc.ctrls, cc.srcs, cc.slots,
                           cc.consts, cc.num_qubits, cc.measure_qubit,
                           params, inputs, out, grads)
    return out, grads[:, :cc.num_params]


def set_threads(n: int) -> int:
    """Cap the kernel worker threads; returns the count actually in effect."""
    if not HAVE_NUMBA:
        return 1
    import numba

    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return numba.get_num_threads()
