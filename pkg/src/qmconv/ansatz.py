"""Learnable unitary blocks used by the convolution circuits.

Four block templates exist. The two convolutional blocks act on one working
register; the two entangling blocks couple registers or ancillas:

  u1: per-qubit Rx, per-qubit Rz, then a closed ring of controlled-phase
      gates (qubit k controls k+1 mod n). 3n parameters.
  u2: per-qubit X^theta, a linear chain of controlled-X^theta gates
      (qubit k controls k+1), then X^theta on the first qubit.
      2n parameters.
  uc: ring of controlled-X^theta gates over the lead qubit of each working
      register; empty for a single register.
  ua: per-ancilla Rx followed by a chain of controlled-X^theta gates;
      empty for a single ancilla.

All blocks reduce to the identity when every parameter is zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qmconv.circuits import GateSpec

ParamStore = dict[str, float]


@dataclass(frozen=True)
class AnsatzBlock:
    kind: str
    qubits: tuple[int, ...]
    param_names: tuple[str, ...]
    gates: tuple[GateSpec, ...]


def build_u1(qubits, prefix: str = "u") -> AnsatzBlock:
    qubits = tuple(qubits)
    n = len(qubits)
    if n < 2:
        raise ValueError("u1 needs at least 2 qubits (its entangling ring)")
    names, gates = [], []
    for i, q in enumerate(qubits):
        names.append(f"{prefix}.rx{i}")
        gates.append(GateSpec("rx", target=q, param=names[-1]))
    for i, q in enumerate(qubits):
        names.append(f"{prefix}.rz{i}")
        gates.append(GateSpec("rz", target=q, param=names[-1]))
    for k in range(n):
        names.append(f"{prefix}.ring{k}")
        gates.append(
            GateSpec("phase", target=qubits[(k + 1) % n], control=qubits[k],
                     param=names[-1])
        )
    return AnsatzBlock("u1", qubits, tuple(names), tuple(gates))


def build_u2(qubits, prefix: str = "u") -> AnsatzBlock:
    qubits = tuple(qubits)
    n = len(qubits)
    if n < 1:
        raise ValueError("u2 needs at least 1 qubit")
    names, gates = [], []
    for i, q in enumerate(qubits):
        names.append(f"{prefix}.xp{i}")
        gates.append(GateSpec("xpow", target=q, param=names[-1]))
    for k in range(n - 1):
        names.append(f"{prefix}.cx{k}")
        gates.append(
            GateSpec("xpow", target=qubits[k + 1], control=qubits[k], param=names[-1])
        )
    names.append(f"{prefix}.xf")
    gates.append(GateSpec("xpow", target=qubits[0], param=names[-1]))
    return AnsatzBlock("u2", qubits, tuple(names), tuple(gates))


def build_uc(register_lead_qubits, prefix: str = "uc") -> AnsatzBlock:
    leads = tuple(register_lead_qubits)
    if len(leads) < 2:
        return AnsatzBlock("uc", leads, (), ())
    names, gates = [], []
    for k in range(len(leads)):
        names.append(f"{prefix}.{k}")
        gates.append(
            GateSpec("xpow", target=leads[(k + 1) % len(leads)], control=leads[k],
                     param=names[-1])
        )
    return AnsatzBlock("uc", leads, tuple(names), tuple(gates))


def build_ua(ancilla_qubits, prefix: str = "ua") -> AnsatzBlock:
    ancillas = tuple(ancilla_qubits)
    if len(ancillas) < 2:
        return AnsatzBlock("ua", ancillas, (), ())
    names, gates = [], []
    for i, q in enumerate(ancillas):
        names.append(f"{prefix}.rx{i}")
        gates.append(GateSpec("rx", target=q, param=names[-1]))
    for k in range(len(ancillas) - 1):
        names.append(f"{prefix}.cx{k}")
        gates.append(
            GateSpec("xpow", target=ancillas[k + 1], control=ancillas[k],
                     param=names[-1])
        )
    return AnsatzBlock("ua", ancillas, tuple(names), tuple(gates))


def build_block(kind: str, qubits, prefix: str = "u") -> AnsatzBlock:
    if kind == "u1":
        return build_u1(qubits, prefix)
    if kind == "u2":
        return build_u2(qubits, prefix)
    raise ValueError(f"unknown convolutional ansatz kind {kind!r}")


def xavier_bound(num_qubits: int) -> float:
    """Uniform bound sqrt(6 / (fan_in + fan_out)) with both fans = qubit span."""
    return float(np.sqrt(6.0 / (2.0 * num_qubits)))


def init_params_xavier(blocks, seed) -> ParamStore:
    """Xavier-uniform initial values for every parameter of the given blocks.

    ``seed`` may be an int or an already-constructed ``numpy.random.Generator``
    (PCG64); draws happen block by block in the order given, parameter order
    within a block, so a fixed seed reproduces the store exactly.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    store: ParamStore = {}
    for block in blocks:
        bound = xavier_bound(max(len(block.qubits), 1))
        for name in block.param_names:
            if name in store:
                raise ValueError(f"duplicate parameter name {name!r}")
            store[name] = float(rng.uniform(-bound, bound))
    return store
