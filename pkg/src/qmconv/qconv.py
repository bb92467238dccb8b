"""Multi-channel quantum convolution methods and the sliding-window pass.

Five methods produce one real number per filter window:

  co      sequential channel overwrite: one working register plus an
          ancilla; every channel is angle-encoded onto the same register
          (no reset), run through the learnable block, and coupled to the
          ancilla with a learnable controlled-phase gate. X-basis readout
          of the ancilla.
  pco     parallel channel overwrite: R working registers process R
          channels per group, an entangling ring couples the register
          leads, then each lead exchanges phase with the single ancilla.
  pcot    like pco but with A ancillas; controlled-phase gates are
          distributed over the ancillas round-robin by channel index and
          an ancilla-entangling block runs before readout of ancilla 0.
  wev     per-channel circuits measured in the Z basis, combined as
          sum_c (expval_c * w_c + b_c) with learnable classical weights.
  control per-channel circuits, plain sum of Z expectation values.

Qubit layout: working registers first (register r occupies qubits
[r*F^2, (r+1)*F^2)), ancillas last. The lead qubit of a register is its
first qubit; controlled-phase couplings attach there unless
``cp_full_fanout`` is set.

Each channel stage instantiates its own learnable block (parameters
``u{c}.*``), each group its own register entangler (``uc{g}.*``), and each
controlled-phase coupling its own angle (``cp{c}``); within one window the
filter therefore learns a channel-specific response, while all windows of
an image share every parameter. The control model instead applies one
shared filter per channel (``shared_filter=True`` by default there), which
is what makes it blind to channel identity; the flag can be set on any
method to share the block across stages.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qmconv import sim
from qmconv.ansatz import build_block, build_ua, build_uc
from qmconv.circuits import GateSpec, MethodCircuit, run_reference

METHODS = ("co", "pco", "pcot", "wev", "control")
ANSATZE = ("u1", "u2")


@dataclass(frozen=True)
class ConvConfig:
    method: str
    filter_size: int = 2
    stride: int = 1
    registers: int = 3
    ancillas: int = 3
    ansatz: str = "u2"
    cp_full_fanout: bool = False
    wev_per_position: bool = True
    shared_filter: bool | None = None  # None -> True for control, else False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.ansatz not in ANSATZE:
            raise ValueError(f"ansatz must be one of {ANSATZE}, got {self.ansatz!r}")
        if self.filter_size < 1:
            raise ValueError("filter_size must be >= 1")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.registers < 1:
            raise ValueError("registers must be >= 1")
        if self.ancillas < 1:
            raise ValueError("ancillas must be >= 1")
        if self.ansatz == "u1" and self.filter_size == 1:
            raise ValueError("u1 needs a working register of >= 2 qubits (filter_size >= 2)")
        if self.shared_filter is None:
            object.__setattr__(self, "shared_filter", self.method == "control")

    @property
    def window_qubits(self) -> int:
        return self.filter_size * self.filter_size

    def block_prefix(self, channel: int) -> str:
        return "u" if self.shared_filter else f"u{channel}"

    def group_prefix(self, group: int) -> str:
        return "uc" if self.shared_filter else f"uc{group}"


def qubit_width(cfg: ConvConfig) -> int:
    """Circuit width: F^2+1 (co), R*F^2+1 (pco), R*F^2+A (pcot), F^2 (wev/control)."""
    w = cfg.window_qubits
    if cfg.method == "co":
        return w + 1
    if cfg.method == "pco":
        return cfg.registers * w + 1
    if cfg.method == "pcot":
        return cfg.registers * w + cfg.ancillas
    return w


def padded_channels(cfg: ConvConfig, channels: int) -> int:
    """Channels rounded up to a multiple of R for the parallel methods."""
    if cfg.method in ("pco", "pcot"):
        return math.ceil(channels / cfg.registers) * cfg.registers
    return channels


def output_shape(cfg: ConvConfig, length: int, width: int) -> tuple[int, int]:
    f, s = cfg.filter_size, cfg.stride
    if length < f or width < f:
        raise ValueError("image smaller than the filter")
    return (math.ceil((length - f + 1) / s), math.ceil((width - f + 1) / s))


# -- windows ------------------------------------------------------------------

def extract_window(image: np.ndarray, l: int, w: int, c: int, filter_size: int) -> np.ndarray:
    """Row-major flatten of the F x F patch of channel c at position (l, w)."""
    length, width, channels = image.shape
    if l < 0 or w < 0 or l + filter_size > length or w + filter_size > width:
        raise ValueError(f"window at ({l}, {w}) exceeds the {length}x{width} image")
    if not 0 <= c < channels:
        raise ValueError(f"channel {c} out of range")
    return np.asarray(
        image[l:l + filter_size, w:w + filter_size, c], dtype=np.float64
    ).reshape(-1)


def window_stack(image: np.ndarray, l: int, w: int, cfg: ConvConfig) -> np.ndarray:
    """All channel windows at one position, shape (C, F^2)."""
    channels = image.shape[2]
    return np.stack(
        [extract_window(image, l, w, c, cfg.filter_size) for c in range(channels)]
    )


def encode_channel(state: sim.Statevector, window: np.ndarray, working_qubits) -> sim.Statevector:
    """Angle-encode a window with Rx(pi * x_i) on each working qubit.

    Composes with whatever the working qubits already hold; encoding is never
    preceded by a reset, which is what lets successive channels overwrite the
    register.
    """
    working_qubits = tuple(working_qubits)
    if len(window) != len(working_qubits):
        raise ValueError("window length must match the number of working qubits")
    for x, q in zip(window, working_qubits):
        state = sim.apply_gate(state, sim.gate_rx(np.pi * float(x), q))
    return state


# -- circuit assembly ---------------------------------------------------------

def _cp_specs(cfg: ConvConfig, channel: int, register_base: int, ancilla: int):
    """Controlled-phase coupling(s) for one channel, with their param names."""
    if cfg.cp_full_fanout:
        return [
            GateSpec("phase", target=register_base + k, control=ancilla,
                     param=f"cp{channel}.q{k}")
            for k in range(cfg.window_qubits)
        ]
    return [GateSpec("phase", target=register_base, control=ancilla, param=f"cp{channel}")]


def _method_registers_ancillas(cfg: ConvConfig) -> tuple[int, int]:
    if cfg.method == "co":
        return 1, 1
    if cfg.method == "pco":
        return cfg.registers, 1
    return cfg.registers, cfg.ancillas


def build_method_circuit(cfg: ConvConfig, channels: int) -> MethodCircuit:
    """Assemble the full sequential circuit for co/pco/pcot."""
    if cfg.method in ("wev", "control"):
        raise ValueError("wev/control run one circuit per channel; "
                         "use build_channel_circuit")
    if channels < 1:
        raise ValueError("need at least one channel")
    w = cfg.window_qubits
    registers, ancillas = _method_registers_ancillas(cfg)
    n = registers * w + ancillas
    ancilla_qubits = tuple(registers * w + a for a in range(ancillas))
    ua = build_ua(ancilla_qubits)
    c_pad = padded_channels(cfg, channels)

    gates: list[GateSpec] = []
    for a in ancilla_qubits:
        gates.append(GateSpec("h", target=a))
    for group_start in range(0, c_pad, registers):
        group = group_start // registers
        for r in range(registers):
            c = group_start + r
            if c < channels:  # zero-padded channels encode as the identity
                for i in range(w):
                    gates.append(GateSpec("rx", target=r * w + i, input_slot=c * w + i))
        for r in range(registers):
            c = group_start + r
            block = build_block(cfg.ansatz, range(r * w, (r + 1) * w),
                                prefix=cfg.block_prefix(c))
            gates.extend(block.gates)
        gates.extend(
            build_uc([r * w for r in range(registers)],
                     prefix=cfg.group_prefix(group)).gates
        )
        for r in range(registers):
            c = group_start + r
            gates.extend(_cp_specs(cfg, c, r * w, ancilla_qubits[c % ancillas]))
    gates.extend(ua.gates)
    gates.append(GateSpec("h", target=ancilla_qubits[0]))

    names: list[str] = []
    seen = set()
    for g in gates:
        if g.param is not None and g.param not in seen:
            seen.add(g.param)
            names.append(g.param)
    return MethodCircuit(n, tuple(gates), ancilla_qubits[0], tuple(names), channels * w)


def build_channel_circuit(cfg: ConvConfig, channel: int) -> MethodCircuit:
    """One channel's circuit for wev/control: encode, block, <Z> on qubit 0."""
    if cfg.method not in ("wev", "control"):
        raise ValueError("per-channel circuits exist only for wev/control")
    w = cfg.window_qubits
    block = build_block(cfg.ansatz, range(w), prefix=cfg.block_prefix(channel))
    gates = [GateSpec("rx", target=i, input_slot=i) for i in range(w)]
    gates.extend(block.gates)
    return MethodCircuit(w, tuple(gates), 0, block.param_names, w)


def method_param_names(cfg: ConvConfig, channels: int) -> tuple[str, ...]:
    """Every circuit-level parameter of the method, in canonical order."""
    if cfg.method in ("wev", "control"):
        names: list[str] = []
        seen = set()
        for c in range(channels):
            for name in build_channel_circuit(cfg, c).param_names:
                if name not in seen:
                    seen.add(name)
                    names.append(name)
        return tuple(names)
    return build_method_circuit(cfg, channels).param_names


def model_blocks(cfg: ConvConfig, channels: int):
    """The ansatz-block instances owning the method's parameters, in the
    initialization draw order (channel blocks, group entanglers, ancilla
    entangler). Controlled-phase angles are not block-owned."""
    w = cfg.window_qubits
    if cfg.method in ("wev", "control"):
        stages = 1 if cfg.shared_filter else channels
        return [build_block(cfg.ansatz, range(w), prefix=cfg.block_prefix(c))
                for c in range(stages)]
    registers, _ = _method_registers_ancillas(cfg)
    c_pad = padded_channels(cfg, channels)
    stages = 1 if cfg.shared_filter else c_pad
    blocks = [
        build_block(cfg.ansatz, range((c % registers) * w, (c % registers + 1) * w),
                    prefix=cfg.block_prefix(c))
        for c in range(stages)
    ]
    if registers >= 2:
        groups = 1 if cfg.shared_filter else c_pad // registers
        blocks.extend(
            build_uc([r * w for r in range(registers)], prefix=cfg.group_prefix(g))
            for g in range(groups)
        )
    if cfg.method == "pcot" and cfg.ancillas >= 2:
        blocks.append(build_ua([registers * w + a for a in range(cfg.ancillas)]))
    return blocks


# -- forward evaluators (reference path) ---------------------------------------

def _check_windows(windows: np.ndarray, cfg: ConvConfig) -> np.ndarray:
    windows = np.atleast_2d(np.asarray(windows, dtype=np.float64))
    if windows.shape[0] < 1:
        raise ValueError("need at least one channel window")
    if windows.shape[1] != cfg.window_qubits:
        raise ValueError(
            f"each window must have F^2 = {cfg.window_qubits} entries, "
            f"got {windows.shape[1]}"
        )
    return windows


def co_forward(windows, params, cfg: ConvConfig) -> float:
    windows = _check_windows(windows, cfg)
    mc = build_method_circuit(cfg, windows.shape[0])
    return run_reference(mc, params, windows.reshape(-1))


def pco_forward(windows, params, cfg: ConvConfig) -> float:
    windows = _check_windows(windows, cfg)
    mc = build_method_circuit(cfg, windows.shape[0])
    return run_reference(mc, params, windows.reshape(-1))


def pcot_forward(windows, params, cfg: ConvConfig) -> float:
    windows = _check_windows(windows, cfg)
    mc = build_method_circuit(cfg, windows.shape[0])
    return run_reference(mc, params, windows.reshape(-1))


def _channel_expectations(windows: np.ndarray, params, cfg: ConvConfig) -> np.ndarray:
    return np.array([
        run_reference(build_channel_circuit(cfg, c), params, wc)
        for c, wc in enumerate(windows)
    ])


def wev_param_names(cfg: ConvConfig, channels: int, position=None) -> tuple[list[str], list[str]]:
    if cfg.wev_per_position:
        if position is None:
            raise ValueError("per-position WEV weights need the window position")
        i, j = position
        suffix = f".p{i}_{j}"
    else:
        suffix = ""
    w_names = [f"wev.w{c}{suffix}" for c in range(channels)]
    b_names = [f"wev.b{c}{suffix}" for c in range(channels)]
    return w_names, b_names


def wev_forward(windows, params, cfg: ConvConfig, position=None) -> float:
    windows = _check_windows(windows, cfg)
    evals = _channel_expectations(windows, params, cfg)
    w_names, b_names = wev_param_names(cfg, windows.shape[0], position)
    total = 0.0
    for ev, wn, bn in zip(evals, w_names, b_names):
        total += float(ev) * float(params[wn]) + float(params[bn])
    return total


def control_forward(windows, params, cfg: ConvConfig) -> float:
    windows = _check_windows(windows, cfg)
    total = 0.0
    for ev in _channel_expectations(windows, params, cfg):
        total += float(ev)
    return total


_FORWARDS = {
    "co": co_forward,
    "pco": pco_forward,
    "pcot": pcot_forward,
    "control": control_forward,
}


def method_forward(windows, params, cfg: ConvConfig, position=None) -> float:
    if cfg.method == "wev":
        return wev_forward(windows, params, cfg, position)
    return _FORWARDS[cfg.method](windows, params, cfg)


def conv2d_quantum(image: np.ndarray, params, cfg: ConvConfig) -> np.ndarray:
    """Evaluate the configured method at every valid window position.

    Pure function of (image, params); positions are independent. This is the
    readable reference; the trainer uses the compiled engine, which is tested
    to agree with this function.
    """
    image = np.asarray(image)
    out_l, out_w = output_shape(cfg, image.shape[0], image.shape[1])
    fmap = np.empty((out_l, out_w), dtype=np.float64)
    for i in range(out_l):
        for j in range(out_w):
            windows = window_stack(image, i * cfg.stride, j * cfg.stride, cfg)
            fmap[i, j] = method_forward(windows, params, cfg, position=(i, j))
    return fmap
