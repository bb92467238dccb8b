"""Hybrid model assembly: quantum convolution -> feature map -> classifier.

One model owns a single quantum filter (one compiled circuit), the vector of
quantum-side parameters (circuit angles plus, for WEV, the per-channel
classical weights), and the two dense layers. Initialization draws from one
seeded PCG64 stream in a fixed order: ansatz blocks, controlled-phase
couplings, WEV weights, head layers.
"""
from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from qmconv import engine, head as head_mod, qconv
from qmconv.ansatz import init_params_xavier, xavier_bound
from qmconv.circuits import MethodCircuit

_MAGIC = b"QMM1"


@dataclass
class Model:
    cfg: qconv.ConvConfig
    channels: int
    image_shape: tuple[int, int, int]
    num_classes: int
    hidden: int
    circuit_names: tuple[str, ...]  # circuit-level parameter names
    seq: tuple[MethodCircuit, engine.CompiledCircuit] | None
    channel_circuits: list | None   # [(MethodCircuit, CompiledCircuit, slot idx)]
    qparam_names: tuple[str, ...]
    qparams: np.ndarray
    layers: list
    class_names: list[str] = field(default_factory=list)

    @property
    def n_circuit_params(self) -> int:
        return len(self.circuit_names)

    @property
    def num_qubits(self) -> int:
        return qconv.qubit_width(self.cfg)

    @property
    def output_shape(self) -> tuple[int, int]:
        return qconv.output_shape(self.cfg, self.image_shape[0], self.image_shape[1])

    @property
    def feature_dim(self) -> int:
        out_l, out_w = self.output_shape
        return out_l * out_w

    def param_tensors(self) -> dict[str, np.ndarray]:
        l1, l2 = self.layers
        return {
            "qparams": self.qparams,
            "head.w1": l1.weights,
            "head.b1": l1.biases,
            "head.w2": l2.weights,
            "head.b2": l2.biases,
        }

    def circuit_params(self) -> np.ndarray:
        return self.qparams[: self.n_circuit_params]

    # -- wev weight views ------------------------------------------------------

    def _wev_slices(self):
        n = self.n_circuit_params
        rows = self.feature_dim if self.cfg.wev_per_position else 1
        count = rows * self.channels
        w = self.qparams[n: n + count].reshape(rows, self.channels)
        b = self.qparams[n + count: n + 2 * count].reshape(rows, self.channels)
        return w, b

    # -- quantum pass ------------------------------------------------------------

    def window_input_matrix(self, image: np.ndarray) -> np.ndarray:
        """(windows, C*F^2) for the sequential methods, (C, windows, F^2) for
        the per-channel ones; windows are row-major over output positions."""
        f = self.cfg.filter_size
        s = self.cfg.stride
        patches = np.lib.stride_tricks.sliding_window_view(image, (f, f), axis=(0, 1))
        patches = patches[::s, ::s]  # (out_l, out_w, C, F, F)
        out_l, out_w = patches.shape[0], patches.shape[1]
        flat = np.ascontiguousarray(patches, dtype=np.float64).reshape(
            out_l * out_w, self.channels, f * f
        )
        if self.cfg.method in ("wev", "control"):
            return np.ascontiguousarray(flat.transpose(1, 0, 2))
        return flat.reshape(out_l * out_w, self.channels * f * f)

    def channel_expectations(self, inputs: np.ndarray) -> np.ndarray:
        """(windows, C) raw <Z> values for the per-channel methods."""
        evs = np.empty((inputs.shape[1], self.channels))
        for c, (_, cc, idx) in enumerate(self.channel_circuits):
            evs[:, c] = engine.forward_many(cc, self.qparams[idx], inputs[c])
        return evs

    def combine_expectations(self, per_channel: np.ndarray) -> np.ndarray:
        """Per-window feature values from the per-channel expectations."""
        if self.cfg.method == "control":
            return per_channel.sum(axis=1)
        w, b = self._wev_slices()
        return np.sum(per_channel * w, axis=1) + np.sum(b, axis=1)

    def features(self, image: np.ndarray) -> np.ndarray:
        inputs = self.window_input_matrix(image)
        if self.seq is not None:
            return engine.forward_many(self.seq[1], self.circuit_params(), inputs)
        return self.combine_expectations(self.channel_expectations(inputs))

    def feature_map(self, image: np.ndarray) -> np.ndarray:
        return self.features(image).reshape(self.output_shape)

    def forward(self, image: np.ndarray) -> np.ndarray:
        return head_mod.head_forward(self.features(image), self.layers)


def wev_vector_names(cfg: qconv.ConvConfig, channels: int, out_shape) -> list[str]:
    if cfg.method != "wev":
        return []
    names = []
    if cfg.wev_per_position:
        positions = [(i, j) for i in range(out_shape[0]) for j in range(out_shape[1])]
        for kind in ("w", "b"):
            for i, j in positions:
                for c in range(channels):
                    names.append(f"wev.{kind}{c}.p{i}_{j}")
    else:
        for kind in ("w", "b"):
            for c in range(channels):
                names.append(f"wev.{kind}{c}")
    return names


def build_model(cfg: qconv.ConvConfig, image_shape, num_classes: int, hidden: int,
                seed: int, wev_init: str = "normal") -> Model:
    if hidden < 1:
        raise ValueError("hidden width must be >= 1")
    if num_classes < 2:
        raise ValueError("need at least 2 classes")
    length, width, channels = image_shape
    out_shape = qconv.output_shape(cfg, length, width)
    rng = np.random.default_rng(seed)

    circuit_names = qconv.method_param_names(cfg, channels)
    store = init_params_xavier(qconv.model_blocks(cfg, channels), rng)
    cp_bound = xavier_bound(2)
    for name in circuit_names:
        if name not in store:  # controlled-phase couplings, in circuit order
            store[name] = float(rng.uniform(-cp_bound, cp_bound))

    names = list(circuit_names) + wev_vector_names(cfg, channels, out_shape)
    qparams = np.empty(len(names), dtype=np.float64)
    qparams[: len(circuit_names)] = [store[n] for n in circuit_names]
    if cfg.method == "wev":
        rows = out_shape[0] * out_shape[1] if cfg.wev_per_position else 1
        wev_w = np.empty((rows, channels))
        wev_b = np.empty((rows, channels))
        for r in range(rows):
            wev_w[r], wev_b[r] = head_mod.init_wev(channels, wev_init, rng)
        qparams[len(circuit_names):] = np.concatenate(
            [wev_w.reshape(-1), wev_b.reshape(-1)]
        )

    seq = None
    channel_circuits = None
    if cfg.method in ("co", "pco", "pcot"):
        mc = qconv.build_method_circuit(cfg, channels)
        seq = (mc, engine.compile_circuit(mc))
    else:
        slot_of = {name: i for i, name in enumerate(names)}
        channel_circuits = []
        for c in range(channels):
            mc = qconv.build_channel_circuit(cfg, c)
            idx = np.array([slot_of[n] for n in mc.param_names], dtype=np.intp)
            channel_circuits.append((mc, engine.compile_circuit(mc), idx))

    feature_dim = out_shape[0] * out_shape[1]
    layers = head_mod.init_head((feature_dim, hidden, num_classes), rng)
    return Model(cfg, channels, tuple(image_shape), num_classes, hidden,
                 tuple(circuit_names), seq, channel_circuits,
                 tuple(names), qparams, layers)


# -- evaluation helpers ----------------------------------------------------------

def batch_features(model: Model, images: np.ndarray) -> np.ndarray:
    return np.stack([model.features(img) for img in images])


def batch_eval(model: Model, images: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and accuracy over a batch."""
    feats = batch_features(model, images)
    probs, _ = head_mod.head_forward_batch(feats, model.layers)
    loss = head_mod.cross_entropy_batch(probs, labels)
    acc = float(np.mean(np.argmax(probs, axis=1) == labels))
    return loss, acc, probs


# -- serialization ----------------------------------------------------------------

def _write_section(fh, name: str, payload: bytes, is_bytes: bool, shape=()):
    raw = name.encode()
    fh.write(struct.pack("<H", len(raw)))
    fh.write(raw)
    fh.write(struct.pack("<B", 1 if is_bytes else 0))
    fh.write(struct.pack("<I", len(shape)))
    for d in shape:
        fh.write(struct.pack("<I", d))
    fh.write(struct.pack("<Q", len(payload)))
    fh.write(payload)


def save_model(model: Model, path) -> None:
    meta = {
        "cfg": asdict(model.cfg),
        "channels": model.channels,
        "image_shape": list(model.image_shape),
        "num_classes": model.num_classes,
        "hidden": model.hidden,
        "qparam_names": list(model.qparam_names),
        "class_names": list(model.class_names),
    }
    sections = [("meta", json.dumps(meta).encode(), True, ())]
    for name, arr in model.param_tensors().items():
        sections.append((name, arr.astype("<f8").tobytes(), False, arr.shape))
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(sections)))
        for name, payload, is_bytes, shape in sections:
            _write_section(fh, name, payload, is_bytes, shape)


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ValueError("truncated model file")
    return data


def load_model(path) -> Model:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a qmconv model file (bad magic)")
        (n_sections,) = struct.unpack("<I", _read_exact(fh, 4))
        sections = {}
        for _ in range(n_sections):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2))
            name = _read_exact(fh, name_len).decode()
            (is_bytes,) = struct.unpack("<B", _read_exact(fh, 1))
            (ndim,) = struct.unpack("<I", _read_exact(fh, 4))
            shape = tuple(
                struct.unpack("<I", _read_exact(fh, 4))[0] for _ in range(ndim)
            )
            (nbytes,) = struct.unpack("<Q", _read_exact(fh, 8))
            payload = _read_exact(fh, nbytes)
            if is_bytes:
                sections[name] = payload
            else:
                sections[name] = np.frombuffer(payload, dtype="<f8").reshape(shape).copy()
    meta = json.loads(sections["meta"].decode())
    cfg = qconv.ConvConfig(**meta["cfg"])
    model = build_model(cfg, tuple(meta["image_shape"]), meta["num_classes"],
                        meta["hidden"], seed=0)
    if list(model.qparam_names) != meta["qparam_names"]:
        raise ValueError("model file parameter layout does not match this build")
    model.qparams[:] = sections["qparams"]
    model.layers[0].weights[:] = sections["head.w1"]
    model.layers[0].biases[:] = sections["head.b1"]
    model.layers[1].weights[:] = sections["head.w2"]
    model.layers[1].biases[:] = sections["head.b2"]
    model.class_names = list(meta["class_names"])
    return model
