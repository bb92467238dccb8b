"""Exact loss gradients and the finite-difference oracle.

The analytic path chains three exact pieces: adjoint-mode circuit
derivatives per window, the WEV/control combination rules, and the dense
head backward pass. The oracle re-evaluates the full loss at +/- h around
every scalar parameter; the two must agree to 1e-4 relative error with
h = 1e-4 (see ``max_relative_error``).
"""
from __future__ import annotations

import numpy as np

from qmconv import engine
from qmconv.head import (
    cross_entropy_batch,
    head_backward_batch,
    head_forward_batch,
    one_hot,
)
from qmconv.model import Model

FD_STEP = 1e-4
REL_FLOOR = 1e-7


def batch_loss(model: Model, images, labels) -> float:
    feats = np.stack([model.features(img) for img in images])
    probs, _ = head_forward_batch(feats, model.layers)
    return cross_entropy_batch(probs, np.asarray(labels))


def loss_and_gradient(model: Model, images, labels):
    """(mean loss, accuracy, gradient dict) for one batch, all exact."""
    labels = np.asarray(labels)
    if len(images) == 0:
        raise ValueError("batch must be nonempty")
    batch = len(images)
    n_circ = model.n_circuit_params
    channels = model.channels
    feats = np.empty((batch, model.feature_dim))
    caches = []
    for b in range(batch):
        inputs = model.window_input_matrix(images[b])
        if model.seq is not None:
            evs, gq = engine.adjoint_many(model.seq[1], model.circuit_params(), inputs)
            feats[b] = evs
            caches.append((evs, gq))
        else:
            per_channel = np.empty((model.feature_dim, channels))
            gq_list = []
            for c, (_, cc, idx) in enumerate(model.channel_circuits):
                evs_c, gq_c = engine.adjoint_many(cc, model.qparams[idx], inputs[c])
                per_channel[:, c] = evs_c
                gq_list.append(gq_c)
            feats[b] = model.combine_expectations(per_channel)
            caches.append((per_channel, gq_list))

    probs, cache = head_forward_batch(feats, model.layers)
    loss = cross_entropy_batch(probs, labels)
    acc = float(np.mean(np.argmax(probs, axis=1) == labels))
    head_grads, dfeats = head_backward_batch(
        probs, one_hot(labels, model.num_classes), cache, model.layers
    )

    dq = np.zeros_like(model.qparams)
    method = model.cfg.method
    for b in range(batch):
        df = dfeats[b]
        if method in ("co", "pco", "pcot"):
            _, gq = caches[b]
            dq[:n_circ] += gq.T @ df
            continue
        per_channel, gq_list = caches[b]
        if method == "control":
            dev = np.broadcast_to(df[:, None], per_channel.shape)
        else:
            w, _ = model._wev_slices()
            dev = df[:, None] * np.broadcast_to(w, per_channel.shape)
            dw = df[:, None] * per_channel
            rows = model.feature_dim if model.cfg.wev_per_position else 1
            count = rows * channels
            if model.cfg.wev_per_position:
                dq[n_circ: n_circ + count] += dw.reshape(-1)
                dq[n_circ + count:] += np.repeat(df, channels)
            else:
                dq[n_circ: n_circ + count] += dw.sum(axis=0)
                dq[n_circ + count:] += df.sum()
        for c, (_, _, idx) in enumerate(model.channel_circuits):
            dq[idx] += gq_list[c].T @ dev[:, c]

    grads = {"qparams": dq, **head_grads}
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            bad = np.argwhere(~np.isfinite(g))[0]
            raise FloatingPointError(
                f"non-finite gradient in {scalar_name(model, name, tuple(bad))}"
            )
    return loss, acc, grads


def loss_gradient(model: Model, images, labels) -> dict[str, np.ndarray]:
    return loss_and_gradient(model, images, labels)[2]


def finite_diff_gradient(model: Model, images, labels, h: float = FD_STEP,
                         tensors=None) -> dict[str, np.ndarray]:
    """Central differences (L(x+h) - L(x-h)) / 2h over every scalar parameter.

    ``tensors`` optionally restricts the check to a subset of named arrays.
    """
    out = {}
    params = model.param_tensors()
    names = tensors if tensors is not None else list(params)
    for name in names:
        arr = params[name]
        grad = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + h
            up = batch_loss(model, images, labels)
            flat[i] = keep - h
            down = batch_loss(model, images, labels)
            flat[i] = keep
            gflat[i] = (up - down) / (2.0 * h)
        out[name] = grad
    return out


def scalar_name(model: Model, tensor: str, index) -> str:
    if tensor == "qparams":
        return model.qparam_names[index[0]]
    return f"{tensor}[{','.join(str(i) for i in index)}]"


def relative_error(a: float, f: float) -> float:
    return abs(a - f) / max(abs(a), abs(f), REL_FLOOR)


def compare_gradients(model: Model, analytic: dict, fd: dict):
    """Worst relative error and a per-scalar list, sorted worst-first."""
    rows = []
    for name in fd:
        a_arr, f_arr = analytic[name], fd[name]
        for idx in np.ndindex(a_arr.shape):
            rows.append(
                (relative_error(float(a_arr[idx]), float(f_arr[idx])),
                 scalar_name(model, name, idx), float(a_arr[idx]), float(f_arr[idx]))
            )
    rows.sort(reverse=True)
    return rows[0][0] if rows else 0.0, rows
