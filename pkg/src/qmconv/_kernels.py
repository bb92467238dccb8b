"""Jitted statevector kernels for compiled circuit programs.

A program is a set of parallel flat arrays (one entry per gate): gate kind,
target, control (-1 when absent), angle source, slot and constant. Angles
come from the learnable-parameter vector (source 1), from an input slot as
pi * x (source 2), or from the constant column (source 0).

The adjoint pass computes d<Z>/d(param) exactly with two live state vectors:
undo each gate on the bra and ket, take the gate-derivative inner product
where a learnable angle is involved, and accumulate per parameter slot.
Every function here is also valid plain Python; when numba is missing the
same code runs interpreted (slow but identical).
"""
import os

import numpy as np

# the default TBB probe warns on this platform's older TBB; OpenMP is fine
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

try:
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap

    prange = range

KIND_H = 0
KIND_RX = 1
KIND_RZ = 2
KIND_PHASE = 3
KIND_XPOW = 4

SRC_CONST = 0
SRC_PARAM = 1
SRC_INPUT = 2

_PI = np.pi
_RT2 = 1.0 / np.sqrt(2.0)


@njit(cache=True)
def _matrix(kind, theta):
    if kind == KIND_H:
        return (_RT2 + 0j, _RT2 + 0j, _RT2 + 0j, -_RT2 + 0j)
    if kind == KIND_RX:
        c = np.cos(0.5 * theta) + 0j
        s = -1j * np.sin(0.5 * theta)
        return (c, s, s, c)
    if kind == KIND_RZ:
        return (np.exp(-0.5j * theta), 0j, 0j, np.exp(0.5j * theta))
    if kind == KIND_PHASE:
        return (1 + 0j, 0j, 0j, np.exp(1j * theta))
    # KIND_XPOW
    e = np.exp(0.5j * _PI * theta)
    c = e * np.cos(0.5 * _PI * theta)
    s = -1j * e * np.sin(0.5 * _PI * theta)
    return (c, s, s, c)


@njit(cache=True)
def _deriv(kind, theta):
    if kind == KIND_RX:
        c = -0.5j * np.cos(0.5 * theta)
        s = -0.5 * np.sin(0.5 * theta) + 0j
        return (s, c, c, s)
    if kind == KIND_RZ:
        return (-0.5j * np.exp(-0.5j * theta), 0j, 0j, 0.5j * np.exp(0.5j * theta))
    if kind == KIND_PHASE:
        return (0j, 0j, 0j, 1j * np.exp(1j * theta))
    if kind == KIND_XPOW:
        e = np.exp(0.5j * _PI * theta)
        c = np.cos(0.5 * _PI * theta)
        s = np.sin(0.5 * _PI * theta)
        dd = 0.5 * _PI * e * (1j * c - s)
        do = 0.5 * _PI * e * (s - 1j * c)
        return (dd, do, do, dd)
    return (0j, 0j, 0j, 0j)  # KIND_H carries no angle


@njit(cache=True)
def _apply_full(state, m00, m01, m10, m11, t):
    half = 1 << t
    step = half << 1
    for base in range(0, state.shape[0], step):
        for i in range(base, base + half):
            a = state[i]
            b = state[i + half]
            state[i] = m00 * a + m01 * b
            state[i + half] = m10 * a + m11 * b


@njit(cache=True)
def _apply_full_ctrl(state, m00, m01, m10, m11, t, c):
    half = 1 << t
    step = half << 1
    cbit = 1 << c
    for base in range(0, state.shape[0], step):
        for i in range(base, base + half):
            if i & cbit:
                a = state[i]
                b = state[i + half]
                state[i] = m00 * a + m01 * b
                state[i + half] = m10 * a + m11 * b


@njit(cache=True)
def _apply_diag(state, m00, m11, t):
    tbit = 1 << t
    for i in range(state.shape[0]):
        if i & tbit:
            state[i] *= m11
        else:
            state[i] *= m00


@njit(cache=True)
def _apply_diag_ctrl(state, m00, m11, t, c):
    tbit = 1 << t
    cbit = 1 << c
    for i in range(state.shape[0]):
        if i & cbit:
            if i & tbit:
                state[i] *= m11
            else:
                state[i] *= m00


@njit(cache=True)
def _apply(state, m00, m01, m10, m11, t, c):
    if m01 == 0j and m10 == 0j:
        if c < 0:
            _apply_diag(state, m00, m11, t)
        else:
            _apply_diag_ctrl(state, m00, m11, t, c)
    else:
        if c < 0:
            _apply_full(state, m00, m01, m10, m11, t)
        else:
            _apply_full_ctrl(state, m00, m01, m10, m11, t, c)


@njit(cache=True)
def _deriv_dot(lam, psi, d00, d01, d10, d11, t, c):
    """<lam | dU | psi> restricted to the control-active subspace."""
    half = 1 << t
    step = half << 1
    acc = 0j
    if c < 0:
        for base in range(0, psi.shape[0], step):
            for i in range(base, base + half):
                a = psi[i]
                b = psi[i + half]
                acc += lam[i].conjugate() * (d00 * a + d01 * b)
                acc += lam[i + half].conjugate() * (d10 * a + d11 * b)
    else:
        cbit = 1 << c
        for base in range(0, psi.shape[0], step):
            for i in range(base, base + half):
                if i & cbit:
                    a = psi[i]
                    b = psi[i + half]
                    acc += lam[i].conjugate() * (d00 * a + d01 * b)
                    acc += lam[i + half].conjugate() * (d10 * a + d11 * b)
    return acc


@njit(cache=True)
def _theta_of(g, srcs, slots, consts, params, inputs):
    s = srcs[g]
    if s == SRC_PARAM:
        return params[slots[g]]
    if s == SRC_INPUT:
        return _PI * inputs[slots[g]]
    return consts[g]


@njit(cache=True)
def _run(kinds, targets, ctrls, srcs, slots, consts, params, inputs, state):
    state[:] = 0j
    state[0] = 1.0 + 0j
    for g in range(kinds.shape[0]):
        theta = _theta_of(g, srcs, slots, consts, params, inputs)
        m00, m01, m10, m11 = _matrix(kinds[g], theta)
        _apply(state, m00, m01, m10, m11, targets[g], ctrls[g])


@njit(cache=True)
def _exp_z(state, q):
    qbit = 1 << q
    acc = 0.0
    for i in range(state.shape[0]):
        p = state[i].real * state[i].real + state[i].imag * state[i].imag
        if i & qbit:
            acc -= p
        else:
            acc += p
    return acc


@njit(cache=True)
def _adjoint(kinds, targets, ctrls, srcs, slots, consts, mq,
             params, inputs, state, lam, grads):
    _run(kinds, targets, ctrls, srcs, slots, consts, params, inputs, state)
    expv = _exp_z(state, mq)
    qbit = 1 << mq
    for i in range(state.shape[0]):
        if i & qbit:
            lam[i] = -state[i]
        else:
            lam[i] = state[i]
    for g in range(kinds.shape[0] - 1, -1, -1):
        theta = _theta_of(g, srcs, slots, consts, params, inputs)
        m00, m01, m10, m11 = _matrix(kinds[g], theta)
        a00 = m00.conjugate()
        a01 = m10.conjugate()
        a10 = m01.conjugate()
        a11 = m11.conjugate()
        t = targets[g]
        c = ctrls[g]
        _apply(state, a00, a01, a10, a11, t, c)  # state is now psi_{g-1}
        if srcs[g] == SRC_PARAM:
            d00, d01, d10, d11 = _deriv(kinds[g], theta)
            acc = _deriv_dot(lam, state, d00, d01, d10, d11, t, c)
            grads[slots[g]] += 2.0 * acc.real
        _apply(lam, a00, a01, a10, a11, t, c)
    return expv


@njit(cache=True, parallel=True)
def forward_batch(kinds, targets, ctrls, srcs, slots, consts, num_qubits, mq,
                  params, inputs2d, out):
    dim = 1 << num_qubits
    for w in prange(inputs2d.shape[0]):
        state = np.empty(dim, np.complex128)
        _run(kinds, targets, ctrls, srcs, slots, consts, params, inputs2d[w], state)
        out[w] = _exp_z(state, mq)


@njit(cache=True, parallel=True)
def adjoint_batch(kinds, targets, ctrls, srcs, slots, consts, num_qubits, mq,
                  params, inputs2d, out, grads2d):
    dim = 1 << num_qubits
    for w in prange(inputs2d.shape[0]):
        state = np.empty(dim, np.complex128)
        lam = np.empty(dim, np.complex128)
        out[w] = _adjoint(kinds, targets, ctrls, srcs, slots, consts, mq,
                          params, inputs2d[w], state, lam, grads2d[w])
