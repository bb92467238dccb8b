import numpy as np
import pytest

from qmconv import sim
from oracles import circuit_unitary, controlled_full, expectation_dense, random_state

RT2 = 1.0 / np.sqrt(2.0)


# -- state construction -------------------------------------------------------

def test_new_statevector_basis_state():
    sv = sim.new_statevector(1)
    np.testing.assert_array_equal(sv.amplitudes, [1, 0])
    sv = sim.new_statevector(2)
    np.testing.assert_array_equal(sv.amplitudes, [1, 0, 0, 0])


def test_new_statevector_co_width():
    # 2x2 filter plus one ancilla needs F^2 + 1 = 5 qubits
    sv = sim.new_statevector(5)
    assert sv.amplitudes.shape == (32,)
    assert sv.amplitudes[0] == 1.0 + 0.0j


@pytest.mark.parametrize("bad", [0, -1, 21, 64])
def test_new_statevector_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        sim.new_statevector(bad)


def test_qubit0_is_least_significant_bit():
    # the package-wide index convention, asserted once
    sv = sim.apply_gate(sim.new_statevector(2), sim.gate_xpow(1.0, target=0))
    assert abs(sv.amplitudes[1]) == pytest.approx(1.0, abs=1e-12)
    sv = sim.apply_gate(sim.new_statevector(2), sim.gate_xpow(1.0, target=1))
    assert abs(sv.amplitudes[2]) == pytest.approx(1.0, abs=1e-12)


# -- gate matrices ------------------------------------------------------------

def test_rx_zero_is_identity():
    np.testing.assert_allclose(sim.rx_matrix(0.0), np.eye(2), atol=1e-15)


def test_rx_pi_flips_with_phase():
    sv = sim.apply_gate(sim.new_statevector(1), sim.gate_rx(np.pi, 0))
    np.testing.assert_allclose(sv.amplitudes, [0, -1j], atol=1e-12)


def test_rx_half_pi_matches_matrix_formula():
    # oracle: evaluate the standard Rx matrix numerically at theta = pi/2
    theta = np.pi / 2
    expected = np.array([np.cos(theta / 2), -1j * np.sin(theta / 2)])
    sv = sim.apply_gate(sim.new_statevector(1), sim.gate_rx(theta, 0))
    np.testing.assert_allclose(sv.amplitudes, expected, atol=1e-12)
    np.testing.assert_allclose(np.abs(sv.amplitudes), [RT2, RT2], atol=1e-12)


def test_hadamard_action():
    sv = sim.apply_gate(sim.new_statevector(1), sim.gate_h(0))
    np.testing.assert_allclose(sv.amplitudes, [RT2, RT2], atol=1e-12)
    one = sim.apply_gate(sim.new_statevector(1), sim.gate_xpow(1.0, 0))
    sv = sim.apply_gate(one, sim.gate_h(0))
    np.testing.assert_allclose(np.abs(sv.amplitudes), [RT2, RT2], atol=1e-12)
    np.testing.assert_allclose(sv.amplitudes[0], -sv.amplitudes[1], atol=1e-12)


def test_hadamard_is_involution():
    sv = sim.new_statevector(1)
    back = sim.apply_gate(sim.apply_gate(sv, sim.gate_h(0)), sim.gate_h(0))
    np.testing.assert_allclose(back.amplitudes, [1, 0], atol=1e-12)


def test_phase_gate():
    np.testing.assert_allclose(sim.phase_matrix(0.0), np.eye(2), atol=1e-15)
    np.testing.assert_allclose(
        sim.phase_matrix(np.pi), np.diag([1, -1]), atol=1e-12
    )


def test_controlled_phase_on_11():
    theta = 0.7343
    sv = sim.new_statevector(2)
    for q in (0, 1):
        sv = sim.apply_gate(sv, sim.gate_xpow(1.0, q))
    sv = sim.apply_gate(sv, sim.gate_phase(theta, target=0, control=1))
    np.testing.assert_allclose(sv.amplitudes[3], np.exp(1j * theta), atol=1e-12)


def test_xpow_endpoints():
    np.testing.assert_allclose(sim.xpow_matrix(0.0), np.eye(2), atol=1e-15)
    np.testing.assert_allclose(
        sim.xpow_matrix(1.0), np.array([[0, 1], [1, 0]]), atol=1e-12
    )


def test_xpow_half():
    m = sim.xpow_matrix(0.5)
    np.testing.assert_allclose(np.abs(m), np.full((2, 2), RT2), atol=1e-12)
    np.testing.assert_allclose(m.conj().T @ m, np.eye(2), atol=1e-12)


def test_constructed_gates_are_unitary():
    rng = np.random.default_rng(11)
    for theta in rng.uniform(-8, 8, size=200):
        for mat in (
            sim.rx_matrix(theta),
            sim.rz_matrix(theta),
            sim.phase_matrix(theta),
            sim.xpow_matrix(theta),
        ):
            np.testing.assert_allclose(mat.conj().T @ mat, np.eye(2), atol=1e-12)


def test_gateop_rejects_non_unitary():
    with pytest.raises(ValueError):
        sim.GateOp(np.array([[1.0, 0.0], [1.0, 1.0]]), target=0)


def test_gateop_rejects_control_equal_target():
    with pytest.raises(ValueError):
        sim.GateOp(sim.h_matrix(), target=1, control=1)


# -- derivative matrices ------------------------------------------------------

@pytest.mark.parametrize(
    "mat_fn,deriv_fn",
    [
        (sim.rx_matrix, sim.rx_deriv),
        (sim.rz_matrix, sim.rz_deriv),
        (sim.phase_matrix, sim.phase_deriv),
        (sim.xpow_matrix, sim.xpow_deriv),
    ],
)
def test_gate_derivatives_match_finite_differences(mat_fn, deriv_fn):
    h = 1e-6
    for theta in (-2.3, -0.4, 0.0, 0.9, 3.1):
        fd = (mat_fn(theta + h) - mat_fn(theta - h)) / (2 * h)
        np.testing.assert_allclose(deriv_fn(theta), fd, atol=1e-8)


# -- gate application ---------------------------------------------------------

def test_controlled_gate_inactive_when_control_zero():
    cnot = sim.gate_xpow(1.0, target=1, control=0)
    sv = sim.apply_gate(sim.new_statevector(2), cnot)
    np.testing.assert_allclose(sv.amplitudes, [1, 0, 0, 0], atol=1e-15)


def test_apply_gate_rejects_bad_indices():
    sv = sim.new_statevector(2)
    with pytest.raises(ValueError):
        sim.apply_gate(sv, sim.gate_h(2))
    with pytest.raises(ValueError):
        sim.apply_gate(sv, sim.gate_phase(0.3, target=0, control=5))


def test_apply_gate_preserves_norm_on_random_sequences():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(2, 7))
        sv = sim.Statevector(n, random_state(n, rng))
        for _ in range(8):
            theta = float(rng.uniform(-np.pi, np.pi))
            kind = int(rng.integers(0, 5))
            target = int(rng.integers(0, n))
            control = None
            if rng.random() < 0.4:
                control = int(rng.integers(0, n - 1))
                if control >= target:
                    control += 1
            if kind == 0:
                g = sim.gate_rx(theta, target, control)
            elif kind == 1:
                g = sim.gate_rz(theta, target, control)
            elif kind == 2:
                g = sim.gate_phase(theta, target, control)
            elif kind == 3:
                g = sim.gate_xpow(theta / np.pi, target, control)
            else:
                g = sim.gate_h(target) if control is None else sim.gate_rx(theta, target, control)
            sv = sim.apply_gate(sv, g)
        assert abs(sv.norm_sq() - 1.0) < 1e-10


def test_controlled_apply_matches_dense_projector_oracle():
    # controlled application == |0><0| (x) I + |1><1| (x) U built densely
    rng = np.random.default_rng(21)
    for _ in range(60):
        n = int(rng.integers(2, 5))
        amps = random_state(n, rng)
        theta = float(rng.uniform(-np.pi, np.pi))
        target = int(rng.integers(0, n))
        control = int(rng.integers(0, n - 1))
        if control >= target:
            control += 1
        g = sim.gate_xpow(theta, target, control)
        got = sim.apply_gate(sim.Statevector(n, amps.copy()), g)
        want = controlled_full(n, control, target, g.matrix) @ amps
        np.testing.assert_allclose(got.amplitudes, want, atol=1e-12)


def test_uncontrolled_apply_matches_dense_oracle():
    rng = np.random.default_rng(22)
    for _ in range(40):
        n = int(rng.integers(1, 5))
        amps = random_state(n, rng)
        gates = []
        sv = sim.Statevector(n, amps.copy())
        for _ in range(5):
            theta = float(rng.uniform(-np.pi, np.pi))
            target = int(rng.integers(0, n))
            g = sim.gate_rx(theta, target)
            gates.append(g)
            sv = sim.apply_gate(sv, g)
        want = circuit_unitary(n, gates) @ amps
        np.testing.assert_allclose(sv.amplitudes, want, atol=1e-12)


# -- expectation values -------------------------------------------------------

def test_expectation_z_basis_states():
    assert sim.expectation_z(sim.new_statevector(1), 0) == pytest.approx(1.0)
    one = sim.apply_gate(sim.new_statevector(1), sim.gate_xpow(1.0, 0))
    assert sim.expectation_z(one, 0) == pytest.approx(-1.0)


def test_expectation_z_equal_superposition():
    plus = sim.apply_gate(sim.new_statevector(1), sim.gate_h(0))
    assert abs(sim.expectation_z(plus, 0)) < 1e-12


def test_expectation_hadamard_basis_plus_minus_zero():
    plus = sim.apply_gate(sim.new_statevector(1), sim.gate_h(0))
    assert sim.expectation_hadamard_basis(plus, 0) == pytest.approx(1.0)
    one = sim.apply_gate(sim.new_statevector(1), sim.gate_xpow(1.0, 0))
    minus = sim.apply_gate(one, sim.gate_h(0))
    assert sim.expectation_hadamard_basis(minus, 0) == pytest.approx(-1.0)
    assert abs(sim.expectation_hadamard_basis(sim.new_statevector(1), 0)) < 1e-12


def test_expectation_hadamard_basis_equals_dense_pauli_x():
    rng = np.random.default_rng(33)
    for _ in range(50):
        n = int(rng.integers(1, 5))
        amps = random_state(n, rng)
        q = int(rng.integers(0, n))
        got = sim.expectation_hadamard_basis(sim.Statevector(n, amps.copy()), q)
        want = expectation_dense(amps, n, q, "X")
        assert got == pytest.approx(want, abs=1e-10)


def test_expectations_bounded():
    rng = np.random.default_rng(44)
    for _ in range(200):
        n = int(rng.integers(1, 6))
        sv = sim.Statevector(n, random_state(n, rng))
        q = int(rng.integers(0, n))
        assert -1 - 1e-12 <= sim.expectation_z(sv, q) <= 1 + 1e-12
        assert -1 - 1e-12 <= sim.expectation_hadamard_basis(sv, q) <= 1 + 1e-12
