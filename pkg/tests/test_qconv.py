import numpy as np
import pytest

from qmconv import qconv, sim
from qmconv.circuits import run_reference, spec_gate
from oracles import circuit_unitary, expectation_dense


def _random_params(names, rng):
    return {name: float(rng.uniform(-np.pi, np.pi)) for name in names}


def _zero_params(names):
    return {name: 0.0 for name in names}


def dense_circuit_value(mc, params, inputs):
    """Brute-force oracle: full 2^n x 2^n unitary product, then <Z_mq>."""
    gates = [spec_gate(s, params, inputs) for s in mc.gates]
    u = circuit_unitary(mc.num_qubits, gates)
    psi = u[:, 0]
    return expectation_dense(psi, mc.num_qubits, mc.measure_qubit, "Z")


def _wev_params(cfg, names, channels, rng=None):
    params = _random_params(names, rng) if rng is not None else _zero_params(names)
    for c in range(channels):
        params[f"wev.w{c}"] = float(rng.uniform(-1, 1)) if rng is not None else 1.0
        params[f"wev.b{c}"] = float(rng.uniform(-1, 1)) if rng is not None else 0.0
    return params


# -- config and widths ---------------------------------------------------------

def test_config_rejects_invalid_values():
    with pytest.raises(ValueError):
        qconv.ConvConfig(method="nope")
    with pytest.raises(ValueError):
        qconv.ConvConfig(method="co", stride=0)
    with pytest.raises(ValueError):
        qconv.ConvConfig(method="co", filter_size=0)
    with pytest.raises(ValueError):
        qconv.ConvConfig(method="pco", registers=0)
    with pytest.raises(ValueError):
        qconv.ConvConfig(method="co", ansatz="u1", filter_size=1)


@pytest.mark.parametrize(
    "method,width",
    [("co", 5), ("pco", 13), ("pcot", 15), ("wev", 4), ("control", 4)],
)
def test_qubit_widths_match_published_table(method, width):
    # holds for both the RGB and the 12-channel configurations (width is
    # independent of C): F=2, R=3, A=3
    cfg = qconv.ConvConfig(method=method, filter_size=2, registers=3, ancillas=3)
    assert qconv.qubit_width(cfg) == width


def test_circuit_width_matches_formula_for_built_circuits():
    for method in ("co", "pco", "pcot"):
        cfg = qconv.ConvConfig(method=method, filter_size=2, registers=2, ancillas=2)
        mc = qconv.build_method_circuit(cfg, channels=3)
        assert mc.num_qubits == qconv.qubit_width(cfg)


# -- windows -------------------------------------------------------------------

def test_extract_window_ordering():
    image = np.zeros((4, 4, 1))
    for l in range(4):
        for w in range(4):
            image[l, w, 0] = 10 * l + w
    np.testing.assert_array_equal(
        qconv.extract_window(image, 0, 0, 0, 2), [0, 1, 10, 11]
    )
    np.testing.assert_array_equal(
        qconv.extract_window(image, 1, 2, 0, 2), [12, 13, 22, 23]
    )


def test_extract_window_constant_and_single():
    image = np.full((3, 3, 2), 0.25)
    np.testing.assert_array_equal(
        qconv.extract_window(image, 0, 1, 1, 2), [0.25] * 4
    )
    assert qconv.extract_window(image, 2, 2, 0, 1) == [0.25]


def test_extract_window_bounds():
    image = np.zeros((3, 3, 1))
    with pytest.raises(ValueError):
        qconv.extract_window(image, 2, 0, 0, 2)
    with pytest.raises(ValueError):
        qconv.extract_window(image, 0, 0, 1, 2)


# -- channel encoding ------------------------------------------------------------

def test_encode_zero_window_is_identity():
    state = sim.new_statevector(4)
    out = qconv.encode_channel(state, np.zeros(4), range(4))
    np.testing.assert_allclose(out.amplitudes, state.amplitudes, atol=1e-15)


def test_encode_ones_reaches_1111():
    # four Rx(pi) rotations: (-i)^4 = +1 on |1111>
    out = qconv.encode_channel(sim.new_statevector(4), np.ones(4), range(4))
    np.testing.assert_allclose(out.amplitudes[15], 1.0, atol=1e-12)
    np.testing.assert_allclose(np.abs(out.amplitudes[:15]), 0.0, atol=1e-12)


def test_encode_twice_adds_rotations():
    rng = np.random.default_rng(3)
    a, b = rng.uniform(0, 1, size=(2, 4))
    two = qconv.encode_channel(
        qconv.encode_channel(sim.new_statevector(4), a, range(4)), b, range(4)
    )
    once = qconv.encode_channel(sim.new_statevector(4), a + b, range(4))
    np.testing.assert_allclose(two.amplitudes, once.amplitudes, atol=1e-12)


# -- forward evaluators: trivial circuits ----------------------------------------

def test_co_identity_circuit_outputs_plus_one():
    cfg = qconv.ConvConfig(method="co", filter_size=2, ansatz="u2")
    names = qconv.method_param_names(cfg, 3)
    out = qconv.co_forward(np.zeros((3, 4)), _zero_params(names), cfg)
    assert out == pytest.approx(1.0, abs=1e-12)


def test_co_rgb_circuit_has_five_qubits_three_couplings():
    cfg = qconv.ConvConfig(method="co", filter_size=2, ansatz="u2")
    mc = qconv.build_method_circuit(cfg, channels=3)
    assert mc.num_qubits == 5
    couplings = [g for g in mc.gates if g.kind == "phase" and g.control == 4]
    assert len(couplings) == 3


def test_co_rejects_bad_windows():
    cfg = qconv.ConvConfig(method="co", filter_size=2, ansatz="u2")
    names = qconv.method_param_names(cfg, 1)
    with pytest.raises(ValueError):
        qconv.co_forward(np.zeros((0, 4)), _zero_params(names), cfg)
    with pytest.raises(ValueError):
        qconv.co_forward(np.zeros((2, 3)), _zero_params(names), cfg)


def test_pco_six_channel_structure():
    cfg = qconv.ConvConfig(method="pco", filter_size=2, registers=3, ansatz="u2")
    mc = qconv.build_method_circuit(cfg, channels=6)
    assert mc.num_qubits == 13
    couplings = [g for g in mc.gates if g.kind == "phase" and g.control == 12]
    assert len(couplings) == 6
    # two groups: encoding gates target register qubits twice over
    encodes = [g for g in mc.gates if g.input_slot is not None]
    assert len(encodes) == 24


def test_pco_identity_circuit():
    cfg = qconv.ConvConfig(method="pco", filter_size=2, registers=3, ansatz="u2")
    names = qconv.method_param_names(cfg, 6)
    out = qconv.pco_forward(np.zeros((6, 4)), _zero_params(names), cfg)
    assert out == pytest.approx(1.0, abs=1e-12)


def test_pcot_width_and_identity():
    cfg = qconv.ConvConfig(method="pcot", filter_size=2, registers=3, ancillas=3,
                           ansatz="u2")
    mc = qconv.build_method_circuit(cfg, channels=6)
    assert mc.num_qubits == 15
    names = qconv.method_param_names(cfg, 6)
    out = qconv.pcot_forward(np.zeros((6, 4)), _zero_params(names), cfg)
    assert out == pytest.approx(1.0, abs=1e-12)


def test_control_identity_sums_channels():
    cfg = qconv.ConvConfig(method="control", filter_size=2, ansatz="u2")
    names = qconv.method_param_names(cfg, 3)
    out = qconv.control_forward(np.zeros((3, 4)), _zero_params(names), cfg)
    assert out == pytest.approx(3.0, abs=1e-12)


def test_control_single_channel_bounded():
    cfg = qconv.ConvConfig(method="control", filter_size=2, ansatz="u1")
    rng = np.random.default_rng(8)
    names = qconv.method_param_names(cfg, 1)
    for _ in range(10):
        out = qconv.control_forward(
            rng.uniform(0, 1, size=(1, 4)), _random_params(names, rng), cfg
        )
        assert -1 - 1e-12 <= out <= 1 + 1e-12


def test_wev_constant_bias():
    cfg = qconv.ConvConfig(method="wev", filter_size=2, ansatz="u2",
                           wev_per_position=False)
    names = qconv.method_param_names(cfg, 3)
    params = _zero_params(names)
    for c in range(3):
        params[f"wev.w{c}"] = 0.0
        params[f"wev.b{c}"] = 0.5
    rng = np.random.default_rng(9)
    out = qconv.wev_forward(rng.uniform(0, 1, size=(3, 4)), params, cfg)
    assert out == pytest.approx(1.5, abs=1e-12)


def test_wev_single_channel_weight_two():
    cfg = qconv.ConvConfig(method="wev", filter_size=2, ansatz="u2",
                           wev_per_position=False)
    names = qconv.method_param_names(cfg, 1)
    params = _zero_params(names)
    params["wev.w0"], params["wev.b0"] = 2.0, 0.0
    out = qconv.wev_forward(np.zeros((1, 4)), params, cfg)
    assert out == pytest.approx(2.0, abs=1e-12)


# -- structural identities --------------------------------------------------------

@pytest.mark.parametrize("shared", [True, False])
def test_wev_unit_weights_equals_control(shared):
    # the identity requires matching filter structure on both sides
    rng = np.random.default_rng(10)
    wev_cfg = qconv.ConvConfig(method="wev", filter_size=2, ansatz="u1",
                               shared_filter=shared, wev_per_position=False)
    ctl_cfg = qconv.ConvConfig(method="control", filter_size=2, ansatz="u1",
                               shared_filter=shared)
    names = qconv.method_param_names(wev_cfg, 3)
    assert names == qconv.method_param_names(ctl_cfg, 3)
    for _ in range(100):
        params = _random_params(names, rng)
        for c in range(3):
            params[f"wev.w{c}"] = 1.0
            params[f"wev.b{c}"] = 0.0
        windows = rng.uniform(0, 1, size=(3, 4))
        assert qconv.wev_forward(windows, params, wev_cfg) == qconv.control_forward(
            windows, params, ctl_cfg
        )


def test_control_defaults_to_shared_filter():
    assert qconv.ConvConfig(method="control").shared_filter is True
    for method in ("co", "pco", "pcot", "wev"):
        assert qconv.ConvConfig(method=method).shared_filter is False


def test_pco_single_register_equals_co():
    rng = np.random.default_rng(11)
    co_cfg = qconv.ConvConfig(method="co", filter_size=2, ansatz="u2")
    pco_cfg = qconv.ConvConfig(method="pco", filter_size=2, registers=1, ansatz="u2")
    names = qconv.method_param_names(co_cfg, 3)
    assert qconv.method_param_names(pco_cfg, 3) == names
    for _ in range(100):
        params = _random_params(names, rng)
        windows = rng.uniform(0, 1, size=(3, 4))
        a = qconv.co_forward(windows, params, co_cfg)
        b = qconv.pco_forward(windows, params, pco_cfg)
        assert a == pytest.approx(b, abs=1e-12)


def test_pcot_single_ancilla_equals_pco():
    rng = np.random.default_rng(12)
    pco_cfg = qconv.ConvConfig(method="pco", filter_size=1, registers=2, ansatz="u2")
    pcot_cfg = qconv.ConvConfig(method="pcot", filter_size=1, registers=2, ancillas=1,
                                ansatz="u2")
    names = qconv.method_param_names(pco_cfg, 4)
    assert qconv.method_param_names(pcot_cfg, 4) == names
    for _ in range(50):
        params = _random_params(names, rng)
        windows = rng.uniform(0, 1, size=(4, 1))
        a = qconv.pco_forward(windows, params, pco_cfg)
        b = qconv.pcot_forward(windows, params, pcot_cfg)
        assert a == pytest.approx(b, abs=1e-12)


def test_channel_permutation_sensitivity():
    # CO depends on channel order; the shared-filter control sum never does
    rng = np.random.default_rng(13)
    co_cfg = qconv.ConvConfig(method="co", filter_size=2, ansatz="u2")
    ctl_cfg = qconv.ConvConfig(method="control", filter_size=2, ansatz="u2")
    co_names = qconv.method_param_names(co_cfg, 3)
    ctl_names = qconv.method_param_names(ctl_cfg, 3)
    changed = 0
    for _ in range(20):
        co_params = _random_params(co_names, rng)
        ctl_params = _random_params(ctl_names, rng)
        windows = rng.uniform(0, 1, size=(3, 4))
        perm = windows[[1, 2, 0]]
        if abs(qconv.co_forward(windows, co_params, co_cfg)
               - qconv.co_forward(perm, co_params, co_cfg)) > 1e-6:
            changed += 1
        a = qconv.control_forward(windows, ctl_params, ctl_cfg)
        b = qconv.control_forward(perm, ctl_params, ctl_cfg)
        assert a == pytest.approx(b, abs=1e-12)
    assert changed >= 15


# -- dense full-unitary oracle -----------------------------------------------------

@pytest.mark.parametrize(
    "method,ansatz,f,channels,kwargs",
    [
        ("co", "u2", 1, 3, {}),
        ("co", "u1", 2, 3, {}),
        ("co", "u2", 2, 2, {}),
        ("co", "u2", 2, 2, {"cp_full_fanout": True}),
        ("pco", "u2", 1, 4, {"registers": 2}),
        ("pco", "u2", 1, 3, {"registers": 3}),
        ("pcot", "u2", 1, 4, {"registers": 2, "ancillas": 2}),
        ("pcot", "u2", 1, 5, {"registers": 3, "ancillas": 3}),
    ],
)
def test_forward_matches_dense_oracle(method, ansatz, f, channels, kwargs):
    rng = np.random.default_rng(hash((method, ansatz, f, channels)) % 2**32)
    cfg = qconv.ConvConfig(method=method, filter_size=f, ansatz=ansatz, **kwargs)
    mc = qconv.build_method_circuit(cfg, channels)
    assert mc.num_qubits <= 6
    for _ in range(15):
        params = _random_params(mc.param_names, rng)
        windows = rng.uniform(0, 1, size=(channels, f * f))
        got = qconv.method_forward(windows, params, cfg)
        want = dense_circuit_value(mc, params, windows.reshape(-1))
        assert got == pytest.approx(want, abs=1e-10)


@pytest.mark.parametrize("method", ["wev", "control"])
def test_per_channel_methods_match_dense_oracle(method):
    rng = np.random.default_rng(99)
    cfg = qconv.ConvConfig(method=method, filter_size=2, ansatz="u1",
                           wev_per_position=False)
    names = qconv.method_param_names(cfg, 3)
    for _ in range(15):
        params = _wev_params(cfg, names, 3, rng)
        windows = rng.uniform(0, 1, size=(3, 4))
        per_channel = [
            dense_circuit_value(qconv.build_channel_circuit(cfg, c), params, wc)
            for c, wc in enumerate(windows)
        ]
        if method == "control":
            want = sum(per_channel)
            got = qconv.control_forward(windows, params, cfg)
        else:
            want = sum(
                ev * params[f"wev.w{c}"] + params[f"wev.b{c}"]
                for c, ev in enumerate(per_channel)
            )
            got = qconv.wev_forward(windows, params, cfg)
        assert got == pytest.approx(want, abs=1e-10)


# -- sliding window ---------------------------------------------------------------

def test_conv2d_output_shapes():
    cfg = qconv.ConvConfig(method="control", filter_size=2, ansatz="u2")
    assert qconv.output_shape(cfg, 10, 10) == (9, 9)
    cfg2 = qconv.ConvConfig(method="control", filter_size=2, stride=2, ansatz="u2")
    assert qconv.output_shape(cfg2, 10, 10) == (5, 5)


def test_conv2d_constant_image_gives_constant_map():
    rng = np.random.default_rng(14)
    cfg = qconv.ConvConfig(method="co", filter_size=2, ansatz="u2")
    names = qconv.method_param_names(cfg, 2)
    params = _random_params(names, rng)
    image = np.full((5, 5, 2), 0.37)
    fmap = qconv.conv2d_quantum(image, params, cfg)
    assert fmap.shape == (4, 4)
    assert np.allclose(fmap, fmap[0, 0], atol=1e-12)


def test_conv2d_outputs_bounded():
    rng = np.random.default_rng(15)
    image = rng.uniform(0, 1, size=(4, 4, 3))
    for method, lo, hi in [("co", -1, 1), ("control", -3, 3)]:
        cfg = qconv.ConvConfig(method=method, filter_size=2, ansatz="u1")
        params = _random_params(qconv.method_param_names(cfg, 3), rng)
        fmap = qconv.conv2d_quantum(image, params, cfg)
        assert np.all(fmap >= lo - 1e-12) and np.all(fmap <= hi + 1e-12)
