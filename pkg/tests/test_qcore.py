import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from pulse_efficient.qcore import (
    CX,
    SWAP,
    Circuit,
    Gate,
    GateError,
    ParamExpr,
    X,
    Z,
    circuit_unitary,
    g,
    gate_unitary,
    phase_distance,
)

from helpers import haar_unitary

I2 = np.eye(2)
Y = np.array([[0, -1j], [1j, 0]])


def expm_gen(gen, theta):
    return scipy.linalg.expm(-0.5j * theta * gen)


class TestParamExpr:
    def test_parse_linear(self):
        e = ParamExpr.parse("2*gamma + 0.5")
        assert e.coefficient("gamma") == 2.0
        assert e.constant == 0.5

    def test_parse_pi_and_division(self):
        e = ParamExpr.parse("-pi/2 + beta/4")
        assert e.constant == pytest.approx(-math.pi / 2)
        assert e.coefficient("beta") == 0.25

    def test_nonlinear_rejected(self):
        with pytest.raises(GateError):
            ParamExpr.parse("gamma*beta")

    def test_str_roundtrip(self):
        e = ParamExpr.parse("-3*a + 2.5*b - 1")
        assert ParamExpr.parse(str(e)) == e

    def test_substitute_and_evaluate(self):
        e = ParamExpr.parse("2*x + 1").substitute({"x": ParamExpr.parse("y - 1")})
        assert e.evaluate({"y": 3.0}) == pytest.approx(5.0)

    def test_unbound_raises(self):
        with pytest.raises(GateError):
            ParamExpr.symbol("t").evaluate({})

    @given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10))
    def test_arithmetic_matches_floats(self, a, b, x):
        e = ParamExpr.symbol("x", a) + b
        assert (e * 2 - 1).evaluate({"x": x}) == pytest.approx(2 * (a * x + b) - 1, abs=1e-9)


class TestGate:
    def test_arity_checked(self):
        with pytest.raises(GateError):
            g("cx", 0)

    def test_param_count_checked(self):
        with pytest.raises(GateError):
            g("rz", 0)

    def test_repeated_qubit(self):
        with pytest.raises(GateError):
            g("cx", 1, 1)

    def test_unknown_gate(self):
        with pytest.raises(GateError):
            g("ccx", 0, 1)

    def test_json_roundtrip(self):
        gate = g("rzz", 2, 0, params=[ParamExpr.parse("2*gamma")])
        assert Gate.from_json(gate.to_json()) == gate


class TestUnitaries:
    def test_rz_matches_exponential(self):
        th = 0.37
        np.testing.assert_allclose(gate_unitary(g("rz", 0, params=[th])), expm_gen(Z, th), atol=1e-12)

    def test_rzx_z_on_first_qubit(self):
        th = -1.1
        np.testing.assert_allclose(gate_unitary(g("rzx", 0, 1, params=[th])), expm_gen(np.kron(Z, X), th), atol=1e-12)

    def test_rzz(self):
        th = 2.3
        np.testing.assert_allclose(gate_unitary(g("rzz", 0, 1, params=[th])), expm_gen(np.kron(Z, Z), th), atol=1e-12)

    def test_cx_first_qubit_controls(self):
        np.testing.assert_allclose(gate_unitary(g("cx", 0, 1)), CX)
        # qubit 0 is the most significant bit: |10> -> |11>
        u = circuit_unitary(Circuit(2, (g("cx", 0, 1),)))
        assert abs(u[3, 2]) == 1

    def test_reversed_cx_embedding(self):
        u = circuit_unitary(Circuit(2, (g("cx", 1, 0),)))
        np.testing.assert_allclose(u, SWAP @ CX @ SWAP)

    def test_sx_squares_to_x(self):
        sx = gate_unitary(g("sx", 0))
        np.testing.assert_allclose(sx @ sx, X, atol=1e-12)

    def test_phase_swap_at_zero_is_swap(self):
        np.testing.assert_allclose(gate_unitary(g("phase_swap", 0, 1, params=[0.0])), SWAP, atol=1e-12)

    def test_later_gates_multiply_on_left(self):
        c = Circuit(1, (g("h", 0), g("rz", 0, params=[0.4])))
        expected = gate_unitary(c.gates[1]) @ gate_unitary(c.gates[0])
        np.testing.assert_allclose(circuit_unitary(c), expected, atol=1e-12)

    def test_phase_distance_ignores_global_phase(self, rng):
        u = haar_unitary(4, rng)
        assert phase_distance(u, np.exp(0.7j) * u) < 1e-12
        assert phase_distance(u, haar_unitary(4, rng)) > 0.1


_ONE_Q = ["h", "sx", "x"]


@st.composite
def random_circuits(draw, n=3):
    gates = []
    for _ in range(draw(st.integers(1, 12))):
        kind = draw(st.sampled_from(["rz", "h", "sx", "x", "cx", "rzz", "rzx", "swap", "phase_swap"]))
        a, b = draw(st.permutations(range(n)))[:2]
        angle = draw(st.floats(-3, 3, allow_nan=False))
        if kind == "rz":
            gates.append(g(kind, a, params=[angle]))
        elif kind in _ONE_Q:
            gates.append(g(kind, a))
        elif kind in ("cx", "swap"):
            gates.append(g(kind, a, b))
        else:
            gates.append(g(kind, a, b, params=[angle]))
    return Circuit(n, tuple(gates))


class TestCircuit:
    @given(random_circuits())
    def test_inverse_composes_to_identity(self, c):
        u = circuit_unitary(c.compose(c.inverse()))
        assert phase_distance(u, np.eye(8)) < 1e-9

    @given(random_circuits())
    def test_json_roundtrip(self, c):
        assert Circuit.from_json(c.to_json()) == c

    def test_bind_and_parameters(self):
        c = Circuit(2, (g("rzz", 0, 1, params=[ParamExpr.parse("2*gamma")]), g("rz", 0, params=[ParamExpr.parse("beta")])))
        assert c.parameters == {"gamma", "beta"}
        b = c.bind({"gamma": 0.5, "beta": 1.0})
        assert not b.parameters
        assert b.gates[0].angle == 1.0

    def test_count_ops(self):
        c = Circuit(2, (g("cx", 0, 1), g("cx", 1, 0), g("x", 0)))
        assert c.count_ops() == {"cx": 2, "x": 1}

    def test_qubit_out_of_range(self):
        with pytest.raises(GateError):
            Circuit(2, (g("cx", 0, 2),))

    def test_unitary_size_cap(self):
        with pytest.raises(GateError):
            circuit_unitary(Circuit(11, ()))
