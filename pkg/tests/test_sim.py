import dataclasses
import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pulse_efficient.backends import QubitProperties, coupled_backend
from pulse_efficient.pulse import Schedule, TimedGate, schedule_circuit
from pulse_efficient.qcore import Circuit, circuit_unitary, g, gate_unitary
from pulse_efficient.sim import (
    MAX_DENSITY_QUBITS,
    SimulationError,
    ThermalChannel,
    apply_confusion,
    apply_kraus,
    apply_thermal,
    marginal,
    measure_probs,
    probabilities,
    pure_density,
    sample,
    simulate_ideal,
    simulate_noisy,
    zero_state,
)
from pulse_efficient.transpile import cnot_pipeline, pulse_efficient_circuit

from helpers import haar_unitary
from test_transpile import random_motif_circuit


def full_backend(n, t1=(100.0, 70.0, 40.0, 90.0), t2=(80.0, 120.0, 30.0, 50.0)):
    b = coupled_backend(f"full-{n}", n, list(itertools.combinations(range(n), 2)))
    return dataclasses.replace(b, qubits=[QubitProperties(t1[q % 4], t2[q % 4]) for q in range(n)])


def dense_embed(u, qubits, n):
    """kron(u, 1) with axes permuted so the gate acts on ``qubits`` (q0 most significant)."""
    k = len(qubits)
    rest = [q for q in range(n) if q not in qubits]
    order = list(qubits) + rest
    big = np.kron(u, np.eye(2 ** (n - k))).reshape([2] * (2 * n))
    inv = np.argsort(order)
    big = big.transpose(list(inv) + [n + i for i in inv])
    return big.reshape(2**n, 2**n)


def reference_noisy(sched, backend):
    """Eager dense reference: unitary, then Kraus relaxation of every qubit over each gap and gate."""
    n = sched.num_qubits
    rho = pure_density(zero_state(n))
    clock = [0] * n

    def relax(q, samples):
        if samples:
            t1, t2 = backend.t1_t2(q)
            return apply_kraus(rho, ThermalChannel(samples * sched.dt_ns, t1, t2).kraus(), [q])
        return rho

    for tg in sched.timed:
        for q in tg.gate.qubits:
            rho = relax(q, tg.start - clock[q])
        u = dense_embed(gate_unitary(tg.gate), tg.gate.qubits, n)
        rho = u @ rho @ u.conj().T
        for q in tg.gate.qubits:
            rho = relax(q, tg.duration)
            clock[q] = tg.stop
    for q in range(n):
        rho = relax(q, sched.total_duration - clock[q])
    return rho


class TestIdeal:
    @given(st.integers(0, 2**31))
    def test_matches_unitary(self, seed):
        c = random_motif_circuit(np.random.default_rng(seed), 3, length=4)
        assert np.allclose(simulate_ideal(c), circuit_unitary(c)[:, 0], atol=1e-12)

    def test_binding(self):
        c = Circuit(1, (g("sx", 0), g("rz", 0, params=["a"]), g("sx", 0)))
        psi = simulate_ideal(c, {"a": math.pi})
        assert abs(psi[0]) ** 2 == pytest.approx(1.0)


class TestChannel:
    @given(st.floats(0, 5e5), st.floats(1, 300), st.floats(0.01, 1.0))
    def test_kraus_trace_preserving(self, t_ns, t1, t2_frac):
        ch = ThermalChannel(t_ns, t1, 2 * t1 * t2_frac)
        total = sum(k.conj().T @ k for k in ch.kraus())
        assert np.allclose(total, np.eye(2), atol=1e-12)

    @given(st.integers(0, 2**31), st.floats(0, 2e5), st.integers(0, 2))
    def test_in_place_matches_kraus(self, seed, t_ns, q):
        rng = np.random.default_rng(seed)
        psi = haar_unitary(8, rng)[:, 0]
        rho = pure_density(psi)
        ch = ThermalChannel(t_ns, 50.0, 60.0)
        assert np.allclose(apply_thermal(rho, ch, q), apply_kraus(rho, ch.kraus(), [q]), atol=1e-12)

    def test_t2_bound(self):
        with pytest.raises(SimulationError):
            ThermalChannel(10, 10.0, 30.0)

    def test_decay_rates(self):
        ch = ThermalChannel(1000.0, 50.0, 40.0)
        rho = apply_thermal(np.full((2, 2), 0.5, dtype=complex), ch, 0)
        assert rho[1, 1].real == pytest.approx(0.5 * math.exp(-1 / 50))
        assert abs(rho[0, 1]) == pytest.approx(0.5 * math.exp(-1 / 40))


class TestNoisy:
    @given(st.integers(0, 2**31), st.sampled_from(["asap", "alap"]), st.booleans())
    def test_matches_reference(self, seed, method, pe):
        c = random_motif_circuit(np.random.default_rng(seed), 3, length=3)
        lowered = pulse_efficient_circuit(c) if pe else cnot_pipeline(c)
        b = full_backend(3)
        s = schedule_circuit(lowered, b, method=method)
        assert np.allclose(simulate_noisy(s, b), reference_noisy(s, b), atol=1e-10)

    def test_wide_register_matches_reference(self):
        # exercises the matmul branch and the non-adjacent fallback
        rng = np.random.default_rng(3)
        gates = []
        for _ in range(6):
            a, b_ = (int(x) for x in rng.choice(7, 2, replace=False))
            gates += [g("cx", a, b_), g("rz", b_, params=[float(rng.uniform(-3, 3))]), g("sx", a)]
        b = full_backend(7)
        s = schedule_circuit(Circuit(7, tuple(gates)), b)
        assert np.allclose(simulate_noisy(s, b), reference_noisy(s, b), atol=1e-10)

    def test_infinite_coherence_is_ideal(self):
        c = cnot_pipeline(random_motif_circuit(np.random.default_rng(1), 3, length=4))
        b = full_backend(3, t1=(1e15,) * 4, t2=(1e15,) * 4)
        rho = simulate_noisy(schedule_circuit(c, b), b)
        psi = circuit_unitary(c)[:, 0]
        ev = np.linalg.eigvalsh(rho - pure_density(psi))
        assert 0.5 * np.abs(ev).sum() < 1e-9

    @given(st.integers(0, 2**31))
    def test_trace_preserved(self, seed):
        c = cnot_pipeline(random_motif_circuit(np.random.default_rng(seed), 3, length=3))
        b = full_backend(3)
        rho = simulate_noisy(schedule_circuit(c, b), b)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-9)
        assert np.allclose(rho, rho.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(rho).min() > -1e-10

    def test_t1_closed_form(self):
        b = full_backend(2)
        c = Circuit(2, (g("x", 0),) + (g("sx", 1),) * 8)
        s = schedule_circuit(c, b)
        p1 = measure_probs(simulate_noisy(s, b), [0]).get("1", 0.0)
        assert p1 == pytest.approx(math.exp(-s.total_duration_ns / (1e3 * b.t1_t2(0)[0])), rel=1e-12)

    def test_ramsey_closed_form(self):
        b = full_backend(2)
        c = Circuit(2, (g("sx", 0),) + (g("sx", 1),) * 6)
        s = schedule_circuit(c, b)
        rho = simulate_noisy(s, b)
        r0 = np.einsum("iaja->ij", rho.reshape(2, 2, 2, 2))
        assert abs(r0[0, 1]) == pytest.approx(0.5 * math.exp(-s.total_duration_ns / (1e3 * b.t1_t2(0)[1])), rel=1e-12)

    def test_shorter_idle_not_worse(self):
        b = full_backend(2)
        fids = []
        for k in range(0, 12, 2):
            # sx sx = x; k idle pulses on the other wire stretch the schedule
            c = Circuit(2, (g("sx", 0), g("sx", 0), g("sx", 0), g("sx", 0)) + (g("x", 1), g("x", 1)) * (k // 2))
            s = schedule_circuit(c, b)
            rho = simulate_noisy(s, b)
            fids.append(rho[0, 0].real)
        assert all(a >= b_ - 1e-15 for a, b_ in zip(fids, fids[1:]))

    def test_qubit_props_mapping(self):
        b = full_backend(2)
        s = schedule_circuit(Circuit(1, (g("x", 0),)), b)
        p_default = simulate_noisy(s, b)[1, 1].real
        p_mapped = simulate_noisy(s, b, qubit_props=[1])[1, 1].real
        assert p_default == pytest.approx(math.exp(-s.total_duration_ns / 1e5))
        assert p_mapped == pytest.approx(math.exp(-s.total_duration_ns / 7e4))

    def test_size_limit(self):
        n = MAX_DENSITY_QUBITS + 1
        with pytest.raises(SimulationError):
            simulate_noisy(Schedule(n, 0.2, 16), full_backend(2))

    def test_rz_commutes_with_lazy_relaxation(self):
        b = full_backend(2)
        c = Circuit(2, (g("sx", 0), g("x", 1), g("rz", 0, params=[0.7]), g("x", 1), g("rz", 0, params=[0.2]), g("sx", 0)))
        s = schedule_circuit(c, b)
        assert np.allclose(simulate_noisy(s, b), reference_noisy(s, b), atol=1e-12)


class TestMeasurement:
    def test_ordering_first_qubit_leftmost(self):
        psi = simulate_ideal(Circuit(3, (g("x", 0),)))
        assert measure_probs(psi) == {"100": pytest.approx(1.0)}
        assert measure_probs(psi, [2, 0]) == {"01": pytest.approx(1.0)}

    def test_marginal_reorders(self):
        p = np.arange(8, dtype=float) / 28
        m = marginal(p, [1, 0], 3)
        t = p.reshape(2, 2, 2).sum(axis=2)
        assert np.allclose(m, t.T.reshape(-1))

    def test_density_and_vector_agree(self):
        psi = haar_unitary(8, np.random.default_rng(0))[:, 0]
        assert np.allclose(probabilities(psi), probabilities(pure_density(psi)))

    def test_confusion(self):
        m = np.array([[0.9, 0.2], [0.1, 0.8]])
        out = apply_confusion({"0": 1.0}, [m])
        assert out == {"0": pytest.approx(0.9), "1": pytest.approx(0.1)}

    def test_sampling_deterministic(self):
        probs = {"00": 0.3, "01": 0.2, "11": 0.5}
        a = sample(probs, 1000, seed=11)
        assert a == sample(probs, 1000, seed=11)
        assert sum(a.values()) == 1000
        assert set(a) <= set(probs)
