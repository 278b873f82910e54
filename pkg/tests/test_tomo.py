import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pulse_efficient.backends import builtin_backend
from pulse_efficient.qcore import Circuit, circuit_unitary, g
from pulse_efficient.sim import ThermalChannel, apply_kraus
from pulse_efficient.tomo import (
    NUM_QPT_CIRCUITS,
    TomographyError,
    average_gate_error,
    build_qpt_circuits,
    calibration_matrix,
    characterize,
    choi_of_channel,
    choi_of_unitary,
    coherence_limit_error,
    deviation_angle,
    mitigate_readout,
    nearest_psd,
    process_fidelity,
    reconstruct_choi,
    run_job,
    run_qpt,
    simplex_projection,
    unitary_channel,
)

from helpers import haar_su4

# high-precision (50 digit) evaluation of the coherence limit at 1478 ns, T1 = (102, 157) us, T2 = (34, 228) us
FROZEN_LIMIT_1478 = 0.02424055506302412631449886

RZZ = Circuit(2, (g("rzz", 0, 1, params=["theta"]),))
CNOT = Circuit(2, (g("cx", 0, 1),))


def rzz_family(x):
    return circuit_unitary(RZZ.bind({"theta": x}))


def su4_circuit(u):
    from pulse_efficient.kak import kak_decompose, synth_three_cnot

    return synth_three_cnot(kak_decompose(u))


class TestJob:
    def test_size(self):
        job = build_qpt_circuits(CNOT)
        assert len(job) == NUM_QPT_CIRCUITS == 148
        assert len(job.tomography_circuits) == 144
        assert [c.calibration for c in job.calibration_circuits] == ["00", "01", "10", "11"]

    def test_every_circuit_measures_both(self):
        for qc in build_qpt_circuits(CNOT).circuits:
            assert qc.circuit.count_ops()["measure"] == 2

    def test_two_qubit_only(self):
        with pytest.raises(TomographyError):
            build_qpt_circuits(Circuit(3, ()))

    def test_seed_required_for_shots(self):
        with pytest.raises(TomographyError):
            build_qpt_circuits(CNOT, shots=100)


class TestReconstruction:
    @pytest.mark.parametrize("seed", range(5))
    def test_noiseless_random_su4(self, seed):
        u = haar_su4(np.random.default_rng(seed))
        c = su4_circuit(u)
        res = run_qpt(c, unitary_channel(circuit_unitary(c)), circuit_unitary(c))
        assert res.fidelity >= 1 - 1e-10

    def test_choi_forms_agree(self):
        u = haar_su4(np.random.default_rng(9))
        assert np.allclose(choi_of_unitary(u), choi_of_channel(unitary_channel(u)), atol=1e-12)

    def test_recovers_noisy_channel(self):
        a = ThermalChannel(2000.0, 60.0, 40.0).kraus()
        b = ThermalChannel(2000.0, 90.0, 150.0).kraus()
        u = circuit_unitary(CNOT)

        def ch(rho):
            return apply_kraus(apply_kraus(u @ rho @ u.conj().T, a, [0]), b, [1])

        job = build_qpt_circuits(CNOT)
        choi = reconstruct_choi(job, run_job(job, ch))
        assert np.allclose(choi, choi_of_channel(ch), atol=1e-10)

    def test_missing_results(self):
        job = build_qpt_circuits(CNOT)
        res = run_job(job, unitary_channel(np.eye(4)))
        del res[3]
        with pytest.raises(TomographyError):
            reconstruct_choi(job, res)


class TestMitigation:
    def confusions(self):
        return builtin_backend("mumbai-q1q2").confusion_matrices([0, 1])

    def test_exact_inversion(self):
        u = circuit_unitary(CNOT)
        job = build_qpt_circuits(CNOT)
        res = run_job(job, unitary_channel(u), self.confusions())
        assert process_fidelity(reconstruct_choi(job, res), u) == pytest.approx(1.0, abs=1e-12)
        assert process_fidelity(reconstruct_choi(job, res, mitigate=False), u) < 0.95

    def test_calibration_matrix(self):
        job = build_qpt_circuits(CNOT)
        res = run_job(job, unitary_channel(np.eye(4)), self.confusions())
        cal = calibration_matrix(job, res)
        assert np.allclose(cal, np.kron(*self.confusions()))

    @given(st.lists(st.floats(0.01, 1), min_size=4, max_size=4))
    def test_round_trip(self, weights):
        p = np.array(weights) / sum(weights)
        cal = np.kron(*self.confusions())
        raw = {format(i, "02b"): float(x) for i, x in enumerate(cal @ p)}
        out = mitigate_readout(raw, cal)
        assert np.allclose([out[k] for k in sorted(out)], p, atol=1e-12)

    def test_singular_rejected(self):
        with pytest.raises(TomographyError):
            mitigate_readout({"00": 1.0}, np.ones((4, 4)) / 4)

    def test_shot_mode_deterministic(self):
        u = circuit_unitary(CNOT)
        a = run_qpt(CNOT, unitary_channel(u), u, self.confusions(), shots=2000, seed=4)
        b = run_qpt(CNOT, unitary_channel(u), u, self.confusions(), shots=2000, seed=4)
        assert a.fidelities == b.fidelities
        assert 0.95 < a.fidelity <= 1.0 + 1e-12
        assert np.linalg.eigvalsh(a.choi).min() > -1e-9


class TestCoherenceLimit:
    def test_limits(self):
        assert coherence_limit_error(0.0, 102, 157, 34, 228) == 0.0
        assert coherence_limit_error(math.inf, 102, 157, 34, 228) == 0.75

    def test_frozen_value(self):
        assert abs(coherence_limit_error(1478.0, 102, 157, 34, 228) - FROZEN_LIMIT_1478) < 1e-12

    @pytest.mark.parametrize("t", [100.0, 1478.0, 20000.0])
    def test_equals_idle_relaxation_error(self, t):
        a = ThermalChannel(t, 102, 34).kraus()
        b = ThermalChannel(t, 157, 228).kraus()
        choi = choi_of_channel(lambda r: apply_kraus(apply_kraus(r, a, [0]), b, [1]))
        err = average_gate_error(process_fidelity(choi, np.eye(4)))
        assert coherence_limit_error(t, 102, 157, 34, 228) == pytest.approx(err, abs=1e-13)

    def test_monotone(self):
        vals = [coherence_limit_error(t, 80, 60, 50, 70) for t in np.linspace(0, 1e6, 200)]
        assert all(a < b for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 0.75

    def test_validation(self):
        with pytest.raises(ValueError):
            coherence_limit_error(10, 10, 10, 30, 10)
        with pytest.raises(ValueError):
            coherence_limit_error(-1, 10, 10, 10, 10)

    def test_average_gate_error(self):
        assert average_gate_error(1.0) == 0.0
        assert average_gate_error(1 / 16) == pytest.approx(0.75)


class TestDeviation:
    @pytest.mark.parametrize("delta", [-0.05, 0.0, 0.02])
    def test_over_rotation(self, delta):
        theta = 0.8
        choi = choi_of_unitary(rzz_family(theta + delta))
        assert deviation_angle(choi, theta, rzz_family) == pytest.approx(-delta, abs=1e-4)

    def test_boundary(self):
        choi = choi_of_unitary(rzz_family(2.0))
        with pytest.raises(TomographyError):
            deviation_angle(choi, 0.5, rzz_family, half_width=0.3)


class TestCharacterize:
    def test_scaled_beats_cnot(self):
        b = builtin_backend("mumbai-q1q2")
        cn = characterize(RZZ, b, "cnot", theta=math.pi / 4)
        sc = characterize(RZZ, b, "scaled", theta=math.pi / 4)
        assert sc["durations"]["samples"] < cn["durations"]["samples"]
        assert sc["fidelity"] > cn["fidelity"]
        for r in (cn, sc):
            # coherence noise on an exact gate leaves no systematic angle error
            assert abs(r["delta_theta"]) < 1e-4
            assert r["coherence_limit"]["process_fidelity"] == pytest.approx(1 - 1.25 * r["coherence_limit"]["average_gate_error"])

    def test_requires_theta(self):
        with pytest.raises(TomographyError):
            characterize(RZZ, builtin_backend("mumbai-q1q2"))

    def test_unknown_variant(self):
        with pytest.raises(TomographyError):
            characterize(CNOT, builtin_backend("mumbai-q1q2"), "fast")

    def test_fixed_target(self):
        r = characterize(CNOT, builtin_backend("mumbai-q1q2"), "cnot")
        assert r["delta_theta"] is None
        assert 0.9 < r["fidelity"] < 1


class TestProjection:
    @given(st.lists(st.floats(-2, 2), min_size=2, max_size=16), st.floats(0.1, 5))
    def test_simplex(self, xs, total):
        x = np.array(xs)
        w = simplex_projection(x, total)
        assert w.min() >= 0
        assert w.sum() == pytest.approx(total)
        # no feasible point from a random draw is closer
        rng = np.random.default_rng(len(xs))
        for _ in range(20):
            y = rng.dirichlet(np.ones(len(x))) * total
            assert np.linalg.norm(x - w) <= np.linalg.norm(x - y) + 1e-9

    def test_feasible_point_is_fixed(self):
        x = np.array([0.5, 1.5, 2.0])
        assert np.allclose(simplex_projection(x, 4.0), x)

    @given(st.integers(0, 2**31))
    def test_nearest_psd(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        m = (a + a.conj().T) / 2
        p = nearest_psd(m, 3.0)
        assert np.linalg.eigvalsh(p).min() > -1e-12
        assert np.trace(p).real == pytest.approx(3.0)
        assert np.allclose(nearest_psd(p, 3.0), p, atol=1e-10)
