import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import erf

from pulse_efficient.backends import builtin_backend, builtin_names, coupled_backend
from pulse_efficient.pulse import (
    FlatTopPulse,
    Schedule,
    ScheduleError,
    build_rzx_schedule,
    pulse_area,
    rzx_pieces,
    sampled_area,
    scale_cr,
    schedule_circuit,
)
from pulse_efficient.qcore import Circuit, g

from test_transpile import random_motif_circuit

MUMBAI = builtin_backend("mumbai-q1q2")
CAL = MUMBAI.edge(0, 1)
SQ = MUMBAI.sq_duration(0)
GRAN = MUMBAI.granularity


def continuous_area(p: FlatTopPulse) -> float:
    """Quadrature of the continuous flat-top Gaussian envelope."""
    rise = p.n_sigma * p.sigma

    def env(t):
        if t < rise:
            return math.exp(-((t - rise) ** 2) / (2 * p.sigma**2))
        if t > rise + p.width:
            return math.exp(-((t - rise - p.width) ** 2) / (2 * p.sigma**2))
        return 1.0

    pts = [rise, rise + p.width] if p.width > 0 else [rise]
    return abs(p.amplitude) * quad(env, 0, p.raw_duration, points=pts, limit=200)[0]


class TestArea:
    def test_zero_amplitude(self):
        assert pulse_area(FlatTopPulse(0.0, 64, 100)) == 0.0

    def test_wide_sigma_limit(self):
        p = FlatTopPulse(0.4, 10.0, 0.0, n_sigma=8.0)
        assert pulse_area(p) == pytest.approx(0.4 * 10.0 * math.sqrt(2 * math.pi), rel=1e-12)

    @given(st.floats(0.05, 1.0), st.floats(16, 128), st.floats(0, 2000), st.floats(1.5, 4.0))
    def test_sample_sum_vs_truncated_integral(self, amp, sigma, width, n_sigma):
        p = FlatTopPulse(amp, sigma, width, n_sigma)
        exact = amp * (width + math.sqrt(2 * math.pi) * sigma * erf(n_sigma / math.sqrt(2)))
        # midpoint sum: curvature error plus at most one sample at the truncated edges
        assert abs(sampled_area(p) - exact) <= amp * 1.0 + 1e-3 * exact

    @given(st.floats(0.05, 1.0), st.floats(16, 128), st.floats(20, 40))
    def test_closed_form_vs_sample_sum_flat_dominated(self, amp, sigma, w_over_sigma):
        n_sigma = 2.0
        # the literal flank term uses erf(n_sigma); it overstates the truncated flank,
        # so agreement within 0.5% needs the flat top to dominate
        p = FlatTopPulse(amp, sigma, w_over_sigma * sigma, n_sigma)
        assert abs(sampled_area(p) - pulse_area(p)) <= 5e-3 * pulse_area(p)

    def test_mumbai_fixture_within_half_percent(self):
        p = CAL.cr_pulse
        assert abs(sampled_area(p) - pulse_area(p)) <= 5e-3 * pulse_area(p)

    @pytest.mark.parametrize("width", [0.0, 37.5, 700.0])
    def test_quadrature_oracle(self, width):
        # the continuous truncated Gaussian flank integrates to sqrt(2 pi) sigma erf(n_sigma / sqrt 2)
        p = FlatTopPulse(0.3, 64.0, width, 2.0)
        exact = 0.3 * (width + math.sqrt(2 * math.pi) * 64.0 * erf(2.0 / math.sqrt(2)))
        assert continuous_area(p) == pytest.approx(exact, rel=1e-9)
        assert sampled_area(p, dt=0.01) == pytest.approx(exact, rel=1e-6)

    def test_validation(self):
        with pytest.raises(ValueError):
            FlatTopPulse(1.5, 64, 0)
        with pytest.raises(ValueError):
            FlatTopPulse(0.3, 64, -1)
        with pytest.raises(ValueError):
            FlatTopPulse(0.3, 0, 10)


def threshold_theta(cal) -> float:
    cr = cal.cr_pulse
    return math.pi / 2 * abs(cr.amplitude) * cr.flank_area_per_amp / pulse_area(cr)


class TestScaleCR:
    @given(st.floats(1e-4, math.pi / 2))
    def test_area_law(self, theta):
        cr, rot = scale_cr(CAL, theta)
        assert pulse_area(cr) == pytest.approx(2 * theta / math.pi * CAL.alpha_star, rel=1e-6)
        assert cr.raw_duration == rot.raw_duration

    def test_calibrated_angle_returns_calibrated_pulse(self):
        cr, rot = scale_cr(CAL, math.pi / 2)
        assert cr.width == pytest.approx(CAL.cr_pulse.width, abs=1e-9)
        assert cr.amplitude == pytest.approx(CAL.cr_pulse.amplitude)

    def test_quarter_angle_half_area(self):
        cr, _ = scale_cr(CAL, math.pi / 4)
        assert pulse_area(cr) == pytest.approx(CAL.alpha_star / 2, rel=1e-9)

    def test_negative_angle_flips_sign(self):
        a, ra = scale_cr(CAL, 0.3)
        b, rb = scale_cr(CAL, -0.3)
        assert b.amplitude == pytest.approx(-a.amplitude)
        assert rb.amplitude == pytest.approx(-ra.amplitude)
        assert b.width == a.width

    def test_threshold_branches_agree(self):
        th = threshold_theta(CAL)
        cr, _ = scale_cr(CAL, th)
        assert cr.width == pytest.approx(0.0, abs=1e-9)
        assert abs(cr.amplitude) == pytest.approx(abs(CAL.cr_pulse.amplitude), rel=1e-9)

    def test_continuity_across_threshold(self):
        th = threshold_theta(CAL)
        grid = th + 1e-3 * np.arange(-20, 21)
        amps = np.array([abs(scale_cr(CAL, t)[0].amplitude) for t in grid])
        areas = np.array([pulse_area(scale_cr(CAL, t)[0]) for t in grid])
        # amplitude grows linearly below the threshold and is flat above it: no jump
        slope = abs(CAL.cr_pulse.amplitude) / threshold_theta(CAL) * 1e-3
        assert np.max(np.abs(np.diff(amps))) <= slope * (1 + 1e-6)
        # area is linear in theta through both branches
        step = 2e-3 / math.pi * CAL.alpha_star
        assert np.allclose(np.diff(areas), step, rtol=1e-6)

    def test_small_angle_uses_amplitude_branch(self):
        cr, _ = scale_cr(CAL, threshold_theta(CAL) / 2)
        assert cr.width == 0.0
        assert abs(cr.amplitude) == pytest.approx(abs(CAL.cr_pulse.amplitude) / 2)

    @pytest.mark.parametrize("theta", [0.0, math.pi / 2 + 0.01, -2.0])
    def test_out_of_range(self, theta):
        with pytest.raises(ScheduleError):
            scale_cr(CAL, theta)


class TestRzxSchedule:
    def test_echoed_half_pi_is_cnot_core(self):
        _, dur = build_rzx_schedule(math.pi / 2, CAL, SQ, GRAN, echoed=True)
        assert dur == 2 * CAL.cr_pulse.duration(GRAN) + 2 * SQ

    def test_non_echoed_quarter_pi_is_one_pulse(self):
        entries, dur = build_rzx_schedule(math.pi / 4, CAL, SQ, GRAN, echoed=False)
        cr = [e for e in entries if e.channel.startswith("u")]
        assert len(cr) == 1 and dur == cr[0].duration

    @pytest.mark.parametrize("echoed", [True, False])
    def test_monotone_in_angle(self, echoed):
        top = math.pi / 2 if echoed else math.pi
        durs = [build_rzx_schedule(t, CAL, SQ, GRAN, echoed)[1] for t in np.linspace(0.01, top, 200)]
        assert all(a <= b for a, b in zip(durs, durs[1:]))

    @given(st.floats(0.01, math.pi / 2))
    def test_non_echoed_shorter(self, theta):
        ne = build_rzx_schedule(theta, CAL, SQ, GRAN, echoed=False)[1]
        ec = build_rzx_schedule(theta, CAL, SQ, GRAN, echoed=True)[1]
        # saving is the two echo pulses at least
        assert ne <= ec - 2 * SQ

    @given(st.floats(-2 * math.pi + 1e-6, 2 * math.pi - 1e-6))
    def test_pieces(self, theta):
        if abs(theta) < 1e-9:
            return
        pieces = rzx_pieces(theta)
        assert sum(pieces) == pytest.approx(theta)
        assert all(abs(p) <= math.pi / 4 + 1e-12 for p in pieces)

    def test_zero_rejected(self):
        with pytest.raises(ScheduleError):
            build_rzx_schedule(0.0, CAL, SQ, GRAN, echoed=False)

    def test_rotary_concurrent(self):
        entries, _ = build_rzx_schedule(0.5, CAL, SQ, GRAN, echoed=True)
        cr = [e for e in entries if e.channel.startswith("u")]
        rot = [e for e in entries if e.name == "rotary"]
        assert [(e.start, e.duration) for e in cr] == [(e.start, e.duration) for e in rot]


def double_cnot(theta):
    return Circuit(2, (g("cx", 0, 1), g("rz", 1, params=[theta]), g("cx", 0, 1)))


class TestScheduleCircuit:
    def test_single_sx(self):
        assert schedule_circuit(Circuit(1, (g("sx", 0),)), MUMBAI).total_duration == SQ

    def test_rz_is_free(self):
        s = schedule_circuit(Circuit(1, (g("rz", 0, params=[1.0]),) * 3), MUMBAI)
        assert s.total_duration == 0

    @pytest.mark.parametrize("name", builtin_names()[:-1])
    def test_double_cnot_matches_table(self, name):
        b = builtin_backend(name)
        s = schedule_circuit(double_cnot(0.3), b)
        ns = b.edge(0, 1).cnot_duration_ns
        assert abs(s.total_duration_ns - 2 * ns) <= 2 * b.granularity * b.dt_ns

    def test_mumbai_double_cnot(self):
        s = schedule_circuit(double_cnot(0.3), MUMBAI)
        assert abs(s.total_duration_ns - 1478) <= GRAN * MUMBAI.dt_ns

    def test_scaled_shorter_than_double_cnot(self):
        scaled = Circuit(2, (g("rzx", 0, 1, params=[0.1]),))
        assert schedule_circuit(scaled, MUMBAI).total_duration < schedule_circuit(double_cnot(0.2), MUMBAI).total_duration

    def test_unschedulable(self):
        with pytest.raises(ScheduleError):
            schedule_circuit(Circuit(1, (g("h", 0),)), MUMBAI)

    def test_unknown_method(self):
        with pytest.raises(ScheduleError):
            schedule_circuit(double_cnot(0.1), MUMBAI, method="eager")

    def test_alap_and_asap_share_duration(self):
        c = Circuit(3, (g("sx", 0), g("cx", 1, 2), g("sx", 0), g("sx", 2)))
        b = builtin_backend("line-3")
        asap = schedule_circuit(c, b, method="asap")
        alap = schedule_circuit(c, b, method="alap")
        assert asap.total_duration == alap.total_duration
        assert [t.start for t in asap.timed][0] == 0
        # alap delays the short wire until it abuts the end
        assert alap.timed[1].stop == alap.total_duration or alap.timed[2].stop == alap.total_duration

    @given(st.integers(0, 2**31), st.sampled_from(["asap", "alap"]), st.booleans())
    def test_invariants(self, seed, method, pulse_efficient):
        from pulse_efficient.transpile import cnot_pipeline, pulse_efficient_circuit

        c = random_motif_circuit(np.random.default_rng(seed), 4, length=5)
        b = coupled_backend("full-4", 4, list(itertools.combinations(range(4), 2)))
        lowered = (pulse_efficient_circuit if pulse_efficient else cnot_pipeline)(c)
        s = schedule_circuit(lowered, b, method=method)
        assert not s.overlaps()
        assert all(e.duration % GRAN == 0 for e in s.entries)
        assert all(t.duration % GRAN == 0 for t in s.timed)
        assert s.total_duration == max((e.stop for e in s.entries), default=0)
        by_q = {}
        for t in s.timed:
            for q in t.gate.qubits:
                by_q.setdefault(q, []).append(t)
        for ts in by_q.values():
            for a, b_ in zip(ts, ts[1:]):
                assert b_.start >= a.stop

    def test_json_roundtrip(self):
        c = Circuit(2, (g("sx", 0), g("rzx", 0, 1, params=[0.4]), g("rz", 1, params=[0.2]), g("cx", 1, 0)))
        s = schedule_circuit(c, MUMBAI)
        back = Schedule.from_json(json.loads(json.dumps(s.to_json())))
        assert back.to_json() == s.to_json()
