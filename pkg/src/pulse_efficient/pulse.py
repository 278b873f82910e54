"""Flat-top CR pulses, the area-scaling law, and sample-exact schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Mapping

import numpy as np

from .qcore import Circuit, Gate

if TYPE_CHECKING:
    from .backends import BackendModel, EdgeCalibration

_HALF_PI = math.pi / 2
_QUARTER_PI = math.pi / 4


class ScheduleError(ValueError):
    pass


def round_up(samples: float, granularity: int) -> int:
    # tolerate float noise so an exact multiple is not bumped up a slot
    return int(math.ceil(samples / granularity - 1e-9)) * granularity


@dataclass(frozen=True)
class FlatTopPulse:
    """Gaussian-square envelope: flat segment of ``width`` with Gaussian flanks of ``n_sigma`` sigmas."""

    amplitude: complex
    sigma: float
    width: float
    n_sigma: float = 2.0
    channel: str = ""

    def __post_init__(self):
        if abs(self.amplitude) > 1 + 1e-12:
            raise ValueError(f"|amplitude| = {abs(self.amplitude)} exceeds 1")
        if self.width < 0:
            raise ValueError("negative width")
        if self.sigma <= 0 or self.n_sigma <= 0:
            raise ValueError("sigma and n_sigma must be positive")

    @property
    def raw_duration(self) -> float:
        return self.width + 2 * self.n_sigma * self.sigma

    def duration(self, granularity: int = 1) -> int:
        return round_up(self.raw_duration, granularity)

    @property
    def flank_area_per_amp(self) -> float:
        return math.sqrt(2 * math.pi) * self.sigma * math.erf(self.n_sigma)

    def envelope(self, dt: float = 1.0) -> np.ndarray:
        """Sampled real envelope at sample midpoints (amplitude magnitude)."""
        n = int(math.ceil(self.raw_duration / dt))
        t = (np.arange(n) + 0.5) * dt
        rise = self.n_sigma * self.sigma
        out = np.ones(n)
        left = t < rise
        right = t > rise + self.width
        out[left] = np.exp(-((t[left] - rise) ** 2) / (2 * self.sigma**2))
        out[right] = np.exp(-((t[right] - rise - self.width) ** 2) / (2 * self.sigma**2))
        out[t > self.raw_duration] = 0.0
        return abs(self.amplitude) * out


def pulse_area(p: FlatTopPulse) -> float:
    """|A| [w + sqrt(2 pi) sigma erf(n_sigma)]."""
    return abs(p.amplitude) * (p.width + p.flank_area_per_amp)


def sampled_area(p: FlatTopPulse, dt: float = 1.0) -> float:
    """Riemann sum of the Gaussian-square envelope truncated at n_sigma sigma."""
    return float(np.sum(p.envelope(dt)) * dt)


def _scaled(p: FlatTopPulse, target_area: float, sign: float, flank: float) -> FlatTopPulse:
    amp = abs(p.amplitude)
    phase = p.amplitude / amp if amp > 0 else 1.0
    if target_area >= amp * flank:
        return replace(p, amplitude=sign * phase * amp, width=target_area / amp - flank)
    return replace(p, amplitude=sign * phase * target_area / flank, width=0.0)


def scale_cr(cal: "EdgeCalibration", theta: float) -> tuple[FlatTopPulse, FlatTopPulse]:
    """CR and rotary pulses with area 2|theta| alpha*/pi; negative theta flips the amplitude sign.

    ``theta`` is the angle of the echoed rzx the pulse pair would implement,
    so theta = pi/2 returns the calibrated CNOT pulse itself.
    """
    if theta == 0:
        raise ScheduleError("zero angle must be elided by the caller")
    if abs(theta) > _HALF_PI + 1e-12:
        raise ScheduleError(f"|theta| = {abs(theta)} exceeds pi/2 for a single CR pulse")
    frac = 2 * abs(theta) / math.pi
    sign = 1.0 if theta > 0 else -1.0
    cr, rot = cal.cr_pulse, cal.rotary_pulse
    flank = cr.flank_area_per_amp
    new_cr = _scaled(cr, frac * pulse_area(cr), sign, flank)
    # the rotary shares the CR's width so both pulses stay the same length
    rot_amp = abs(rot.amplitude) * (abs(new_cr.amplitude) / abs(cr.amplitude))
    rot_phase = rot.amplitude / abs(rot.amplitude) if abs(rot.amplitude) > 0 else 1.0
    new_rot = replace(rot, amplitude=sign * rot_phase * rot_amp, width=new_cr.width)
    return new_cr, new_rot


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScheduleEntry:
    """A pulse (or zero-length frame change) on one channel."""

    start: int
    duration: int
    channel: str
    name: str
    pulse: FlatTopPulse | None = None
    phase: float | None = None

    @property
    def stop(self) -> int:
        return self.start + self.duration

    def to_json(self) -> dict:
        out = {"start": self.start, "duration": self.duration, "channel": self.channel, "name": self.name}
        if self.pulse is not None:
            a = complex(self.pulse.amplitude)
            out["pulse"] = {
                "amp": [a.real, a.imag],
                "sigma": self.pulse.sigma,
                "width": self.pulse.width,
                "n_sigma": self.pulse.n_sigma,
            }
        if self.phase is not None:
            out["phase"] = self.phase
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "ScheduleEntry":
        pulse = None
        if "pulse" in data:
            p = data["pulse"]
            pulse = FlatTopPulse(complex(*p["amp"]), p["sigma"], p["width"], p.get("n_sigma", 2.0))
        return cls(int(data["start"]), int(data["duration"]), data["channel"], data["name"], pulse, data.get("phase"))


@dataclass(frozen=True)
class TimedGate:
    """A gate placed on the timeline; the simulator applies its noise over ``duration``."""

    gate: Gate
    start: int
    duration: int

    @property
    def stop(self) -> int:
        return self.start + self.duration


@dataclass
class Schedule:
    num_qubits: int
    dt_ns: float
    granularity: int
    timed: list[TimedGate] = field(default_factory=list)
    entries: list[ScheduleEntry] = field(default_factory=list)

    @property
    def total_duration(self) -> int:
        return max((t.stop for t in self.timed), default=0)

    @property
    def total_duration_ns(self) -> float:
        return self.total_duration * self.dt_ns

    def channels(self) -> dict[str, list[ScheduleEntry]]:
        out: dict[str, list[ScheduleEntry]] = {}
        for e in sorted(self.entries, key=lambda e: (e.channel, e.start)):
            out.setdefault(e.channel, []).append(e)
        return out

    def overlaps(self) -> list[tuple[ScheduleEntry, ScheduleEntry]]:
        bad = []
        for entries in self.channels().values():
            pulses = [e for e in entries if e.duration > 0]
            for a, b in zip(pulses, pulses[1:]):
                if b.start < a.stop:
                    bad.append((a, b))
        return bad

    def pulse_count(self, prefix: str = "cr") -> int:
        return sum(1 for e in self.entries if e.name.startswith(prefix) and e.channel.startswith("u"))

    def to_json(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "dt_ns": self.dt_ns,
            "total_duration": self.total_duration,
            "total_duration_ns": self.total_duration_ns,
            "granularity": self.granularity,
            "channels": {ch: [e.to_json() for e in es] for ch, es in self.channels().items()},
            "timed": [{"gate": t.gate.to_json(), "start": t.start, "duration": t.duration} for t in self.timed],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Schedule":
        timed = [TimedGate(Gate.from_json(t["gate"]), int(t["start"]), int(t["duration"])) for t in data.get("timed", [])]
        entries = [ScheduleEntry.from_json(e) for es in data.get("channels", {}).values() for e in es]
        return cls(int(data["num_qubits"]), float(data["dt_ns"]), int(data.get("granularity", 1)), timed, entries)

    def to_csv(self) -> str:
        lines = ["channel,start,duration,name"]
        for ch, es in self.channels().items():
            for e in es:
                lines.append(f"{ch},{e.start},{e.duration},{e.name}")
        return "\n".join(lines) + "\n"


def _cr_block(cal, theta: float, start: int, gran: int, label: str) -> tuple[list[ScheduleEntry], int]:
    cr, rot = scale_cr(cal, theta)
    dur = cr.duration(gran)
    c, t = cal.control, cal.target
    return [
        ScheduleEntry(start, dur, f"u{c}_{t}", label, cr),
        ScheduleEntry(start, dur, f"d{t}", "rotary", rot),
    ], dur


def rzx_pieces(theta: float) -> list[float]:
    """Split a non-echoed rzx angle into equal pieces of at most pi/4."""
    k = max(1, math.ceil(abs(theta) / _QUARTER_PI - 1e-12))
    return [theta / k] * k


def build_rzx_schedule(theta: float, cal, sq_dur: int, granularity: int, echoed: bool, start: int = 0):
    """Pulse entries and total length (samples) of rzx(theta) on a calibrated edge.

    Echoed: CR(theta) X CR(-theta) X, each CR carrying half the rotation.
    Non-echoed: one CR whose area covers the whole rotation, i.e. scale_cr at
    2 theta, split into several pulses when 2|theta| exceeds pi/2.
    """
    if abs(theta) < 1e-12:
        raise ScheduleError("zero-angle rzx must be elided")
    entries: list[ScheduleEntry] = []
    t = start
    c = cal.control
    if echoed:
        if abs(theta) > _HALF_PI + 1e-12:
            raise ScheduleError("echoed rzx angle exceeds pi/2")
        for sign in (1, -1):
            block, dur = _cr_block(cal, sign * theta, t, granularity, "cr_p" if sign > 0 else "cr_m")
            entries += block
            t += dur
            entries.append(ScheduleEntry(t, sq_dur, f"d{c}", "x"))
            t += sq_dur
    else:
        for piece in rzx_pieces(theta):
            block, dur = _cr_block(cal, 2 * piece, t, granularity, "cr")
            entries += block
            t += dur
    return entries, t - start


def cnot_entries(cal, sq_target: int, sq_control: int, granularity: int, start: int = 0):
    """Calibrated CNOT: sx pre-rotation on the target, then the echoed CR(pi/4) core."""
    entries = [ScheduleEntry(start, sq_target, f"d{cal.target}", "sx")]
    core, dur = build_rzx_schedule(_HALF_PI, cal, sq_control, granularity, echoed=True, start=start + sq_target)
    return entries + core, sq_target + dur


def gate_entries(gate: Gate, b: "BackendModel", start: int, echoed_rzx: bool = False) -> tuple[list[ScheduleEntry], int] | None:
    """Pulse entries and length of one gate placed at ``start``; None for gates that take no time."""
    name, qs = gate.name, gate.qubits
    if name == "measure":
        return None
    if name == "rz":
        return [ScheduleEntry(start, 0, f"d{qs[0]}", "rz", phase=-gate.angle)], 0
    if name in ("sx", "x"):
        dur = b.sq_duration(qs[0])
        return [ScheduleEntry(start, dur, f"d{qs[0]}", name)], dur
    if name == "cx":
        cal = b.edge(*qs)
        return cnot_entries(cal, b.sq_duration(qs[1]), b.sq_duration(qs[0]), b.granularity, start)
    if name == "rzx":
        cal = b.edge(*qs)
        theta = gate.angle
        if not -2 * math.pi < theta < 2 * math.pi:
            raise ScheduleError(f"rzx angle {theta} outside (-2pi, 2pi)")
        if abs(theta) < 1e-12:
            return None
        return build_rzx_schedule(theta, cal, b.sq_duration(qs[0]), b.granularity, echoed_rzx, start)
    raise ScheduleError(f"no calibration for gate {name}")


SCHEDULING_METHODS = ("asap", "alap")


def schedule_circuit(c: Circuit, b: "BackendModel", echoed_rzx: bool = False, method: str = "asap") -> Schedule:
    """Sample-exact schedule; rz is a zero-length frame change and measurements are dropped.

    ``asap`` (the default) starts every instruction as early as its wires
    allow; ``alap`` pushes every instruction as late as its successors allow,
    so qubits wait in their initial state rather than after their last gate.
    """
    if method not in SCHEDULING_METHODS:
        raise ScheduleError(f"unknown scheduling method {method!r}")
    placed = []
    for gate in c.gates:
        built = gate_entries(gate, b, 0, echoed_rzx)
        if built is not None:
            placed.append((gate, built[1]))
    order = placed if method == "asap" else placed[::-1]
    clock = [0] * c.num_qubits
    starts = []
    for gate, dur in order:
        start = max(clock[q] for q in gate.qubits)
        starts.append(start)
        for q in gate.qubits:
            clock[q] = start + dur
    if method == "alap":
        total = max(clock, default=0)
        starts = [total - s - dur for s, (_, dur) in zip(starts, order)][::-1]
    sched = Schedule(c.num_qubits, b.dt_ns, b.granularity)
    for (gate, dur), start in zip(placed, starts):
        entries, _ = gate_entries(gate, b, start, echoed_rzx)
        sched.entries += entries
        sched.timed.append(TimedGate(gate, start, dur))
    return sched
