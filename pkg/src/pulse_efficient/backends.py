"""Backend calibration models and the device fixtures derived from the benchmark table."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .pulse import FlatTopPulse, pulse_area

DT_NS = 2 / 9
GRANULARITY = 16
SQ_SAMPLES = 160
CR_SIGMA = 64.0
CR_NSIGMA = 2.0
CR_AMP = 0.3
ROTARY_AMP = 0.1
# synthetic readout: P(read 1 | prep 0), P(read 0 | prep 1)
READOUT_P10 = 0.02
READOUT_P01 = 0.05


class BackendError(ValueError):
    pass


@dataclass(frozen=True)
class QubitProperties:
    t1_us: float
    t2_us: float
    sq_duration: int = SQ_SAMPLES
    # rows: prepared state, columns: read-out value
    readout_confusion: tuple[tuple[float, float], tuple[float, float]] = (
        (1 - READOUT_P10, READOUT_P10),
        (READOUT_P01, 1 - READOUT_P01),
    )

    def __post_init__(self):
        if self.t1_us <= 0 or self.t2_us <= 0:
            raise BackendError("T1 and T2 must be positive")
        if self.t2_us > 2 * self.t1_us + 1e-12:
            raise BackendError(f"T2 = {self.t2_us} exceeds 2 T1 = {2 * self.t1_us}")
        for row in self.readout_confusion:
            if abs(sum(row) - 1) > 1e-9 or min(row) < 0:
                raise BackendError("readout confusion rows must be probability vectors")

    @property
    def confusion_matrix(self) -> np.ndarray:
        """Column-stochastic form: entry [read, prep]."""
        return np.array(self.readout_confusion, dtype=float).T


@dataclass(frozen=True)
class EdgeCalibration:
    control: int
    target: int
    cr_pulse: FlatTopPulse
    rotary_pulse: FlatTopPulse
    cnot_duration_ns: float
    cnot_error: float | None = None

    def __post_init__(self):
        if self.cr_pulse.raw_duration != self.rotary_pulse.raw_duration:
            raise BackendError("cr and rotary pulses must share a duration")

    @property
    def alpha_star(self) -> float:
        return pulse_area(self.cr_pulse)

    def reversed(self) -> "EdgeCalibration":
        return EdgeCalibration(
            self.target, self.control, self.cr_pulse, self.rotary_pulse, self.cnot_duration_ns, self.cnot_error
        )


@dataclass
class BackendModel:
    name: str
    dt_ns: float
    granularity: int
    qubits: list[QubitProperties]
    edges: dict[tuple[int, int], EdgeCalibration] = field(default_factory=dict)

    def __post_init__(self):
        if self.dt_ns <= 0:
            raise BackendError("dt must be positive")
        for (c, t), cal in self.edges.items():
            if (cal.control, cal.target) != (c, t):
                raise BackendError(f"edge key {(c, t)} disagrees with its calibration")
            if max(c, t) >= len(self.qubits):
                raise BackendError(f"edge {(c, t)} references a missing qubit")
            cnot = self.cnot_samples(c, t)
            if cnot < 2 * cal.cr_pulse.duration(self.granularity):
                raise BackendError("cnot duration shorter than two CR pulses")

    @property
    def num_qubits(self) -> int:
        return len(self.qubits)

    @property
    def coupling(self) -> set[tuple[int, int]]:
        return {(min(e), max(e)) for e in self.edges}

    def edge(self, control: int, target: int) -> EdgeCalibration:
        try:
            return self.edges[(control, target)]
        except KeyError:
            raise BackendError(f"qubits {control},{target} are not coupled on {self.name}") from None

    def sq_duration(self, q: int) -> int:
        return self.qubits[q].sq_duration

    def cnot_samples(self, control: int, target: int) -> int:
        cal = self.edge(control, target)
        cr = cal.cr_pulse.duration(self.granularity)
        return self.sq_duration(target) + 2 * cr + 2 * self.sq_duration(control)

    def t1_t2(self, q: int) -> tuple[float, float]:
        return self.qubits[q].t1_us, self.qubits[q].t2_us

    def confusion_matrices(self, qubits=None) -> list[np.ndarray]:
        qubits = range(self.num_qubits) if qubits is None else qubits
        return [self.qubits[q].confusion_matrix for q in qubits]

    def restricted(self, qubits) -> "BackendModel":
        """Sub-backend on ``qubits`` relabelled 0..k-1 in the given order."""
        index = {q: i for i, q in enumerate(qubits)}
        edges = {}
        for (c, t), cal in self.edges.items():
            if c in index and t in index:
                edges[(index[c], index[t])] = EdgeCalibration(
                    index[c], index[t], cal.cr_pulse, cal.rotary_pulse, cal.cnot_duration_ns, cal.cnot_error
                )
        return BackendModel(self.name, self.dt_ns, self.granularity, [self.qubits[q] for q in qubits], edges)

    # -- JSON ---------------------------------------------------------------

    def to_json(self) -> dict:
        def pulse(p: FlatTopPulse) -> dict:
            a = complex(p.amplitude)
            return {"amp": [a.real, a.imag], "sigma": p.sigma, "width": p.width, "n_sigma": p.n_sigma}

        return {
            "name": self.name,
            "dt_ns": self.dt_ns,
            "granularity": self.granularity,
            "qubits": [
                {
                    "t1_us": q.t1_us,
                    "t2_us": q.t2_us,
                    "sq_duration": q.sq_duration,
                    "readout_confusion": [list(r) for r in q.readout_confusion],
                }
                for q in self.qubits
            ],
            "edges": [
                {
                    "control": cal.control,
                    "target": cal.target,
                    "cnot_duration_ns": cal.cnot_duration_ns,
                    "cnot_error": cal.cnot_error,
                    "cr": pulse(cal.cr_pulse),
                    "rotary": pulse(cal.rotary_pulse),
                }
                for _, cal in sorted(self.edges.items())
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "BackendModel":
        def pulse(d: Mapping, channel: str) -> FlatTopPulse:
            amp = d["amp"]
            amp = complex(amp[0], amp[1]) if isinstance(amp, (list, tuple)) else complex(amp)
            return FlatTopPulse(amp, float(d["sigma"]), float(d["width"]), float(d.get("n_sigma", 2.0)), channel)

        qubits = [
            QubitProperties(
                float(q["t1_us"]),
                float(q["t2_us"]),
                int(q.get("sq_duration", SQ_SAMPLES)),
                tuple(tuple(float(x) for x in row) for row in q.get("readout_confusion", QubitProperties(1, 1).readout_confusion)),
            )
            for q in data["qubits"]
        ]
        edges = {}
        for e in data["edges"]:
            c, t = int(e["control"]), int(e["target"])
            edges[(c, t)] = EdgeCalibration(
                c, t, pulse(e["cr"], f"u{c}_{t}"), pulse(e["rotary"], f"d{t}"),
                float(e["cnot_duration_ns"]), e.get("cnot_error"),
            )
        return cls(data.get("name", "custom"), float(data["dt_ns"]), int(data["granularity"]), qubits, edges)


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------

# device, pair, CNOT error %, CNOT ns, (T1a, T1b) us, (T2a, T2b) us
DEVICE_PAIRS = [
    ("mumbai", (1, 2), 1.27, 739, (102, 157), (34, 228)),
    ("mumbai", (16, 19), 0.84, 754, (84, 141), (105, 132)),
    ("paris", (1, 2), 1.70, 597, (66, 92), (82, 128)),
    ("paris", (13, 14), 1.28, 434, (100, 23), (27, 33)),
    ("paris", (18, 15), 5.36, 448, (86, 74), (103, 50)),
    ("paris", (18, 17), 1.76, 725, (41, 71), (94, 157)),
    ("dublin", (1, 2), 0.76, 540, (110, 103), (174, 89)),
    ("dublin", (3, 2), 0.83, 370, (78, 96), (100, 83)),
    ("montreal", (14, 16), 0.88, 356, (97, 87), (97, 52)),
    ("guadalupe", (7, 10), 0.61, 299, (99, 68), (153, 90)),
]

# 27-qubit heavy-hex coupling map of the Falcon devices
MUMBAI_COUPLING = [
    (0, 1), (1, 2), (1, 4), (2, 3), (3, 5), (4, 7), (5, 8), (6, 7), (7, 10),
    (8, 9), (8, 11), (10, 12), (11, 14), (12, 13), (12, 15), (13, 14), (14, 16),
    (15, 18), (16, 19), (17, 18), (18, 21), (19, 20), (19, 22), (21, 23), (22, 25),
    (23, 24), (24, 25), (25, 26),
]


def fixture_name(device: str, pair: tuple[int, int]) -> str:
    return f"{device}-q{pair[0]}q{pair[1]}"


def cnot_samples_from_ns(ns: float, dt_ns: float = DT_NS) -> int:
    # multiple of 2*granularity keeps both CR halves on the sample grid
    step = 2 * GRANULARITY
    return int(round(ns / dt_ns / step)) * step


def edge_calibration(control: int, target: int, cnot_ns: float, error=None) -> EdgeCalibration:
    """Calibration whose echoed CNOT (sx + 2 CR + 2 X) reproduces ``cnot_ns``."""
    total = cnot_samples_from_ns(cnot_ns)
    cr_dur = (total - 3 * SQ_SAMPLES) // 2
    width = cr_dur - 2 * CR_NSIGMA * CR_SIGMA
    if width < 0:
        raise BackendError(f"CNOT of {cnot_ns} ns is too short for the fixture pulse shape")
    cr = FlatTopPulse(CR_AMP, CR_SIGMA, float(width), CR_NSIGMA, f"u{control}_{target}")
    rot = FlatTopPulse(ROTARY_AMP, CR_SIGMA, float(width), CR_NSIGMA, f"d{target}")
    return EdgeCalibration(control, target, cr, rot, float(cnot_ns), error)


def _clamped(t1: float, t2: float) -> QubitProperties:
    return QubitProperties(float(t1), float(min(t2, 2 * t1)))


def device_pair_backend(device: str, pair: tuple[int, int]) -> BackendModel:
    """Two-qubit fixture for one benchmark-table row; local qubit 0 is the first listed."""
    for dev, p, err, ns, t1, t2 in DEVICE_PAIRS:
        if dev == device and tuple(p) == tuple(pair):
            qubits = [_clamped(t1[0], t2[0]), _clamped(t1[1], t2[1])]
            cal = edge_calibration(0, 1, ns, err / 100)
            return BackendModel(fixture_name(dev, p), DT_NS, GRANULARITY, qubits, {(0, 1): cal, (1, 0): cal.reversed()})
    raise BackendError(f"no table entry for {device} {pair}")


def coupled_backend(name: str, num_qubits: int, coupling, base: str = "mumbai-q1q2") -> BackendModel:
    """Backend on an arbitrary coupling map reusing one fixture's calibration and coherence times."""
    ref = builtin_backend(base)
    cal = ref.edge(0, 1)
    qubits = [ref.qubits[q % 2] for q in range(num_qubits)]
    edges = {}
    for a, b in coupling:
        edges[(a, b)] = EdgeCalibration(a, b, cal.cr_pulse, cal.rotary_pulse, cal.cnot_duration_ns, cal.cnot_error)
        edges[(b, a)] = edges[(a, b)].reversed()
    return BackendModel(name, ref.dt_ns, ref.granularity, qubits, edges)


def line_backend(num_qubits: int, base: str = "mumbai-q1q2") -> BackendModel:
    return coupled_backend(f"line-{num_qubits}", num_qubits, [(i, i + 1) for i in range(num_qubits - 1)], base)


def mumbai_backend() -> BackendModel:
    return coupled_backend("mumbai-27", 27, MUMBAI_COUPLING)


def builtin_names() -> list[str]:
    return [fixture_name(d, p) for d, p, *_ in DEVICE_PAIRS] + ["mumbai-27"]


def builtin_backend(name: str) -> BackendModel:
    if name == "mumbai-27":
        return mumbai_backend()
    if name.startswith("line-") and name[5:].isdigit():
        return line_backend(int(name[5:]))
    for dev, p, *_ in DEVICE_PAIRS:
        if fixture_name(dev, p) == name:
            return device_pair_backend(dev, p)
    raise BackendError(f"unknown backend {name!r}; built-ins: {', '.join(builtin_names())}, line-N")


def load_backend(spec: str | Path) -> BackendModel:
    """Built-in fixture name or path to a backend JSON file."""
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        return BackendModel.from_json(json.loads(path.read_text()))
    return builtin_backend(str(spec))
