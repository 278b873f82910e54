"""Two-qubit process tomography, readout mitigation and coherence-limit analysis."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .qcore import Circuit, Gate, circuit_unitary, g
from .sim import probs_to_vector, simulate_noisy, tensor_confusion
from .transpile import cnot_scheduled, pulse_efficient_pipeline

PREP_LABELS = ("0", "1", "+", "+i")
BASIS_LABELS = ("X", "Y", "Z")
NUM_QPT_CIRCUITS = 4**2 * 3**2 + 4


class TomographyError(ValueError):
    pass


def prep_gates(label: str, q: int) -> list[Gate]:
    return {
        "0": [],
        "1": [g("x", q)],
        "+": [g("h", q)],
        "+i": [g("h", q), g("rz", q, params=[math.pi / 2])],
    }[label]


def basis_gates(label: str, q: int) -> list[Gate]:
    """Rotation that maps the ``label`` eigenbasis onto Z."""
    return {"X": [g("h", q)], "Y": [g("rz", q, params=[-math.pi / 2]), g("h", q)], "Z": []}[label]


def prep_state(label: str) -> np.ndarray:
    s = 1 / math.sqrt(2)
    return {
        "0": np.array([1, 0], dtype=complex),
        "1": np.array([0, 1], dtype=complex),
        "+": np.array([s, s], dtype=complex),
        "+i": np.array([s, 1j * s], dtype=complex),
    }[label]


@dataclass(frozen=True)
class QptCircuit:
    index: int
    circuit: Circuit
    prep: tuple[str, str] | None = None
    basis: tuple[str, str] | None = None
    calibration: str | None = None


@dataclass
class TomographyJob:
    target: Circuit
    circuits: list[QptCircuit]
    shots: int | None = None
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.circuits)

    @property
    def tomography_circuits(self) -> list[QptCircuit]:
        return [c for c in self.circuits if c.calibration is None]

    @property
    def calibration_circuits(self) -> list[QptCircuit]:
        return [c for c in self.circuits if c.calibration is not None]


def build_qpt_circuits(target: Circuit, shots: int | None = None, seed: int | None = None) -> TomographyJob:
    if target.num_qubits != 2:
        raise TomographyError(f"process tomography needs a 2-qubit target, got {target.num_qubits}")
    if shots is not None and seed is None:
        raise TomographyError("a seed is required in shot mode")
    body = target.without_measurements().gates
    circuits: list[QptCircuit] = []
    for p0, p1 in itertools.product(PREP_LABELS, repeat=2):
        for b0, b1 in itertools.product(BASIS_LABELS, repeat=2):
            gates = prep_gates(p0, 0) + prep_gates(p1, 1) + list(body) + basis_gates(b0, 0) + basis_gates(b1, 1)
            gates += [g("measure", 0), g("measure", 1)]
            circuits.append(QptCircuit(len(circuits), Circuit(2, tuple(gates)), (p0, p1), (b0, b1)))
    for bits in ("00", "01", "10", "11"):
        gates = [g("x", q) for q, b in enumerate(bits) if b == "1"] + [g("measure", 0), g("measure", 1)]
        circuits.append(QptCircuit(len(circuits), Circuit(2, tuple(gates)), calibration=bits))
    return TomographyJob(target, circuits, shots, seed)


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------

Channel = Callable[[np.ndarray], np.ndarray]


def unitary_channel(u: np.ndarray) -> Channel:
    return lambda rho: u @ rho @ u.conj().T


def _local(gates: list[Gate]) -> np.ndarray:
    return circuit_unitary(Circuit(2, tuple(gates)))


def run_job(
    job: TomographyJob,
    channel: Channel,
    confusions: Sequence[np.ndarray] | None = None,
    shots: int | None = None,
    seed: int | None = None,
) -> dict[int, dict[str, float]]:
    """Outcome distributions keyed by circuit index.

    Preparations and basis changes are ideal; ``channel`` stands for the
    target. With ``shots`` the distributions are relative frequencies.
    """
    shots = job.shots if shots is None else shots
    seed = job.seed if seed is None else seed
    if shots is not None and seed is None:
        raise TomographyError("a seed is required in shot mode")
    cal = tensor_confusion(confusions) if confusions is not None else np.eye(4)
    rng = np.random.default_rng(seed) if shots is not None else None
    out: dict[int, dict[str, float]] = {}
    for qc in job.circuits:
        if qc.calibration is not None:
            p = np.zeros(4)
            p[int(qc.calibration, 2)] = 1.0
        else:
            psi = np.kron(prep_state(qc.prep[0]), prep_state(qc.prep[1]))
            rho = channel(np.outer(psi, psi.conj()))
            v = _local(basis_gates(qc.basis[0], 0) + basis_gates(qc.basis[1], 1))
            p = np.clip(np.real(np.diag(v @ rho @ v.conj().T)), 0, None)
        p = cal @ (p / p.sum())
        if rng is not None:
            counts = rng.multinomial(shots, p / p.sum())
            p = counts / shots
        out[qc.index] = {format(i, "02b"): float(x) for i, x in enumerate(p)}
    return out


# ---------------------------------------------------------------------------
# Readout mitigation
# ---------------------------------------------------------------------------


def calibration_matrix(job: TomographyJob, results: Mapping[int, Mapping[str, float]]) -> np.ndarray:
    """4x4 column-stochastic confusion: column j is the read-out distribution for prepared j."""
    cal = np.zeros((4, 4))
    for qc in job.calibration_circuits:
        col = probs_to_vector(_normalised(results[qc.index]), 2)
        cal[:, int(qc.calibration, 2)] = col
    return cal


def _normalised(counts: Mapping[str, float]) -> dict[str, float]:
    total = sum(counts.values())
    if total <= 0:
        raise TomographyError("empty outcome distribution")
    return {k: v / total for k, v in counts.items()}


def mitigate_readout(counts: Mapping[str, float], cal: np.ndarray, max_condition: float = 1e6) -> dict[str, float]:
    """argmin ||cal p - raw|| subject to sum(p) = 1 (quasi-probabilities)."""
    cal = np.asarray(cal, dtype=float)
    if np.linalg.cond(cal) >= max_condition:
        raise TomographyError("calibration matrix is singular or badly conditioned")
    k = int(round(math.log2(cal.shape[0])))
    raw = probs_to_vector(_normalised(counts), k)
    dim = cal.shape[0]
    # KKT system of the equality-constrained least-squares problem
    kkt = np.zeros((dim + 1, dim + 1))
    kkt[:dim, :dim] = 2 * cal.T @ cal
    kkt[:dim, dim] = 1
    kkt[dim, :dim] = 1
    rhs = np.concatenate([2 * cal.T @ raw, [1.0]])
    p = np.linalg.solve(kkt, rhs)[:dim]
    return {format(i, f"0{k}b"): float(x) for i, x in enumerate(p)}


# ---------------------------------------------------------------------------
# Reconstruction
# ---------------------------------------------------------------------------

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}


def _expectation(p: np.ndarray, a: str, b: str) -> float:
    signs = np.array([(-1) ** ((x >> 1) * (a != "I") + (x & 1) * (b != "I")) for x in range(4)])
    return float(signs @ p)


def state_from_probs(per_basis: Mapping[tuple[str, str], np.ndarray]) -> np.ndarray:
    """Linear-inversion 2-qubit state from the nine Pauli-basis distributions."""
    rho = np.zeros((4, 4), dtype=complex)
    for a, b in itertools.product("IXYZ", repeat=2):
        vals = [
            _expectation(p, a, b)
            for (b0, b1), p in per_basis.items()
            if (a == "I" or a == b0) and (b == "I" or b == b1)
        ]
        rho += np.mean(vals) * np.kron(_PAULI[a], _PAULI[b])
    return rho / 4


def _unit(i: int, j: int) -> np.ndarray:
    e = np.zeros((4, 4), dtype=complex)
    e[i, j] = 1
    return e


def choi_from_outputs(inputs: Sequence[np.ndarray], outputs: Sequence[np.ndarray]) -> np.ndarray:
    """J = sum_ij E_ij (x) Channel(E_ij) from an informationally complete input set."""
    a = np.array([np.asarray(r).reshape(-1) for r in inputs]).T  # 16 x 16
    outs = np.array([np.asarray(r).reshape(-1) for r in outputs]).T
    # express each matrix unit as a combination of the input states
    coeffs = np.linalg.solve(a, np.eye(16))
    choi = np.zeros((16, 16), dtype=complex)
    for k in range(16):
        i, j = divmod(k, 4)
        out = (outs @ coeffs[:, k]).reshape(4, 4)
        choi += np.kron(_unit(i, j), out)
    return choi


def reconstruct_choi(
    job: TomographyJob,
    results: Mapping[int, Mapping[str, float]],
    mitigate: bool = True,
    project: bool = False,
) -> np.ndarray:
    missing = [qc.index for qc in job.circuits if qc.index not in results]
    if missing:
        raise TomographyError(f"missing results for circuits {missing[:5]}")
    cal = calibration_matrix(job, results) if mitigate else None
    grouped: dict[tuple[str, str], dict[tuple[str, str], np.ndarray]] = {}
    for qc in job.tomography_circuits:
        probs = results[qc.index]
        probs = mitigate_readout(probs, cal) if cal is not None else _normalised(probs)
        grouped.setdefault(qc.prep, {})[qc.basis] = probs_to_vector(probs, 2)
    inputs, outputs = [], []
    for prep, per_basis in grouped.items():
        psi = np.kron(prep_state(prep[0]), prep_state(prep[1]))
        inputs.append(np.outer(psi, psi.conj()))
        outputs.append(state_from_probs(per_basis))
    choi = choi_from_outputs(inputs, outputs)
    choi = (choi + choi.conj().T) / 2
    if project:
        choi = nearest_psd(choi, 4.0)
    return choi


def simplex_projection(x: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection of ``x`` onto {w >= 0, sum w = total}."""
    mu = np.sort(x)[::-1]
    cum = np.cumsum(mu) - total
    k = np.nonzero(mu - cum / np.arange(1, len(mu) + 1) > 0)[0][-1]
    return np.clip(x - cum[k] / (k + 1), 0, None)


def nearest_psd(m: np.ndarray, trace: float) -> np.ndarray:
    """Closest positive semidefinite matrix of the given trace in Frobenius norm.

    Negative eigenvalues are zeroed and the deficit is taken evenly from the
    rest, which keeps the estimate unbiased far better than clip-and-rescale.
    """
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * simplex_projection(w, trace)) @ v.conj().T


def choi_of_unitary(u: np.ndarray) -> np.ndarray:
    d = u.shape[0]
    vec = np.zeros(d * d, dtype=complex)
    for i in range(d):
        vec += np.kron(np.eye(d)[i], u[:, i])
    return np.outer(vec, vec.conj())


def choi_of_channel(channel: Channel, d: int = 4) -> np.ndarray:
    out = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1
            out += np.kron(e, channel(e))
    return out


def process_fidelity(choi: np.ndarray, target: np.ndarray) -> float:
    """Tr(J_target J_meas) / d^2."""
    d = target.shape[0]
    return float(np.real(np.trace(choi_of_unitary(target) @ choi))) / d**2


def average_gate_error(process_fid: float, d: int = 4) -> float:
    return 1 - (d * process_fid + 1) / (d + 1)


# ---------------------------------------------------------------------------
# Deviation angle and the coherence limit
# ---------------------------------------------------------------------------

_GOLDEN = (math.sqrt(5) - 1) / 2


def golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-5) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (a + b) / 2


def deviation_angle(
    choi: np.ndarray,
    theta: float,
    family: Callable[[float], np.ndarray],
    half_width: float = 0.5,
    tol: float = 1e-5,
) -> float:
    """theta minus the family angle that maximises the process fidelity."""
    lo, hi = theta - half_width, theta + half_width
    best = golden_max(lambda x: process_fidelity(choi, family(x)), lo, hi, tol)
    if best - lo < 2 * tol or hi - best < 2 * tol:
        raise TomographyError("fidelity maximum lies on the bracket boundary")
    return theta - best


def coherence_limit_error(t_ns: float, t1a: float, t1b: float, t2a: float, t2b: float) -> float:
    """Coherence-limited average gate error of a two-qubit gate of length ``t_ns``; times in us."""
    if t_ns < 0 or min(t1a, t1b, t2a, t2b) <= 0:
        raise ValueError("times must be positive")
    if t2a > 2 * t1a or t2b > 2 * t1b:
        raise ValueError("T2 must not exceed 2 T1")
    if math.isinf(t_ns):
        return 0.75
    t = t_ns * 1e-3
    u1 = (math.exp(-t / t1a) + math.exp(-t / t1b) + math.exp(-t / t1a - t / t1b)) / 15
    u2 = (
        math.exp(-t / t2b)
        + math.exp(-t / t2b - t / t1a)
        + math.exp(-t / t2a)
        + math.exp(-t / t2a - t / t1b)
        + 2 * math.exp(-t / t2a - t / t2b)
    ) * 2 / 15
    return 0.75 * (1 - u1 - u2)


@dataclass
class QptResult:
    fidelity: float
    choi: np.ndarray = field(repr=False)
    fidelities: list[float] = field(default_factory=list)

    @property
    def std(self) -> float:
        return float(np.std(self.fidelities, ddof=1)) if len(self.fidelities) > 1 else 0.0


def run_qpt(
    target: Circuit,
    channel: Channel,
    ideal: np.ndarray,
    confusions=None,
    shots: int | None = None,
    seed: int | None = None,
    repetitions: int = 3,
) -> QptResult:
    """Fidelity of ``channel`` against ``ideal``; shot mode averages ``repetitions`` seeded runs."""
    job = build_qpt_circuits(target, shots, seed)
    if shots is None:
        results = run_job(job, channel, confusions)
        choi = reconstruct_choi(job, results)
        f = process_fidelity(choi, ideal)
        return QptResult(f, choi, [f])
    fids, choi = [], None
    seeds = np.random.SeedSequence(seed).generate_state(repetitions)
    for s in seeds:
        results = run_job(job, channel, confusions, shots, int(s))
        choi = reconstruct_choi(job, results, project=True)
        fids.append(process_fidelity(choi, ideal))
    return QptResult(float(np.mean(fids)), choi, fids)


# ---------------------------------------------------------------------------
# Schedule characterization
# ---------------------------------------------------------------------------

VARIANTS = ("cnot", "scaled")


def schedule_channel(scheduled, backend) -> Channel:
    """The noisy process a scheduled two-qubit circuit implements."""
    return lambda rho: simulate_noisy(scheduled, backend, initial=rho)


def characterize(
    target: Circuit,
    backend,
    variant: str = "scaled",
    theta: float | None = None,
    shots: int | None = None,
    seed: int | None = None,
    readout: bool = False,
) -> dict:
    """Process fidelity, angle deviation, duration and coherence limit of one schedule.

    A target with one free parameter is bound to ``theta`` and its family of
    unitaries in that parameter supplies the deviation angle.
    """
    if variant not in VARIANTS:
        raise TomographyError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    if target.num_qubits != 2:
        raise TomographyError("process tomography needs a two-qubit target")
    names = sorted(target.parameters)
    if len(names) > 1:
        raise TomographyError(f"target has several free parameters {names}")
    family = None
    if names:
        if theta is None:
            raise TomographyError(f"target parameter {names[0]!r} needs --theta")
        name, sym = names[0], target
        family = lambda x: circuit_unitary(sym.bind({name: x}))  # noqa: E731
        target = target.bind({name: theta})
    ideal = circuit_unitary(target)
    sc = cnot_scheduled(target, backend) if variant == "cnot" else pulse_efficient_pipeline(target, backend)
    confusions = backend.confusion_matrices([0, 1]) if readout else None
    res = run_qpt(target, schedule_channel(sc, backend), ideal, confusions, shots, seed)
    delta = None
    if family is not None:
        try:
            delta = deviation_angle(res.choi, theta, family)
        except TomographyError:
            delta = None
    (t1a, t2a), (t1b, t2b) = backend.t1_t2(0), backend.t1_t2(1)
    limit = coherence_limit_error(sc.duration_ns, t1a, t1b, t2a, t2b)
    return {
        "variant": variant,
        "fidelity": res.fidelity,
        "fidelity_std": res.std,
        "average_gate_error": average_gate_error(res.fidelity),
        "delta_theta": delta,
        "durations": {"samples": sc.duration, "ns": sc.duration_ns},
        "coherence_limit": {"average_gate_error": limit, "process_fidelity": 1 - limit * 5 / 4},
    }
