"""Statevector and duration-driven density-matrix simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .qcore import Circuit, apply_matrix, gate_unitary

MAX_STATEVECTOR_QUBITS = 24
MAX_DENSITY_QUBITS = 12


class SimulationError(ValueError):
    pass


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return psi


def simulate_ideal(c: Circuit, binding: Mapping[str, float] | None = None, initial=None) -> np.ndarray:
    n = c.num_qubits
    if n > MAX_STATEVECTOR_QUBITS:
        raise SimulationError(f"{n} qubits exceeds the statevector limit {MAX_STATEVECTOR_QUBITS}")
    psi = zero_state(n) if initial is None else np.asarray(initial, dtype=complex)
    psi = psi.reshape([2] * n)
    for gate in c.gates:
        if gate.name == "measure":
            raise SimulationError("remove measurements before simulate_ideal")
        psi = apply_matrix(psi, gate_unitary(gate, binding), gate.qubits, n)
    return psi.reshape(-1)


# ---------------------------------------------------------------------------
# Noise
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThermalChannel:
    """Amplitude damping plus pure dephasing over ``t_ns``; T1, T2 in microseconds."""

    t_ns: float
    t1_us: float
    t2_us: float

    def __post_init__(self):
        if self.t_ns < 0:
            raise SimulationError("negative duration")
        if self.t2_us > 2 * self.t1_us * (1 + 1e-12):
            raise SimulationError(f"T2 = {self.t2_us} exceeds 2 T1 = {2 * self.t1_us}")

    @property
    def population_decay(self) -> float:
        """exp(-t/T1): surviving excited population."""
        return math.exp(-self.t_ns / (1e3 * self.t1_us))

    @property
    def coherence_decay(self) -> float:
        """exp(-t/T2): surviving off-diagonal magnitude."""
        return math.exp(-self.t_ns / (1e3 * self.t2_us))

    def kraus(self) -> list[np.ndarray]:
        e1 = self.population_decay
        amp = [np.array([[1, 0], [0, math.sqrt(e1)]], dtype=complex), np.array([[0, math.sqrt(1 - e1)], [0, 0]], dtype=complex)]
        # remaining dephasing after amplitude damping's own exp(-t/2T1)
        f = self.coherence_decay / math.sqrt(e1) if e1 > 0 else 0.0
        f = min(f, 1.0)
        deph = [math.sqrt((1 + f) / 2) * np.eye(2, dtype=complex), math.sqrt((1 - f) / 2) * np.diag([1, -1]).astype(complex)]
        return [p @ a for p in deph for a in amp]


def _relax(rho: np.ndarray, q: int, n: int, ch: ThermalChannel) -> np.ndarray:
    """Apply ``ch`` to qubit ``q`` of a 2^n x 2^n density matrix, in place."""
    if ch.t_ns == 0:
        return rho
    e1, e2 = ch.population_decay, ch.coherence_decay
    # rows split as (high, q, low) and likewise for columns
    r = rho.reshape(2**q, 2, 2 ** (n - q - 1), 2**q, 2, 2 ** (n - q - 1))
    r[:, 0, :, :, 0, :] += (1 - e1) * r[:, 1, :, :, 1, :]
    r[:, 1, :, :, 1, :] *= e1
    r[:, 0, :, :, 1, :] *= e2
    r[:, 1, :, :, 0, :] *= e2
    return rho


def apply_kraus(rho: np.ndarray, kraus: Sequence[np.ndarray], qubits: Sequence[int]) -> np.ndarray:
    """Generic channel on a 2^n x 2^n density matrix (reference path for tests)."""
    dim = rho.shape[0]
    n = int(round(math.log2(dim)))
    t = rho.reshape([2] * (2 * n))
    acc = np.zeros_like(t)
    for k in kraus:
        x = apply_matrix(t, k, qubits, n)
        acc = acc + apply_matrix(x, k.conj(), [n + q for q in qubits], n)
    return acc.reshape(dim, dim)


def apply_thermal(rho: np.ndarray, ch: ThermalChannel, q: int) -> np.ndarray:
    n = int(round(math.log2(rho.shape[0])))
    return _relax(np.array(rho, dtype=complex), q, n, ch)


_SWAP4 = np.eye(4)[[0, 2, 1, 3]]


def _mid(r: np.ndarray, u: np.ndarray) -> np.ndarray:
    """out[a, i, b] = sum_j u[i, j] r[a, j, b] for r of shape (A, d, B)."""
    a, d, b = r.shape
    if b >= 64:
        return np.matmul(u, r)
    # short trailing axis: one GEMM against u (x) 1 beats many tiny products
    return (r.reshape(a, d * b) @ np.kron(u, np.eye(b)).T).reshape(a, d, b)


def _apply_unitary_dm(rho: np.ndarray, u: np.ndarray, qubits, n: int) -> np.ndarray:
    """U rho U^dagger for a 1- or 2-qubit U."""
    qubits = tuple(qubits)
    if len(qubits) == 2 and qubits[0] == qubits[1] + 1:
        u = _SWAP4 @ u @ _SWAP4
        qubits = qubits[::-1]
    dim = 2**n
    if len(qubits) == 1 or qubits[1] == qubits[0] + 1:
        lo, d = qubits[0], u.shape[0]
        x = _mid(rho.reshape(2**lo, d, -1), u)
        return _mid(x.reshape(dim * 2**lo, d, -1), u.conj()).reshape(dim, dim)
    t = rho.reshape([2] * (2 * n))
    t = apply_matrix(t, u, qubits, n)
    t = apply_matrix(t, u.conj(), [n + q for q in qubits], n)
    return t.reshape(dim, dim)


def _apply_diagonal_dm(rho: np.ndarray, d: np.ndarray, q: int, n: int) -> np.ndarray:
    """Single-qubit diagonal unitary, in place."""
    r = rho.reshape(2**q, 2, 2 ** (n - q - 1), 2**q, 2, 2 ** (n - q - 1))
    r *= np.outer(d, d.conj()).reshape(1, 2, 1, 1, 2, 1)
    return rho


def pure_density(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


def simulate_noisy(scheduled, backend, initial: np.ndarray | None = None, qubit_props: Sequence[int] | None = None) -> np.ndarray:
    """Density matrix after the timed instructions of ``scheduled`` with T1/T2 relaxation.

    Each instruction's ideal unitary is followed by relaxation of its qubits
    over its duration; idle gaps between instructions, and the tail up to the
    end of the schedule, relax as well. ``qubit_props[q]`` names the backend
    qubit whose coherence times apply to circuit qubit ``q``.
    """
    sched = getattr(scheduled, "schedule", scheduled)
    n = sched.num_qubits
    if n > MAX_DENSITY_QUBITS:
        raise SimulationError(f"{n} qubits exceeds the density-matrix limit {MAX_DENSITY_QUBITS}")
    props = list(range(n)) if qubit_props is None else list(qubit_props)
    dt = sched.dt_ns
    rho = pure_density(zero_state(n)) if initial is None else np.array(initial, dtype=complex)
    rho = np.ascontiguousarray(rho)
    # Relaxation is a semigroup and commutes with rz, so the noise owed by each
    # qubit accumulates here and is flushed before the next gate that needs it.
    owed = [0] * n
    clock = [0] * n

    def flush(q: int):
        nonlocal rho
        if owed[q] > 0:
            t1, t2 = backend.t1_t2(props[q])
            rho = _relax(rho, q, n, ThermalChannel(owed[q] * dt, t1, t2))
            owed[q] = 0

    for tg in sched.timed:
        qs = tg.gate.qubits
        for q in qs:
            owed[q] += tg.start - clock[q]
        if tg.gate.name == "rz":
            rho = _apply_diagonal_dm(rho, np.diag(gate_unitary(tg.gate)), qs[0], n)
        else:
            for q in qs:
                flush(q)
            rho = _apply_unitary_dm(rho, gate_unitary(tg.gate), qs, n)
        for q in qs:
            owed[q] += tg.duration
            clock[q] = tg.stop
    end = sched.total_duration
    for q in range(n):
        owed[q] += end - clock[q]
        flush(q)
    return rho


# ---------------------------------------------------------------------------
# Measurement
# ---------------------------------------------------------------------------


def _bits(i: int, k: int) -> str:
    return format(i, f"0{k}b") if k else ""


def probabilities(state: np.ndarray) -> np.ndarray:
    """Computational-basis probabilities of a statevector or density matrix."""
    state = np.asarray(state)
    p = np.real(np.diag(state)) if state.ndim == 2 else np.abs(state) ** 2
    return np.clip(p, 0.0, None)


def marginal(p: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    t = p.reshape([2] * n)
    rest = tuple(q for q in range(n) if q not in qubits)
    m = t.sum(axis=rest) if rest else t
    # summed axes keep ascending order; reorder to the requested qubit order
    kept = sorted(qubits)
    m = np.transpose(m, [kept.index(q) for q in qubits])
    return m.reshape(-1)


def measure_probs(state: np.ndarray, qubits: Sequence[int] | None = None) -> dict[str, float]:
    """Born-rule probabilities keyed by bitstrings, first listed qubit leftmost."""
    state = np.asarray(state)
    n = int(round(math.log2(state.shape[0])))
    qubits = list(range(n)) if qubits is None else list(qubits)
    p = marginal(probabilities(state), qubits, n)
    p = p / p.sum()
    return {_bits(i, len(qubits)): float(v) for i, v in enumerate(p) if v > 0}


def probs_to_vector(probs: Mapping[str, float], k: int) -> np.ndarray:
    v = np.zeros(2**k)
    for key, val in probs.items():
        if len(key) != k:
            raise SimulationError(f"outcome {key!r} does not have {k} bits")
        v[int(key, 2)] = val
    return v


def vector_to_probs(v: np.ndarray, k: int, keep_zeros: bool = False) -> dict[str, float]:
    return {_bits(i, k): float(x) for i, x in enumerate(v) if keep_zeros or x != 0}


def tensor_confusion(confusions: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1))
    for m in confusions:
        out = np.kron(out, np.asarray(m, dtype=float))
    return out


def apply_confusion(probs: Mapping[str, float], confusions: Sequence[np.ndarray]) -> dict[str, float]:
    """Apply column-stochastic per-qubit confusion matrices ([read, prep])."""
    k = len(confusions)
    v = tensor_confusion(confusions) @ probs_to_vector(probs, k)
    return vector_to_probs(v, k)


def sample(probs: Mapping[str, float], shots: int, seed: int) -> dict[str, int]:
    keys = sorted(probs)
    p = np.array([probs[k] for k in keys], dtype=float)
    p = np.clip(p, 0, None)
    p = p / p.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, p)
    return {k: int(c) for k, c in zip(keys, draws) if c > 0}
