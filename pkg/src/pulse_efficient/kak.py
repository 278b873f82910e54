"""Cartan KAK decomposition of two-qubit unitaries and synthesis into CNOT / RZX circuits.

A two-qubit unitary is written ``U = e^{i phase} k1 A(c) k2`` with local
``k1 = k1_left (x) k1_right``, ``k2 = k2_left (x) k2_right`` and the
non-local core ``A(c) = exp(i (c1 XX + c2 YY + c3 ZZ) / 2)``. The left factor
acts on the first listed qubit.

Canonical coordinates live in the tetrahedron with vertices (0,0,0),
(pi,0,0), (pi/2,pi/2,0), (pi/2,pi/2,pi/2): ``alpha >= beta >= gamma >= 0``
and ``alpha + beta <= pi``. For synthesis the equivalent "reduced" form
``pi/2 >= r1 >= r2 >= |r3|`` is used since it minimises the total rotation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .euler import zsx_gates
from .qcore import CX, I2, SWAP, X, Y, Z, Circuit, Gate, g, phase_swap_matrix

__all__ = [
    "WeylCoordinates",
    "KakDecomposition",
    "CanonicalForm",
    "interaction_unitary",
    "kak_decompose",
    "kak_from_coords",
    "weyl_canonicalize",
    "swap_theta_coords",
    "synth_three_cnot",
    "synth_three_rzx",
    "phase_swap_kak",
]

ZERO_ANGLE = 1e-9
_SNAP = 1e-12
_PI = math.pi
_HALF_PI = math.pi / 2

MAGIC = np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]], dtype=complex
) / math.sqrt(2)
MAGIC_DAG = MAGIC.conj().T

_PAULIS = (X, Y, Z)
_PAIRS = tuple(np.kron(p, p) for p in _PAULIS)

# Eigenvalues of XX, YY, ZZ in the magic basis (all three are diagonal there).
_LAMBDA = np.array([np.real(np.diag(MAGIC_DAG @ p @ MAGIC)) for p in _PAIRS]).T
_SOLVE = np.linalg.inv(np.hstack([_LAMBDA / 2, np.ones((4, 1))]))

_S = np.diag([1, 1j])
_RX90 = (I2 - 1j * X) / math.sqrt(2)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
# Local Cliffords V with V sigma_j V^dag = +-sigma_k, keyed by the swapped pair.
_SWAPPERS = {(0, 1): _S, (0, 2): _H, (1, 2): _RX90}


@dataclass(frozen=True)
class WeylCoordinates:
    alpha: float
    beta: float
    gamma: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)

    def in_chamber(self, tol: float = 1e-9) -> bool:
        a, b, c = self.as_tuple()
        return (
            _PI + tol >= a >= b - tol
            and b >= c - tol
            and c >= -tol
            and a + b + c <= 1.5 * _PI + tol
        )

    def in_tetrahedron(self, tol: float = 1e-9) -> bool:
        return self.in_chamber(tol) and self.alpha + self.beta <= _PI + tol


def interaction_unitary(c) -> np.ndarray:
    """exp(i (c1 XX + c2 YY + c3 ZZ) / 2)."""
    out = np.eye(4, dtype=complex)
    for cj, pair in zip(c, _PAIRS):
        out = out @ (math.cos(cj / 2) * np.eye(4) + 1j * math.sin(cj / 2) * pair)
    return out


@dataclass(frozen=True)
class KakDecomposition:
    k1_left: np.ndarray
    k1_right: np.ndarray
    k2_left: np.ndarray
    k2_right: np.ndarray
    coords: WeylCoordinates
    global_phase: float

    @property
    def k1(self) -> np.ndarray:
        return np.kron(self.k1_left, self.k1_right)

    @property
    def k2(self) -> np.ndarray:
        return np.kron(self.k2_left, self.k2_right)

    def unitary(self) -> np.ndarray:
        core = interaction_unitary(self.coords.as_tuple())
        return cmath.exp(1j * self.global_phase) * self.k1 @ core @ self.k2


@dataclass
class CanonicalForm:
    """``A(raw) = e^{i phase} (left[0] (x) left[1]) A(coords) (right[0] (x) right[1])``."""

    coords: tuple[float, float, float]
    left: list[np.ndarray]
    right: list[np.ndarray]
    phase: float = 0.0

    @property
    def weyl(self) -> WeylCoordinates:
        return WeylCoordinates(*self.coords)

    def correction_gates(self, qubits=(0, 1)) -> tuple[list[Gate], list[Gate]]:
        """Gates to run before and after A(coords) so the result equals A(raw) up to phase."""
        return _locals(self.right[0], self.right[1], qubits), _locals(self.left[0], self.left[1], qubits)

    # Each move rewrites A(c_old) in terms of A(c_new) and records the locals.
    def shift(self, j: int, sign: int):
        # A(c) = A(c + sign*pi*e_j) exp(-i sign pi/2 P_j) = A(c') (-i sign) P_j
        c = list(self.coords)
        c[j] += sign * _PI
        self.coords = tuple(c)
        self.right = [_PAULIS[j] @ self.right[0], _PAULIS[j] @ self.right[1]]
        self.phase -= sign * _HALF_PI

    def flip(self, j: int, k: int):
        # conjugating by sigma_m on the first qubit negates c_j and c_k
        m = 3 - j - k
        c = list(self.coords)
        c[j], c[k] = -c[j], -c[k]
        self.coords = tuple(c)
        self.left = [self.left[0] @ _PAULIS[m], self.left[1]]
        self.right = [_PAULIS[m] @ self.right[0], self.right[1]]

    def swap(self, j: int, k: int):
        j, k = min(j, k), max(j, k)
        v = _SWAPPERS[(j, k)]
        c = list(self.coords)
        c[j], c[k] = c[k], c[j]
        self.coords = tuple(c)
        vd = v.conj().T
        self.left = [self.left[0] @ vd, self.left[1] @ vd]
        self.right = [v @ self.right[0], v @ self.right[1]]


def _reduce(raw) -> CanonicalForm:
    """Bring coordinates to pi/2 >= r1 >= r2 >= |r3| with tracked locals."""
    form = CanonicalForm(tuple(float(x) for x in raw), [I2, I2], [I2, I2], 0.0)
    for j in range(3):
        cj = form.coords[j]
        n = round(cj / _PI)
        # move into [-pi/2, pi/2] one period at a time
        for _ in range(abs(n)):
            form.shift(j, -1 if n > 0 else 1)
        if form.coords[j] <= -_HALF_PI + _SNAP:
            form.shift(j, 1)
    # sort by magnitude, descending (bubble sort keeps the move list short)
    for _ in range(3):
        for j in range(2):
            if abs(form.coords[j]) < abs(form.coords[j + 1]):
                form.swap(j, j + 1)
    c1, c2, _ = form.coords
    if c1 < 0 and c2 < 0:
        form.flip(0, 1)
    elif c1 < 0:
        form.flip(0, 2)
    elif c2 < 0:
        form.flip(1, 2)
    return form


def _to_chamber(form: CanonicalForm) -> CanonicalForm:
    c1, c2, c3 = form.coords
    if c3 < -_SNAP:
        # (c1, c2, c3) ~ (-c1, c2, -c3) ~ (pi - c1, c2, -c3)
        form.flip(0, 2)
        form.shift(0, 1)
    elif c3 < 0:
        form.coords = (c1, c2, 0.0)
    return form


def weyl_canonicalize(raw) -> CanonicalForm:
    """Canonical chamber point of ``raw`` with the local corrections that restore it."""
    return _to_chamber(_reduce(raw))


def _real_diagonalizer(m: np.ndarray) -> np.ndarray:
    """Real orthogonal P (det +1) with P^T m P diagonal for symmetric unitary m."""
    re = (m.real + m.real.T) / 2
    im = (m.imag + m.imag.T) / 2
    w, q = np.linalg.eigh(re)
    start = 0
    while start < 4:
        stop = start + 1
        while stop < 4 and abs(w[stop] - w[start]) < 1e-6:
            stop += 1
        if stop - start > 1:
            block = q[:, start:stop]
            _, r = np.linalg.eigh(block.T @ im @ block)
            q[:, start:stop] = block @ r
        start = stop
    # deterministic column signs and order
    for col in range(4):
        pivot = next(i for i in range(4) if abs(q[i, col]) > 1e-6)
        if q[pivot, col] < 0:
            q[:, col] = -q[:, col]
    phases = np.angle(np.diag(q.T @ m @ q))
    order = sorted(range(4), key=lambda i: (round(phases[i], 9), tuple(np.round(q[:, i], 9))))
    q = q[:, order]
    if np.linalg.det(q) < 0:
        q[:, 3] = -q[:, 3]
    return q


def _kron_factor(k: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Split k = e^{i phase} a (x) b with a, b in SU(2)."""
    r = k.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(r)
    a = math.sqrt(s[0]) * u[:, 0].reshape(2, 2)
    b = math.sqrt(s[0]) * vh[0].reshape(2, 2)
    da = cmath.sqrt(np.linalg.det(a))
    a, b = a / da, b * da
    db = cmath.sqrt(np.linalg.det(b))
    return a, b / db, cmath.phase(db)


def _check_unitary(u: np.ndarray):
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {u.shape}")
    if np.linalg.norm(u.conj().T @ u - np.eye(4)) > 1e-8:
        raise ValueError("input is not unitary")
    return u


def kak_decompose(u: np.ndarray) -> KakDecomposition:
    u = _check_unitary(u)
    phase = cmath.phase(np.linalg.det(u)) / 4
    su = u * cmath.exp(-1j * phase)
    up = MAGIC_DAG @ su @ MAGIC
    m2 = up.T @ up
    p = _real_diagonalizer(m2)
    theta = np.angle(np.diag(p.T @ m2 @ p)) / 2
    if round(theta.sum() / _PI) % 2:
        theta[0] += _PI
    k1 = (up @ p @ np.diag(np.exp(-1j * theta))).real
    a1, a0, ph1 = _kron_factor(MAGIC @ k1 @ MAGIC_DAG)
    b1, b0, ph2 = _kron_factor(MAGIC @ p.T @ MAGIC_DAG)
    sol = _SOLVE @ theta
    raw, phi = sol[:3], sol[3]
    form = weyl_canonicalize(raw)
    return KakDecomposition(
        k1_left=a1 @ form.left[0],
        k1_right=a0 @ form.left[1],
        k2_left=form.right[0] @ b1,
        k2_right=form.right[1] @ b0,
        coords=form.weyl,
        global_phase=phase + ph1 + ph2 + phi + form.phase,
    )


def kak_from_coords(raw, phase: float = 0.0) -> KakDecomposition:
    """Decomposition of ``e^{i phase} A(raw)`` built from the move sequence alone."""
    form = weyl_canonicalize(raw)
    return KakDecomposition(
        form.left[0], form.left[1], form.right[0], form.right[1], form.weyl, phase + form.phase
    )


def swap_theta_coords(theta: float) -> WeylCoordinates:
    """Canonical coordinates of the phase-swap gate SWAP(theta)."""
    if abs(theta) > _PI + 1e-12:
        raise ValueError("|theta| must not exceed pi")
    eta = -1.0 if theta > 0 else 1.0
    return weyl_canonicalize((eta * _HALF_PI, eta * _HALF_PI, theta + eta * _HALF_PI)).weyl


def phase_swap_kak(theta: float) -> KakDecomposition:
    """SWAP(theta) = e^{i(theta/2 - pi/4)} A(pi/2, pi/2, pi/2 - theta); Clifford locals only."""
    return kak_from_coords((_HALF_PI, _HALF_PI, _HALF_PI - theta), theta / 2 - _PI / 4)


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------


def _locals(left: np.ndarray, right: np.ndarray, qubits) -> list[Gate]:
    return zsx_gates(left, qubits[0]) + zsx_gates(right, qubits[1])


def _rzx_block(axis: int, angle: float, qubits, echoed: bool) -> list[Gate]:
    """exp(i angle P_axis P_axis / 2) as a conjugated rzx(-angle)."""
    a, b = qubits
    if axis == 0:
        pre, post = [g("h", a)], [g("h", a)]
    elif axis == 1:
        pre = [g("rz", a, params=[-_HALF_PI]), g("h", a), g("rz", b, params=[-_HALF_PI])]
        post = [g("h", a), g("rz", a, params=[_HALF_PI]), g("rz", b, params=[_HALF_PI])]
    else:
        pre, post = [g("h", b)], [g("h", b)]
    return pre + rzx_gates(-angle, qubits, echoed) + post


def rzx_gates(angle: float, qubits, echoed: bool) -> list[Gate]:
    """rzx(angle), or its exposed echo rzx(a/2) x rzx(-a/2) x on the control."""
    a, b = qubits
    if not echoed:
        return [g("rzx", a, b, params=[angle])]
    return [
        g("rzx", a, b, params=[angle / 2]),
        g("x", a),
        g("rzx", a, b, params=[-angle / 2]),
        g("x", a),
    ]


def synth_three_rzx(k: KakDecomposition, echoed: bool = False, qubits=(0, 1)) -> Circuit:
    """Circuit of at most three rzx gates (six when echoed) reproducing ``k``."""
    form = _reduce(k.coords.as_tuple())
    first = _locals(form.right[0] @ k.k2_left, form.right[1] @ k.k2_right, qubits)
    last = _locals(k.k1_left @ form.left[0], k.k1_right @ form.left[1], qubits)
    core: list[Gate] = []
    # factors commute; emit ZZ, YY, XX so the largest angle is adjacent to k1
    for axis in (2, 1, 0):
        angle = form.coords[axis]
        if abs(angle) > ZERO_ANGLE:
            core += _rzx_block(axis, angle, qubits, echoed)
    return Circuit(max(qubits) + 1, tuple(first + core + last))


@lru_cache(maxsize=None)
def _cnot_kak() -> KakDecomposition:
    return kak_decompose(CX)


def synth_three_cnot(k: KakDecomposition, qubits=(0, 1)) -> Circuit:
    """Circuit over rz / sx / x / cx with at most three cx reproducing ``k``."""
    a, b = qubits
    c1, c2, c3 = k.coords.as_tuple()
    n = max(qubits) + 1
    if max(abs(c1), abs(c2), abs(c3)) < ZERO_ANGLE:
        return Circuit(n, tuple(_locals(k.k1_left @ k.k2_left, k.k1_right @ k.k2_right, qubits)))
    if abs(c1 - _HALF_PI) < ZERO_ANGLE and abs(c2) < ZERO_ANGLE and abs(c3) < ZERO_ANGLE:
        # U = k1 A k2 and CX = e^{i p} L A R  =>  U ~ (k1 L^dag) CX (R^dag k2)
        ck = _cnot_kak()
        gates = _locals(ck.k2_left.conj().T @ k.k2_left, ck.k2_right.conj().T @ k.k2_right, qubits)
        gates.append(g("cx", a, b))
        gates += _locals(k.k1_left @ ck.k1_left.conj().T, k.k1_right @ ck.k1_right.conj().T, qubits)
        return Circuit(n, tuple(gates))
    from .qcore import rz_matrix

    def ry(t):
        return np.array([[math.cos(t / 2), -math.sin(t / 2)], [math.sin(t / 2), math.cos(t / 2)]])

    # exp(i(c.Sigma)/2) = rz_a(pi/2) cx(b,a) ry_b(pi/2 - c2) cx(a,b)
    #                     [rz_a(pi/2 - c3) ry_b(c1 - pi/2)] cx(b,a) rz_b(-pi/2), up to phase
    gates = _locals(k.k2_left, rz_matrix(-_HALF_PI) @ k.k2_right, qubits)
    gates.append(g("cx", b, a))
    gates += _locals(rz_matrix(_HALF_PI - c3), ry(c1 - _HALF_PI), qubits)
    gates.append(g("cx", a, b))
    gates += zsx_gates(ry(_HALF_PI - c2), b)
    gates.append(g("cx", b, a))
    gates += _locals(k.k1_left @ rz_matrix(_HALF_PI), k.k1_right, qubits)
    return Circuit(n, tuple(gates))
