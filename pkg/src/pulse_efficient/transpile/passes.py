"""Circuit-to-circuit rewrite passes."""

from __future__ import annotations

import math

import numpy as np

from ..euler import wrap_angle, zsx_gates
from ..kak import kak_from_coords, phase_swap_kak, rzx_gates, synth_three_rzx
from ..qcore import Circuit, Gate, g, gate_unitary

ZERO_ANGLE = 1e-9
_HALF_PI = math.pi / 2


def u11(q: int) -> list[Gate]:
    """rz(pi/2) sx rz(pi/2), equal to a Hadamard up to phase."""
    return [g("rz", q, params=[_HALF_PI]), g("sx", q), g("rz", q, params=[_HALF_PI])]


def _rzz_as_cx(a: int, b: int, theta) -> list[Gate]:
    return [g("cx", a, b), g("rz", b, params=[theta]), g("cx", a, b)]


def _swap_as_cx(a: int, b: int) -> list[Gate]:
    return [g("cx", a, b), g("cx", b, a), g("cx", a, b)]


def unroll(c: Circuit, keep: frozenset[str] = frozenset()) -> Circuit:
    """Rewrite onto rz / sx / x / cx, leaving gate names in ``keep`` untouched."""
    out: list[Gate] = []
    for gate in c.gates:
        name = gate.name
        if name in keep or name in ("rz", "sx", "x", "cx", "measure"):
            out.append(gate)
        elif name == "h":
            out += u11(gate.qubits[0])
        elif name == "rzz":
            out += _rzz_as_cx(*gate.qubits, gate.params[0])
        elif name == "rzx":
            a, b = gate.qubits
            out += u11(b) + _rzz_as_cx(a, b, gate.params[0]) + u11(b)
        elif name == "swap":
            out += _swap_as_cx(*gate.qubits)
        elif name == "phase_swap":
            # SWAP(theta) equals SWAP . rzz(theta) up to a global phase
            a, b = gate.qubits
            out += _rzz_as_cx(a, b, gate.params[0])
            out += [g("swap", a, b)] if "swap" in keep else _swap_as_cx(a, b)
        else:
            raise ValueError(f"cannot unroll {name}")
    return c.with_gates(out)


def expand_rzz(a: int, b: int, theta: float) -> list[Gate]:
    """rzz(theta) as U11 . echoed rzx . U11 on the target, folding |theta| > pi/2 into Z (x) Z."""
    theta = wrap_angle(theta)
    out: list[Gate] = []
    if abs(theta) > _HALF_PI:
        # rzz(theta) = rzz(theta -+ pi) (Z (x) Z) up to phase
        out += [g("rz", a, params=[math.pi]), g("rz", b, params=[math.pi])]
        theta -= math.copysign(math.pi, theta)
    if abs(theta) > ZERO_ANGLE:
        out += u11(b) + rzx_gates(theta, (a, b), echoed=True) + u11(b)
    return out


def expand_markers(c: Circuit) -> Circuit:
    """Replace rzz, phase_swap and swap by echoed rzx circuits; rzx and 1q gates pass through."""
    out: list[Gate] = []
    for gate in c.gates:
        if gate.name == "rzz":
            out += expand_rzz(*gate.qubits, gate.angle)
        elif gate.name == "phase_swap":
            k = phase_swap_kak(wrap_angle(gate.angle))
            out += synth_three_rzx(k, echoed=True, qubits=gate.qubits).gates
        elif gate.name == "swap":
            k = kak_from_coords((_HALF_PI, _HALF_PI, _HALF_PI))
            out += synth_three_rzx(k, echoed=True, qubits=gate.qubits).gates
        else:
            out.append(gate)
    return c.with_gates(out)


def _same_gates(a: list[Gate], b: list[Gate]) -> bool:
    if len(a) != len(b):
        return False
    for x, y in zip(a, b):
        if x.name != y.name or x.qubits != y.qubits:
            return False
        if any(abs(p.constant - q.constant) > 1e-9 for p, q in zip(x.params, y.params)):
            return False
    return True


def _is_1q(gate: Gate) -> bool:
    return len(gate.qubits) == 1 and gate.name != "measure"


def simplify_1q(c: Circuit) -> Circuit:
    """Collapse every maximal single-qubit run to its shortest rz/sx/x Euler form."""
    runs: list[list[int]] = []
    for indices in c.wires():
        run: list[int] = []
        for idx in indices:
            if _is_1q(c.gates[idx]):
                run.append(idx)
                continue
            if run:
                runs.append(run)
            run = []
        if run:
            runs.append(run)
    removed: set[int] = set()
    emit_at: dict[int, list[Gate]] = {}
    for run in runs:
        gates = [c.gates[i] for i in run]
        if any(gate.is_parameterized for gate in gates):
            continue
        q = gates[0].qubits[0]
        u = np.eye(2, dtype=complex)
        for gate in gates:
            u = gate_unitary(gate) @ u
        new = zsx_gates(u, q)
        if _same_gates(new, gates):
            continue
        removed.update(run)
        emit_at[run[-1]] = new
    out: list[Gate] = []
    for idx, gate in enumerate(c.gates):
        if idx in emit_at:
            out += emit_at[idx]
        elif idx not in removed:
            out.append(gate)
    return c.with_gates(out)


SELF_INVERSE_2Q = frozenset({"cx", "swap"})


def _same_pair(a: Gate, b: Gate) -> bool:
    if a.name != b.name:
        return False
    if a.name == "swap":
        return set(a.qubits) == set(b.qubits)
    return a == b


def cancel_pairs(c: Circuit, names: frozenset[str] = SELF_INVERSE_2Q) -> Circuit:
    """Drop back-to-back identical self-inverse 2q gates until none remain."""
    while True:
        nxt = c.next_on_wire()
        drop: set[int] = set()
        for idx, gate in enumerate(c.gates):
            if gate.name not in names or idx in drop:
                continue
            succ = {nxt[idx][q] for q in gate.qubits}
            if len(succ) != 1:
                continue
            j = succ.pop()
            if j is not None and j not in drop and _same_pair(c.gates[j], gate):
                drop |= {idx, j}
        if not drop:
            return c
        c = c.with_gates(gate for i, gate in enumerate(c.gates) if i not in drop)


def cancel_cx_pairs(c: Circuit) -> Circuit:
    return cancel_pairs(c, frozenset({"cx"}))


def drop_zero_angles(c: Circuit) -> Circuit:
    """Remove bound rzz/rzx of angle zero and turn phase_swap(0) into a plain swap."""
    out: list[Gate] = []
    for gate in c.gates:
        if gate.name in ("rzz", "rzx", "phase_swap") and not gate.is_parameterized and abs(gate.angle) < ZERO_ANGLE:
            if gate.name == "phase_swap":
                out.append(g("swap", *gate.qubits))
            continue
        out.append(gate)
    return c.with_gates(out)


def cnot_pipeline(c: Circuit) -> Circuit:
    """Standard CNOT-based transpilation: unroll, merge 1q runs, cancel cx pairs."""
    c = unroll(c)
    prev = None
    while prev != c:
        prev = c
        c = cancel_cx_pairs(simplify_1q(c))
    return c
