"""Circuit IR, gate unitaries and unitary comparison metrics.

Conventions used throughout the package:

* list order is execution order; ``circuit_unitary`` multiplies later gates
  on the left;
* qubit 0 is the most significant bit of a basis-state index, and the first
  listed qubit of a two-qubit gate is the left tensor factor of its 4x4
  matrix (so ``rzx`` puts Z on ``qubits[0]`` and X on ``qubits[1]``);
* all angles are radians.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ParamExpr",
    "Gate",
    "Circuit",
    "GateError",
    "GATE_ARITY",
    "GATE_NPARAMS",
    "gate_unitary",
    "circuit_unitary",
    "phase_distance",
    "unitary_process_fidelity",
    "embed",
    "rz_matrix",
    "g",
    "inverse_gate",
    "inverse_gates",
]


class GateError(ValueError):
    """Raised for malformed gates, unknown names or unbound parameters."""


# ---------------------------------------------------------------------------
# Linear parameter expressions
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/()]))"
)


@dataclass(frozen=True)
class ParamExpr:
    """Linear expression ``sum(coef * name) + constant``."""

    terms: tuple[tuple[str, float], ...] = ()
    constant: float = 0.0

    def __post_init__(self):
        merged: dict[str, float] = {}
        for name, coef in self.terms:
            merged[name] = merged.get(name, 0.0) + float(coef)
        cleaned = tuple(sorted((k, v) for k, v in merged.items() if v != 0.0))
        object.__setattr__(self, "terms", cleaned)
        object.__setattr__(self, "constant", float(self.constant))

    # construction -------------------------------------------------------
    @classmethod
    def literal(cls, value: float) -> "ParamExpr":
        return cls((), float(value))

    @classmethod
    def symbol(cls, name: str, coef: float = 1.0) -> "ParamExpr":
        return cls(((name, coef),), 0.0)

    @classmethod
    def coerce(cls, value) -> "ParamExpr":
        if isinstance(value, ParamExpr):
            return value
        if isinstance(value, str):
            return cls.parse(value)
        if isinstance(value, (int, float, np.floating, np.integer)):
            return cls.literal(float(value))
        raise GateError(f"cannot interpret {value!r} as a parameter")

    @classmethod
    def parse(cls, text: str) -> "ParamExpr":
        """Parse ``"2*gamma + 0.5"``-style text; ``pi`` is a constant."""
        return _ExprParser(text).parse()

    # queries ------------------------------------------------------------
    @property
    def is_literal(self) -> bool:
        return not self.terms

    @property
    def names(self) -> frozenset[str]:
        return frozenset(k for k, _ in self.terms)

    def coefficient(self, name: str) -> float:
        for k, v in self.terms:
            if k == name:
                return v
        return 0.0

    def evaluate(self, binding: Mapping[str, float] | None = None) -> float:
        binding = binding or {}
        total = self.constant
        for name, coef in self.terms:
            if name not in binding:
                raise GateError(f"parameter {name!r} is unbound")
            total += coef * float(binding[name])
        return total

    def substitute(self, binding: Mapping[str, "ParamExpr | float"]) -> "ParamExpr":
        """Replace bound names by numbers or other linear expressions."""
        out = ParamExpr.literal(self.constant)
        for name, coef in self.terms:
            if name in binding:
                out = out + ParamExpr.coerce(binding[name]) * coef
            else:
                out = out + ParamExpr.symbol(name, coef)
        return out

    # arithmetic ---------------------------------------------------------
    def __add__(self, other) -> "ParamExpr":
        other = ParamExpr.coerce(other)
        return ParamExpr(self.terms + other.terms, self.constant + other.constant)

    __radd__ = __add__

    def __neg__(self) -> "ParamExpr":
        return self * -1.0

    def __sub__(self, other) -> "ParamExpr":
        return self + (-ParamExpr.coerce(other))

    def __rsub__(self, other) -> "ParamExpr":
        return ParamExpr.coerce(other) - self

    def __mul__(self, k) -> "ParamExpr":
        if isinstance(k, ParamExpr):
            if k.is_literal:
                k = k.constant
            elif self.is_literal:
                return k * self.constant
            else:
                raise GateError("product of two parameters is not linear")
        k = float(k)
        return ParamExpr(tuple((n, c * k) for n, c in self.terms), self.constant * k)

    __rmul__ = __mul__

    def __truediv__(self, k) -> "ParamExpr":
        if isinstance(k, ParamExpr):
            if not k.is_literal:
                raise GateError("division by a parameter is not linear")
            k = k.constant
        return self * (1.0 / float(k))

    def __str__(self) -> str:
        parts = []
        for name, coef in self.terms:
            if coef == 1.0:
                parts.append(name)
            elif coef == -1.0:
                parts.append(f"-{name}")
            else:
                parts.append(f"{coef!r}*{name}")
        if self.constant != 0.0 or not parts:
            parts.append(repr(self.constant))
        text = parts[0]
        for p in parts[1:]:
            text += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return text

    def to_json(self):
        return self.constant if self.is_literal else str(self)


class _ExprParser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise GateError(f"bad character in expression {text!r} at offset {pos}")
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def _peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.text))

    def _take(self):
        tok = self._peek()
        self.i += 1
        return tok

    def parse(self) -> ParamExpr:
        if not self.tokens:
            raise GateError("empty expression")
        expr = self._expr()
        if self.i != len(self.tokens):
            _, val, at = self._peek()
            raise GateError(f"unexpected {val!r} at offset {at} in {self.text!r}")
        return expr

    def _expr(self) -> ParamExpr:
        out = self._term()
        while self._peek()[1] in ("+", "-"):
            op = self._take()[1]
            rhs = self._term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def _term(self) -> ParamExpr:
        out = self._unary()
        while self._peek()[1] in ("*", "/"):
            op = self._take()[1]
            rhs = self._unary()
            out = out * rhs if op == "*" else out / rhs
        return out

    def _unary(self) -> ParamExpr:
        if self._peek()[1] == "-":
            self._take()
            return -self._unary()
        if self._peek()[1] == "+":
            self._take()
            return self._unary()
        return self._atom()

    def _atom(self) -> ParamExpr:
        kind, val, at = self._take()
        if kind == "num":
            return ParamExpr.literal(float(val))
        if kind == "name":
            return ParamExpr.literal(math.pi) if val == "pi" else ParamExpr.symbol(val)
        if val == "(":
            inner = self._expr()
            if self._take()[1] != ")":
                raise GateError(f"missing ')' in {self.text!r}")
            return inner
        raise GateError(f"unexpected {val!r} at offset {at} in {self.text!r}")


# ---------------------------------------------------------------------------
# Gates and circuits
# ---------------------------------------------------------------------------

GATE_ARITY = {
    "rz": 1, "sx": 1, "x": 1, "h": 1, "measure": 1,
    "cx": 2, "rzx": 2, "rzz": 2, "swap": 2, "phase_swap": 2,
}
GATE_NPARAMS = {name: 0 for name in GATE_ARITY}
GATE_NPARAMS.update(rz=1, rzx=1, rzz=1, phase_swap=1)


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    params: tuple[ParamExpr, ...] = ()

    def __post_init__(self):
        if self.name not in GATE_ARITY:
            raise GateError(f"unknown gate {self.name!r}")
        qubits = tuple(int(q) for q in self.qubits)
        params = tuple(ParamExpr.coerce(p) for p in self.params)
        if len(qubits) != GATE_ARITY[self.name]:
            raise GateError(
                f"{self.name} acts on {GATE_ARITY[self.name]} qubit(s), got {len(qubits)}"
            )
        if len(set(qubits)) != len(qubits):
            raise GateError(f"{self.name} has repeated qubits {qubits}")
        if any(q < 0 for q in qubits):
            raise GateError("negative qubit index")
        if len(params) != GATE_NPARAMS[self.name]:
            raise GateError(
                f"{self.name} takes {GATE_NPARAMS[self.name]} parameter(s), got {len(params)}"
            )
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "params", params)

    @property
    def angle(self) -> float:
        """Numeric value of the single parameter; raises if it is symbolic."""
        if not self.params[0].is_literal:
            raise GateError(f"{self.name} parameter {self.params[0]} is unbound")
        return self.params[0].constant

    @property
    def is_parameterized(self) -> bool:
        return any(not p.is_literal for p in self.params)

    def bind(self, binding: Mapping[str, float]) -> "Gate":
        if not self.params:
            return self
        return Gate(self.name, self.qubits, tuple(p.substitute(binding) for p in self.params))

    def remap(self, mapping: Mapping[int, int]) -> "Gate":
        return Gate(self.name, tuple(mapping[q] for q in self.qubits), self.params)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "qubits": list(self.qubits),
            "params": [p.to_json() for p in self.params],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Gate":
        return cls(data["name"], tuple(data["qubits"]), tuple(data.get("params", ())))


def g(name: str, *qubits: int, params: Sequence = ()) -> Gate:
    """Short constructor used by tests and builders."""
    return Gate(name, tuple(qubits), tuple(params))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        if self.num_qubits < 1:
            raise GateError("a circuit needs at least one qubit")
        gates = tuple(self.gates)
        for gate in gates:
            if max(gate.qubits) >= self.num_qubits:
                raise GateError(f"{gate} addresses a qubit beyond {self.num_qubits}")
        object.__setattr__(self, "gates", gates)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def count(self, name: str) -> int:
        return sum(1 for gate in self.gates if gate.name == name)

    def count_ops(self) -> dict[str, int]:
        ops: dict[str, int] = {}
        for gate in self.gates:
            ops[gate.name] = ops.get(gate.name, 0) + 1
        return ops

    @property
    def parameters(self) -> frozenset[str]:
        names: set[str] = set()
        for gate in self.gates:
            for p in gate.params:
                names |= p.names
        return frozenset(names)

    def with_gates(self, gates: Iterable[Gate]) -> "Circuit":
        return Circuit(self.num_qubits, tuple(gates))

    def bind(self, binding: Mapping[str, float]) -> "Circuit":
        return self.with_gates(gate.bind(binding) for gate in self.gates)

    def compose(self, other: "Circuit") -> "Circuit":
        n = max(self.num_qubits, other.num_qubits)
        return Circuit(n, self.gates + other.gates)

    def inverse(self) -> "Circuit":
        return self.with_gates(inverse_gates(self.gates))

    def without_measurements(self) -> "Circuit":
        return self.with_gates(gate for gate in self.gates if gate.name != "measure")

    def wires(self) -> list[list[int]]:
        """DAG view: gate indices touching each qubit, in execution order."""
        per_wire: list[list[int]] = [[] for _ in range(self.num_qubits)]
        for idx, gate in enumerate(self.gates):
            for q in gate.qubits:
                per_wire[q].append(idx)
        return per_wire

    def next_on_wire(self) -> list[dict[int, int | None]]:
        """For every gate, the index of the following gate on each of its qubits."""
        nxt: list[dict[int, int | None]] = [dict.fromkeys(gate.qubits) for gate in self.gates]
        for wire, indices in enumerate(self.wires()):
            for a, b in zip(indices, indices[1:]):
                nxt[a][wire] = b
        return nxt

    def to_json(self) -> dict:
        return {"num_qubits": self.num_qubits, "gates": [gate.to_json() for gate in self.gates]}

    @classmethod
    def from_json(cls, data: Mapping) -> "Circuit":
        return cls(int(data["num_qubits"]), tuple(Gate.from_json(d) for d in data["gates"]))


_SELF_INVERSE = {"x", "h", "cx", "swap", "measure"}


def inverse_gate(gate: Gate) -> list[Gate]:
    if gate.name in _SELF_INVERSE:
        return [gate]
    if gate.name in ("rz", "rzx", "rzz", "phase_swap"):
        return [Gate(gate.name, gate.qubits, (-gate.params[0],))]
    if gate.name == "sx":
        # sx^dagger = rz(pi) sx rz(pi) up to phase
        q = gate.qubits[0]
        return [g("rz", q, params=[math.pi]), g("sx", q), g("rz", q, params=[math.pi])]
    raise GateError(f"no inverse rule for {gate.name}")


def inverse_gates(gates: Sequence[Gate]) -> list[Gate]:
    out: list[Gate] = []
    for gate in reversed(gates):
        out.extend(inverse_gate(gate))
    return out


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)
CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
ZX = np.kron(Z, X)
ZZ = np.kron(Z, Z)


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _pauli_rotation(pauli: np.ndarray, theta: float) -> np.ndarray:
    # exp(-i theta P / 2) for an involutory P
    return math.cos(theta / 2) * np.eye(len(pauli)) - 1j * math.sin(theta / 2) * pauli


def phase_swap_matrix(theta: float) -> np.ndarray:
    e = np.exp(1j * theta)
    return np.array([[1, 0, 0, 0], [0, 0, e, 0], [0, e, 0, 0], [0, 0, 0, 1]], dtype=complex)


_FIXED = {"sx": SX, "x": X, "h": H, "cx": CX, "swap": SWAP}


def gate_unitary(gate: Gate, binding: Mapping[str, float] | None = None) -> np.ndarray:
    """Exact matrix of ``gate`` under ``binding``."""
    name = gate.name
    if name == "measure":
        raise GateError("measure has no unitary")
    if name in _FIXED:
        return _FIXED[name].copy()
    theta = gate.params[0].evaluate(binding)
    if name == "rz":
        return rz_matrix(theta)
    if name == "rzx":
        return _pauli_rotation(ZX, theta)
    if name == "rzz":
        return _pauli_rotation(ZZ, theta)
    if name == "phase_swap":
        return phase_swap_matrix(theta)
    raise GateError(f"unknown gate {name!r}")


def embed(matrix: np.ndarray, qubits: Sequence[int], num_qubits: int) -> np.ndarray:
    """Full 2^n x 2^n operator of ``matrix`` acting on ``qubits``."""
    dim = 2**num_qubits
    out = np.eye(dim, dtype=complex).reshape([2] * num_qubits + [dim])
    out = apply_matrix(out, matrix, qubits, num_qubits)
    return out.reshape(dim, dim)


def apply_matrix(tensor: np.ndarray, matrix: np.ndarray, qubits: Sequence[int], num_qubits: int) -> np.ndarray:
    """Apply ``matrix`` to the leading ``num_qubits`` axes of ``tensor``."""
    k = len(qubits)
    op = matrix.reshape([2] * (2 * k))
    moved = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(moved, list(range(k)), list(qubits))


DEFAULT_QUBIT_CAP = 10


def circuit_unitary(
    circuit: Circuit,
    binding: Mapping[str, float] | None = None,
    max_qubits: int = DEFAULT_QUBIT_CAP,
) -> np.ndarray:
    """Dense unitary of ``circuit``; later gates multiply on the left."""
    n = circuit.num_qubits
    if n > max_qubits:
        raise GateError(f"{n} qubits exceeds the dense-unitary cap of {max_qubits}")
    dim = 2**n
    out = np.eye(dim, dtype=complex).reshape([2] * n + [dim])
    for gate in circuit.gates:
        if gate.name == "measure":
            raise GateError("circuit_unitary does not accept measure gates")
        out = apply_matrix(out, gate_unitary(gate, binding), gate.qubits, n)
    return out.reshape(dim, dim)


def _check_dims(u: np.ndarray, v: np.ndarray):
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch {u.shape} vs {v.shape}")


def phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """sqrt(1 - |Tr(U^dag V)|/d); zero iff the two agree up to global phase."""
    _check_dims(u, v)
    d = u.shape[0]
    # For unitaries 1 - |t|/d == ||V - e^{i arg t} U||_F^2 / 2d; the norm form
    # keeps full precision near zero where sqrt(1 - overlap) would not.
    t = np.trace(u.conj().T @ v)
    phase = t / abs(t) if abs(t) > 0 else 1.0
    return float(np.linalg.norm(v - phase * u) / math.sqrt(2 * d))


def unitary_process_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    _check_dims(u, v)
    d = u.shape[0]
    return float(abs(np.trace(u.conj().T @ v)) ** 2 / d**2)
