"""Import of a small textual assembly subset (OpenQASM 2 flavoured) into circuits.

Supported statements::

    OPENQASM 2.0;            (optional header)
    include "qelib1.inc";    (accepted and ignored)
    qreg q[3];
    creg c[3];
    rz(2*gamma + 0.5) q[0];
    cx q[0],q[1];
    measure q[0] -> c[0];

Line comments start with ``//``. Gate names are the qcore alphabet.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .qcore import GATE_ARITY, GATE_NPARAMS, Circuit, Gate, GateError, ParamExpr


class QasmError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Register:
    kind: str  # "qreg" or "creg"
    name: str
    size: int


@dataclass(frozen=True)
class Statement:
    name: str
    params: tuple[ParamExpr, ...]
    args: tuple[tuple[str, int], ...]
    target: tuple[str, int] | None = None  # classical bit of a measure


@dataclass
class QasmProgram:
    """Abstract syntax of a parsed program."""

    registers: list[Register] = field(default_factory=list)
    statements: list[Statement] = field(default_factory=list)

    def offsets(self) -> dict[str, int]:
        out, at = {}, 0
        for r in self.registers:
            if r.kind == "qreg":
                out[r.name] = at
                at += r.size
        return out

    @property
    def num_qubits(self) -> int:
        return sum(r.size for r in self.registers if r.kind == "qreg")

    def to_circuit(self) -> Circuit:
        off = self.offsets()
        gates = [Gate(s.name, tuple(off[r] + i for r, i in s.args), s.params) for s in self.statements]
        return Circuit(self.num_qubits, tuple(gates))


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<str>\"[^\"]*\")|(?P<arrow>->)|(?P<op>[-+*/()\[\],;]))"
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0]
        pos = 0
        while pos < len(line):
            if line[pos:].strip() == "":
                break
            m = _TOKEN.match(line, pos)
            if not m or m.end() == pos:
                col = pos + len(line[pos:]) - len(line[pos:].lstrip()) + 1
                raise QasmError(f"unexpected character {line[col - 1]!r}", lineno, col)
            kind = m.lastgroup
            toks.append(_Tok(kind, m.group(kind), lineno, m.start(kind) + 1))
            pos = m.end()
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.prog = QasmProgram()
        self.sizes: dict[str, Register] = {}

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def fail(self, message: str, tok: _Tok | None = None):
        tok = tok or self.peek() or (self.toks[-1] if self.toks else _Tok("eof", "", 1, 1))
        raise QasmError(message, tok.line, tok.col)

    def take(self, text: str | None = None, kind: str | None = None) -> _Tok:
        tok = self.peek()
        if tok is None:
            last = self.toks[-1] if self.toks else _Tok("eof", "", 1, 0)
            raise QasmError(f"unexpected end of input, expected {text or kind}", last.line, last.col + len(last.text))
        if (text is not None and tok.text != text) or (kind is not None and tok.kind != kind):
            self.fail(f"expected {text or kind}, found {tok.text!r}", tok)
        self.i += 1
        return tok

    def parse(self) -> QasmProgram:
        while self.peek() is not None:
            self.statement()
        return self.prog

    def statement(self):
        head = self.take(kind="id")
        word = head.text
        if word == "OPENQASM":
            self.take(kind="num")
            self.take(";")
        elif word == "include":
            self.take(kind="str")
            self.take(";")
        elif word in ("qreg", "creg"):
            name = self.take(kind="id")
            self.take("[")
            size = self.take(kind="num")
            if not size.text.isdigit() or int(size.text) < 1:
                self.fail("register size must be a positive integer", size)
            self.take("]")
            self.take(";")
            if name.text in self.sizes:
                self.fail(f"register {name.text!r} declared twice", name)
            reg = Register(word, name.text, int(size.text))
            self.sizes[name.text] = reg
            self.prog.registers.append(reg)
        elif word == "measure":
            q = self.operand("qreg")
            self.take(kind="arrow")
            c = self.operand("creg")
            self.take(";")
            self.prog.statements.append(Statement("measure", (), (q,), c))
        else:
            self.gate(head)

    def operand(self, kind: str) -> tuple[str, int]:
        name = self.take(kind="id")
        reg = self.sizes.get(name.text)
        if reg is None or reg.kind != kind:
            self.fail(f"unknown {kind} {name.text!r}", name)
        self.take("[")
        idx = self.take(kind="num")
        if not idx.text.isdigit():
            self.fail("index must be a non-negative integer", idx)
        if int(idx.text) >= reg.size:
            self.fail(f"index {idx.text} out of range for {reg.name}[{reg.size}]", idx)
        self.take("]")
        return name.text, int(idx.text)

    def expression(self) -> ParamExpr:
        start = self.peek()
        depth, parts = 0, []
        while True:
            tok = self.peek()
            if tok is None:
                self.fail("unterminated parameter list")
            if tok.text in (",", ")") and depth == 0:
                break
            depth += {"(": 1, ")": -1}.get(tok.text, 0)
            parts.append(tok.text)
            self.i += 1
        if not parts:
            self.fail("empty parameter", start)
        try:
            return ParamExpr.parse(" ".join(parts))
        except (GateError, ValueError, ZeroDivisionError) as exc:
            self.fail(str(exc), start)

    def gate(self, head: _Tok):
        name = head.text
        if name not in GATE_ARITY or name == "measure":
            self.fail(f"unknown gate {name!r}", head)
        params: list[ParamExpr] = []
        if self.peek() is not None and self.peek().text == "(":
            self.take("(")
            params.append(self.expression())
            while self.peek() is not None and self.peek().text == ",":
                self.take(",")
                params.append(self.expression())
            self.take(")")
        if len(params) != GATE_NPARAMS[name]:
            self.fail(f"{name} takes {GATE_NPARAMS[name]} parameter(s), got {len(params)}", head)
        args = [self.operand("qreg")]
        while self.peek() is not None and self.peek().text == ",":
            self.take(",")
            args.append(self.operand("qreg"))
        self.take(";")
        if len(args) != GATE_ARITY[name]:
            self.fail(f"{name} acts on {GATE_ARITY[name]} qubit(s), got {len(args)}", head)
        if len(set(args)) != len(args):
            self.fail(f"{name} repeats a qubit", head)
        self.prog.statements.append(Statement(name, tuple(params), tuple(args)))


def parse_program(text: str) -> QasmProgram:
    return _Parser(text).parse()


def parse_qasm_subset(text: str) -> Circuit:
    prog = parse_program(text)
    if prog.num_qubits == 0:
        raise QasmError("no qreg declared", 1, 1)
    return prog.to_circuit()


def serialize_program(prog: QasmProgram) -> str:
    lines = ["OPENQASM 2.0;"]
    lines += [f"{r.kind} {r.name}[{r.size}];" for r in prog.registers]
    for s in prog.statements:
        args = ",".join(f"{r}[{i}]" for r, i in s.args)
        if s.name == "measure":
            lines.append(f"measure {args} -> {s.target[0]}[{s.target[1]}];")
        elif s.params:
            lines.append(f"{s.name}({', '.join(str(p) for p in s.params)}) {args};")
        else:
            lines.append(f"{s.name} {args};")
    return "\n".join(lines) + "\n"


def circuit_to_program(c: Circuit) -> QasmProgram:
    regs = [Register("qreg", "q", c.num_qubits)]
    measured = [gate for gate in c.gates if gate.name == "measure"]
    if measured:
        regs.append(Register("creg", "c", c.num_qubits))
    stmts = [
        Statement(gate.name, gate.params, tuple(("q", q) for q in gate.qubits), ("c", gate.qubits[0]) if gate.name == "measure" else None)
        for gate in c.gates
    ]
    return QasmProgram(regs, stmts)


def circuit_to_qasm(c: Circuit) -> str:
    return serialize_program(circuit_to_program(c))
