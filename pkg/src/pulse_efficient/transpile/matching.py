"""Forward template matching, equation-system binding and substitution."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..qcore import Circuit, Gate, ParamExpr, inverse_gates
from .templates import SYMMETRIC_GATES, CostModel, MatchCandidate, Template

BINDING_TOL = 1e-9

Binding = dict[str, ParamExpr]


def _snap(x: float) -> float:
    return 0.0 if abs(x) < 1e-14 else float(x)


def solve_linear_system(equations: Sequence[tuple[ParamExpr, ParamExpr]], tol: float = BINDING_TOL):
    """Solve ``lhs_k(theta) = rhs_k`` for the template parameters appearing on the left.

    Right-hand sides may be symbolic (linear in circuit parameters), in which
    case each symbol column is solved independently. Returns the binding or
    ``None`` when the system is inconsistent or leaves a parameter free.
    """
    if not equations:
        return {}
    unknowns = sorted(set().union(*(lhs.names for lhs, _ in equations)))
    symbols = sorted(set().union(*(rhs.names for _, rhs in equations)))
    a = np.array([[lhs.coefficient(u) for u in unknowns] for lhs, _ in equations], dtype=float)
    b = np.array(
        [[rhs.constant - lhs.constant] + [rhs.coefficient(s) for s in symbols] for lhs, rhs in equations],
        dtype=float,
    )
    if not unknowns:
        return {} if np.max(np.abs(b)) <= tol else None
    if np.linalg.matrix_rank(a) < len(unknowns):
        return None
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    if np.max(np.abs(a @ sol - b)) > tol:
        return None
    binding: Binding = {}
    for i, name in enumerate(unknowns):
        terms = tuple((s, _snap(sol[i, 1 + k])) for k, s in enumerate(symbols))
        binding[name] = ParamExpr(terms, _snap(sol[i, 0]))
    return binding


def match_equations(m: MatchCandidate, c: Circuit) -> list[tuple[ParamExpr, ParamExpr]]:
    eqs = []
    for t_idx, c_idx in m.pairs:
        tgate, cgate = m.template.gates[t_idx], c.gates[c_idx]
        eqs.extend(zip(tgate.params, cgate.params))
    return eqs


def solve_bindings(m: MatchCandidate, c: Circuit, tol: float = BINDING_TOL):
    """One linear equation per matched parameter; ``None`` means inconsistent."""
    return solve_linear_system(match_equations(m, c), tol)


def _bind_qubits(tgate: Gate, cgate: Gate, qmap: dict[int, int]):
    if tgate.name != cgate.name:
        return None
    orders = [cgate.qubits]
    if tgate.name in SYMMETRIC_GATES:
        orders.append(cgate.qubits[::-1])
    for order in orders:
        trial = dict(qmap)
        ok = True
        for tq, cq in zip(tgate.qubits, order):
            if tq in trial:
                ok = trial[tq] == cq
            elif cq in trial.values():
                ok = False
            else:
                trial[tq] = cq
            if not ok:
                break
        if ok:
            return trial
    return None


def _forward_match(c: Circuit, nxt, t: Template, s: int, start: int) -> list[MatchCandidate]:
    """All prefixes of the longest forward match of t[s:] anchored at circuit gate ``start``."""
    qmap = _bind_qubits(t.gates[s], c.gates[start], {})
    if qmap is None:
        return []
    pairs = [(s, start)]
    last = {q: start for q in c.gates[start].qubits}
    out = [MatchCandidate(t, tuple(pairs), dict(qmap))]
    for k in range(s + 1, len(t)):
        tgate = t.gates[k]
        mapped = [qmap[tq] for tq in tgate.qubits if tq in qmap]
        if not mapped:
            break
        cands = {nxt[last[cq]][cq] for cq in mapped}
        if len(cands) != 1 or None in cands:
            break
        idx = cands.pop()
        trial = _bind_qubits(tgate, c.gates[idx], qmap)
        if trial is None:
            break
        qmap = trial
        pairs.append((k, idx))
        for q in c.gates[idx].qubits:
            last[q] = idx
        out.append(MatchCandidate(t, tuple(pairs), dict(qmap)))
    return out


def _descendants(c: Circuit, matched: set[int]) -> set[int] | None:
    """Unmatched gates in the match span that depend on a matched gate; None if not convex."""
    lo, hi = min(matched), max(matched)
    active: set[int] = set()
    tainted: set[int] = set()
    desc: set[int] = set()
    for idx in range(lo, hi + 1):
        qs = set(c.gates[idx].qubits)
        if idx in matched:
            if qs & tainted:
                return None
            active |= qs
        elif qs & active:
            desc.add(idx)
            active |= qs
            tainted |= qs
    return desc


def replacement_gates(m: MatchCandidate, binding: Binding) -> list[Gate]:
    s, e = m.template_span
    gates = m.template.gates
    remainder = list(gates[e + 1:]) + list(gates[:s])
    out = []
    for gate in inverse_gates(remainder):
        out.append(gate.bind(binding).remap(m.qubit_map))
    return out


def apply_match(c: Circuit, m: MatchCandidate, replacement: Sequence[Gate]) -> Circuit:
    matched = set(m.circuit_indices)
    desc = _descendants(c, matched)
    if desc is None:
        raise ValueError("match is not convex")
    lo, hi = min(matched), max(matched)
    span = range(lo, hi + 1)
    before = [c.gates[i] for i in span if i not in matched and i not in desc]
    after = [c.gates[i] for i in span if i in desc]
    gates = list(c.gates[:lo]) + before + list(replacement) + after + list(c.gates[hi + 1:])
    return c.with_gates(gates)


def _evaluate(c: Circuit, m: MatchCandidate, cm: CostModel):
    """(saving, replacement) for a usable match, else None."""
    if len(m.qubit_map) != m.template.circuit.num_qubits:
        return None
    if _descendants(c, set(m.circuit_indices)) is None:
        return None
    binding = solve_bindings(m, c)
    if binding is None or set(binding) != set(m.template.circuit.parameters):
        return None
    repl = replacement_gates(m, binding)
    saving = cm.total(c.gates[i] for i in m.circuit_indices) - cm.total(repl)
    if saving <= 0:
        return None
    return saving, repl


def find_best_match(c: Circuit, templates: Sequence[Template], cm: CostModel, nxt=None):
    """Leftmost start gate with a cost-reducing match; the largest saving wins there."""
    nxt = c.next_on_wire() if nxt is None else nxt
    for start, gate in enumerate(c.gates):
        best = None
        for t in templates:
            for s, tgate in enumerate(t.gates):
                if tgate.name != gate.name:
                    continue
                for m in reversed(_forward_match(c, nxt, t, s, start)):
                    res = _evaluate(c, m, cm)
                    if res is not None and (best is None or res[0] > best[0]):
                        best = (res[0], m, res[1])
        if best is not None:
            return best[1], best[2]
    return None


def template_substitute(c: Circuit, templates, cm: CostModel | None = None) -> Circuit:
    """Greedily replace cost-reducing template matches, left to right."""
    if isinstance(templates, Template):
        templates = [templates]
    cm = cm or CostModel()
    # each accepted substitution lowers the integer cost, so this terminates
    while True:
        found = find_best_match(c, templates, cm)
        if found is None:
            return c
        m, repl = found
        c = apply_match(c, m, repl)
