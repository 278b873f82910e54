"""End-to-end pipelines producing scheduled circuits."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..backends import BackendError, BackendModel
from ..pulse import Schedule, schedule_circuit
from ..qcore import Circuit
from .matching import template_substitute
from .passes import cancel_pairs, cnot_pipeline, drop_zero_angles, expand_markers, simplify_1q, unroll
from .templates import CostModel, Template, default_templates


@dataclass
class ScheduledCircuit:
    circuit: Circuit
    schedule: Schedule

    @property
    def duration(self) -> int:
        return self.schedule.total_duration

    @property
    def duration_ns(self) -> float:
        return self.schedule.total_duration_ns


def check_coupling(c: Circuit, b: BackendModel):
    for gate in c.gates:
        if len(gate.qubits) == 2:
            a, t = gate.qubits
            if (min(a, t), max(a, t)) not in b.coupling:
                raise BackendError(f"{gate.name} on uncoupled qubits {a},{t}")
        if gate.name in ("rz", "rzx", "rzz", "phase_swap") and not gate.params[0].is_literal:
            raise ValueError(f"{gate.name} has an unbound parameter; bind the circuit first")


def pulse_efficient_circuit(
    c: Circuit, templates: list[Template] | None = None, cost_model: CostModel | None = None
) -> Circuit:
    """Template substitution, echo exposure and 1q merging; the output uses rz/sx/x/cx/rzx."""
    templates = default_templates() if templates is None else templates
    for gate in c.gates:
        if gate.name == "rzx" and not -2 * math.pi < gate.angle < 2 * math.pi:
            raise ValueError(f"rzx angle {gate.angle} outside (-2pi, 2pi)")
    c = unroll(c, keep=frozenset({"swap", "phase_swap", "rzx"}))
    c = template_substitute(c, templates, cost_model)
    return finish_pulse_efficient(c)


def finish_pulse_efficient(c: Circuit) -> Circuit:
    """Binding-dependent tail of the pulse-efficient pass list."""
    c = cancel_pairs(drop_zero_angles(c))
    return simplify_1q(expand_markers(c))


def pulse_efficient_pipeline(
    c: Circuit,
    b: BackendModel,
    templates: list[Template] | None = None,
    cost_model: CostModel | None = None,
) -> ScheduledCircuit:
    """Circuit with every rzx carried by a single scaled, non-echoed CR schedule."""
    check_coupling(c, b)
    out = pulse_efficient_circuit(c, templates, cost_model)
    return ScheduledCircuit(out, schedule_circuit(out, b, echoed_rzx=False))


def cnot_scheduled(c: Circuit, b: BackendModel) -> ScheduledCircuit:
    """Reference path: everything lowered to calibrated CNOTs."""
    check_coupling(c, b)
    out = cnot_pipeline(c)
    return ScheduledCircuit(out, schedule_circuit(out, b))
