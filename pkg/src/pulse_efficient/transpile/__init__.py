"""Rewrite passes: template substitution, echo exposure, 1q simplification and pipelines."""

from .matching import (
    apply_match,
    find_best_match,
    solve_bindings,
    solve_linear_system,
    template_substitute,
)
from .passes import cancel_cx_pairs, cancel_pairs, cnot_pipeline, drop_zero_angles, expand_markers, expand_rzz, simplify_1q, u11, unroll
from .pipeline import ScheduledCircuit, cnot_scheduled, finish_pulse_efficient, pulse_efficient_circuit, pulse_efficient_pipeline
from .templates import (
    DEFAULT_COSTS,
    CostModel,
    MatchCandidate,
    Template,
    TemplateError,
    dressed_rzz_template,
    default_templates,
    phase_swap_template,
    rzz_template,
    templates_by_name,
)

__all__ = [
    "apply_match",
    "find_best_match",
    "solve_bindings",
    "solve_linear_system",
    "template_substitute",
    "cancel_cx_pairs",
    "cancel_pairs",
    "drop_zero_angles",
    "cnot_pipeline",
    "expand_markers",
    "expand_rzz",
    "simplify_1q",
    "u11",
    "unroll",
    "ScheduledCircuit",
    "cnot_scheduled",
    "finish_pulse_efficient",
    "pulse_efficient_circuit",
    "pulse_efficient_pipeline",
    "DEFAULT_COSTS",
    "CostModel",
    "MatchCandidate",
    "Template",
    "TemplateError",
    "dressed_rzz_template",
    "default_templates",
    "phase_swap_template",
    "rzz_template",
    "templates_by_name",
]
