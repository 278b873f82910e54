"""Identity templates, the gate cost model and match bookkeeping."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..qcore import Circuit, Gate, ParamExpr, circuit_unitary, g, phase_distance

# Two-qubit gates whose matrix is invariant under exchanging the qubits.
SYMMETRIC_GATES = frozenset({"swap", "rzz", "phase_swap"})

IDENTITY_TOL = 1e-9


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class Template:
    """Gate sequence that composes to the identity for every parameter value."""

    name: str
    circuit: Circuit
    checks: int = 5

    def __post_init__(self):
        rng = np.random.default_rng(zlib.crc32(self.name.encode()))
        names = sorted(self.circuit.parameters)
        eye = np.eye(2**self.circuit.num_qubits)
        for _ in range(self.checks if names else 1):
            binding = {n: float(v) for n, v in zip(names, rng.uniform(-np.pi, np.pi, len(names)))}
            u = circuit_unitary(self.circuit, binding)
            if phase_distance(eye, u) > IDENTITY_TOL:
                raise TemplateError(f"template {self.name!r} is not the identity")

    @property
    def gates(self) -> tuple[Gate, ...]:
        return self.circuit.gates

    def __len__(self) -> int:
        return len(self.circuit.gates)


def _theta(coef: float = 1.0) -> ParamExpr:
    return ParamExpr.symbol("theta", coef)


def rzz_template() -> Template:
    return Template(
        "rzz",
        Circuit(2, (
            g("cx", 0, 1),
            g("rz", 1, params=[_theta()]),
            g("cx", 0, 1),
            g("rzz", 0, 1, params=[_theta(-1)]),
        )),
    )


def phase_swap_template() -> Template:
    return Template(
        "phase_swap",
        Circuit(2, (
            g("cx", 0, 1),
            g("rz", 1, params=[_theta()]),
            g("cx", 0, 1),
            g("swap", 0, 1),
            g("phase_swap", 0, 1, params=[_theta(-1)]),
        )),
    )


def dressed_rzz_template() -> Template:
    """Longer rzz template with rz dressing, used to reproduce the worked matching example."""
    return Template(
        "rzz_dressed",
        Circuit(2, (
            g("rz", 0, params=[_theta(-1)]),
            g("rz", 1, params=[_theta(-1)]),
            g("cx", 0, 1),
            g("rz", 1, params=[_theta()]),
            g("cx", 0, 1),
            g("rz", 0, params=[_theta()]),
            g("rz", 1, params=[_theta()]),
            g("rzz", 0, 1, params=[_theta(-1)]),
        )),
    )


TEMPLATE_FACTORIES = {"phase_swap": phase_swap_template, "rzz": rzz_template}


def default_templates() -> list[Template]:
    # phase_swap first: once cx-rz-cx has become rzz the fused form can no longer match
    return [phase_swap_template(), rzz_template()]


def templates_by_name(names: Sequence[str]) -> list[Template]:
    out = []
    for name in names:
        if name not in TEMPLATE_FACTORIES:
            raise TemplateError(f"unknown template {name!r}; known: {sorted(TEMPLATE_FACTORIES)}")
        out.append(TEMPLATE_FACTORIES[name]())
    return out


DEFAULT_COSTS = {"sx": 1, "x": 1, "rz": 0, "cx": 2, "rzz": 0, "swap": 6, "phase_swap": 0}


@dataclass(frozen=True)
class CostModel:
    weights: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_COSTS))
    default: int = 100

    def __post_init__(self):
        for name, w in self.weights.items():
            if w < 0:
                raise ValueError(f"negative cost for {name}")

    def cost(self, gate: Gate | str) -> int:
        name = gate if isinstance(gate, str) else gate.name
        return self.weights.get(name, self.default)

    def total(self, gates) -> int:
        return sum(self.cost(gate) for gate in gates)

    @classmethod
    def from_json(cls, data: Mapping) -> "CostModel":
        if "weights" in data:
            return cls(dict(data["weights"]), int(data.get("default", 100)))
        return cls(dict(data))


@dataclass(frozen=True)
class MatchCandidate:
    """Template gates ``pairs[k][0]`` matched onto circuit gates ``pairs[k][1]``."""

    template: Template
    pairs: tuple[tuple[int, int], ...]
    qubit_map: Mapping[int, int]

    @property
    def template_span(self) -> tuple[int, int]:
        return self.pairs[0][0], self.pairs[-1][0]

    @property
    def circuit_indices(self) -> tuple[int, ...]:
        return tuple(c for _, c in self.pairs)
