"""Pulse-efficient transpilation of two-qubit circuits onto scaled cross-resonance gates."""

from .kak import KakDecomposition, WeylCoordinates, kak_decompose, swap_theta_coords, synth_three_cnot, synth_three_rzx
from .qcore import Circuit, Gate, ParamExpr, circuit_unitary, g, gate_unitary, phase_distance

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "Gate",
    "ParamExpr",
    "g",
    "gate_unitary",
    "circuit_unitary",
    "phase_distance",
    "KakDecomposition",
    "WeylCoordinates",
    "kak_decompose",
    "swap_theta_coords",
    "synth_three_cnot",
    "synth_three_rzx",
]
