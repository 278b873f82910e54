"""Single-qubit Euler decompositions onto the rz / sx / x basis."""

from __future__ import annotations

import cmath
import math

import numpy as np

from .qcore import Gate, g

# Angles closer than this to a special value select the shorter form.
EULER_TOL = 1e-10


def wrap_angle(theta: float) -> float:
    """Map to (-pi, pi]."""
    out = math.remainder(theta, 2 * math.pi)
    if out <= -math.pi:
        out += 2 * math.pi
    return out


def zyz_angles(u: np.ndarray) -> tuple[float, float, float, float]:
    """Return (theta, phi, lam, phase) with u = e^{i phase} Rz(phi) Ry(theta) Rz(lam)."""
    det = np.linalg.det(u)
    phase = cmath.phase(det) / 2
    su = u * cmath.exp(-1j * phase)
    a, b = su[0, 0], su[1, 0]
    theta = 2 * math.atan2(abs(b), abs(a))
    # su = [[e^{-i(phi+lam)/2} c, -e^{-i(phi-lam)/2} s], [e^{i(phi-lam)/2} s, e^{i(phi+lam)/2} c]]
    if abs(a) < EULER_TOL:
        plus = 0.0
        minus = 2 * cmath.phase(b)
    elif abs(b) < EULER_TOL:
        plus = 2 * cmath.phase(su[1, 1])
        minus = 0.0
    else:
        plus = 2 * cmath.phase(su[1, 1])
        minus = 2 * cmath.phase(b)
    phi = (plus + minus) / 2
    lam = (plus - minus) / 2
    return theta, phi, lam, phase


def _rz(q: int, angle: float) -> list[Gate]:
    angle = wrap_angle(angle)
    return [] if abs(angle) < EULER_TOL else [g("rz", q, params=[angle])]


def zsx_gates(u: np.ndarray, qubit: int) -> list[Gate]:
    """Shortest rz/sx/x sequence equal to ``u`` up to global phase.

    Forms, by polar angle of the rotation: rz; rz-x; rz-sx-rz;
    rz-sx-rz-sx-rz. Zero-angle rz gates are dropped.
    """
    theta, phi, lam, _ = zyz_angles(u)
    if theta < EULER_TOL:
        return _rz(qubit, phi + lam)
    if abs(theta - math.pi) < EULER_TOL:
        # Rz(phi) Ry(pi) Rz(lam) = Rz(phi) X Rz(lam + pi) = X Rz(lam + pi - phi), up to phase
        return _rz(qubit, lam + math.pi - phi) + [g("x", qubit)]
    if abs(theta - math.pi / 2) < EULER_TOL:
        # Ry(pi/2) = Rz(pi/2) SX Rz(-pi/2) up to phase
        return _rz(qubit, lam - math.pi / 2) + [g("sx", qubit)] + _rz(qubit, phi + math.pi / 2)
    return (
        _rz(qubit, lam)
        + [g("sx", qubit)]
        + _rz(qubit, theta + math.pi)
        + [g("sx", qubit)]
        + _rz(qubit, phi + math.pi)
    )
