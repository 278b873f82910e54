"""Shared test utilities."""

import numpy as np


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def haar_su4(rng: np.random.Generator) -> np.ndarray:
    u = haar_unitary(4, rng)
    return u / np.linalg.det(u) ** 0.25
