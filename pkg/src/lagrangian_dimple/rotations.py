"""Parametric rotations on the circle and on S^2.

Real powers are taken through the parametric identity ``R(a)^u = R(u a)``.
The eigendecomposition power in :func:`eigen_power` is kept as an
independent check of that identity; it uses the principal branch
``kappa in (-pi, pi]`` and therefore agrees only for angles in that range.

Handedness follows the cross-product matrix ``W x = omega x x``, so
``rodrigues(e3, pi/2) @ e1 == e2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import blocks, child_rng

UNIT_TOL = 1e-12


class RotationError(ValueError):
    pass


def circle_matrix(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -s], [s, c]])


def cross_matrix(omega) -> np.ndarray:
    w1, w2, w3 = omega
    return np.array([[0.0, -w3, w2], [w3, 0.0, -w1], [-w2, w1, 0.0]])


def _unit_axis(omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (3,):
        raise RotationError("axis must be a 3-vector")
    if abs(np.linalg.norm(omega) - 1.0) > UNIT_TOL:
        raise RotationError(f"axis must be a unit vector, |omega| = {np.linalg.norm(omega)!r}")
    return omega


def rodrigues(omega, alpha: float) -> np.ndarray:
    """Rotation by ``alpha`` about the unit axis ``omega``."""
    omega = _unit_axis(omega)
    P = np.outer(omega, omega)
    return cross_matrix(omega) * math.sin(alpha) + (np.eye(3) - P) * math.cos(alpha) + P


def rodrigues_batch(omegas: np.ndarray, alphas) -> np.ndarray:
    """Vectorized Rodrigues matrices, shape ``(n, 3, 3)``; axes assumed unit."""
    omegas = np.asarray(omegas, dtype=float)
    alphas = np.broadcast_to(np.asarray(alphas, dtype=float), omegas.shape[:1])
    n = len(omegas)
    W = np.zeros((n, 3, 3))
    W[:, 0, 1], W[:, 0, 2] = -omegas[:, 2], omegas[:, 1]
    W[:, 1, 0], W[:, 1, 2] = omegas[:, 2], -omegas[:, 0]
    W[:, 2, 0], W[:, 2, 1] = -omegas[:, 1], omegas[:, 0]
    P = omegas[:, :, None] * omegas[:, None, :]
    s = np.sin(alphas)[:, None, None]
    c = np.cos(alphas)[:, None, None]
    return W * s + (np.eye(3) - P) * c + P


@dataclass(frozen=True)
class CircleRotation:
    alpha: float

    def matrix(self) -> np.ndarray:
        return circle_matrix(self.alpha)

    def power(self, u: float) -> np.ndarray:
        return circle_matrix(u * self.alpha)


@dataclass(frozen=True)
class AxisRotation:
    omega: tuple[float, float, float]
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(x) for x in _unit_axis(self.omega)))

    def matrix(self) -> np.ndarray:
        return rodrigues(self.omega, self.alpha)

    def power(self, u: float) -> np.ndarray:
        return rodrigues(self.omega, u * self.alpha)


def power(rotation: CircleRotation | AxisRotation, u: float) -> np.ndarray:
    """``R^u`` through the parametric identity ``R(alpha)^u = R(u alpha)``."""
    return rotation.power(u)


def eigen_power(R: np.ndarray, u: float) -> np.ndarray:
    """Real power of a rotation matrix via complex diagonalization (principal branch)."""
    lam, Q = np.linalg.eig(np.asarray(R, dtype=float))
    kappa = np.angle(lam)
    # np.angle returns (-pi, pi]; pin -pi to +pi so the branch is half-open as stated
    kappa = np.where(np.isclose(kappa, -math.pi), math.pi, kappa)
    D = np.diag(np.exp(1j * kappa * u))
    return np.real(Q @ D @ np.linalg.inv(Q))


def sample_axis(n: int, seed: int) -> np.ndarray:
    """``n`` axes uniform on ``S^2`` (normalized Gaussian vectors, blocked stream)."""
    if n < 1:
        raise RotationError("n must be >= 1")
    return np.concatenate([axis_block(seed, b, size) for b, _, size in blocks(n)], axis=0)


def axis_block(seed: int, block_index: int, size: int) -> np.ndarray:
    """One block of the uniform-axis stream used by :func:`sample_axis`."""
    g = child_rng(seed, block_index).standard_normal((size, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)
