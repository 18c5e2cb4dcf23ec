"""Transport covariances on the circle and on S^2.

The field is moved by rotations, ``Z(x, t) = Y(R^t x)``, so the covariance
is ``E psi_S(x^T R^u y)``.  On the circle the two opposite rotations give a
closed form in the great-circle distance.  On S^2 the rotation axis is
uniform (isotropic model) or fixed (simulation only).

Both criteria returned here are oriented like ``d^2 psi / du^2`` at
``u = 0``: negative means a local maximum in time, positive a local
minimum (the dimple side).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._rng import BLOCK_SIZE, blocks, parallel_map
from .kernels import Family, Kernel, KernelError
from .rotations import axis_block, circle_matrix, rodrigues
from .transport_euclid import MCEstimate, UnsupportedModel

UNIT_TOL = 1e-12
DEFAULT_NODES = 64


class SphereKind(str, enum.Enum):
    CIRCLE = "circle"
    SPHERE2 = "sphere2"


class SphereStrategy(str, enum.Enum):
    CLOSED = "closed"
    MONTE_CARLO = "mc"
    QUADRATURE = "quad"


def _require_sphere_kernel(kernel: Kernel):
    if not kernel.is_sphere:
        raise KernelError("sphere transport needs a sphere kernel (multiquadric or cosine)")


def _theta(theta: float, open_interval=False) -> float:
    theta = float(theta)
    if open_interval:
        if not 0.0 < theta < math.pi:
            raise ValueError(f"criteria are defined for theta in (0, pi), got {theta}")
    elif not 0.0 <= theta <= math.pi:
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    return theta


def _unit(x, dim) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,) or abs(np.linalg.norm(x) - 1.0) > UNIT_TOL:
        raise ValueError(f"expected a unit vector in R^{dim}")
    return x


# -- circle ---------------------------------------------------------------

def circle_cov(kernel: Kernel, alpha: float, theta: float, u: float) -> float:
    """``(psi_S(cos(theta + u alpha)) + psi_S(cos(theta - u alpha))) / 2``."""
    _require_sphere_kernel(kernel)
    theta = _theta(theta)
    a = u * alpha
    return 0.5 * (kernel.sphere_value(math.cos(theta + a)) + kernel.sphere_value(math.cos(theta - a)))


def circle_cov_matrix(kernel: Kernel, alpha: float, x, y, u: float) -> float:
    """Same covariance from the rotation matrices, for points ``x, y`` on S^1."""
    _require_sphere_kernel(kernel)
    x, y = _unit(x, 2), _unit(y, 2)
    c_plus = float(x @ circle_matrix(u * alpha) @ y)
    c_minus = float(x @ circle_matrix(-u * alpha) @ y)
    return 0.5 * (kernel.sphere_value(_clip(c_plus)) + kernel.sphere_value(_clip(c_minus)))


def _clip(c):
    return np.clip(c, -1.0, 1.0)


def circle_criterion(kernel: Kernel, theta: float) -> float:
    """``psi_S''(cos t) sin^2 t - psi_S'(cos t) cos t``; equals ``alpha^-2 d^2 psi/du^2`` at 0."""
    theta = _theta(theta, open_interval=True)
    c = math.cos(theta)
    _, d1, d2 = kernel.sphere_derivs(c)
    return d2 * math.sin(theta) ** 2 - d1 * c


# -- S^2 ------------------------------------------------------------------

def _quadratic_form(x, y, omegas, a: float) -> np.ndarray:
    """``x^T R_omega(a) y`` for a batch of axes."""
    ca, sa = math.cos(a), math.sin(a)
    # x^T W y = x . (omega x y) = -omega . (x x y)
    cross = np.cross(x, y)
    return _clip(ca * float(x @ y) - sa * (omegas @ cross) + (1.0 - ca) * (omegas @ x) * (omegas @ y))


def sphere2_cov_fixed(kernel: Kernel, alpha: float, omega, x, y, u: float) -> float:
    """Covariance under a fixed rotation axis (not isotropic)."""
    _require_sphere_kernel(kernel)
    x, y = _unit(x, 3), _unit(y, 3)
    c = float(x @ rodrigues(omega, u * alpha) @ y)
    return kernel.sphere_value(_clip(c))


def sphere2_cov_mc(
    kernel: Kernel,
    alpha: float,
    x,
    y,
    u: float,
    n: int = 100_000,
    seed: int = 0,
    workers: int = 1,
) -> MCEstimate:
    """Monte Carlo over a uniform axis; the axis stream matches :func:`rotations.sample_axis`."""
    _require_sphere_kernel(kernel)
    x, y = _unit(x, 3), _unit(y, 3)
    if n < 2:
        raise ValueError("n must be >= 2")
    if u == 0:
        return MCEstimate(kernel.sphere_value(_clip(float(x @ y))), 0.0, n)
    a = float(u) * alpha
    parts = list(blocks(n, BLOCK_SIZE))

    def block_stats(i):
        b, _, size = parts[i]
        vals = np.asarray(kernel.sphere_value(_quadratic_form(x, y, axis_block(seed, b, size), a)))
        m = float(np.mean(vals))
        return size, m, float(np.sum((vals - m) ** 2))

    count, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parallel_map(block_stats, list(range(len(parts))), workers):
        tot = count + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * count * nb / tot
        count = tot
    return MCEstimate(mean, math.sqrt(m2 / (count - 1) / count), count)


@lru_cache(maxsize=16)
def _nodes(n1: int, n2: int):
    t, wt = np.polynomial.legendre.leggauss(n1)
    phi2 = 2.0 * math.pi * np.arange(n2) / n2
    return t, wt, phi2, 2.0 * math.pi / n2


def sphere2_cov_quad(
    kernel: Kernel, alpha: float, theta: float, u: float, n1: int = DEFAULT_NODES, n2: int = DEFAULT_NODES
) -> float:
    """Isotropic S^2 covariance as a double integral over the axis direction.

    Gauss-Legendre in ``t = cos(phi1)`` (absorbing the ``sin(phi1)``
    Jacobian) times the periodic trapezoid rule in ``phi2``.
    """
    _require_sphere_kernel(kernel)
    theta = _theta(theta)
    if n1 < 8 or n2 < 8:
        raise ValueError("quadrature needs at least 8 nodes per direction")
    t, wt, phi2, w2 = _nodes(int(n1), int(n2))
    a = u * alpha
    ca, sa = math.cos(a), math.sin(a)
    ct, st = math.cos(theta), math.sin(theta)
    T = t[:, None]
    S = np.sqrt(1.0 - T * T)
    arg = ca * ct - sa * S * np.sin(phi2)[None, :] * st + T * (1.0 - ca) * (T * ct - S * np.cos(phi2)[None, :] * st)
    vals = np.asarray(kernel.sphere_value(_clip(arg)))
    return float(wt @ vals.sum(axis=1)) * w2 / (4.0 * math.pi)


def sphere2_cov_closed(kernel: Kernel, alpha: float, theta: float, u: float) -> float:
    """Closed form for the cosine kernel: ``(1 + 2 cos(u alpha)) cos(theta) / 3``."""
    if kernel.family is not Family.COSINE:
        raise UnsupportedModel("closed form on S^2 exists only for the cosine kernel; use quad or mc")
    theta = _theta(theta)
    return kernel.variance * (1.0 + 2.0 * math.cos(u * alpha)) * math.cos(theta) / 3.0


def sphere2_criterion(kernel: Kernel, theta: float) -> float:
    """``psi_S''(cos t) sin^2 t - 2 psi_S'(cos t) cos t``; equals ``(3/alpha^2) d^2 psi/du^2`` at 0."""
    theta = _theta(theta, open_interval=True)
    c = math.cos(theta)
    _, d1, d2 = kernel.sphere_derivs(c)
    return d2 * math.sin(theta) ** 2 - 2.0 * d1 * c


def pair_at_distance(theta: float, frame: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors in R^3 at great-circle distance ``theta``, optionally rotated by ``frame``."""
    x = np.array([1.0, 0.0, 0.0])
    y = np.array([math.cos(theta), math.sin(theta), 0.0])
    if frame is not None:
        x, y = frame @ x, frame @ y
        x, y = x / np.linalg.norm(x), y / np.linalg.norm(y)
    return x, y


def random_frame(rng: np.random.Generator) -> np.ndarray:
    """Uniformly random rotation of R^3 (QR of a Gaussian matrix with sign fix)."""
    Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


@dataclass(frozen=True)
class SphereTransportCovariance:
    """Sphere kernel + rotation model + evaluation strategy, as a function of ``(theta, u)``.

    ``axis=None`` means a uniform random axis on S^2; a 3-vector fixes the
    axis, in which case only point-pair evaluation is available.
    """

    kernel: Kernel
    alpha: float = 1.0
    sphere: SphereKind = SphereKind.SPHERE2
    axis: tuple[float, float, float] | None = None
    strategy: SphereStrategy = SphereStrategy.QUADRATURE
    n: int = 100_000
    seed: int = 0
    n1: int = DEFAULT_NODES
    n2: int = DEFAULT_NODES

    def __post_init__(self):
        object.__setattr__(self, "sphere", SphereKind(self.sphere))
        object.__setattr__(self, "strategy", SphereStrategy(self.strategy))
        _require_sphere_kernel(self.kernel)
        if self.axis is not None:
            object.__setattr__(self, "axis", tuple(float(a) for a in _unit(self.axis, 3)))
        if self.sphere is SphereKind.CIRCLE:
            object.__setattr__(self, "strategy", SphereStrategy.CLOSED)
        elif self.strategy is SphereStrategy.CLOSED and self.axis is None and self.kernel.family is not Family.COSINE:
            raise UnsupportedModel("closed form on S^2 exists only for the cosine kernel")

    @property
    def isotropic(self) -> bool:
        return self.sphere is SphereKind.CIRCLE or self.axis is None

    def __call__(self, theta: float, u: float) -> float:
        if self.sphere is SphereKind.CIRCLE:
            return circle_cov(self.kernel, self.alpha, theta, u)
        if not self.isotropic:
            x, y = pair_at_distance(theta)
            return sphere2_cov_fixed(self.kernel, self.alpha, self.axis, x, y, u)
        if self.strategy is SphereStrategy.CLOSED:
            return sphere2_cov_closed(self.kernel, self.alpha, theta, u)
        if self.strategy is SphereStrategy.QUADRATURE:
            return sphere2_cov_quad(self.kernel, self.alpha, theta, u, self.n1, self.n2)
        x, y = pair_at_distance(theta)
        return sphere2_cov_mc(self.kernel, self.alpha, x, y, u, self.n, self.seed).estimate

    def criterion(self, theta: float) -> float:
        if not self.isotropic:
            raise UnsupportedModel("fixed-axis transport is not isotropic; no dimple criterion")
        if self.sphere is SphereKind.CIRCLE:
            return circle_criterion(self.kernel, theta)
        return sphere2_criterion(self.kernel, theta)
