"""Exact Gaussian field simulation and transported snapshots.

A transported field is simulated jointly on the union of all moved points
``{x - tV}`` (or ``{R^t x}`` on spheres) so that snapshots at different times
share the same underlying spatial field, with no interpolation.  Points
that coincide after transport are merged and read the same value.

Each realization draws one velocity (or one rotation axis) and uses its own
seed derived from ``(seed, realization index)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ._rng import derived_seed, parallel_map
from .kernels import Kernel
from .rotations import circle_matrix, rodrigues
from .velocity import VelocityLaw

UNIT_TOL = 1e-12
DUPLICATE_TOL = 1e-10
JITTER_START = 1e-12
JITTER_CAP = 1e-6


class FactorizationError(RuntimeError):
    def __init__(self, message: str, diagnostics: dict[str, Any]):
        super().__init__(f"{message}: {diagnostics}")
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class PointSet:
    points: np.ndarray
    kind: str = "euclidean"

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.kind not in ("euclidean", "sphere"):
            raise ValueError("kind must be 'euclidean' or 'sphere'")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if self.kind == "sphere" and np.any(np.abs(np.linalg.norm(pts, axis=1) - 1.0) > UNIT_TOL):
            raise ValueError("sphere points must have unit norm")
        rep = _representatives(pts)
        if np.any(rep != np.arange(len(pts))):
            i = int(np.flatnonzero(rep != np.arange(len(pts)))[0])
            raise ValueError(f"point {i} duplicates point {int(rep[i])}; the Gram matrix would be singular")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass
class FieldSnapshot:
    time: float
    values: np.ndarray
    seed: int
    transport: dict[str, Any]
    points: np.ndarray | None = None
    jitter: float = 0.0
    diagnostics: dict[str, Any] = field(default_factory=dict)


def _representatives(pts: np.ndarray, tol: float = DUPLICATE_TOL) -> np.ndarray:
    """Index of the first point within ``tol`` of each point."""
    D = np.sqrt(np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1))
    return np.argmax(D <= tol, axis=1)


def factorize(K: np.ndarray, scale: float = 1.0) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``K + jitter I`` with the smallest jitter that works.

    Jitter starts at ``1e-12 * scale`` and grows tenfold up to ``1e-6 * scale``.
    """
    K = 0.5 * (K + K.T)
    I = np.eye(len(K))
    try:
        return np.linalg.cholesky(K), 0.0
    except np.linalg.LinAlgError:
        pass
    jitter = JITTER_START * scale
    while jitter <= JITTER_CAP * scale * (1 + 1e-9):
        try:
            return np.linalg.cholesky(K + jitter * I), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    eig = np.linalg.eigvalsh(K)
    raise FactorizationError(
        "Gram matrix is not numerically positive definite after maximum jitter",
        {"min_eig": float(eig[0]), "max_eig": float(eig[-1]), "size": len(K), "jitter_cap": JITTER_CAP * scale},
    )


def simulate_gaussian(kernel: Kernel, pts: PointSet, seed: int, *, return_jitter: bool = False):
    """Zero-mean Gaussian vector with covariance ``kernel.gram(pts)``."""
    L, jitter = factorize(kernel.gram(pts.points), kernel.variance)
    values = L @ np.random.default_rng(seed).standard_normal(len(pts))
    return (values, jitter) if return_jitter else values


def _joint_on_union(kernel, union: np.ndarray, rng: np.random.Generator):
    rep = _representatives(union)
    uniq = np.unique(rep)
    L, jitter = factorize(kernel.gram(union[uniq]), kernel.variance)
    vals = L @ rng.standard_normal(len(uniq))
    where = np.searchsorted(uniq, rep)
    return vals[where], jitter, len(uniq)


def _snapshots(values, times, n_pts, seed, transport, grid, jitter, n_unique):
    values = values.reshape(len(times), n_pts)
    diag = {"union_points": n_unique}
    if jitter > 0:
        diag["jitter"] = jitter
    return [
        FieldSnapshot(float(t), values[k].copy(), seed, transport, grid, jitter, dict(diag))
        for k, t in enumerate(times)
    ]


def simulate_transport_euclid(
    kernel: Kernel, law: VelocityLaw, grid: PointSet, times: Sequence[float], seed: int
) -> list[FieldSnapshot]:
    """One realization of ``Z(x, t) = Y(x - tV)`` at every grid point and time."""
    if grid.kind != "euclidean" or grid.dim != kernel.dim or law.dim != kernel.dim:
        raise ValueError("grid, kernel and velocity law must share the Euclidean dimension")
    times = [float(t) for t in times]
    if not all(math.isfinite(t) for t in times):
        raise ValueError("times must be finite")
    rng = np.random.default_rng(seed)
    V = law._draw(rng, 1)[0]
    union = np.concatenate([grid.points - t * V for t in times], axis=0)
    values, jitter, n_unique = _joint_on_union(kernel, union, rng)
    return _snapshots(values, times, len(grid), seed, {"V": V.tolist()}, grid.points, jitter, n_unique)


def simulate_transport_sphere(
    kernel: Kernel,
    axis: Sequence[float] | None,
    alpha: float,
    pts: PointSet,
    times: Sequence[float],
    seed: int,
) -> list[FieldSnapshot]:
    """One realization of ``Z(x, t) = Y(R^t x)`` on S^2 (or S^1).

    ``axis=None`` draws a uniform axis on S^2 for this realization; a
    3-vector keeps the axis fixed.  On S^1 the direction of rotation is
    drawn as +-1 with equal probability.
    """
    if pts.kind != "sphere" or not kernel.is_sphere:
        raise ValueError("sphere simulation needs sphere points and a sphere kernel")
    times = [float(t) for t in times]
    rng = np.random.default_rng(seed)
    if pts.dim == 2:
        direction = 1.0 if rng.integers(0, 2) else -1.0
        mats = [circle_matrix(direction * t * alpha) for t in times]
        transport = {"direction": direction, "alpha": alpha}
    elif pts.dim == 3:
        if axis is None:
            g = rng.standard_normal(3)
            omega = g / np.linalg.norm(g)
        else:
            omega = np.asarray(axis, dtype=float)
        mats = [rodrigues(omega, t * alpha) for t in times]
        transport = {"omega": omega.tolist(), "alpha": alpha}
    else:
        raise ValueError("sphere simulation supports S^1 and S^2")
    union = np.concatenate([pts.points @ R.T for R in mats], axis=0)
    union /= np.linalg.norm(union, axis=1, keepdims=True)
    values, jitter, n_unique = _joint_on_union(kernel, union, rng)
    return _snapshots(values, times, len(pts), seed, transport, pts.points, jitter, n_unique)


def fibonacci_sphere(n: int) -> PointSet:
    """``n`` nearly uniform points on S^2 from the golden-angle spiral."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    rho = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    pts = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    return PointSet(pts / np.linalg.norm(pts, axis=1, keepdims=True), "sphere")


def circle_points(n: int) -> PointSet:
    """``n`` equally spaced points on S^1."""
    a = 2.0 * math.pi * np.arange(n) / n
    return PointSet(np.column_stack([np.cos(a), np.sin(a)]), "sphere")


def simulate_many(simulate, n: int, seed: int, workers: int = 1, **kwargs) -> list:
    """Run ``simulate(..., seed=s_i)`` for ``n`` realizations with derived seeds."""
    return parallel_map(lambda i: simulate(seed=derived_seed(seed, i), **kwargs), list(range(n)), workers)


def empirical_cov(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Mean of ``a_i b_i`` across realizations (zero-mean fields) and its standard error."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("expected two equal-length 1-d streams")
    n = len(a)
    if n < 30:
        raise ValueError("empirical covariance needs at least 30 realizations")
    prod = a * b
    return float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(n))


def snapshot_rows(snapshots: Sequence[FieldSnapshot]) -> list[list[float]]:
    """CSV rows ``(time, point_index, x_1..x_d, value)``."""
    rows = []
    for snap in snapshots:
        for i, (x, v) in enumerate(zip(snap.points, snap.values)):
            rows.append([snap.time, i, *x.tolist(), float(v)])
    return rows
