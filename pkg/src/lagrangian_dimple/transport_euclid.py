"""Euclidean transport covariance ``C(h, u) = E C_S(h - uV)``.

Three evaluation routes are provided: closed forms for the pairs that
have one, Monte Carlo over the velocity law, and the exact spectral sum for
discrete spectral mixtures.  The criteria that decide the sign of
``d^2 C / du^2`` at ``u = 0`` live here as well.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._rng import BLOCK_SIZE, blocks, parallel_map
from .kernels import Family, Kernel, KernelError, SpectralMixtureSpec
from .velocity import LawKind, VelocityLaw, sphere_mgf

DEFAULT_MC_N = 100_000


class UnsupportedModel(ValueError):
    """No closed form for this (kernel, law) pair; use Monte Carlo."""


class MCEstimate(NamedTuple):
    estimate: float
    stderr: float
    n: int


class Strategy(str, enum.Enum):
    CLOSED = "closed"
    MONTE_CARLO = "mc"
    SPECTRAL = "spectral"


def _check_dims(kernel: Kernel, law: VelocityLaw, h) -> np.ndarray:
    if kernel.is_sphere:
        raise KernelError("Euclidean transport needs a Euclidean kernel")
    if kernel.dim != law.dim:
        raise ValueError(f"kernel dim {kernel.dim} differs from velocity dim {law.dim}")
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if h.shape != (kernel.dim,):
        raise ValueError(f"lag must have shape ({kernel.dim},)")
    return h


def has_closed_form(kernel: Kernel, law: VelocityLaw) -> bool:
    if law.kind in (LawKind.DETERMINISTIC, LawKind.DICHOTOMIC):
        return True
    if law.kind is LawKind.UNIFORM_SPHERE and law.dim == 1:
        return True
    if kernel.family is Family.SPECTRAL_MIXTURE:
        return True
    return kernel.family is Family.GAUSSIAN and law.kind in (LawKind.GAUSSIAN_ISO, LawKind.UNIFORM_SPHERE)


def eval_closed(kernel: Kernel, law: VelocityLaw, h, u: float) -> float:
    """Closed-form ``C(h, u)``.

    Supported: any kernel with a deterministic or dichotomic velocity (and
    the uniform law on ``S^0 = {-1, 1}``), spectral mixtures with any law,
    and the Gaussian kernel ``exp(-|h|^2)`` with an isotropic Gaussian or a
    uniform-on-sphere velocity.
    """
    h = _check_dims(kernel, law, h)
    u = float(u)
    kind = law.kind
    if kind is LawKind.DETERMINISTIC:
        return float(kernel.value(h - u * np.asarray(law.xi)))
    if kind is LawKind.DICHOTOMIC or (kind is LawKind.UNIFORM_SPHERE and law.dim == 1):
        xi = np.asarray(law.xi) if kind is LawKind.DICHOTOMIC else np.ones(1)
        return 0.5 * (float(kernel.value(h - u * xi)) + float(kernel.value(h + u * xi)))
    if kernel.family is Family.SPECTRAL_MIXTURE:
        return eval_spectral(kernel.mixture, law, h, u)
    if kernel.family is Family.GAUSSIAN and kind is LawKind.GAUSSIAN_ISO:
        # h - uV ~ N(h - u mu, u^2 s2 I); E exp(-|X|^2) for X ~ N(m, v I)
        # is (1 + 2v)^(-d/2) exp(-|m|^2 / (1 + 2v)).
        d = kernel.dim
        scale = 1.0 + 2.0 * u * u * law.sigma2
        m = h - u * np.asarray(law.mu)
        return kernel.variance * scale ** (-d / 2.0) * math.exp(-float(m @ m) / scale)
    if kernel.family is Family.GAUSSIAN and kind is LawKind.UNIFORM_SPHERE:
        # |h - uV|^2 = r^2 + u^2 - 2u h.V
        r = float(np.linalg.norm(h))
        return kernel.variance * math.exp(-r * r - u * u) * float(sphere_mgf(law.dim, 2.0 * abs(u) * r))
    raise UnsupportedModel(
        f"no closed form for {kernel.family.value} kernel with {kind.value} velocity; use eval_mc"
    )


def curve_closed(kernel: Kernel, law: VelocityLaw, h, us) -> np.ndarray:
    """``eval_closed`` over many ``u`` at once; vectorized for the common laws."""
    h = _check_dims(kernel, law, h)
    us = np.asarray(us, dtype=float)
    kind = law.kind
    if kind is LawKind.DETERMINISTIC:
        return np.asarray(kernel.value(h[None, :] - us[:, None] * np.asarray(law.xi)), dtype=float)
    if kind is LawKind.DICHOTOMIC:
        shift = us[:, None] * np.asarray(law.xi)
        return 0.5 * (np.asarray(kernel.value(h - shift)) + np.asarray(kernel.value(h + shift)))
    if kernel.family is Family.GAUSSIAN and kind is LawKind.GAUSSIAN_ISO:
        scale = 1.0 + 2.0 * us * us * law.sigma2
        m = h[None, :] - us[:, None] * np.asarray(law.mu)
        return kernel.variance * scale ** (-kernel.dim / 2.0) * np.exp(-np.sum(m * m, axis=1) / scale)
    return np.array([eval_closed(kernel, law, h, u) for u in us])


def _block_stats(kernel, law, h, u, seed, size_of_block, b):
    V = law.sample_block(b, size_of_block(b), seed)
    vals = np.asarray(kernel.value(h[None, :] - u * V), dtype=float)
    m = float(np.mean(vals))
    return len(vals), m, float(np.sum((vals - m) ** 2))


def eval_mc(
    kernel: Kernel,
    law: VelocityLaw,
    h,
    u: float,
    n: int = DEFAULT_MC_N,
    seed: int = 0,
    workers: int = 1,
) -> MCEstimate:
    """Monte Carlo mean of ``C_S(h - u V_i)`` with its standard error.

    The stream is cut into fixed blocks whose statistics are merged in block
    order, so the result is bit-identical for any ``workers``.
    """
    h = _check_dims(kernel, law, h)
    if n < 100:
        raise ValueError("Monte Carlo needs n >= 100")
    if u == 0:
        return MCEstimate(float(kernel.value(h)), 0.0, n)
    sizes = {b: size for b, _, size in blocks(n, BLOCK_SIZE)}
    stats = parallel_map(
        lambda b: _block_stats(kernel, law, h, float(u), seed, sizes.__getitem__, b),
        sorted(sizes),
        workers,
    )
    count, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in stats:
        # Chan et al. pairwise merge of (count, mean, M2)
        tot = count + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * count * nb / tot
        count = tot
    var = m2 / (count - 1)
    return MCEstimate(mean, math.sqrt(var / count), count)


def eval_spectral(mix: SpectralMixtureSpec, law: VelocityLaw, h, u: float) -> float:
    """``sum_j w_j Re[exp(i h.omega_j) phi_V(-u omega_j)]`` for a discrete spectral measure."""
    if mix.dim != law.dim:
        raise ValueError("mixture and velocity dimensions differ")
    if not mix.symmetrized and not law.is_symmetric:
        raise ValueError("non-symmetrized mixture with a complex characteristic function gives a complex value")
    w, om = mix.atoms()
    h = np.atleast_1d(np.asarray(h, dtype=float))
    phase = np.exp(1j * (om @ h))
    phi = np.asarray(law.char_fn(-float(u) * om))
    return float(np.real(np.sum(w * phase * phi)))


def criterion_F(kernel: Kernel, law: VelocityLaw, h) -> float:
    """``trace(H_V Hess C_S(h))``; positive means a local maximum in ``u`` at 0."""
    h = _check_dims(kernel, law, h)
    if not np.any(h):
        raise ValueError("criterion is defined for h != 0")
    HV = law.hessian_at_zero(require_symmetric=True)
    return float(np.sum(HV * kernel.hessian(h)))


def criterion_F_dichotomic(kernel: Kernel, xi, h) -> float:
    """Rank-one shortcut ``-xi^T Hess C_S(h) xi`` for the dichotomic law."""
    xi = np.asarray(xi, dtype=float)
    h = np.asarray(h, dtype=float)
    if not np.any(h):
        raise ValueError("criterion is defined for h != 0")
    return -float(xi @ kernel.hessian(h) @ xi)


def criterion_laplacian(kernel: Kernel, h) -> float:
    """``Laplacian C_S(h)``; under a uniform-on-sphere velocity ``F = -Laplacian / d``."""
    return kernel.laplacian(h)


def radial_criterion(kernel: Kernel, r: float, d: int | None = None) -> float:
    """``phi''(r) + (d - 1) phi'(r) / r``, the Laplacian of a radial kernel at radius ``r``."""
    d = kernel.dim if d is None else int(d)
    _, d1, d2 = kernel.radial_derivs(r)
    return d2 + (d - 1) * d1 / r


@dataclass(frozen=True)
class TransportCovariance:
    """A kernel composed with a velocity law and an evaluation strategy."""

    kernel: Kernel
    law: VelocityLaw
    strategy: Strategy = Strategy.CLOSED
    n: int = DEFAULT_MC_N
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.kernel.dim != self.law.dim:
            raise ValueError("kernel and velocity dimensions differ")
        if self.strategy is Strategy.CLOSED and not has_closed_form(self.kernel, self.law):
            raise UnsupportedModel(
                f"no closed form for {self.kernel.family.value} x {self.law.kind.value}; use strategy 'mc'"
            )
        if self.strategy is Strategy.SPECTRAL and self.kernel.family is not Family.SPECTRAL_MIXTURE:
            raise UnsupportedModel("spectral strategy needs a spectral_mixture kernel")

    def __call__(self, h, u: float) -> float:
        if self.strategy is Strategy.CLOSED:
            return eval_closed(self.kernel, self.law, h, u)
        if self.strategy is Strategy.SPECTRAL:
            return eval_spectral(self.kernel.mixture, self.law, h, u)
        return eval_mc(self.kernel, self.law, h, u, self.n, self.seed, self.workers).estimate

    def stderr(self, h, u: float) -> float:
        if self.strategy is not Strategy.MONTE_CARLO:
            return 0.0
        return eval_mc(self.kernel, self.law, h, u, self.n, self.seed, self.workers).stderr

    def curve(self, h, us) -> np.ndarray:
        return np.array([self(h, u) for u in us])

    def criterion(self, h) -> float:
        return criterion_F(self.kernel, self.law, h)
