"""Velocity laws for the Euclidean transport model ``Z(x, t) = Y(x - tV)``.

Each law exposes sampling, the characteristic function
``phi_V(eta) = E exp(i V . eta)`` and the Hessian of ``phi_V`` at the origin,
which is minus the second-moment matrix ``E[V V^T]``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Iterator, Mapping

import numpy as np

from ._rng import BLOCK_SIZE, blocks, child_rng

SERIES_MAX_ARG = 30.0
MGF_MAX_ARG = 700.0


class LawKind(str, enum.Enum):
    DETERMINISTIC = "deterministic"
    DICHOTOMIC = "dichotomic"
    GAUSSIAN_ISO = "gaussian"
    UNIFORM_SPHERE = "uniform_sphere"


class VelocityError(ValueError):
    pass


def bessel_j(nu: float, z):
    """Bessel function of the first kind via its power series.

    Only used for ``|z| <= 30``; beyond that the alternating series loses
    too many digits to cancellation and the call is rejected.
    """
    if nu <= -1:
        raise VelocityError("order must exceed -1")
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > SERIES_MAX_ARG):
        raise VelocityError(f"Bessel series is restricted to |z| <= {SERIES_MAX_ARG}")
    half = z / 2.0
    if float(nu).is_integer():
        lead = half ** int(nu)
    elif np.any(z < 0):
        raise VelocityError("non-integer order needs z >= 0")
    else:
        lead = half ** nu
    out = lead * _j_series(nu, half * half)
    return out if out.ndim else float(out)


def _j_series(nu: float, q, sign: float = -1.0):
    """``sum_k sign^k q^k / (k! Gamma(k + nu + 1))`` summed until terms are negligible."""
    q = np.asarray(q, dtype=float)
    term = np.full_like(q, 1.0 / math.gamma(nu + 1.0))
    total = term.copy()
    biggest = np.abs(term)
    k = 0
    while True:
        k += 1
        term = term * (sign * q) / (k * (k + nu))
        total = total + term
        biggest = np.maximum(biggest, np.abs(term))
        if np.all(np.abs(term) <= 1e-17 * biggest) or k > 500:
            return total


def omega_d(d: int, z):
    """Characteristic function of the uniform law on ``S^{d-1}`` as a function of ``|eta|``.

    ``Omega_d(z) = Gamma(d/2) (z/2)^{-(d-2)/2} J_{(d-2)/2}(z)``.
    """
    z = np.abs(np.asarray(z, dtype=float))
    if d == 1:
        out = np.cos(z)
    elif d == 3:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(z == 0.0, 1.0, np.sin(z) / np.where(z == 0.0, 1.0, z))
    else:
        if np.any(z > SERIES_MAX_ARG):
            raise VelocityError(f"Omega_{d} series is restricted to |z| <= {SERIES_MAX_ARG}")
        nu = (d - 2) / 2.0
        out = math.gamma(d / 2.0) * _j_series(nu, (z / 2.0) ** 2)
    return out if out.ndim else float(out)


def sphere_mgf(d: int, z):
    """``E exp(z e . V)`` for ``V`` uniform on ``S^{d-1}`` and any unit ``e``.

    This is ``Omega_d`` at an imaginary argument; the series has positive
    terms so it is stable for every ``z`` below overflow.
    """
    z = np.abs(np.asarray(z, dtype=float))
    if np.any(z > MGF_MAX_ARG):
        raise VelocityError("moment generating function argument too large")
    if d == 1:
        out = np.cosh(z)
    elif d == 3:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(z == 0.0, 1.0, np.sinh(z) / np.where(z == 0.0, 1.0, z))
    else:
        out = math.gamma(d / 2.0) * _j_series((d - 2) / 2.0, (z / 2.0) ** 2, sign=1.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class VelocityLaw:
    """Distribution of the transport velocity ``V`` on ``R^d``.

    ``xi`` parametrizes the deterministic and dichotomic laws, ``mu`` and
    ``sigma2`` the isotropic Gaussian ``N(mu, sigma2 I)``.
    """

    kind: LawKind
    dim: int
    xi: tuple[float, ...] | None = None
    mu: tuple[float, ...] | None = None
    sigma2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", LawKind(self.kind))
        if self.dim < 1:
            raise VelocityError("dim must be >= 1")
        if self.kind in (LawKind.DETERMINISTIC, LawKind.DICHOTOMIC):
            if self.xi is None or len(self.xi) != self.dim:
                raise VelocityError(f"{self.kind.value} law needs xi of length {self.dim}")
            object.__setattr__(self, "xi", tuple(float(x) for x in self.xi))
            if self.kind is LawKind.DICHOTOMIC and not any(self.xi):
                raise VelocityError("dichotomic law needs a nonzero xi")
        if self.kind is LawKind.GAUSSIAN_ISO:
            mu = self.mu if self.mu is not None else (0.0,) * self.dim
            if len(mu) != self.dim:
                raise VelocityError(f"gaussian mean must have length {self.dim}")
            object.__setattr__(self, "mu", tuple(float(x) for x in mu))
            if not self.sigma2 > 0:
                raise VelocityError("gaussian variance must be positive")

    @classmethod
    def deterministic(cls, xi):
        return cls(LawKind.DETERMINISTIC, len(xi), xi=tuple(xi))

    @classmethod
    def dichotomic(cls, xi):
        return cls(LawKind.DICHOTOMIC, len(xi), xi=tuple(xi))

    @classmethod
    def gaussian(cls, mu, sigma2=1.0):
        return cls(LawKind.GAUSSIAN_ISO, len(mu), mu=tuple(mu), sigma2=sigma2)

    @classmethod
    def uniform_sphere(cls, dim):
        return cls(LawKind.UNIFORM_SPHERE, dim)

    @property
    def is_symmetric(self) -> bool:
        """True when ``V`` and ``-V`` share the same law."""
        if self.kind is LawKind.DETERMINISTIC:
            return not any(self.xi)
        if self.kind is LawKind.GAUSSIAN_ISO:
            return not any(self.mu)
        return True

    # -- sampling ---------------------------------------------------------
    def _draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        d = self.dim
        if self.kind is LawKind.DETERMINISTIC:
            return np.tile(np.asarray(self.xi), (size, 1))
        if self.kind is LawKind.DICHOTOMIC:
            signs = 2.0 * rng.integers(0, 2, size=size) - 1.0
            return signs[:, None] * np.asarray(self.xi)[None, :]
        if self.kind is LawKind.GAUSSIAN_ISO:
            return np.asarray(self.mu) + math.sqrt(self.sigma2) * rng.standard_normal((size, d))
        g = rng.standard_normal((size, d))
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    def sample_blocks(self, n: int, seed: int, block_size: int = BLOCK_SIZE) -> Iterator[np.ndarray]:
        """The sample stream of :meth:`sample`, one fixed-size block at a time."""
        for b, _, size in blocks(n, block_size):
            yield self._draw(child_rng(seed, b), size)

    def sample_block(self, block_index: int, size: int, seed: int) -> np.ndarray:
        return self._draw(child_rng(seed, block_index), size)

    def sample(self, n: int, seed: int) -> np.ndarray:
        if n < 1:
            raise VelocityError("n must be >= 1")
        return np.concatenate(list(self.sample_blocks(n, seed)), axis=0)

    # -- characteristic function -----------------------------------------
    def char_fn(self, eta):
        """``phi_V(eta)``; ``eta`` may be a batch of shape ``(..., d)``."""
        eta = np.asarray(eta, dtype=float)
        if eta.ndim == 0:
            eta = eta.reshape(1)
        if eta.shape[-1] != self.dim:
            raise VelocityError(f"eta has dimension {eta.shape[-1]}, law dim is {self.dim}")
        if self.kind is LawKind.DETERMINISTIC:
            out = np.exp(1j * (eta @ np.asarray(self.xi)))
        elif self.kind is LawKind.DICHOTOMIC:
            out = np.cos(eta @ np.asarray(self.xi)) + 0j
        elif self.kind is LawKind.GAUSSIAN_ISO:
            sq = np.sum(eta * eta, axis=-1)
            out = np.exp(1j * (eta @ np.asarray(self.mu)) - 0.5 * self.sigma2 * sq)
        else:
            out = np.asarray(omega_d(self.dim, np.linalg.norm(eta, axis=-1))) + 0j
        return complex(out) if np.ndim(out) == 0 else out

    def second_moment(self) -> np.ndarray:
        d = self.dim
        if self.kind in (LawKind.DETERMINISTIC, LawKind.DICHOTOMIC):
            xi = np.asarray(self.xi)
            return np.outer(xi, xi)
        if self.kind is LawKind.GAUSSIAN_ISO:
            mu = np.asarray(self.mu)
            return self.sigma2 * np.eye(d) + np.outer(mu, mu)
        return np.eye(d) / d

    def hessian_at_zero(self, require_symmetric: bool = True) -> np.ndarray:
        """``H_V``, the Hessian of ``phi_V`` at 0 (``-E[V V^T]``).

        With ``require_symmetric`` (the default, used by every criterion that
        relies on a vanishing first derivative in time) a non-symmetric law
        is rejected.
        """
        if require_symmetric and not self.is_symmetric:
            raise VelocityError(
                f"{self.kind.value} law is not symmetric; inspect u -> C(h, u) directly instead"
            )
        return -self.second_moment()

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind.value, "dim": self.dim}
        if self.xi is not None:
            out["xi"] = list(self.xi)
        if self.kind is LawKind.GAUSSIAN_ISO:
            out["mu"] = list(self.mu)
            out["sigma2"] = self.sigma2
        return out


def law_from_json(spec: Mapping[str, Any]) -> VelocityLaw:
    """Parse ``{"kind": "dichotomic", "xi": [1, 1]}`` and friends."""
    try:
        kind = LawKind(str(spec["kind"]).lower())
    except (KeyError, ValueError) as exc:
        raise VelocityError(f"unknown or missing velocity law kind in {dict(spec)!r}") from exc
    if kind in (LawKind.DETERMINISTIC, LawKind.DICHOTOMIC):
        xi = [float(x) for x in spec["xi"]]
        return VelocityLaw(kind, len(xi), xi=tuple(xi))
    if kind is LawKind.GAUSSIAN_ISO:
        mu = [float(x) for x in spec.get("mu", [0.0] * int(spec.get("dim", 2)))]
        return VelocityLaw.gaussian(mu, float(spec.get("sigma2", 1.0)))
    return VelocityLaw.uniform_sphere(int(spec["dim"]))
