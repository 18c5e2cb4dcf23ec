"""Spatial covariance families on R^d and on spheres.

Euclidean kernels take lag vectors ``h`` of shape ``(..., d)``.  Sphere
kernels take the cosine of the great-circle distance, ``c = cos(theta)``,
because every sphere criterion is written in derivatives with respect to
``cos(theta)``.

Variance scaling is applied multiplicatively after evaluating the
unit-variance family, so derivatives scale the same way.

Validity of sphere kernels is checked only empirically, through Gram matrix
eigenvalues (:func:`gram_min_eig`); Gegenbauer coefficients are not computed.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

COS_TOL = 1e-12


class Family(str, enum.Enum):
    EXPONENTIAL = "exponential"
    GAUSSIAN = "gaussian"
    CAUCHY = "cauchy"
    DAGUM = "dagum"
    SPECTRAL_MIXTURE = "spectral_mixture"
    MULTIQUADRIC = "multiquadric"
    COSINE = "cosine"


EUCLIDEAN_FAMILIES = frozenset(
    {Family.EXPONENTIAL, Family.GAUSSIAN, Family.CAUCHY, Family.DAGUM, Family.SPECTRAL_MIXTURE}
)
SPHERE_FAMILIES = frozenset({Family.MULTIQUADRIC, Family.COSINE})
RADIAL_FAMILIES = frozenset({Family.EXPONENTIAL, Family.GAUSSIAN, Family.CAUCHY, Family.DAGUM})
# families whose value is not twice differentiable at h = 0
SINGULAR_AT_ORIGIN = frozenset({Family.EXPONENTIAL, Family.DAGUM})

_REQUIRED_PARAMS = {
    Family.DAGUM: ("gamma", "epsilon"),
    Family.MULTIQUADRIC: ("delta", "tau"),
}


class KernelError(ValueError):
    """Invalid kernel construction or evaluation outside the kernel's domain."""


@dataclass(frozen=True)
class SpectralMixtureSpec:
    """Discrete spectral measure: atoms ``(w_j, omega_j)``.

    With ``symmetrized=True`` each atom is replaced by the pair
    ``(w/2, omega), (w/2, -omega)`` so the induced covariance is real:
    ``C(h) = sum_j w_j cos(h . omega_j)``.
    """

    weights: tuple[float, ...]
    frequencies: tuple[tuple[float, ...], ...]
    symmetrized: bool = True

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        om = np.asarray(self.frequencies, dtype=float)
        if w.ndim != 1 or len(w) == 0:
            raise KernelError("spectral mixture needs at least one atom")
        if om.ndim != 2 or om.shape[0] != len(w):
            raise KernelError("frequencies must be an (n_atoms, d) array matching the weights")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise KernelError("atom weights must be positive and finite")
        if not np.all(np.isfinite(om)):
            raise KernelError("atom frequencies must be finite")

    @classmethod
    def from_arrays(cls, weights, frequencies, symmetrized=True) -> "SpectralMixtureSpec":
        om = np.atleast_2d(np.asarray(frequencies, dtype=float))
        return cls(
            tuple(float(w) for w in np.atleast_1d(weights)),
            tuple(tuple(float(x) for x in row) for row in om),
            symmetrized,
        )

    @property
    def dim(self) -> int:
        return len(self.frequencies[0])

    @property
    def total_weight(self) -> float:
        return float(sum(self.weights))

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(weights, frequencies)`` with the symmetrization applied."""
        w = np.asarray(self.weights, dtype=float)
        om = np.asarray(self.frequencies, dtype=float)
        if self.symmetrized:
            return np.concatenate([w / 2, w / 2]), np.concatenate([om, -om])
        return w, om


@dataclass(frozen=True)
class Kernel:
    """A spatial covariance family with fixed parameters.

    Use the named constructors (``Kernel.gaussian(d)``, ``Kernel.dagum(...)``,
    ...) or :func:`kernel_from_json`.  Instances are immutable.
    """

    family: Family
    params: Mapping[str, float] = field(default_factory=dict)
    dim: int = 2
    variance: float = 1.0
    mixture: SpectralMixtureSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "params", dict(self.params))
        fam = self.family
        if int(self.dim) != self.dim or self.dim < 1:
            raise KernelError(f"dim must be a positive integer, got {self.dim}")
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise KernelError(f"variance must be positive, got {self.variance}")
        for name in _REQUIRED_PARAMS.get(fam, ()):
            if name not in self.params:
                raise KernelError(f"{fam.value} kernel requires parameter {name!r}")
        p = self.params
        if fam is Family.DAGUM:
            g, e = p["gamma"], p["epsilon"]
            if not 0 < g <= 2:
                raise KernelError(f"dagum gamma must lie in (0, 2], got {g}")
            if not 0 < e < g:
                raise KernelError(f"dagum epsilon must lie in (0, gamma), got {e}")
        elif fam is Family.MULTIQUADRIC:
            if not 0 < p["delta"] < 1:
                raise KernelError(f"multiquadric delta must lie in (0, 1), got {p['delta']}")
            if not p["tau"] > 0:
                raise KernelError(f"multiquadric tau must be positive, got {p['tau']}")
        elif fam is Family.SPECTRAL_MIXTURE:
            if self.mixture is None:
                raise KernelError("spectral_mixture kernel requires a SpectralMixtureSpec")
            if self.mixture.dim != self.dim:
                raise KernelError("mixture frequency dimension differs from kernel dim")
            if not math.isclose(self.variance, self.mixture.total_weight, rel_tol=1e-12):
                raise KernelError("spectral mixture variance is the total atom weight")
        if fam is Family.COSINE and self.dim < 2:
            raise KernelError("sphere kernels need ambient dimension >= 2")

    # -- constructors -----------------------------------------------------
    @classmethod
    def exponential(cls, dim=2, variance=1.0):
        return cls(Family.EXPONENTIAL, {}, dim, variance)

    @classmethod
    def gaussian(cls, dim=2, variance=1.0):
        return cls(Family.GAUSSIAN, {}, dim, variance)

    @classmethod
    def cauchy(cls, dim=2, variance=1.0):
        return cls(Family.CAUCHY, {}, dim, variance)

    @classmethod
    def dagum(cls, gamma, epsilon, dim=2, variance=1.0):
        return cls(Family.DAGUM, {"gamma": gamma, "epsilon": epsilon}, dim, variance)

    @classmethod
    def spectral_mixture(cls, mixture: SpectralMixtureSpec):
        return cls(Family.SPECTRAL_MIXTURE, {}, mixture.dim, mixture.total_weight, mixture)

    @classmethod
    def multiquadric(cls, delta, tau, dim=3, variance=1.0):
        return cls(Family.MULTIQUADRIC, {"delta": delta, "tau": tau}, dim, variance)

    @classmethod
    def cosine(cls, dim=3, variance=1.0):
        return cls(Family.COSINE, {}, dim, variance)

    def scaled(self, factor: float) -> "Kernel":
        """Same family with variance multiplied by ``factor``."""
        if self.family is Family.SPECTRAL_MIXTURE:
            m = self.mixture
            return Kernel.spectral_mixture(
                SpectralMixtureSpec(tuple(w * factor for w in m.weights), m.frequencies, m.symmetrized)
            )
        return Kernel(self.family, self.params, self.dim, self.variance * factor)

    # -- classification ---------------------------------------------------
    @property
    def is_sphere(self) -> bool:
        return self.family in SPHERE_FAMILIES

    @property
    def is_radial(self) -> bool:
        return self.family in RADIAL_FAMILIES

    def _require_euclid(self):
        if self.is_sphere:
            raise KernelError(f"{self.family.value} is a sphere kernel; pass cos(theta) to sphere methods")

    def _require_sphere(self):
        if not self.is_sphere:
            raise KernelError(f"{self.family.value} is a Euclidean kernel")

    def _lag(self, h, allow_batch=True) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        if h.ndim == 0:
            h = h.reshape(1)
        if h.shape[-1] != self.dim:
            raise KernelError(f"lag has dimension {h.shape[-1]}, kernel dim is {self.dim}")
        if not allow_batch and h.ndim != 1:
            raise KernelError("expected a single lag vector")
        if not np.all(np.isfinite(h)):
            raise KernelError("lag must be finite")
        return h

    # -- evaluation -------------------------------------------------------
    def __call__(self, x):
        """``C_S(h)`` for Euclidean kernels, ``psi_S(c)`` for sphere kernels."""
        if self.is_sphere:
            return self.sphere_value(x)
        return self.value(x)

    def value(self, h):
        """Covariance at lag(s) ``h`` of shape ``(..., d)``."""
        self._require_euclid()
        h = self._lag(h)
        fam = self.family
        if fam is Family.SPECTRAL_MIXTURE:
            w, om = self.mixture.atoms()
            out = np.cos(h @ om.T) @ w
            return out if out.ndim else float(out)
        if fam in (Family.GAUSSIAN, Family.CAUCHY):
            s = np.sum(h * h, axis=-1)
            out = self.variance * _sq_family(fam, s)[0]
        else:
            r = np.sqrt(np.sum(h * h, axis=-1))
            out = self.variance * _radial_value(fam, self.params, r)
        return out if np.ndim(out) else float(out)

    def grad(self, h) -> np.ndarray:
        self._require_euclid()
        h = self._lag(h, allow_batch=False)
        fam = self.family
        if fam is Family.SPECTRAL_MIXTURE:
            w, om = self.mixture.atoms()
            return -(w * np.sin(om @ h)) @ om
        if fam in (Family.GAUSSIAN, Family.CAUCHY):
            _, f1, _ = _sq_family(fam, float(h @ h))
            return self.variance * 2.0 * f1 * h
        r = float(np.linalg.norm(h))
        if r == 0.0:
            raise KernelError(f"{fam.value} kernel is not differentiable at the origin")
        _, d1, _ = _radial_derivs(fam, self.params, r)
        return self.variance * d1 * h / r

    def hessian(self, h) -> np.ndarray:
        self._require_euclid()
        h = self._lag(h, allow_batch=False)
        fam = self.family
        d = self.dim
        if fam is Family.SPECTRAL_MIXTURE:
            w, om = self.mixture.atoms()
            H = -(om.T * (w * np.cos(om @ h))) @ om
        elif fam in (Family.GAUSSIAN, Family.CAUCHY):
            _, f1, f2 = _sq_family(fam, float(h @ h))
            H = self.variance * (2.0 * f1 * np.eye(d) + 4.0 * f2 * np.outer(h, h))
        else:
            r = float(np.linalg.norm(h))
            if r == 0.0:
                raise KernelError(f"{fam.value} kernel is not twice differentiable at the origin")
            _, d1, d2 = _radial_derivs(fam, self.params, r)
            e = h / r
            P = np.outer(e, e)
            H = self.variance * (d2 * P + (d1 / r) * (np.eye(d) - P))
        return 0.5 * (H + H.T)

    def laplacian(self, h) -> float:
        return float(np.trace(self.hessian(h)))

    def radial_derivs(self, r: float) -> tuple[float, float, float]:
        """``(phi(r), phi'(r), phi''(r))`` for a radially symmetric kernel."""
        self._require_euclid()
        if not self.is_radial:
            raise KernelError(f"{self.family.value} kernel is not radially symmetric")
        if not r > 0:
            raise KernelError(f"radial derivatives need r > 0, got {r}")
        vals = _radial_derivs(self.family, self.params, float(r))
        return tuple(self.variance * v for v in vals)

    # -- sphere -----------------------------------------------------------
    def sphere_value(self, c):
        self._require_sphere()
        c = _clamp_cos(c)
        out = self.variance * _sphere_value(self.family, self.params, c)
        return out if np.ndim(out) else float(out)

    def sphere_derivs(self, c: float) -> tuple[float, float, float]:
        """``(psi_S(c), psi_S'(c), psi_S''(c))`` with respect to ``c = cos(theta)``."""
        self._require_sphere()
        if not -1.0 < c < 1.0:
            raise KernelError(f"sphere derivatives are taken on the open interval (-1, 1), got {c}")
        p = self.params
        if self.family is Family.COSINE:
            vals = (c, 1.0, 0.0)
        else:
            delta, tau = p["delta"], p["tau"]
            a = (1.0 - delta) ** (2 * tau)
            D = 1.0 + delta * delta - 2.0 * delta * c
            vals = (
                a * D ** (-tau),
                2.0 * delta * tau * a * D ** (-tau - 1),
                4.0 * delta * delta * tau * (tau + 1) * a * D ** (-tau - 2),
            )
        return tuple(self.variance * v for v in vals)

    # -- Gram matrices ----------------------------------------------------
    def gram(self, points, others=None) -> np.ndarray:
        """Covariance matrix between two point sets (coordinates in rows)."""
        X = np.atleast_2d(np.asarray(points, dtype=float))
        Y = X if others is None else np.atleast_2d(np.asarray(others, dtype=float))
        if self.is_sphere:
            return self.sphere_value(X @ Y.T)
        return self.value(X[:, None, :] - Y[None, :, :])

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"family": self.family.value, **self.params, "dim": self.dim}
        if self.family is Family.SPECTRAL_MIXTURE:
            m = self.mixture
            out["weights"] = list(m.weights)
            out["frequencies"] = [list(f) for f in m.frequencies]
            out["symmetrized"] = m.symmetrized
        else:
            out["variance"] = self.variance
        return out


def kernel_from_json(spec: Mapping[str, Any]) -> Kernel:
    """Build a kernel from ``{"family": "dagum", "gamma": 2, "epsilon": 1, "dim": 2}``."""
    spec = dict(spec)
    try:
        fam = Family(str(spec.pop("family")).lower())
    except KeyError as exc:
        raise KernelError(f"kernel spec has no family: {spec!r}") from exc
    except ValueError as exc:
        raise KernelError(f"unknown kernel family; expected one of {[f.value for f in Family]}") from exc
    if fam is Family.SPECTRAL_MIXTURE:
        mix = SpectralMixtureSpec.from_arrays(
            spec["weights"], spec["frequencies"], bool(spec.get("symmetrized", True))
        )
        return Kernel.spectral_mixture(mix)
    default_dim = 3 if fam in SPHERE_FAMILIES else 2
    dim = int(spec.pop("dim", default_dim))
    variance = float(spec.pop("variance", 1.0))
    params = {k: float(v) for k, v in spec.items()}
    allowed = set(_REQUIRED_PARAMS.get(fam, ()))
    if set(params) - allowed:
        raise KernelError(f"unexpected parameters for {fam.value}: {sorted(set(params) - allowed)}")
    return Kernel(fam, params, dim, variance)


def _clamp_cos(c):
    c = np.asarray(c, dtype=float)
    if np.any(np.abs(c) > 1.0 + COS_TOL) or not np.all(np.isfinite(c)):
        raise KernelError("cos(theta) outside [-1, 1] beyond tolerance")
    return np.clip(c, -1.0, 1.0)


def _sphere_value(fam, p, c):
    if fam is Family.COSINE:
        return c
    delta, tau = p["delta"], p["tau"]
    return (1.0 - delta) ** (2 * tau) / (1.0 + delta * delta - 2.0 * delta * c) ** tau


def _sq_family(fam, s):
    """Value and derivatives in ``s = |h|^2`` for Gaussian and Cauchy."""
    if fam is Family.GAUSSIAN:
        f = np.exp(-s)
        return f, -f, f
    q = 1.0 / (1.0 + s)
    return q, -q * q, 2.0 * q ** 3


def _radial_value(fam, p, r):
    if fam is Family.EXPONENTIAL:
        return np.exp(-r)
    if fam is Family.GAUSSIAN:
        return np.exp(-r * r)
    if fam is Family.CAUCHY:
        return 1.0 / (1.0 + r * r)
    g, e = p["gamma"], p["epsilon"]
    with np.errstate(divide="ignore", invalid="ignore"):
        rg = np.power(r, g)
        t = rg / (1.0 + rg)
    return 1.0 - np.power(t, e / g)


def _radial_derivs(fam, p, r):
    if fam is Family.EXPONENTIAL:
        f = math.exp(-r)
        return f, -f, f
    if fam is Family.GAUSSIAN:
        f = math.exp(-r * r)
        return f, -2.0 * r * f, (4.0 * r * r - 2.0) * f
    if fam is Family.CAUCHY:
        q = 1.0 / (1.0 + r * r)
        return q, -2.0 * r * q * q, (6.0 * r * r - 2.0) * q ** 3
    g, e = p["gamma"], p["epsilon"]
    if g == 2.0 and e == 1.0:
        s = 1.0 + r * r
        return 1.0 - r / math.sqrt(s), -(s ** -1.5), 3.0 * r * s ** -2.5
    # chain rule through t(r) = r^g / (1 + r^g), phi = 1 - t^(e/g)
    k = e / g
    rg = r ** g
    b = 1.0 + rg
    t = rg / b
    t1 = g * r ** (g - 1) / b ** 2
    t2 = g * (g - 1) * r ** (g - 2) / b ** 2 - 2.0 * g * g * r ** (2 * g - 2) / b ** 3
    phi = 1.0 - t ** k
    d1 = -k * t ** (k - 1) * t1
    d2 = -k * ((k - 1) * t ** (k - 2) * t1 * t1 + t ** (k - 1) * t2)
    return phi, d1, d2


def gram_min_eig(kernel: Kernel, points: Sequence) -> float:
    """Smallest eigenvalue of the Gram matrix (a PSD diagnostic)."""
    return float(np.linalg.eigvalsh(kernel.gram(points))[0])
