"""Dimple classification by sign-pattern scanning of criterion functions.

Convention for every criterion handed to :func:`classify_radial`: it has
the sign of ``d^2 C / du^2`` at ``u = 0``.  Negative means ``u = 0`` is a
local maximum in time (no dimple at that lag), positive means a local
minimum (dimple).  A dimple with threshold ``L`` is therefore a single
negative-to-positive crossing.  The Euclidean ``F`` has the opposite
orientation and is negated before scanning.

Only the right dimple (``u >= 0``) is classified; the left dimple with lag
set ``A`` is the right dimple with the reflected set ``-A``, because
``C(h, u) = C(-h, -u)``.

Verdicts are certified only along the scanned ray or radial grid; the report
records the domain it scanned.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .kernels import Kernel
from .transport_euclid import (
    UnsupportedModel,
    criterion_F,
    curve_closed,
    has_closed_form,
    radial_criterion,
)
from .transport_sphere import SphereTransportCovariance
from .velocity import LawKind, VelocityLaw

EUCLID_DOMAIN = (1e-6, 10.0)
SPHERE_DOMAIN = (1e-6, math.pi - 1e-6)
DEFAULT_GRID_N = 512
DEFAULT_ROOT_TOL = 1e-10


class Verdict(str, enum.Enum):
    DIMPLE = "dimple"
    NO_DIMPLE = "no_dimple"
    IMMEDIATE_DIMPLE = "immediate_dimple"
    DIRECTIONAL = "directional"
    INDETERMINATE = "indeterminate"


class Method(str, enum.Enum):
    ANALYTIC = "analytic"
    FINITE_DIFFERENCE = "finite_difference"
    SCAN = "scan"


class DimpleError(RuntimeError):
    pass


@dataclass
class DimpleReport:
    verdict: Verdict
    method: Method
    L: float | None = None
    crossings: list[float] = field(default_factory=list)
    samples: list[tuple[float, float]] = field(default_factory=list)
    domain: tuple[float, float] | None = None
    reason: str | None = None
    directions: dict[str, "DimpleReport"] = field(default_factory=dict)
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def to_json(self, include_samples: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {
            "verdict": self.verdict.value,
            "L": self.L,
            "method": self.method.value,
            "crossings": list(self.crossings),
        }
        if self.domain is not None:
            out["domain"] = list(self.domain)
        if self.reason:
            out["reason"] = self.reason
        if self.directions:
            out["directions"] = {k: v.to_json(include_samples) for k, v in self.directions.items()}
        if self.diagnostics:
            out["diagnostics"] = self.diagnostics
        if include_samples:
            out["samples"] = [list(s) for s in self.samples]
        return out


def fd_second_derivative(covfn: Callable[[float], float], step: float = 1e-3, order: int = 2) -> float:
    """Central second difference of ``covfn`` at 0.

    ``order=2`` is the three-point stencil; ``order=4`` the five-point one,
    whose truncation error is ``O(step^4)``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if order == 2:
        return (covfn(step) - 2.0 * covfn(0.0) + covfn(-step)) / (step * step)
    if order == 4:
        f1 = covfn(step) + covfn(-step)
        f2 = covfn(2 * step) + covfn(-2 * step)
        return (16.0 * f1 - f2 - 30.0 * covfn(0.0)) / (12.0 * step * step)
    raise ValueError("order must be 2 or 4")


def fd_noise_floor(covfn: Callable[[float], float], step: float = 1e-3) -> float:
    """Roundoff floor of :func:`fd_second_derivative`: ``eps * max|covfn| / step^2``."""
    m = max(abs(covfn(-step)), abs(covfn(0.0)), abs(covfn(step)))
    return np.finfo(float).eps * m / (step * step)


def _bisect(f: Callable[[float], float], a: float, b: float, fa: float, tol: float, floor: Callable[[float], float]) -> float:
    sa = math.copysign(1.0, fa)
    for _ in range(200):
        if b - a <= tol:
            break
        m = 0.5 * (a + b)
        fm = f(m)
        if abs(fm) <= floor(m):
            return m
        if math.copysign(1.0, fm) == sa:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def classify_radial(
    criterion: Callable[[float], float],
    domain: tuple[float, float] = EUCLID_DOMAIN,
    grid_n: int = DEFAULT_GRID_N,
    root_tol: float = DEFAULT_ROOT_TOL,
    *,
    grid: Sequence[float] | None = None,
    noise_floor: float | Callable[[float], float] = 0.0,
    method: Method = Method.ANALYTIC,
) -> DimpleReport:
    """Scan a dimple-oriented criterion on a grid, bisect its sign changes, and classify.

    Samples with ``|value| <= noise_floor`` carry no sign; if any such
    sample is not inside a crossing bracket the verdict is indeterminate.
    """
    if grid is None:
        if grid_n < 64:
            raise ValueError("grid_n must be >= 64")
        xs = np.linspace(domain[0], domain[1], grid_n)
    else:
        xs = np.asarray(grid, dtype=float)
        if xs.ndim != 1 or len(xs) < 2 or np.any(np.diff(xs) <= 0):
            raise ValueError("grid must be strictly increasing with at least 2 points")
        domain = (float(xs[0]), float(xs[-1]))
    floor = noise_floor if callable(noise_floor) else (lambda _x, c=float(noise_floor): c)

    vals = []
    for x in xs:
        try:
            v = float(criterion(float(x)))
        except Exception as exc:  # noqa: BLE001 - report location, keep cause
            raise DimpleError(f"criterion evaluation failed at {x!r}: {exc}") from exc
        if not math.isfinite(v):
            raise DimpleError(f"criterion is not finite at {x!r}")
        vals.append(v)
    vals = np.asarray(vals)
    floors = np.array([floor(float(x)) for x in xs])
    signs = np.where(np.abs(vals) <= floors, 0, np.sign(vals)).astype(int)
    samples = [(float(x), float(v)) for x, v in zip(xs, vals)]
    report = DimpleReport(Verdict.INDETERMINATE, Method(method), samples=samples, domain=(float(domain[0]), float(domain[1])))

    resolved = np.flatnonzero(signs)
    if len(resolved) == 0:
        report.reason = "criterion is within the noise floor on the whole grid"
        return report

    crossings, directions, bracketed = [], [], set()
    for i, j in zip(resolved[:-1], resolved[1:]):
        if signs[i] != signs[j]:
            root = _bisect(criterion, float(xs[i]), float(xs[j]), float(vals[i]), root_tol, floor)
            crossings.append(root)
            directions.append(int(signs[j]))
            bracketed.update(range(i + 1, j))
    report.crossings = crossings
    unresolved = sorted(set(np.flatnonzero(signs == 0).tolist()) - bracketed)
    if unresolved:
        report.diagnostics["unresolved"] = [float(xs[k]) for k in unresolved]
        report.reason = "criterion within the noise floor away from any sign change"
        return report

    if not crossings:
        if signs[resolved[0]] > 0:
            report.verdict, report.L = Verdict.IMMEDIATE_DIMPLE, 0.0
        else:
            report.verdict = Verdict.NO_DIMPLE
        return report
    if len(crossings) == 1 and directions[0] > 0:
        report.verdict, report.L = Verdict.DIMPLE, crossings[0]
        return report
    report.reason = (
        "single positive-to-negative crossing" if len(crossings) == 1 else f"{len(crossings)} sign changes; no single threshold"
    )
    return report


def classify_fd(
    covfn_at: Callable[[float], Callable[[float], float]],
    domain: tuple[float, float] = EUCLID_DOMAIN,
    grid_n: int = DEFAULT_GRID_N,
    root_tol: float = DEFAULT_ROOT_TOL,
    step: float = 1e-3,
    *,
    grid: Sequence[float] | None = None,
) -> DimpleReport:
    """Model-agnostic classification from ``d^2 C/du^2`` estimated by finite differences.

    ``covfn_at(x)`` returns ``u -> C(x, u)`` for the location ``x`` (radius
    along a ray, or angle on a sphere).
    """
    return classify_radial(
        lambda x: fd_second_derivative(covfn_at(x), step),
        domain,
        grid_n,
        root_tol,
        grid=grid,
        noise_floor=lambda x: fd_noise_floor(covfn_at(x), step),
        method=Method.FINITE_DIFFERENCE,
    )


def _direction_key(e: np.ndarray) -> str:
    return "(" + ", ".join(f"{c:.6g}" for c in e) + ")"


def _global_max_u(curve: Callable[[np.ndarray], np.ndarray], us: np.ndarray) -> float:
    return float(us[int(np.argmax(curve(us)))])


# Geometric probes near u = 0 catch maxima displaced by less than the scan spacing.
_NEAR_ORIGIN = np.concatenate([-np.logspace(-9, 0, 19), np.logspace(-9, 0, 19)])


def _max_off_origin(curve: Callable[[np.ndarray], np.ndarray], us: np.ndarray) -> bool:
    """True when some ``u != 0`` beats ``C(h, 0)`` beyond roundoff."""
    probes = np.concatenate([[0.0], us[us != 0], _NEAR_ORIGIN])
    vals = curve(probes)
    c0 = vals[0]
    tol = 8.0 * np.finfo(float).eps * max(abs(c0), 1e-300)
    return bool(np.any(vals[1:] > c0 + tol))


def classify_directional(
    kernel: Kernel,
    law: VelocityLaw,
    directions: Sequence[Sequence[float]],
    radii: Sequence[float] | None = None,
    root_tol: float = DEFAULT_ROOT_TOL,
    *,
    u_max: float | None = None,
    n_u: int = 401,
) -> DimpleReport:
    """Per-direction classification along rays ``h = rho e``.

    Symmetric laws use the analytic criterion ``F`` (negated to dimple
    orientation).  A deterministic velocity, or any non-symmetric law with a
    closed form, is classified by scanning ``u -> C(rho e, u)`` on
    ``[-u_max, u_max]`` plus geometric probes near 0: a lag is on the dimple side
    when the maximum is not at ``u = 0``.
    """
    if radii is None:
        radii = np.linspace(EUCLID_DOMAIN[0], EUCLID_DOMAIN[1], DEFAULT_GRID_N)
    radii = np.asarray(radii, dtype=float)
    if law.is_symmetric:
        method = Method.ANALYTIC
    elif has_closed_form(kernel, law):
        method = Method.SCAN
    else:
        raise UnsupportedModel("non-symmetric law without a closed form cannot be scanned exactly")
    if u_max is None:
        speed = np.linalg.norm(law.xi if law.xi is not None else (law.mu if law.mu is not None else np.ones(1)))
        u_max = 2.0 * float(radii[-1]) / max(float(speed), 1e-12)
    us = np.linspace(-u_max, u_max, n_u)
    closed = has_closed_form(kernel, law)

    out = DimpleReport(Verdict.DIRECTIONAL, method, domain=(float(radii[0]), float(radii[-1])))
    for raw in directions:
        e = np.asarray(raw, dtype=float)
        norm = np.linalg.norm(e)
        if e.shape != (kernel.dim,) or norm == 0:
            raise ValueError(f"direction must be a nonzero {kernel.dim}-vector, got {raw!r}")
        e = e / norm
        if method is Method.ANALYTIC:
            sub = classify_radial(lambda r, e=e: -criterion_F(kernel, law, r * e), grid=radii, root_tol=root_tol)
        else:
            def indicator(r, e=e):
                return 1.0 if _max_off_origin(lambda v: curve_closed(kernel, law, r * e, v), us) else -1.0

            sub = classify_radial(indicator, grid=radii, root_tol=root_tol, method=Method.SCAN)
        if closed:
            probe = radii[np.linspace(0, len(radii) - 1, 9).astype(int)]
            sub.diagnostics["global_max_u"] = [
                [float(r), _global_max_u(lambda v, r=r, e=e: curve_closed(kernel, law, r * e, v), us)] for r in probe
            ]
            sub.diagnostics["u_scan"] = [-float(u_max), float(u_max)]
        out.directions[_direction_key(e)] = sub
    return out


def default_directions(law: VelocityLaw) -> list[np.ndarray]:
    """The law's preferred direction and one orthogonal to it (or the axes)."""
    d = law.dim
    ref = law.xi if law.xi is not None else law.mu
    if ref is None or not any(ref):
        return list(np.eye(d))
    ref = np.asarray(ref, dtype=float)
    if d == 1:
        return [ref]
    other = np.eye(d)[int(np.argmin(np.abs(ref)))]
    other = other - (other @ ref) / (ref @ ref) * ref
    return [ref, other]


def classify_euclid(
    kernel: Kernel,
    law: VelocityLaw,
    *,
    directions: Sequence[Sequence[float]] | None = None,
    domain: tuple[float, float] = EUCLID_DOMAIN,
    grid_n: int = DEFAULT_GRID_N,
    root_tol: float = DEFAULT_ROOT_TOL,
) -> DimpleReport:
    """Radial criterion when the kernel is radial and ``V`` is uniform on the sphere, else directional."""
    if directions is None and kernel.is_radial and law.kind is LawKind.UNIFORM_SPHERE:
        return classify_radial(lambda r: radial_criterion(kernel, r, law.dim), domain, grid_n, root_tol)
    radii = np.linspace(domain[0], domain[1], grid_n)
    return classify_directional(kernel, law, directions or default_directions(law), radii, root_tol)


def classify_sphere(
    model: SphereTransportCovariance,
    domain: tuple[float, float] = SPHERE_DOMAIN,
    grid_n: int = DEFAULT_GRID_N,
    root_tol: float = DEFAULT_ROOT_TOL,
) -> DimpleReport:
    """Circle or uniform-axis S^2 classification from the analytic criterion."""
    if not model.isotropic:
        raise UnsupportedModel("fixed-axis transport is not isotropic; it is excluded from classification")
    return classify_radial(model.criterion, domain, grid_n, root_tol)
