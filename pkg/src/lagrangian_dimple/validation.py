"""Invariant suites behind ``lagdimple validate``.

Each check returns ``(passed, detail)``.  Sizes are chosen so the whole
default run finishes in well under a minute.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import dimple, fieldsim, rotations, transport_euclid as te, transport_sphere as ts
from .kernels import Kernel
from .velocity import VelocityLaw

Check = Callable[[], tuple[bool, str]]


def _fd_grad(f, x, step):
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = step * max(1.0, abs(x[i]))
        g[i] = (f(x + e) - f(x - e)) / (2 * e[i])
    return g


def _kernel_fd() -> tuple[bool, str]:
    rng = np.random.default_rng(1)
    worst = 0.0
    for k in (Kernel.gaussian(2), Kernel.cauchy(3), Kernel.exponential(2), Kernel.dagum(1.5, 0.7, dim=2)):
        for _ in range(20):
            h = rng.uniform(-2, 2, k.dim)
            fd = _fd_grad(lambda z: k.value(z), h, 1e-5)
            an = k.grad(h)
            worst = max(worst, float(np.max(np.abs(fd - an)) / max(1e-8, np.max(np.abs(an)))))
    return worst < 1e-5, f"max relative gradient error {worst:.2e}"


def _kernel_psd() -> tuple[bool, str]:
    rng = np.random.default_rng(2)
    worst = math.inf
    for d in (1, 2, 3):
        for k in (Kernel.exponential(d), Kernel.gaussian(d), Kernel.cauchy(d), Kernel.dagum(2, 1, dim=d)):
            worst = min(worst, float(np.linalg.eigvalsh(k.gram(rng.uniform(-3, 3, (50, d))))[0]))
    return worst >= -1e-8, f"minimum Gram eigenvalue {worst:.2e}"


def _velocity_mc() -> tuple[bool, str]:
    rng = np.random.default_rng(3)
    n = 20_000
    ok = True
    for law in (VelocityLaw.dichotomic([1.0, 1.0]), VelocityLaw.gaussian([0.5, 0.0]), VelocityLaw.uniform_sphere(3)):
        V = law.sample(n, 7)
        for _ in range(5):
            eta = rng.normal(size=law.dim)
            mc = np.mean(np.exp(1j * V @ eta))
            ok &= abs(mc - law.char_fn(eta)) < 4.0 * math.sqrt(2.0 / n)
    return bool(ok), "Monte Carlo characteristic functions within 4/sqrt(n)"


def _velocity_hessian() -> tuple[bool, str]:
    worst = 0.0
    for law in (VelocityLaw.dichotomic([1.0, 2.0]), VelocityLaw.gaussian([0.0, 0.0], 0.5), VelocityLaw.uniform_sphere(4)):
        d, s = law.dim, 1e-4
        H = np.zeros((d, d))
        for i in range(d):
            for j in range(d):
                ei, ej = np.eye(d)[i] * s, np.eye(d)[j] * s
                f = lambda z: law.char_fn(z).real  # noqa: E731
                H[i, j] = (f(ei + ej) - f(ei - ej) - f(ej - ei) + f(-ei - ej)) / (4 * s * s)
        worst = max(worst, float(np.max(np.abs(H - law.hessian_at_zero()))))
    return worst < 1e-6, f"max Hessian error {worst:.2e}"


def _criterion_curvature_identity() -> tuple[bool, str]:
    rng = np.random.default_rng(4)
    models = [
        (Kernel.gaussian(2), VelocityLaw.gaussian([0.0, 0.0])),
        (Kernel.cauchy(2), VelocityLaw.dichotomic([1.0, 1.0])),
        (Kernel.gaussian(3), VelocityLaw.uniform_sphere(3)),
    ]
    worst = 0.0
    for k, law in models:
        for _ in range(10):
            h = rng.uniform(-1.5, 1.5, k.dim)
            F = te.criterion_F(k, law, h)
            fd = dimple.fd_second_derivative(lambda u: te.eval_closed(k, law, h, u), 1e-3)
            worst = max(worst, abs(F + fd) / abs(F))
    return worst < 1e-3, f"max relative error {worst:.2e}"


def _gaussian_velocity_mc() -> tuple[bool, str]:
    k, law = Kernel.gaussian(2), VelocityLaw.gaussian([1.0, 0.0])
    est = te.eval_mc(k, law, [1.0, 0.0], 1.0, 20_000, 11)
    return abs(est.estimate - 1 / 3) < 3 * est.stderr, f"{est.estimate:.5f} +- {est.stderr:.1e} vs 1/3"


def _rotation_group() -> tuple[bool, str]:
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(200):
        w = rotations.sample_axis(1, int(rng.integers(1 << 31)))[0]
        a, u, v = rng.uniform(0, 2 * math.pi), rng.normal(), rng.normal()
        r = rotations.AxisRotation(tuple(w), a)
        R = r.power(u)
        worst = max(worst, float(np.max(np.abs(R.T @ R - np.eye(3)))))
        worst = max(worst, float(np.max(np.abs(r.power(u + v) - R @ r.power(v)))))
    return worst < 1e-10, f"max deviation {worst:.2e}"


def _sphere_cosine() -> tuple[bool, str]:
    k = Kernel.cosine()
    worst = 0.0
    for th in np.linspace(0, math.pi, 7):
        for u in np.linspace(-4, 4, 7):
            worst = max(worst, abs(ts.sphere2_cov_quad(k, 1.0, th, u) - ts.sphere2_cov_closed(k, 1.0, th, u)))
    return worst < 1e-10, f"max quadrature error {worst:.2e}"


def _circle_matrix_form() -> tuple[bool, str]:
    rng = np.random.default_rng(6)
    k = Kernel.multiquadric(0.5, 1.0, dim=2)
    worst = 0.0
    for _ in range(50):
        a, b = rng.uniform(0, 2 * math.pi, 2)
        x, y = np.array([math.cos(a), math.sin(a)]), np.array([math.cos(b), math.sin(b)])
        th = math.acos(np.clip(x @ y, -1, 1))
        u = rng.normal(scale=2)
        worst = max(worst, abs(ts.circle_cov(k, 1.0, th, u) - ts.circle_cov_matrix(k, 1.0, x, y, u)))
    return worst < 1e-12, f"max deviation {worst:.2e}"


def _thresholds() -> tuple[bool, str]:
    rep2 = dimple.classify_euclid(Kernel.dagum(2, 1, dim=2), VelocityLaw.uniform_sphere(2))
    delta = 0.5
    zeta1 = (-(1 + delta**2) + math.sqrt((1 + delta**2) ** 2 + 32 * delta**2)) / (4 * delta)
    circ = dimple.classify_sphere(ts.SphereTransportCovariance(Kernel.multiquadric(delta, 1.0, dim=2), 1.0, "circle"))
    cosine = dimple.classify_sphere(ts.SphereTransportCovariance(Kernel.cosine(), 1.0, "sphere2"))
    ok = (
        abs(rep2.L - math.sqrt(0.5)) < 1e-8
        and abs(circ.L - math.acos(zeta1)) < 1e-8
        and abs(cosine.L - math.pi / 2) < 1e-6
    )
    return ok, f"L = {rep2.L:.10f}, {circ.L:.10f}, {cosine.L:.10f}"


def _frozen_simulation() -> tuple[bool, str]:
    grid = fieldsim.PointSet(np.array([[0.0, 0.0], [1.0, 0.0]]))
    law = VelocityLaw.deterministic([1.0, 0.0])
    runs = fieldsim.simulate_many(
        fieldsim.simulate_transport_euclid, 200, 9, kernel=Kernel.exponential(2), law=law, grid=grid, times=[0.0, 1.0]
    )
    a = np.array([r[0].values[0] for r in runs])
    b = np.array([r[1].values[1] for r in runs])
    corr = float(np.corrcoef(a, b)[0, 1])
    return abs(corr - 1) < 1e-10, f"correlation {corr!r}"


SUITES: dict[str, dict[str, Check]] = {
    "kernels": {"finite_difference_gradients": _kernel_fd, "gram_psd": _kernel_psd},
    "velocity": {"char_fn_monte_carlo": _velocity_mc, "hessian_at_zero": _velocity_hessian},
    "transport_euclid": {"criterion_curvature_identity": _criterion_curvature_identity, "gaussian_velocity_mc": _gaussian_velocity_mc},
    "rotations": {"group_and_orthogonality": _rotation_group},
    "transport_sphere": {"cosine_closed_form": _sphere_cosine, "circle_matrix_form": _circle_matrix_form},
    "dimple": {"thresholds": _thresholds},
    "fieldsim": {"frozen_field_correlation": _frozen_simulation},
}


def run_suites(names=None) -> dict[str, dict[str, dict[str, object]]]:
    names = list(SUITES) if not names else list(names)
    unknown = set(names) - set(SUITES)
    if unknown:
        raise KeyError(f"unknown suites {sorted(unknown)}")
    out = {}
    for name in names:
        out[name] = {}
        for check, fn in SUITES[name].items():
            try:
                ok, detail = fn()
            except Exception as exc:  # noqa: BLE001 - a crashing check is a failed check
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            out[name][check] = {"passed": bool(ok), "detail": detail}
    return out
