"""JSON run configurations shared by the CLI and the experiment scripts.

A config names a command and a model::

    {"command": "curve",
     "model": {"domain": "euclid",
               "kernel": {"family": "cauchy", "dim": 2},
               "law": {"kind": "dichotomic", "xi": [1, 1]},
               "strategy": {"kind": "closed"}},
     "h0": [0.5, 0.5],
     "u": {"start": -3, "stop": 3, "num": 241}}

``domain`` is ``euclid``, ``circle`` or ``sphere2``.  Sphere models take
``alpha`` and, on S^2, ``axis`` (``"uniform"`` or a unit 3-vector).
"""
from __future__ import annotations

import copy
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .kernels import kernel_from_json
from .transport_euclid import Strategy, TransportCovariance, has_closed_form
from .transport_sphere import SphereKind, SphereStrategy, SphereTransportCovariance
from .velocity import law_from_json


class ConfigError(ValueError):
    pass


class Command(str, enum.Enum):
    CURVE = "curve"
    CONTOUR = "contour"
    CLASSIFY = "classify"
    SIMULATE = "simulate"
    VALIDATE = "validate"


@dataclass
class RunConfig:
    command: Command
    model: dict[str, Any] = field(default_factory=dict)
    out: str | None = None
    seed: int = 0
    options: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "RunConfig":
        raw = copy.deepcopy(dict(raw))
        try:
            command = Command(raw.pop("command"))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"config needs a command in {[c.value for c in Command]}") from exc
        model = raw.pop("model", {})
        out = raw.pop("out", None)
        seed = int(raw.pop("seed", 0))
        cfg = cls(command, model, out, seed, raw)
        if command is not Command.VALIDATE:
            build_model(cfg.model, cfg.seed)
        return cfg

    def to_dict(self) -> dict[str, Any]:
        d = {"command": self.command.value, "model": self.model, "seed": self.seed, **self.options}
        if self.out is not None:
            d["out"] = self.out
        return d


def load_config(path: str | Path) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def apply_override(raw: dict[str, Any], assignment: str) -> None:
    """Apply ``dotted.key=value``; the value is parsed as JSON when it can be."""
    if "=" not in assignment:
        raise ConfigError(f"override must look like key=value, got {assignment!r}")
    key, text = assignment.split("=", 1)
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    node = raw
    parts = key.strip().split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override inside non-object at {p!r}")
    node[parts[-1]] = value


def build_model(model: Mapping[str, Any], seed: int = 0):
    """Return a :class:`TransportCovariance` or :class:`SphereTransportCovariance`."""
    if not model:
        raise ConfigError("config has no model")
    domain = model.get("domain", "euclid")
    strategy = dict(model.get("strategy", {}))
    kind = strategy.get("kind")
    s_seed = int(strategy.get("seed", seed))
    kernel = kernel_from_json(model["kernel"])
    if domain == "euclid":
        law = law_from_json(model["law"])
        # Without an explicit strategy, use the exact path when one exists.
        if kind is None:
            kind = "closed" if has_closed_form(kernel, law) else "mc"
        return TransportCovariance(
            kernel,
            law,
            Strategy(kind),
            n=int(strategy.get("n", 100_000)),
            seed=s_seed,
            workers=int(strategy.get("workers", 1)),
        )
    if domain in ("circle", "sphere2"):
        axis = model.get("axis", "uniform")
        axis = None if axis in (None, "uniform") else tuple(axis)
        default = "closed" if domain == "circle" else "quad"
        return SphereTransportCovariance(
            kernel,
            float(model.get("alpha", 1.0)),
            SphereKind(domain),
            axis,
            SphereStrategy(kind or default),
            n=int(strategy.get("n", 100_000)),
            seed=s_seed,
            n1=int(strategy.get("n1", 64)),
            n2=int(strategy.get("n2", 64)),
        )
    raise ConfigError(f"unknown model domain {domain!r}")


def axis_range(spec: Mapping[str, Any] | None, default: tuple[float, float, int]) -> np.ndarray:
    """``{"start", "stop", "num"}`` to a linspace."""
    spec = spec or {}
    start = float(spec.get("start", default[0]))
    stop = float(spec.get("stop", default[1]))
    num = int(spec.get("num", default[2]))
    if num < 1:
        raise ConfigError("grid sizes must be >= 1")
    return np.linspace(start, stop, num)
