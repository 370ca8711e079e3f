"""Flat key=value experiment configuration.

One experiment per file, dotted keys, hand-editable and diffable:

    model.beta = 1
    model.n_max = 10
    model.closure = mirror
    integrator.rtol = 1e-9
    ic.kind = power
    ic.p = 1
    ic.scale = 1
    run.t_end = 5
    run.diagnostics = energy, residual

Unknown dotted keys are preserved verbatim (command-specific sections
like ``regularity.*`` ride along), so serialize/parse round-trips are
field-identical.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .integrate import IntegratorConfig, Method
from .model import Closure, ModelParams

__all__ = ["ExperimentConfig", "ConfigError", "parse_mapping", "config_hash"]


class ConfigError(ValueError):
    """Config file problem, annotated with the offending line/field."""


def parse_mapping(text: str) -> dict[str, str]:
    """Flat dotted-key mapping from config text."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key or "." not in key:
            raise ConfigError(f"line {lineno}: keys must be dotted, got {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def _parse_bool(key: str, v: str) -> bool:
    if v.lower() in ("true", "1", "yes"):
        return True
    if v.lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"field {key}: expected a boolean, got {v!r}")


def _parse_float(key: str, v: str) -> float:
    try:
        return float(v)
    except ValueError as e:
        raise ConfigError(f"field {key}: expected a number, got {v!r}") from e


def _parse_int(key: str, v: str) -> int:
    try:
        return int(v)
    except ValueError as e:
        raise ConfigError(f"field {key}: expected an integer, got {v!r}") from e


def _parse_floats(key: str, v: str) -> tuple[float, ...]:
    if not v:
        return ()
    return tuple(_parse_float(key, s.strip()) for s in v.split(","))


_IC_KINDS = ("explicit", "power", "critical", "random_nonneg")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one integration run."""

    beta: float = 1.0
    n_max: int = 10
    closure: str = "mirror"

    rtol: float = 1e-9
    atol: float = 1e-12
    h_init: Optional[float] = None
    cfl: float = 0.5
    max_steps: int = 20_000_000
    method: str = "erk45"
    dense: bool = True
    max_samples: int = 400_000

    ic_kind: str = "power"
    ic_values: tuple = ()
    ic_p: float = 1.0
    ic_scale: float = 1.0

    t_end: float = 1.0
    diagnostics: tuple = ()
    seed: int = 0
    output: str = ""

    extras: tuple = ()  # sorted (key, value) pairs of unknown sections

    def __post_init__(self):
        if self.ic_kind not in _IC_KINDS:
            raise ConfigError(f"field ic.kind: unknown kind {self.ic_kind!r}")
        if self.closure not in ("mirror", "galerkin_zero"):
            raise ConfigError(f"field model.closure: unknown closure {self.closure!r}")
        if self.method not in ("erk45", "erk45_stabilized"):
            raise ConfigError(f"field integrator.method: unknown method {self.method!r}")
        if not self.t_end > 0:
            raise ConfigError("field run.t_end: horizon must be positive")

    # -- construction ------------------------------------------------------

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        return cls.from_mapping(parse_mapping(text))

    @classmethod
    def from_mapping(cls, m: dict[str, str]) -> "ExperimentConfig":
        m = dict(m)
        kw = {}

        def take(key, parse, attr):
            if key in m:
                kw[attr] = parse(key, m.pop(key))

        take("model.beta", _parse_float, "beta")
        take("model.n_max", _parse_int, "n_max")
        take("model.closure", lambda k, v: v, "closure")
        take("integrator.rtol", _parse_float, "rtol")
        take("integrator.atol", _parse_float, "atol")
        take("integrator.h_init", _parse_float, "h_init")
        take("integrator.cfl", _parse_float, "cfl")
        take("integrator.max_steps", _parse_int, "max_steps")
        take("integrator.method", lambda k, v: v, "method")
        take("integrator.dense", _parse_bool, "dense")
        take("integrator.max_samples", _parse_int, "max_samples")
        take("ic.kind", lambda k, v: v, "ic_kind")
        take("ic.values", _parse_floats, "ic_values")
        take("ic.p", _parse_float, "ic_p")
        take("ic.scale", _parse_float, "ic_scale")
        take("run.t_end", _parse_float, "t_end")
        take(
            "run.diagnostics",
            lambda k, v: tuple(s.strip() for s in v.split(",") if s.strip()),
            "diagnostics",
        )
        take("run.seed", _parse_int, "seed")
        take("run.output", lambda k, v: v, "output")
        kw["extras"] = tuple(sorted(m.items()))
        return cls(**kw)

    # -- serialization -----------------------------------------------------

    def to_mapping(self) -> dict[str, str]:
        out = {
            "model.beta": _fmt(self.beta),
            "model.n_max": _fmt(self.n_max),
            "model.closure": self.closure,
            "integrator.rtol": _fmt(self.rtol),
            "integrator.atol": _fmt(self.atol),
            "integrator.cfl": _fmt(self.cfl),
            "integrator.max_steps": _fmt(self.max_steps),
            "integrator.method": self.method,
            "integrator.dense": _fmt(self.dense),
            "integrator.max_samples": _fmt(self.max_samples),
            "ic.kind": self.ic_kind,
            "run.t_end": _fmt(self.t_end),
            "run.seed": _fmt(self.seed),
        }
        if self.h_init is not None:
            out["integrator.h_init"] = _fmt(self.h_init)
        if self.ic_kind == "explicit":
            out["ic.values"] = _fmt(self.ic_values)
        else:
            out["ic.p"] = _fmt(self.ic_p)
            out["ic.scale"] = _fmt(self.ic_scale)
        if self.diagnostics:
            out["run.diagnostics"] = ", ".join(self.diagnostics)
        if self.output:
            out["run.output"] = self.output
        out.update(dict(self.extras))
        return out

    def to_text(self) -> str:
        m = self.to_mapping()
        return "\n".join(f"{k} = {m[k]}" for k in sorted(m)) + "\n"

    # -- realized objects --------------------------------------------------

    def model_params(self) -> ModelParams:
        return ModelParams(
            beta=self.beta,
            n_max=self.n_max,
            closure=Closure.MIRROR if self.closure == "mirror" else Closure.GALERKIN_ZERO,
        )

    def integrator_config(self, tol_scale: float = 1.0) -> IntegratorConfig:
        return IntegratorConfig(
            rtol=self.rtol * tol_scale,
            atol=self.atol * tol_scale,
            h_init=self.h_init,
            cfl=self.cfl,
            max_steps=self.max_steps,
            method=Method.ERK45 if self.method == "erk45" else Method.ERK45_STABILIZED,
            dense=self.dense,
            max_samples=self.max_samples,
        )

    def initial_condition(self) -> np.ndarray:
        n = np.arange(1, self.n_max + 1, dtype=np.float64)
        if self.ic_kind == "explicit":
            x = np.asarray(self.ic_values, dtype=np.float64)
            if x.size != self.n_max:
                raise ConfigError(
                    f"field ic.values: got {x.size} entries, model has {self.n_max} shells"
                )
            return x
        if self.ic_kind == "power":
            return self.ic_scale * np.exp2(-self.ic_p * n)
        if self.ic_kind == "critical":
            kn = np.exp2(self.beta * n)
            return self.ic_scale * kn ** (-1.0 / 3.0 + 1.0 / (3.0 * self.beta))
        rng = np.random.default_rng(self.seed)
        x = np.abs(rng.standard_normal(self.n_max))
        return self.ic_scale * x / np.linalg.norm(x)

    def extra(self, key: str, default: Optional[str] = None) -> Optional[str]:
        return dict(self.extras).get(key, default)

    def with_updates(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


def config_hash(cfg: ExperimentConfig) -> str:
    """Short content hash used to name sweep outputs."""
    return hashlib.sha256(cfg.to_text().encode()).hexdigest()[:12]
