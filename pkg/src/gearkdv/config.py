"""Flat ``key = value`` run configuration.

One key per line, ``#`` starts a comment. Unknown keys and malformed values
are rejected with the offending line number.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .core import DampingProfile, Grid, ModelParams, State, WeightConfig, validate
from .dynamics import StepperConfig


class ConfigError(ValueError):
    pass


IC_KINDS = ("gaussian", "sine", "file", "zero")
SWEEPABLE = {"a0": "a0", "b": "b", "cb": "cb", "beta": "beta", "delta": "delta",
             "amplitude": "ic_amplitude"}


@dataclass(frozen=True)
class RunConfig:
    # model
    b1: float = 1.0
    b2: float = 1.0
    a1: float = 1.0
    a2: float = 1.0
    a3: float = 0.5
    r: float = 0.01
    # damping
    a0: float = 5.0
    delta: float = 0.5
    beta: float = 5.0
    baseline: float = 0.0
    ramp: float = 0.0
    # weight
    b: float = 0.25
    cb: float = 1.0
    # grid and time
    L: float = 15.0
    N: int = 1500
    dt: float = 1e-3
    T: float = 10.0
    stride: int = 10
    c_cfl: float = 0.5
    # initial condition
    ic: str = "gaussian"
    ic_center: float = 4.0
    ic_width: float = 1.0
    ic_amplitude: float = 0.5
    ic_mix_u: float = 1.0
    ic_mix_v: float = 0.0
    ic_file: str = ""
    # analysis
    linear: bool = False
    fit_tmin: float = -1.0
    fit_tmax: float = -1.0
    seed: int = 0
    check_trials: int = 100
    bypass_validation: bool = False
    # spectrum
    spectrum_N: int = 400
    spectrum_count: int = 10
    certificate_tol: float = 1e-3
    # picard
    picard_T: float = 0.1
    picard_dt: float = 1e-3
    picard_N: int = 300
    picard_tol: float = 1e-10
    picard_max_iter: int = 30
    # sweep
    sweep_param: str = ""
    sweep_values: str = ""
    sweep_workers: int = 0

    def params(self) -> ModelParams:
        return ModelParams(r=self.r, a1=self.a1, a2=self.a2, a3=self.a3, b1=self.b1, b2=self.b2)

    def profile(self) -> DampingProfile:
        return DampingProfile(a0=self.a0, delta=self.delta, beta=self.beta,
                              baseline=self.baseline, ramp=self.ramp)

    def weight(self) -> WeightConfig:
        return WeightConfig(b=self.b, cb=self.cb)

    def grid(self, N: int | None = None) -> Grid:
        return Grid(L=self.L, N=self.N if N is None else N)

    def stepper(self) -> StepperConfig:
        return StepperConfig(dt=self.dt, stride=self.stride, c_cfl=self.c_cfl)

    def fit_window(self) -> tuple:
        lo = self.T / 10 if self.fit_tmin < 0 else self.fit_tmin
        hi = self.T if self.fit_tmax < 0 else self.fit_tmax
        return lo, hi

    def sweep_list(self) -> list:
        if not self.sweep_values.strip():
            return []
        return [float(s) for s in self.sweep_values.split(",") if s.strip()]

    def initial_state(self, grid: Grid | None = None) -> State:
        grid = grid or self.grid()
        x = grid.x
        if self.ic == "zero":
            shape = np.zeros_like(x)
            return State(0.0, shape, shape.copy())
        if self.ic == "gaussian":
            shape = self.ic_amplitude * np.exp(-((x - self.ic_center) / self.ic_width) ** 2)
        elif self.ic == "sine":
            z = (x - self.ic_center) / self.ic_width
            shape = np.where(np.abs(z) < 1, self.ic_amplitude * np.cos(0.5 * np.pi * z) ** 2, 0.0)
        elif self.ic == "file":
            data = np.loadtxt(self.ic_file, ndmin=2)
            if data.shape[1] < 3:
                raise ConfigError(f"ic_file {self.ic_file!r} needs columns x, u, v")
            u = np.interp(x, data[:, 0], data[:, 1], left=0.0, right=0.0)
            v = np.interp(x, data[:, 0], data[:, 2], left=0.0, right=0.0)
            u[0] = u[-1] = v[0] = v[-1] = 0.0
            return State(0.0, u, v)
        else:
            raise ConfigError(f"unknown ic {self.ic!r}")
        u = self.ic_mix_u * shape
        v = self.ic_mix_v * shape
        u[0] = u[-1] = v[0] = v[-1] = 0.0
        return State(0.0, u, v)

    def violations(self) -> list:
        bad = []
        try:
            grid = self.grid()
        except ValueError as exc:
            return [str(exc)]
        bad += validate(self.params(), self.weight(), self.profile(), grid)
        for name in ("dt", "T", "picard_T", "picard_dt"):
            if not getattr(self, name) > 0:
                bad.append(f"{name} must be positive")
        if self.stride < 1:
            bad.append("stride must be >= 1")
        if self.ic not in IC_KINDS:
            bad.append(f"ic must be one of {', '.join(IC_KINDS)}")
        if self.ic in ("gaussian", "sine") and not self.ic_width > 0:
            bad.append("ic_width must be positive")
        if self.ic == "file" and not self.ic_file:
            bad.append("ic = file needs ic_file")
        if self.sweep_param and self.sweep_param not in SWEEPABLE:
            bad.append(f"sweep_param must be one of {', '.join(SWEEPABLE)}")
        if self.spectrum_N < 8 or self.picard_N < 8:
            bad.append("spectrum_N and picard_N must be >= 8")
        return bad


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _cast(key: str, raw: str, lineno: int):
    kind = _TYPES[key]
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"line {lineno}: {key} expects a boolean, got {raw!r}")
    if kind == "str":
        if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
            return raw[1:-1]
        return raw
    try:
        if kind == "int":
            val = float(raw)
            if val != int(val):
                raise ValueError
            return int(val)
        return float(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects {kind}, got {raw!r}") from None


def parse_pairs(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = _cast(key, raw, lineno)
    return out


def parse_config(text: str, overrides: list | None = None, check: bool = True) -> RunConfig:
    """Parse config text, apply ``key=value`` overrides and validate."""
    vals = parse_pairs(text)
    for k, item in enumerate(overrides or [], 1):
        if "=" not in item:
            raise ConfigError(f"override {k}: expected key=value, got {item!r}")
        key, raw = (s.strip() for s in item.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"override {k}: unknown key {key!r}")
        vals[key] = _cast(key, raw, k)
    cfg = RunConfig(**vals)
    if check and not cfg.bypass_validation:
        bad = cfg.violations()
        if bad:
            raise ConfigError("invalid configuration: " + "; ".join(bad))
    return cfg


def serialize(cfg: RunConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            s = "true" if v else "false"
        elif isinstance(v, float):
            s = repr(v)
        elif isinstance(v, str):
            s = f'"{v}"'
        else:
            s = str(v)
        lines.append(f"{f.name} = {s}")
    return "\n".join(lines) + "\n"


def with_value(cfg: RunConfig, key: str, value) -> RunConfig:
    key = SWEEPABLE.get(key, key)
    kind = _TYPES[key]
    return replace(cfg, **{key: int(value) if kind == "int" else value})


__all__ = ["ConfigError", "RunConfig", "parse_config", "serialize", "with_value"]
