"""Flat key-value run configuration (YAML mapping) with command-line overrides."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import yaml

from .lattice import REFERENCE_KERNELS, SimParams, SiteIndex, StepKernel, make_kernel
from .search import Alg1Config, Alg2Config


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    p1: float = REFERENCE_KERNELS["p2"][0]
    p2: float = REFERENCE_KERNELS["p2"][1]
    p3: float = REFERENCE_KERNELS["p2"][2]
    p4: float = REFERENCE_KERNELS["p2"][3]
    h: float = 10 * 2.0**-8
    injection_mean: float = 25.0
    box: float = 6.0
    r: int = 18
    N0: int = 10
    N1: int = 10
    c: float = 0.5
    K: float = 0.0
    M: int = 200
    seed: int = 0
    alg1_max_iters: int = 200
    alg2_max_iters: int = 500

    def kernel(self) -> StepKernel:
        return make_kernel(self.p1, self.p2, self.p3, self.p4)

    def sim_params(self) -> SimParams:
        return SimParams(h=self.h, source=SiteIndex(0, 0), injection_mean=self.injection_mean, box_half_width=self.box, seed=self.seed)

    def alg1(self, r: int | None = None) -> Alg1Config:
        return Alg1Config(r=r or self.r, N0=self.N0, max_iters=self.alg1_max_iters)

    def alg2(self, r: int | None = None) -> Alg2Config:
        return Alg2Config(r=r or self.r, N0=self.N0, N1=self.N1, c=self.c, K=self.K, max_iters=self.alg2_max_iters)

    def as_dict(self) -> dict:
        return asdict(self)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key, value):
    kind = _TYPES[key]
    try:
        if kind == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r} expects {kind}, got {value!r}") from None


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    data = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a key-value mapping")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = sorted(set(data) - set(_TYPES))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return RunConfig(**{k: _coerce(k, v) for k, v in data.items()})
