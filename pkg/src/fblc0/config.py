"""Run parameters shared by the norm search, the c0 constructions and the CLI."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError

ENV_PREFIX = "FBLC0_"


def default_n_seq(length: int) -> tuple[int, ...]:
    """``N_n = n + 1`` for ``n = 1..length``."""
    return tuple(n + 1 for n in range(1, length + 1))


@dataclass(frozen=True)
class ParamConfig:
    truncation: int = 32
    n_seq: tuple[int, ...] | None = None
    eps: float = 0.1
    tol: float = 1e-9
    restarts: int = 64
    steps: int = 500
    max_tuple: int = 8
    search_width: int = 12
    exact_limit: int = 20
    samples: int = 100_000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.n_seq is None:
            object.__setattr__(self, "n_seq", default_n_seq(max(self.truncation, 1)))
        else:
            object.__setattr__(self, "n_seq", tuple(int(v) for v in self.n_seq))
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.truncation, int) or self.truncation < 1:
            raise ConfigError(f"truncation must be a positive integer, got {self.truncation!r}")
        seq = self.n_seq
        if len(seq) < self.truncation:
            raise ConfigError(
                f"N sequence has {len(seq)} terms but truncation is {self.truncation}"
            )
        if seq[0] < 1 or any(b <= a for a, b in zip(seq, seq[1:])):
            raise ConfigError("N sequence must be strictly increasing positive integers")
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        if not self.tol >= 0:
            raise ConfigError("tol must be nonnegative")
        for name in ("restarts", "steps", "max_tuple", "search_width", "samples", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if not 1 <= self.exact_limit <= 24:
            raise ConfigError("exact_limit must lie in 1..24")
        if self.search_width > self.exact_limit:
            raise ConfigError("search_width may not exceed exact_limit")

    def N(self, n: int) -> int:
        if not 1 <= n <= len(self.n_seq):
            raise ConfigError(f"N_{n} requested beyond the configured sequence (truncation {self.truncation})")
        return self.n_seq[n - 1]

    def replace(self, **changes) -> ParamConfig:
        if "truncation" in changes and "n_seq" not in changes:
            t = changes["truncation"]
            if isinstance(t, int) and t > len(self.n_seq) and self.n_seq == default_n_seq(len(self.n_seq)):
                changes["n_seq"] = None
        return dataclasses.replace(self, **changes)

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["n_seq"] = list(self.n_seq)
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(ParamConfig)}


def _coerce(name: str, value: Any):
    if name == "n_seq":
        if isinstance(value, str):
            try:
                return tuple(int(v) for v in value.split(",") if v.strip())
            except ValueError:
                raise ConfigError(f"bad N sequence {value!r}") from None
        return tuple(int(v) for v in value)
    if name in ("eps", "tol"):
        return float(value)
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an integer, got {value!r}") from None


def load_config(path: str | os.PathLike | None = None, env: Mapping[str, str] | None = None,
                overrides: Mapping[str, Any] | None = None) -> ParamConfig:
    """Layered configuration: defaults < JSON file < environment < explicit overrides."""
    values: dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        for k, v in data.items():
            key = k.replace("-", "_")
            if key not in _FIELDS:
                raise ConfigError(f"unknown config key {k!r}")
            values[key] = _coerce(key, v)
    env = os.environ if env is None else env
    for key in _FIELDS:
        var = ENV_PREFIX + key.upper()
        if var in env:
            values[key] = _coerce(key, env[var])
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = _coerce(k, v)
    if "truncation" in values and "n_seq" not in values:
        values["n_seq"] = default_n_seq(max(int(values["truncation"]), 1))
    try:
        return ParamConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
