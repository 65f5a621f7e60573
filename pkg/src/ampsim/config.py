"""Run configuration: a strict plain-text key/value format with sections.

Grammar (documented in the README):

    # comment (also ';')
    [section]
    key = value

Unknown sections or keys are rejected with the offending line number, so a
misspelled key can never fall back to a silent default.  Values are typed
per key; complex amplitudes are written as "re,im" pairs and lists as
comma-separated entries.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

from .dynamics import METHODS, EvolutionConfig
from .errors import ConfigError
from .model import ModelSpec
from .scaling import ModelTemplate

_SQ2 = math.sqrt(0.5)


def _parse_int(text: str) -> int:
    return int(text)


def _parse_float(text: str) -> float:
    return float(text)


def _parse_complex(text: str) -> complex:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected 're,im' pair, got {text!r}")
    return complex(float(parts[0]), float(parts[1]))


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p.strip()) for p in text.split(",") if p.strip())


def _parse_str_list(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _parse_str(text: str) -> str:
    return text


_SCHEMA = {
    "model": {
        "kind": _parse_str,
        "n": _parse_int,
        "n_list": _parse_int_list,
        "coupling_kind": _parse_str,
        "g": _parse_float,
        "g_min": _parse_float,
        "g_max": _parse_float,
        "alpha": _parse_float,
        "epsilon": _parse_float,
    },
    "amplitudes": {
        "c0": _parse_complex,
        "c1": _parse_complex,
    },
    "evolution": {
        "method": _parse_str,
        "dt": _parse_float,
        "T": _parse_float,
        "tolerance": _parse_float,
        "krylov_dim": _parse_int,
    },
    "pointer": {
        "theta": _parse_float,
    },
    "scan": {
        "seeds": _parse_int_list,
    },
    "output": {
        "directory": _parse_str,
        "formats": _parse_str_list,
    },
}

_FORMATS = ("csv", "gnuplot")


@dataclass(frozen=True)
class RunConfig:
    kind: str = "amplifier"
    n: int | None = None
    n_list: tuple[int, ...] | None = None
    coupling_kind: str = "disordered"
    g: float = 1.0
    g_min: float = 0.5
    g_max: float = 1.5
    alpha: float = 0.0
    epsilon: float = 0.0
    c0: complex = complex(_SQ2, 0.0)
    c1: complex = complex(_SQ2, 0.0)
    method: str = "iterative_krylov"
    dt: float = 0.1
    T: float = 200.0
    tolerance: float = 1e-9
    krylov_dim: int = 16
    theta: float = 0.25
    seeds: tuple[int, ...] = (1, 2, 3)
    directory: str | None = None
    formats: tuple[str, ...] = ("csv",)

    def validate(self) -> "RunConfig":
        if self.kind != "amplifier":
            raise ConfigError(f"unsupported model kind {self.kind!r}", key="model.kind")
        if self.coupling_kind not in ("uniform", "disordered"):
            raise ConfigError(f"unknown coupling kind {self.coupling_kind!r}",
                              key="model.coupling_kind")
        if self.coupling_kind == "disordered" and not (0 < self.g_min <= self.g_max):
            raise ConfigError("coupling range must satisfy 0 < g_min <= g_max",
                              key="model.g_min")
        if self.coupling_kind == "uniform" and not self.g > 0:
            raise ConfigError("uniform coupling g must be positive", key="model.g")
        if not (0.0 <= self.alpha < math.pi):
            raise ConfigError("alpha must lie in [0, pi)", key="model.alpha")
        if abs(abs(self.c0) ** 2 + abs(self.c1) ** 2 - 1.0) > 1e-12:
            raise ConfigError("amplitudes must satisfy |c0|^2 + |c1|^2 = 1",
                              key="amplitudes.c0")
        if self.method not in METHODS:
            raise ConfigError(f"unknown evolution method {self.method!r}",
                              key="evolution.method")
        if not (self.dt > 0 and self.T > 0 and self.tolerance > 0):
            raise ConfigError("dt, T and tolerance must be positive", key="evolution.dt")
        if self.krylov_dim < 4:
            raise ConfigError("krylov_dim must be at least 4", key="evolution.krylov_dim")
        if not (0.0 < self.theta < 1.0):
            raise ConfigError("theta must lie strictly inside (0, 1)", key="pointer.theta")
        if not self.seeds:
            raise ConfigError("at least one seed is required", key="scan.seeds")
        for fmt in self.formats:
            if fmt not in _FORMATS:
                raise ConfigError(f"unknown output format {fmt!r}", key="output.formats")
        return self

    def model_template(self) -> ModelTemplate:
        return ModelTemplate(self.coupling_kind, self.g, (self.g_min, self.g_max),
                             self.alpha, self.epsilon)

    def model_spec(self, n: int | None = None, seed: int | None = None) -> ModelSpec:
        n = n if n is not None else self.n
        if n is None:
            raise ConfigError("this command requires model.n", key="model.n")
        seed = seed if seed is not None else self.seeds[0]
        return self.model_template().make(n, seed)

    def evolution_config(self) -> EvolutionConfig:
        return EvolutionConfig(self.method, self.krylov_dim, self.dt, self.tolerance)

    def canonical_text(self) -> str:
        """Full config text with every key explicit; reparses to an equal RunConfig."""
        fmt_c = lambda z: f"{z.real!r},{z.imag!r}"
        lines = [
            "[model]",
            f"kind = {self.kind}",
        ]
        if self.n is not None:
            lines.append(f"n = {self.n}")
        if self.n_list is not None:
            lines.append("n_list = " + ",".join(str(n) for n in self.n_list))
        lines += [
            f"coupling_kind = {self.coupling_kind}",
            f"g = {self.g!r}",
            f"g_min = {self.g_min!r}",
            f"g_max = {self.g_max!r}",
            f"alpha = {self.alpha!r}",
            f"epsilon = {self.epsilon!r}",
            "",
            "[amplitudes]",
            f"c0 = {fmt_c(self.c0)}",
            f"c1 = {fmt_c(self.c1)}",
            "",
            "[evolution]",
            f"method = {self.method}",
            f"dt = {self.dt!r}",
            f"T = {self.T!r}",
            f"tolerance = {self.tolerance!r}",
            f"krylov_dim = {self.krylov_dim}",
            "",
            "[pointer]",
            f"theta = {self.theta!r}",
            "",
            "[scan]",
            "seeds = " + ",".join(str(s) for s in self.seeds),
            "",
            "[output]",
        ]
        if self.directory is not None:
            lines.append(f"directory = {self.directory}")
        lines.append("formats = " + ",".join(self.formats))
        return "\n".join(lines) + "\n"


_KEY_TO_FIELD = {
    ("model", "kind"): "kind",
    ("model", "n"): "n",
    ("model", "n_list"): "n_list",
    ("model", "coupling_kind"): "coupling_kind",
    ("model", "g"): "g",
    ("model", "g_min"): "g_min",
    ("model", "g_max"): "g_max",
    ("model", "alpha"): "alpha",
    ("model", "epsilon"): "epsilon",
    ("amplitudes", "c0"): "c0",
    ("amplitudes", "c1"): "c1",
    ("evolution", "method"): "method",
    ("evolution", "dt"): "dt",
    ("evolution", "T"): "T",
    ("evolution", "tolerance"): "tolerance",
    ("evolution", "krylov_dim"): "krylov_dim",
    ("pointer", "theta"): "theta",
    ("scan", "seeds"): "seeds",
    ("output", "directory"): "directory",
    ("output", "formats"): "formats",
}


def parse_config_text(text: str) -> RunConfig:
    values: dict[str, object] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw!r}", line=lineno)
        if section is None:
            raise ConfigError("key outside of any [section]", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA[section]:
            raise ConfigError(f"unknown key in [{section}]", key=key, line=lineno)
        try:
            parsed = _SCHEMA[section][key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {section}.{key}: {exc}",
                              key=key, line=lineno) from exc
        field = _KEY_TO_FIELD[(section, key)]
        values[field] = parsed
    return RunConfig(**values).validate()


def load_config(path) -> RunConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def with_overrides(cfg: RunConfig, *, seeds=None, directory=None) -> RunConfig:
    updates = {}
    if seeds is not None:
        updates["seeds"] = tuple(int(s) for s in seeds)
    if directory is not None:
        updates["directory"] = str(directory)
    return dataclasses.replace(cfg, **updates).validate() if updates else cfg
