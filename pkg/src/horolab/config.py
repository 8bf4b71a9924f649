"""Experiment configuration: a small sectioned key = value format.

Grammar::

    file     := (blank | comment | section | entry)*
    comment  := '#' text
    section  := '[' name ']'
    entry    := key '=' value
    value    := number | word | list
    list     := value (',' value)*

Keys are only recognised inside their section.  Numbers are written with
repr() so that parse(serialize(c)) == c exactly.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields

OUT_ENV = "HOROLAB_OUT"


class ConfigError(ValueError):
    pass


# section -> (attribute, key, type); type is float, int, str or a tuple marker for float lists
_SCHEMA: dict[str, list[tuple[str, str, str]]] = {
    "group": [("group", "name", "str")],
    "test_function": [
        ("tf_kind", "kind", "str"),
        ("tf_center", "center", "floats"),
        ("tf_radius", "radius", "float"),
        ("tf_T", "T", "float"),
    ],
    "cutoff": [
        ("cutoff_kind", "kind", "str"),
        ("alpha", "alpha", "float"),
        ("kappa", "kappa", "float"),
        ("gamma", "gamma", "floats"),
        ("h", "h", "float"),
    ],
    "grid": [("y_start", "start", "float"), ("y_stop", "stop", "float"), ("y_ratio", "ratio", "float")],
    "quadrature": [("q", "resolution", "float"), ("quad_res", "volume_nodes", "int")],
    "output": [("out_dir", "dir", "str"), ("stem", "stem", "str"), ("svg", "svg", "bool")],
    "run": [("seed", "seed", "int")],
}


@dataclass
class ExperimentConfig:
    group: str = "psl2z"
    tf_kind: str = "pointpair"
    tf_center: list[float] = field(default_factory=lambda: [0.1, 1.3])
    tf_radius: float = 0.8
    tf_T: float = 0.0
    cutoff_kind: str = "bump"
    alpha: float = 0.0
    kappa: float = 1.0
    gamma: list[float] = field(default_factory=lambda: [0.0])
    h: float = 0.1
    y_start: float = 2.0**-4
    y_stop: float = 2.0**-14
    y_ratio: float = 0.5
    q: float = 64.0
    quad_res: int = 256
    out_dir: str = "out"
    stem: str = "horosphere"
    svg: bool = True
    seed: int = 0

    def validate(self) -> "ExperimentConfig":
        if self.tf_kind not in ("pointpair", "eisenstein", "constant"):
            raise ConfigError(f"unknown test function kind {self.tf_kind!r}")
        if self.cutoff_kind not in ("bump", "box", "mollified"):
            raise ConfigError(f"unknown cutoff kind {self.cutoff_kind!r}")
        if not 0 <= self.alpha <= 0.5:
            raise ConfigError("alpha must lie in [0, 1/2]")
        if not self.kappa > 0:
            raise ConfigError("kappa must be positive")
        if not (0 < self.y_stop < self.y_start < 1):
            raise ConfigError("need 0 < stop < start < 1 for the y grid")
        if not 0 < self.y_ratio < 1:
            raise ConfigError("grid ratio must lie in (0, 1)")
        if self.q < 8:
            raise ConfigError("quadrature resolution must be at least 8")
        if self.quad_res < 16:
            raise ConfigError("volume_nodes must be at least 16")
        if self.cutoff_kind == "mollified" and not 0 < self.h < 1:
            raise ConfigError("mollifier width h must lie in (0, 1)")
        if self.tf_radius <= 0:
            raise ConfigError("radius must be positive")
        return self

    def y_grid(self) -> list[float]:
        count = int(math.floor(math.log(self.y_stop / self.y_start) / math.log(self.y_ratio) + 1e-9)) + 1
        return [self.y_start * self.y_ratio**k for k in range(count)]

    def output_dir(self) -> str:
        return os.environ.get(OUT_ENV) or self.out_dir


def _format(value, kind: str) -> str:
    if kind == "floats":
        return ", ".join(repr(float(v)) for v in value)
    if kind == "float":
        return repr(float(value))
    if kind == "bool":
        return "true" if value else "false"
    return str(value)


def _parse_value(text: str, kind: str, where: str):
    try:
        if kind == "floats":
            return [float(t) for t in text.split(",") if t.strip()]
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        if kind == "bool":
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError(text)
            return low == "true"
    except ValueError:
        raise ConfigError(f"{where}: cannot read {text!r} as {kind}") from None
    return text


def serialize(cfg: ExperimentConfig) -> str:
    lines = []
    for section, entries in _SCHEMA.items():
        lines.append(f"[{section}]")
        for attr, key, kind in entries:
            lines.append(f"{key} = {_format(getattr(cfg, attr), kind)}")
        lines.append("")
    return "\n".join(lines)


def parse(text: str) -> ExperimentConfig:
    lookup = {(sec, key): (attr, kind) for sec, entries in _SCHEMA.items() for attr, key, kind in entries}
    values = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header")
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        if section is None:
            raise ConfigError(f"line {lineno}: entry outside any section")
        key, val = (t.strip() for t in line.split("=", 1))
        if (section, key) not in lookup:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        attr, kind = lookup[(section, key)]
        values[attr] = _parse_value(val, kind, f"line {lineno}")
    cfg = ExperimentConfig(**values)
    return cfg.validate()


def load(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            return parse(fh.read())
    except OSError as exc:
        raise ConfigError(str(exc)) from None


def config_dict(cfg: ExperimentConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}
