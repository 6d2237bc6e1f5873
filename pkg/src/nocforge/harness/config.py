"""Experiment configuration files.

Flat text, one ``key = value`` per line, ``#`` starts a comment::

    topology = Mesh
    rate = 0.2
    seed = 7
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from ..router import RouterConfig
from ..topology import KINDS, TopologySpec
from .traffic import PATTERNS, TrafficSpec


class ConfigError(ValueError):
    def __init__(self, key: str | None, message: str):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


@dataclass(frozen=True)
class ExperimentConfig:
    topology: str = "Mesh"
    vcs: int = 2
    buffer_depth: int = 8
    flit_width: int = 32
    pattern: str = "uniform-random"
    rate: float = 0.1
    packet_len: int = 4
    seed: int = 1
    warmup: int = 1000
    measure: int = 10000
    drain: int = 10000
    trace: bool = False
    payload_buffer: str = "packed"
    flow_src: int = 0
    flow_dst: int = 15

    def router(self) -> RouterConfig:
        return RouterConfig(
            num_vcs=self.vcs,
            buffer_depth=self.buffer_depth,
            flit_data_width=self.flit_width,
            payload_buffer=self.payload_buffer,
        )

    def topology_spec(self) -> TopologySpec:
        return TopologySpec(self.topology, self.router())

    def traffic(self) -> TrafficSpec:
        return TrafficSpec(
            pattern=self.pattern,
            rate=self.rate,
            packet_len=self.packet_len,
            seed=self.seed,
            warmup=self.warmup,
            measure=self.measure,
            drain=self.drain,
            flow_src=self.flow_src,
            flow_dst=self.flow_dst,
        )

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {str(v).lower() if isinstance(v, bool) else v}")
        return "\n".join(lines) + "\n"


_TOPOLOGY_NAMES = {k.lower(): k for k in KINDS}
_BOOL = {"true": True, "yes": True, "on": True, "1": True, "false": False, "no": False, "off": False, "0": False}


def _convert(key: str, raw: str, kind: type):
    if kind is bool:
        try:
            return _BOOL[raw.lower()]
        except KeyError:
            raise ConfigError(key, f"expected a boolean, got {raw!r}") from None
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(key, f"expected {kind.__name__}, got {raw!r}") from None


def parse_config(text: str) -> ExperimentConfig:
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    kinds = {"int": int, "float": float, "bool": bool, "str": str}
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(None, f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in types:
            raise ConfigError(key, "unknown key")
        if key in values:
            raise ConfigError(key, "given more than once")
        values[key] = _convert(key, value, kinds[types[key]])

    if "topology" in values:
        name = _TOPOLOGY_NAMES.get(values["topology"].lower())
        if name is None:
            raise ConfigError("topology", f"unknown topology {values['topology']!r}; expected one of {', '.join(KINDS)}")
        values["topology"] = name
    cfg = ExperimentConfig(**values)
    _check(cfg)
    return cfg


def _check(cfg: ExperimentConfig) -> None:
    for key in ("vcs", "buffer_depth", "flit_width", "packet_len"):
        if getattr(cfg, key) < 1:
            raise ConfigError(key, "must be at least 1")
    for key in ("warmup", "measure", "drain"):
        if getattr(cfg, key) < 0:
            raise ConfigError(key, "must be non-negative")
    if not 0.0 <= cfg.rate <= 1.0:
        raise ConfigError("rate", f"must lie in [0, 1], got {cfg.rate}")
    if cfg.pattern not in PATTERNS:
        raise ConfigError("pattern", f"unknown pattern {cfg.pattern!r}; expected one of {', '.join(PATTERNS)}")
    if cfg.payload_buffer not in ("packed", "separate"):
        raise ConfigError("payload_buffer", "must be 'packed' or 'separate'")
    if cfg.topology in ("Ring", "DoubleRing", "Torus") and cfg.vcs < 2:
        raise ConfigError("vcs", f"{cfg.topology} needs at least 2 VCs")
    for key in ("flow_src", "flow_dst"):
        if not 0 <= getattr(cfg, key) < 16:
            raise ConfigError(key, "must name an endpoint in 0..15")


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(None, f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)
