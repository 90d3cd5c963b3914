"""Experiment and model configuration files.

Both use flat ``key = value`` lines with ``#`` comments.  Floats are written
with ``repr`` so a config survives a write/read cycle unchanged.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .graph import InteractionGraph
from .model import PairwiseModel, ising_model, table_model

__all__ = [
    "TempGrid",
    "ExperimentConfig",
    "ModelConfig",
    "parse_key_values",
    "parse_tables",
    "build_model",
    "FAMILIES",
]

FAMILIES = ("ring", "one_chord", "book")


@dataclass(frozen=True)
class TempGrid:
    """Temperature grid ``min:max:count:spacing`` with spacing ``log`` or ``lin``."""

    t_min: float = 0.1
    t_max: float = 100.0
    count: int = 31
    spacing: str = "log"

    def __post_init__(self):
        if not (math.isfinite(self.t_min) and math.isfinite(self.t_max)):
            raise ConfigError("temps: bounds must be finite")
        if not self.t_min < self.t_max:
            raise ConfigError(f"temps: min {self.t_min!r} must be below max {self.t_max!r}")
        if self.t_min <= 0:
            raise ConfigError("temps: temperatures must be positive")
        if self.count < 2:
            raise ConfigError("temps: count must be at least 2")
        if self.spacing not in ("log", "lin"):
            raise ConfigError(f"temps: spacing must be 'log' or 'lin', got {self.spacing!r}")

    @classmethod
    def parse(cls, text: str) -> "TempGrid":
        parts = text.strip().split(":")
        if len(parts) != 4:
            raise ConfigError(f"temps: expected min:max:count:log|lin, got {text!r}")
        try:
            return cls(float(parts[0]), float(parts[1]), int(parts[2]), parts[3])
        except ValueError as exc:
            raise ConfigError(f"temps: {exc}") from None

    def format(self) -> str:
        return f"{self.t_min!r}:{self.t_max!r}:{self.count}:{self.spacing}"

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.t_min, self.t_max, self.count)
        return np.linspace(self.t_min, self.t_max, self.count)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_list(text: str, kind):
    text = text.strip()
    if not text:
        return ()
    return tuple(kind(t) for t in text.split(","))


def parse_key_values(text: str, source: str = "<string>") -> dict[str, tuple[str, int]]:
    """``key = value`` pairs mapped to ``(value, lineno)``; duplicates are errors."""
    out: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = (value, lineno)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings shared by the KL experiment and the partition-function sweep.

    Attributes:
        seed: Root seed; every (size, sample) unit derives its own stream.
        sizes: Graph sizes (N for the KL experiment, L for sweeps).
        samples: Random graphs per size.
        j: Coupling strength.
        half_factor: Use ``J/2`` per edge.
        temps: Temperature grid of the KL experiment.
        betas: Inverse temperatures of the sweep.
        out_path: CSV destination.
        threshold: Density classification threshold.
        tol: BP convergence tolerance.
        max_iters: BP iteration cap.
        damping: BP damping weight on the previous message.
        rho: Exponent weight of the dense-graph error bound.
        family: Graph family of the sweep.
        workers: Worker processes; output does not depend on it.
    """

    seed: int = 0
    sizes: tuple[int, ...] = (50,)
    samples: int = 200
    j: float = 10.0
    half_factor: bool = True
    temps: TempGrid = field(default_factory=TempGrid)
    betas: tuple[float, ...] = (0.0, 0.05, 0.1, 0.2)
    out_path: str = "out.csv"
    threshold: float = 0.5
    tol: float = 1e-10
    max_iters: int = 10_000
    damping: float = 0.5
    rho: float = 1.0
    family: str = "ring"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed: must be an unsigned 64-bit integer")
        if not self.sizes or any(s < 1 for s in self.sizes):
            raise ConfigError("sizes: need at least one positive size")
        if self.samples < 1:
            raise ConfigError("samples: must be >= 1")
        if not math.isfinite(self.j):
            raise ConfigError("j: must be finite")
        if any(not (math.isfinite(b) and b >= 0) for b in self.betas):
            raise ConfigError("betas: must be finite and nonnegative")
        if not 0 < self.threshold:
            raise ConfigError("threshold: must be positive")
        if not self.tol > 0:
            raise ConfigError("tol: must be positive")
        if self.max_iters < 1:
            raise ConfigError("max_iters: must be >= 1")
        if not 0 <= self.damping < 1:
            raise ConfigError("damping: must lie in [0, 1)")
        if self.family not in FAMILIES:
            raise ConfigError(f"family: must be one of {', '.join(FAMILIES)}")
        if self.workers < 1:
            raise ConfigError("workers: must be >= 1")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        values = {
            "seed": str(self.seed),
            "sizes": ",".join(str(s) for s in self.sizes),
            "samples": str(self.samples),
            "j": repr(self.j),
            "half_factor": "true" if self.half_factor else "false",
            "temps": self.temps.format(),
            "betas": ",".join(repr(b) for b in self.betas),
            "out_path": self.out_path,
            "threshold": repr(self.threshold),
            "tol": repr(self.tol),
            "max_iters": str(self.max_iters),
            "damping": repr(self.damping),
            "rho": repr(self.rho),
            "family": self.family,
            "workers": str(self.workers),
        }
        return "".join(f"{k} = {v}\n" for k, v in values.items())

    @classmethod
    def from_text(cls, text: str, source: str = "<string>", base: "ExperimentConfig | None" = None):
        """Parse a config; keys not present keep the values of ``base``."""
        parsers = {
            "seed": int,
            "sizes": lambda v: _parse_list(v, int),
            "samples": int,
            "j": float,
            "half_factor": _parse_bool,
            "temps": TempGrid.parse,
            "betas": lambda v: _parse_list(v, float),
            "out_path": str,
            "threshold": float,
            "tol": float,
            "max_iters": int,
            "damping": float,
            "rho": float,
            "family": str,
            "workers": int,
        }
        changes = {}
        for key, (value, lineno) in parse_key_values(text, source).items():
            name = "j" if key == "J" else key
            if name not in parsers:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
            if name in changes:
                raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
            try:
                changes[name] = parsers[name](value)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from None
        try:
            return dataclasses.replace(base or cls(), **changes)
        except ConfigError as exc:
            raise ConfigError(f"{source}: {exc}") from None

    @classmethod
    def load(cls, path, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"), str(path), base)


@dataclass(frozen=True)
class ModelConfig:
    """How to build a model on a graph read from disk.

    ``model = ising`` uses ``J`` and ``half_factor``; ``model = table`` reads
    per-edge tables from ``tables``.  ``graph`` and ``tables`` paths are
    resolved relative to the config file.
    """

    model: str = "ising"
    j: float = 1.0
    half_factor: bool = False
    beta: float = 1.0
    tables: str | None = None
    graph: str | None = None

    def __post_init__(self):
        if self.model not in ("ising", "table"):
            raise ConfigError(f"model: must be 'ising' or 'table', got {self.model!r}")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ConfigError("beta: must be finite and nonnegative")
        if self.model == "table" and not self.tables:
            raise ConfigError("tables: required when model = table")

    @classmethod
    def from_text(cls, text: str, source: str = "<string>", base_dir: Path | None = None) -> "ModelConfig":
        parsers = {
            "model": str, "j": float, "half_factor": _parse_bool, "beta": float, "tables": str, "graph": str,
        }
        changes = {}
        for key, (value, lineno) in parse_key_values(text, source).items():
            name = "j" if key == "J" else key
            if name not in parsers:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
            if name in changes:
                raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
            try:
                changes[name] = parsers[name](value)
            except ValueError as exc:
                raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from None
        if base_dir is not None:
            for name in ("tables", "graph"):
                if name in changes:
                    changes[name] = str(base_dir / changes[name])
        return cls(**changes)

    def to_text(self) -> str:
        lines = [
            f"model = {self.model}",
            f"J = {self.j!r}",
            f"half_factor = {'true' if self.half_factor else 'false'}",
            f"beta = {self.beta!r}",
        ]
        lines += [f"{k} = {v}" for k, v in (("tables", self.tables), ("graph", self.graph)) if v]
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, path) -> "ModelConfig":
        path = Path(path)
        return cls.from_text(path.read_text(encoding="utf-8"), str(path), path.parent)


def parse_tables(text: str, g: InteractionGraph, source: str = "<string>") -> tuple[list[int], list[np.ndarray]]:
    """Per-edge energy tables.

    Lines are ``states n k`` (node ``n`` has ``k`` states, default 2) or
    ``i j a b value`` giving ``H_ij[a, b]`` with states indexed from ``i``'s
    side.  Entries not listed are zero.

    Returns:
        ``(state_sizes, tables)`` in the graph's edge order.
    """
    sizes = [2] * g.n_nodes
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "states":
                if len(parts) != 3:
                    raise ValueError("expected 'states n k'")
                n, k = int(parts[1]), int(parts[2])
                if not 0 <= n < g.n_nodes or k < 2:
                    raise ValueError(f"bad state count {k} for node {n}")
                sizes[n] = k
                continue
            if len(parts) != 5:
                raise ValueError("expected 'i j a b value'")
            i, j, a, b = (int(t) for t in parts[:4])
            value = float(parts[4])
            if not math.isfinite(value):
                raise ValueError("table entries must be finite")
            if not g.has_edge(i, j):
                raise ValueError(f"no edge {i} {j} in graph")
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        entries.append((i, j, a, b, value, lineno))
    tables = []
    for k in range(g.n_edges):
        i, j = g.endpoints(k)
        tables.append(np.zeros((sizes[i], sizes[j])))
    for i, j, a, b, value, lineno in entries:
        if i > j:
            i, j, a, b = j, i, b, a
        if not (0 <= a < sizes[i] and 0 <= b < sizes[j]):
            raise ConfigError(f"{source}:{lineno}: state index out of range")
        tables[g.find_edge(i, j)][a, b] = value
    return sizes, tables


def build_model(g: InteractionGraph, cfg: ModelConfig) -> PairwiseModel:
    if cfg.model == "ising":
        return ising_model(g, cfg.j, cfg.half_factor, cfg.beta)
    path = Path(cfg.tables)
    sizes, tables = parse_tables(path.read_text(encoding="utf-8"), g, str(path))
    return table_model(g, tables, cfg.beta, sizes)
