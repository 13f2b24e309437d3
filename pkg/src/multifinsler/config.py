"""Configuration ingestion: JSON space descriptions into validated objects."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .expr import ParseError, UnknownIdentifierError
from .finsler import MultiMetricSpace
from .riemann import MetricField, NotPositiveDefiniteError


class ConfigError(Exception):
    """Malformed or inconsistent space configuration."""


@dataclass(frozen=True)
class MetricSpec:
    name: str
    components: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class SamplingPolicy:
    seed: int = 42
    count: int = 500
    box: tuple[tuple[float, float], ...] = ((-1.0, 1.0), (-1.0, 1.0))


@dataclass(frozen=True)
class SpaceConfig:
    """Validated space description; a fixed seed makes every run deterministic."""

    dimension: int
    coordinates: tuple[str, ...]
    metrics: tuple[MetricSpec, ...]
    sampling: SamplingPolicy
    tolerances: dict = field(default_factory=dict)

    def build_space(self) -> MultiMetricSpace:
        fields = [
            MetricField.from_strings(m.name, [list(r) for r in m.components], self.coordinates)
            for m in self.metrics
        ]
        return MultiMetricSpace(fields)

    def box_center(self) -> np.ndarray:
        return np.array([(lo + hi) / 2.0 for lo, hi in self.sampling.box])

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "coordinates": list(self.coordinates),
            "metrics": [
                {"name": m.name, "components": [list(r) for r in m.components]}
                for m in self.metrics
            ],
            "sampling": {
                "seed": self.sampling.seed,
                "count": self.sampling.count,
                "box": [list(b) for b in self.sampling.box],
            },
            "tolerances": dict(self.tolerances),
        }


def _expect(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def parse_config(data: dict) -> SpaceConfig:
    _expect(isinstance(data, dict), "top level must be a JSON object")
    _expect("dimension" in data, "missing 'dimension'")
    dim = data["dimension"]
    _expect(isinstance(dim, int) and dim >= 1, f"'dimension' must be a positive integer, got {dim!r}")

    coords = data.get("coordinates")
    _expect(isinstance(coords, list) and len(coords) == dim,
            f"'coordinates' must list {dim} names")
    _expect(all(isinstance(c, str) and c for c in coords), "coordinate names must be strings")
    _expect(len(set(coords)) == dim, "coordinate names must be distinct")

    raw_metrics = data.get("metrics")
    _expect(isinstance(raw_metrics, list) and len(raw_metrics) >= 1,
            "'metrics' must be a non-empty list")
    metrics = []
    for idx, m in enumerate(raw_metrics):
        where = f"metrics[{idx}]"
        _expect(isinstance(m, dict), f"{where} must be an object")
        name = m.get("name", f"metric{idx}")
        comps = m.get("components")
        _expect(isinstance(comps, list) and len(comps) == dim,
                f"{where}.components must have {dim} rows (dimension mismatch)")
        for i, row in enumerate(comps):
            _expect(isinstance(row, list) and len(row) == dim,
                    f"{where}.components[{i}] must have {dim} entries (dimension mismatch)")
            _expect(all(isinstance(e, str) for e in row),
                    f"{where}.components[{i}] entries must be expression strings")
        metrics.append(MetricSpec(name=str(name), components=tuple(tuple(r) for r in comps)))

    sampling = data.get("sampling", {})
    _expect(isinstance(sampling, dict), "'sampling' must be an object")
    seed = sampling.get("seed", 42)
    count = sampling.get("count", 500)
    box = sampling.get("box", [[-1.0, 1.0]] * dim)
    _expect(isinstance(seed, int), "'sampling.seed' must be an integer")
    _expect(isinstance(count, int) and count >= 1, "'sampling.count' must be a positive integer")
    _expect(isinstance(box, list) and len(box) == dim, f"'sampling.box' must have {dim} intervals")
    for b in box:
        _expect(isinstance(b, list) and len(b) == 2 and all(isinstance(v, (int, float)) for v in b)
                and b[0] < b[1], f"invalid box interval {b!r}")

    tolerances = data.get("tolerances", {})
    _expect(isinstance(tolerances, dict), "'tolerances' must be an object")

    cfg = SpaceConfig(
        dimension=dim,
        coordinates=tuple(coords),
        metrics=tuple(metrics),
        sampling=SamplingPolicy(seed=seed, count=count, box=tuple(tuple(map(float, b)) for b in box)),
        tolerances=dict(tolerances),
    )

    # parse all expressions and probe SPD at the box center
    try:
        space = cfg.build_space()
        for m in space.metrics:
            m.spd_value(cfg.box_center())
    except (ParseError, UnknownIdentifierError, ValueError) as exc:
        raise ConfigError(f"invalid metric component: {exc}") from exc
    except NotPositiveDefiniteError as exc:
        raise ConfigError(f"SPD probe failed at box center: {exc}") from exc
    return cfg


def load_config(path) -> SpaceConfig:
    """Read and validate a JSON space configuration file."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(data)
