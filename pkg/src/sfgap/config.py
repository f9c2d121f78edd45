"""Tolerances, enumeration caps and run configuration."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path


@dataclass(frozen=True)
class Tolerances:
    lp: float = 1e-9        # feasibility / optimality of the simplex engine
    pivot: float = 1e-11    # smallest admissible pivot magnitude
    rank: float = 1e-10     # singular-value cutoff for affine rank
    face: float = 1e-7      # minimal-face support detection
    prune: float = 1e-10    # weights below this are dropped from a vertex solution
    merge: float = 1e-12    # duplicate merging of Minkowski points

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"tolerance {f.name} must be positive")


@dataclass(frozen=True)
class Caps:
    minkowski: int = 100_000
    subsets: int = 1_000_000
    assignments: int = 100_000
    tone_grid: int = 10_000
    targets: int = 100_000

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 1:
                raise ValueError(f"cap {f.name} must be >= 1")


DEFAULT_TOL = Tolerances()
DEFAULT_CAPS = Caps()


class CapExceeded(RuntimeError):
    """An enumeration would exceed its configured cap."""


def check_cap(count: int, cap: int, what: str) -> None:
    if count > cap:
        raise CapExceeded(f"{what}: {count} exceeds cap {cap}")


def thread_count() -> int:
    """Worker count for oracle parallelism, capped by SFGAP_THREADS."""
    raw = os.environ.get("SFGAP_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


@dataclass(frozen=True)
class RunConfig:
    tol: Tolerances = field(default_factory=Tolerances)
    caps: Caps = field(default_factory=Caps)
    grid_step: float = 1.0 / 16
    weight_steps: int = 8
    seed: int = 0
    out: str = "json"

    def __post_init__(self):
        if self.out not in ("json", "csv", "pretty"):
            raise ValueError(f"unknown output format {self.out!r}")
        if not 0 < self.grid_step <= 1:
            raise ValueError("grid_step must lie in (0, 1]")
        if self.weight_steps < 1:
            raise ValueError("weight_steps must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        tol = Tolerances(**data.pop("tol", {}))
        caps = Caps(**data.pop("caps", {}))
        return cls(tol=tol, caps=caps, **data)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_overrides(self, **kw) -> "RunConfig":
        tol_kw = {k[4:]: kw.pop(k) for k in list(kw) if k.startswith("tol_")}
        cfg = replace(self, **{k: v for k, v in kw.items() if v is not None})
        tol_kw = {k: v for k, v in tol_kw.items() if v is not None}
        if tol_kw:
            cfg = replace(cfg, tol=replace(cfg.tol, **tol_kw))
        return cfg
