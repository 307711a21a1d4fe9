"""Pipeline configuration: one JSON-serializable source of truth, flags override the file."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .scenegen.terrain import TerrainParams


@dataclass
class PipelineConfig:
    tile_size: int = 32
    ssim_threshold: float = 0.6
    adjacency_threshold: float = 0.6
    transparency_threshold: float = 0.10
    strip_width: int = 4
    opaque_seams_only: bool = False
    alpha_fraction_min: float = 0.5
    semantic_sim_threshold: float = 0.3
    affordance_threshold: float = 0.5
    ca: dict = field(default_factory=lambda: TerrainParams().to_dict())
    seed: int = 42

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.tile_size < 2:
            raise ValueError("tile_size must be >= 2")
        if not 1 <= self.strip_width <= self.tile_size:
            raise ValueError("strip_width must lie in [1, tile_size]")
        for name in ("ssim_threshold", "adjacency_threshold", "semantic_sim_threshold"):
            if not -1.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [-1, 1]")
        for name in ("transparency_threshold", "alpha_fraction_min", "affordance_threshold"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        params = self.terrain_params
        if not 0.0 <= params.fill_prob <= 1.0 or params.iterations < 0:
            raise ValueError("invalid cellular automaton parameters")

    @property
    def terrain_params(self) -> TerrainParams:
        return TerrainParams(**self.ca)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if "ca" in data:
            data["ca"] = {**TerrainParams().to_dict(), **data["ca"]}
        return cls(**data)

    @classmethod
    def load(cls, path=None, **overrides) -> "PipelineConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8")) if path else {}
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)
