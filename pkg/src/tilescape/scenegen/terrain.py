"""Cellular-automaton cave terrain repaired to one connected walkable region."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .. import kernels

WALKABLE = 0
BLOCKED = 1
MIN_WALKABLE_FRACTION = 0.25
MAX_ATTEMPTS = 16


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class TerrainParams:
    fill_prob: float = 0.45
    iterations: int = 4
    birth: int = 5
    survive: int = 4

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class TerrainMap:
    grid: np.ndarray  # uint8, WALKABLE / BLOCKED
    seed: int
    attempts: int = 1

    @property
    def walkable(self) -> np.ndarray:
        return self.grid == WALKABLE

    @property
    def walkable_fraction(self) -> float:
        return float(self.walkable.mean())

    def to_csv(self) -> str:
        return "\n".join(",".join(str(int(v)) for v in row) for row in self.grid) + "\n"


def run_automaton(blocked: np.ndarray, params: TerrainParams) -> np.ndarray:
    grid = np.asarray(blocked, dtype=np.uint8)
    for _ in range(params.iterations):
        grid = kernels.ca_step(grid, params.birth, params.survive)
    return grid


def keep_largest_region(blocked: np.ndarray) -> np.ndarray:
    """Block every walkable cell outside the largest 4-connected walkable region."""
    walk = blocked == 0
    rows, cols = walk.shape
    labels = kernels.grid_components(walk, np.ones((rows, cols - 1)), np.ones((rows - 1, cols)))
    if labels.max() < 0:
        return np.ones_like(blocked, dtype=np.uint8)
    sizes = np.bincount(labels[labels >= 0])
    keep = int(np.argmax(sizes))  # first (raster-earliest) region wins ties
    return (labels != keep).astype(np.uint8)


def generate_terrain(rows: int, cols: int, seed: int, params: TerrainParams = TerrainParams()) -> TerrainMap:
    if rows < 8 or cols < 8:
        raise ValueError("terrain needs at least 8 rows and 8 columns")
    fraction = 0.0
    for attempt in range(MAX_ATTEMPTS):
        s = seed + attempt
        rng = np.random.default_rng(s)
        blocked = (rng.random((rows, cols)) < params.fill_prob).astype(np.uint8)
        grid = keep_largest_region(run_automaton(blocked, params))
        fraction = float((grid == WALKABLE).mean())
        if fraction >= MIN_WALKABLE_FRACTION:
            return TerrainMap(grid, s, attempt + 1)
    raise GenerationError(
        f"no connected terrain with walkable fraction >= {MIN_WALKABLE_FRACTION} after {MAX_ATTEMPTS} "
        f"attempts from seed {seed}; last fraction {fraction:.3f}")
