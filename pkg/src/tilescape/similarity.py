"""Boundary strips and single-window SSIM used for tile adjacency."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .image import TileImage, to_grayscale

SIDES = ("top", "bottom", "left", "right")
DEFAULT_STRIP_WIDTH = 4
DEFAULT_THRESHOLD = 0.6


@dataclass(frozen=True)
class SsimParams:
    c1: float = (0.01 * 255) ** 2
    c2: float = (0.03 * 255) ** 2
    dynamic_range: float = 255.0

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("SSIM constants must be positive")

    @classmethod
    def for_range(cls, dynamic_range: float = 255.0, k1: float = 0.01, k2: float = 0.03) -> "SsimParams":
        return cls((k1 * dynamic_range) ** 2, (k2 * dynamic_range) ** 2, dynamic_range)


DEFAULT_PARAMS = SsimParams()


@dataclass(frozen=True, eq=False)
class BoundaryStrip:
    """Grayscale strip of shape ``(strip_width, edge_length)``.

    Row 0 is always the outermost line of the tile on ``side``; columns run
    along the edge in increasing image coordinate. Facing strips of two
    neighbouring tiles therefore line up element by element.
    """

    values: np.ndarray
    side: str

    @property
    def width(self) -> int:
        return self.values.shape[0]


def _oriented(gray: np.ndarray, side: str) -> np.ndarray:
    if side == "top":
        return gray
    if side == "bottom":
        return gray[::-1]
    if side == "left":
        return gray.T
    if side == "right":
        return gray[:, ::-1].T
    raise ValueError(f"unknown side {side!r}; expected one of {SIDES}")


def extract_boundary(tile: TileImage, side: str, strip_width: int = DEFAULT_STRIP_WIDTH) -> BoundaryStrip:
    depth = tile.height if side in ("top", "bottom") else tile.width
    if side not in SIDES:
        raise ValueError(f"unknown side {side!r}; expected one of {SIDES}")
    if not 1 <= strip_width <= depth:
        raise ValueError(f"strip_width {strip_width} outside [1, {depth}]")
    values = np.ascontiguousarray(_oriented(to_grayscale(tile), side)[:strip_width])
    return BoundaryStrip(values, side)


def ssim(b1, b2, params: SsimParams = DEFAULT_PARAMS) -> float:
    """Global SSIM of two equally shaped strips (population statistics)."""
    v1 = b1.values if isinstance(b1, BoundaryStrip) else np.asarray(b1)
    v2 = b2.values if isinstance(b2, BoundaryStrip) else np.asarray(b2)
    if v1.shape != v2.shape:
        raise ValueError(f"strip shapes differ: {v1.shape} vs {v2.shape}")
    return float(kernels.ssim_batch(v1.reshape(1, -1), v2.reshape(1, -1), params.c1, params.c2)[0])


def _facing_sides(orientation: str) -> tuple[str, str]:
    if orientation == "horizontal":
        return "right", "left"
    if orientation == "vertical":
        return "bottom", "top"
    raise ValueError(f"orientation must be 'horizontal' or 'vertical', got {orientation!r}")


def adjacency_score(first: TileImage, second: TileImage, orientation: str = "horizontal",
                    strip_width: int = DEFAULT_STRIP_WIDTH, params: SsimParams = DEFAULT_PARAMS) -> float:
    """SSIM across the seam between ``first`` (left/top) and ``second`` (right/bottom)."""
    if first.pixels.shape != second.pixels.shape:
        raise ValueError("tiles must have equal sizes")
    side_a, side_b = _facing_sides(orientation)
    return ssim(extract_boundary(first, side_a, strip_width), extract_boundary(second, side_b, strip_width), params)


def is_adjacent(score: float, threshold: float = DEFAULT_THRESHOLD) -> bool:
    # inclusive: a score equal to the threshold counts as adjacent
    return score >= threshold


def seam_scores(tileset, strip_width: int = DEFAULT_STRIP_WIDTH, params: SsimParams = DEFAULT_PARAMS):
    """Scores for every interior seam of a tileset in one batched kernel call.

    Returns ``(horizontal, vertical)`` with shapes ``(rows, cols-1)`` and
    ``(rows-1, cols)``; ``horizontal[r, c]`` is the seam between (r, c) and
    (r, c+1), ``vertical[r, c]`` the seam between (r, c) and (r+1, c).
    """
    rows, cols = tileset.rows, tileset.cols
    ts = tileset.tile_size
    if not 1 <= strip_width <= ts:
        raise ValueError(f"strip_width {strip_width} outside [1, {ts}]")
    gray = to_grayscale(tileset.stack()).astype(np.float64)  # (rows, cols, ts, ts)
    # oriented strips: row index = depth from the edge, column = position along the edge
    right = gray[:, :, :, ::-1][:, :, :, :strip_width].swapaxes(2, 3)
    left = gray[:, :, :, :strip_width].swapaxes(2, 3)
    bottom = gray[:, :, ::-1, :][:, :, :strip_width, :]
    top = gray[:, :, :strip_width, :]
    m = strip_width * ts
    horizontal = np.zeros((rows, max(cols - 1, 0)))
    vertical = np.zeros((max(rows - 1, 0), cols))
    if cols > 1:
        a = right[:, :-1].reshape(-1, m)
        b = left[:, 1:].reshape(-1, m)
        horizontal = kernels.ssim_batch(a, b, params.c1, params.c2).reshape(rows, cols - 1)
    if rows > 1:
        a = bottom[:-1].reshape(-1, m)
        b = top[1:].reshape(-1, m)
        vertical = kernels.ssim_batch(a, b, params.c1, params.c2).reshape(rows - 1, cols)
    return horizontal, vertical


def adjacency_pairs(tileset, threshold: float = DEFAULT_THRESHOLD, strip_width: int = DEFAULT_STRIP_WIDTH,
                    params: SsimParams = DEFAULT_PARAMS) -> list[dict]:
    horizontal, vertical = seam_scores(tileset, strip_width, params)
    out = []
    for r in range(tileset.rows):
        for c in range(tileset.cols):
            if c + 1 < tileset.cols:
                s = float(horizontal[r, c])
                out.append({"a": [r, c], "b": [r, c + 1], "orientation": "horizontal",
                            "score": s, "adjacent": is_adjacent(s, threshold)})
            if r + 1 < tileset.rows:
                s = float(vertical[r, c])
                out.append({"a": [r, c], "b": [r + 1, c], "orientation": "vertical",
                            "score": s, "adjacent": is_adjacent(s, threshold)})
    return out


def seam_opacity(tileset, strip_width: int = DEFAULT_STRIP_WIDTH):
    """Whether either facing strip of each seam holds an opaque pixel; shapes as :func:`seam_scores`."""
    alpha = tileset.stack()[..., 3] > 0  # (rows, cols, ts, ts)
    w = strip_width
    right = alpha[:, :, :, -w:].any(axis=(2, 3))
    left = alpha[:, :, :, :w].any(axis=(2, 3))
    bottom = alpha[:, :, -w:, :].any(axis=(2, 3))
    top = alpha[:, :, :w, :].any(axis=(2, 3))
    return right[:, :-1] | left[:, 1:], bottom[:-1] | top[1:]
