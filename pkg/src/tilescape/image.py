"""Tile images: loading, splitting into a grid, opacity statistics, grayscale and bicubic upscaling."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

GRAY_WEIGHTS = (0.299, 0.587, 0.114)
BICUBIC_A = -0.5
# consumed by segmentation: tiles below this opaque fraction are "primarily transparent"
TRANSPARENCY_THRESHOLD = 0.10


class DimensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TileImage:
    """RGBA pixel grid, shape ``(height, width, 4)``, dtype uint8."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 4:
            raise DimensionError(f"expected (h, w, 4) RGBA array, got shape {px.shape}")
        if px.shape[0] == 0 or px.shape[1] == 0:
            raise DimensionError("image must be non-empty")
        if px.dtype != np.uint8:
            if px.min() < 0 or px.max() > 255:
                raise DimensionError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def alpha(self) -> np.ndarray:
        return self.pixels[:, :, 3]

    def __eq__(self, other):
        if not isinstance(other, TileImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def blank(cls, width: int, height: int, color=(0, 0, 0, 0)) -> "TileImage":
        px = np.empty((height, width, 4), dtype=np.uint8)
        px[:] = color
        return cls(px)


def load_png(path) -> TileImage:
    with Image.open(path) as im:
        return TileImage(np.array(im.convert("RGBA")))


def save_png(image: TileImage, path) -> None:
    Image.fromarray(image.pixels, mode="RGBA").save(path, format="PNG")


@dataclass(eq=False)
class Tileset:
    source: TileImage
    tile_size: int
    grid: list[list[TileImage]]
    dropped_pixels: int = 0
    source_path: str | None = None

    @property
    def rows(self) -> int:
        return len(self.grid)

    @property
    def cols(self) -> int:
        return len(self.grid[0]) if self.grid else 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def tile(self, row: int, col: int) -> TileImage:
        return self.grid[row][col]

    def in_grid(self, row: int, col: int) -> bool:
        return 0 <= row < self.rows and 0 <= col < self.cols

    def positions(self):
        for r in range(self.rows):
            for c in range(self.cols):
                yield r, c

    def stack(self) -> np.ndarray:
        """All tiles as one ``(rows, cols, ts, ts, 4)`` array."""
        ts = self.tile_size
        crop = self.source.pixels[: self.rows * ts, : self.cols * ts]
        return crop.reshape(self.rows, ts, self.cols, ts, 4).swapaxes(1, 2)

    def metadata(self) -> dict:
        return {
            "source_path": self.source_path,
            "tile_size": self.tile_size,
            "rows": self.rows,
            "cols": self.cols,
            "dropped_pixels": self.dropped_pixels,
        }


def split_tileset(image: TileImage, tile_size: int = 32, source_path=None) -> Tileset:
    if tile_size <= 0:
        raise DimensionError("tile_size must be positive")
    if image.width < tile_size or image.height < tile_size:
        raise DimensionError(
            f"image {image.width}x{image.height} is smaller than one {tile_size}px tile")
    rows = image.height // tile_size
    cols = image.width // tile_size
    grid = [
        [
            TileImage(image.pixels[r * tile_size:(r + 1) * tile_size, c * tile_size:(c + 1) * tile_size])
            for c in range(cols)
        ]
        for r in range(rows)
    ]
    dropped = image.width * image.height - rows * cols * tile_size * tile_size
    return Tileset(image, tile_size, grid, dropped, None if source_path is None else str(source_path))


def assemble(tileset: Tileset) -> TileImage:
    """Inverse of :func:`split_tileset` over the cropped region."""
    ts = tileset.tile_size
    out = np.zeros((tileset.rows * ts, tileset.cols * ts, 4), dtype=np.uint8)
    for r, c in tileset.positions():
        out[r * ts:(r + 1) * ts, c * ts:(c + 1) * ts] = tileset.grid[r][c].pixels
    return TileImage(out)


def save_tileset_metadata(tileset: Tileset, path) -> None:
    Path(path).write_text(json.dumps(tileset.metadata(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class OpacityStats:
    opaque_fraction: float
    border_opaque: bool


def opacity_stats(tile: TileImage) -> OpacityStats:
    opaque = tile.alpha > 0
    border = np.concatenate([opaque[0], opaque[-1], opaque[:, 0], opaque[:, -1]])
    return OpacityStats(float(opaque.sum()) / opaque.size, bool(border.any()))


def is_primarily_transparent(tile: TileImage, threshold: float = TRANSPARENCY_THRESHOLD) -> bool:
    return opacity_stats(tile).opaque_fraction < threshold


def to_grayscale(tile) -> np.ndarray:
    """Rec. 601 luma rounded half-up to uint8; alpha is ignored."""
    px = tile.pixels if isinstance(tile, TileImage) else np.asarray(tile)
    rgb = px[..., :3].astype(np.float64)
    lum = rgb[..., 0] * GRAY_WEIGHTS[0] + rgb[..., 1] * GRAY_WEIGHTS[1] + rgb[..., 2] * GRAY_WEIGHTS[2]
    return np.clip(np.floor(lum + 0.5), 0, 255).astype(np.uint8)


def _cubic_weight(x: np.ndarray, a: float = BICUBIC_A) -> np.ndarray:
    x = np.abs(x)
    w = np.zeros_like(x)
    near = x <= 1
    far = (x > 1) & (x < 2)
    w[near] = (a + 2) * x[near] ** 3 - (a + 3) * x[near] ** 2 + 1
    w[far] = a * x[far] ** 3 - 5 * a * x[far] ** 2 + 8 * a * x[far] - 4 * a
    return w


def _resample_matrix(n_in: int, factor: int) -> np.ndarray:
    """``(n_in * factor, n_in)`` bicubic weights, pixel-centre aligned, edges clamped."""
    n_out = n_in * factor
    centers = (np.arange(n_out) + 0.5) / factor - 0.5
    base = np.floor(centers).astype(int)
    mat = np.zeros((n_out, n_in))
    for k in range(-1, 3):
        idx = base + k
        w = _cubic_weight(centers - idx)
        np.add.at(mat, (np.arange(n_out), np.clip(idx, 0, n_in - 1)), w)
    return mat


def upscale_bicubic(tile: TileImage, factor: int) -> TileImage:
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise ValueError(f"factor must be a positive integer, got {factor!r}")
    if factor == 1:
        return TileImage(tile.pixels.copy())
    rows = _resample_matrix(tile.height, factor)
    cols = _resample_matrix(tile.width, factor)
    src = tile.pixels.astype(np.float64)
    out = np.einsum("ij,jkc,lk->ilc", rows, src, cols)
    return TileImage(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


def pad_tile(tile: TileImage, pad: int = 4, color=(0, 0, 0, 0)) -> TileImage:
    """Surround a tile with a solid border (optional detection context)."""
    if pad < 0:
        raise ValueError("pad must be non-negative")
    out = np.empty((tile.height + 2 * pad, tile.width + 2 * pad, 4), dtype=np.uint8)
    out[:] = color
    out[pad:pad + tile.height, pad:pad + tile.width] = tile.pixels
    return TileImage(out)
