"""Compose terrain tiles and object sprites into one RGBA image."""
from __future__ import annotations

import zlib

import numpy as np

from ..image import TileImage


class RenderError(KeyError):
    def __str__(self):
        return f"missing tile assets: {', '.join(map(str, self.args[0]))}"


def alpha_over(dst: np.ndarray, src: np.ndarray) -> np.ndarray:
    """Non-premultiplied "source over destination" for uint8 RGBA arrays."""
    sa = src[..., 3:4].astype(np.float64) / 255.0
    da = dst[..., 3:4].astype(np.float64) / 255.0
    out_a = sa + da * (1.0 - sa)
    rgb = src[..., :3] * sa + dst[..., :3] * da * (1.0 - sa)
    with np.errstate(invalid="ignore", divide="ignore"):
        rgb = np.where(out_a > 0, rgb / np.where(out_a > 0, out_a, 1.0), 0.0)
    out = np.concatenate([rgb, out_a * 255.0], axis=-1)
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def _fit_sprite(sprite: np.ndarray, box_h: int, box_w: int) -> np.ndarray:
    """Nearest-neighbour integer upscale so the sprite fills its box without changing aspect."""
    h, w = sprite.shape[:2]
    k = max(1, min(box_h // h, box_w // w))
    return sprite.repeat(k, axis=0).repeat(k, axis=1) if k > 1 else sprite


def render_scene(matrix, assets, tile_size: int = 32) -> TileImage:
    """``assets`` maps terrain ids and object tile ids to TileImages."""
    terrain = np.asarray(matrix.terrain)
    rows, cols = terrain.shape
    needed = {int(v) for v in np.unique(terrain)} | {o.tile for o in matrix.objects}
    missing = sorted((k for k in needed if k not in assets), key=str)
    if missing:
        raise RenderError(missing)
    canvas = np.zeros((rows * tile_size, cols * tile_size, 4), dtype=np.uint8)
    for r in range(rows):
        for c in range(cols):
            tile = assets[int(terrain[r, c])].pixels
            if tile.shape[:2] != (tile_size, tile_size):
                raise ValueError(f"terrain tile {terrain[r, c]} is not {tile_size}x{tile_size}")
            canvas[r * tile_size:(r + 1) * tile_size, c * tile_size:(c + 1) * tile_size] = tile
    ordered = sorted(enumerate(matrix.objects), key=lambda io: (io[1].layer, io[0]))
    for _, obj in ordered:
        box_h, box_w = obj.footprint[0] * tile_size, obj.footprint[1] * tile_size
        sprite = _fit_sprite(assets[obj.tile].pixels, box_h, box_w)
        sh, sw = sprite.shape[:2]
        top = obj.anchor[0] * tile_size + (box_h - sh) // 2
        left = obj.anchor[1] * tile_size + (box_w - sw) // 2
        # clip sprites that overhang the canvas
        y0, x0 = max(top, 0), max(left, 0)
        y1, x1 = min(top + sh, canvas.shape[0]), min(left + sw, canvas.shape[1])
        if y0 >= y1 or x0 >= x1:
            continue
        src = sprite[y0 - top:y1 - top, x0 - left:x1 - left]
        canvas[y0:y1, x0:x1] = alpha_over(canvas[y0:y1, x0:x1], src)
    return TileImage(canvas)


def solid_tile(color, tile_size: int = 32) -> TileImage:
    return TileImage.blank(tile_size, tile_size, tuple(color) if len(color) == 4 else (*color, 255))


def placeholder_sprite(name: str, tile_size: int = 32) -> TileImage:
    """Deterministic coloured square with a transparent margin for unmatched entities."""
    h = zlib.crc32(name.encode("utf-8"))
    color = (64 + h % 160, 64 + (h >> 8) % 160, 64 + (h >> 16) % 160, 255)
    px = np.zeros((tile_size, tile_size, 4), dtype=np.uint8)
    m = max(1, tile_size // 8)
    px[m:tile_size - m, m:tile_size - m] = color
    return TileImage(px)


DEFAULT_TERRAIN_COLORS = {0: (96, 160, 72, 255), 1: (70, 62, 58, 255)}


def default_terrain_assets(tile_size: int = 32) -> dict:
    return {k: solid_tile(v, tile_size) for k, v in DEFAULT_TERRAIN_COLORS.items()}
