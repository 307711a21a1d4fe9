import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tilescape.image import TileImage, split_tileset  # noqa: E402


def solid(color, size=32):
    return TileImage.blank(size, size, color)


def grid_image(cells, tile_size=8):
    """Build a tileset image from a 2D list of RGBA colours (None = transparent)."""
    rows, cols = len(cells), len(cells[0])
    px = np.zeros((rows * tile_size, cols * tile_size, 4), dtype=np.uint8)
    for r in range(rows):
        for c in range(cols):
            if cells[r][c] is not None:
                px[r * tile_size:(r + 1) * tile_size, c * tile_size:(c + 1) * tile_size] = cells[r][c]
    return TileImage(px)


def random_blob_tileset(rng, max_side=16, tile_size=8):
    """Random opaque mask painted one solid colour per 4-connected blob; returns (tileset, mask)."""
    from oracles import flood_fill_components

    rows, cols = (int(x) for x in rng.integers(1, max_side + 1, size=2))
    mask = (rng.random((rows, cols)) < rng.uniform(0.2, 0.7)).tolist()
    cells = [[None] * cols for _ in range(rows)]
    for comp in sorted(flood_fill_components(mask), key=min):
        color = (*(int(v) for v in rng.integers(0, 256, size=3)), 255)
        for r, c in comp:
            cells[r][c] = color
    return split_tileset(grid_image(cells, tile_size), tile_size), mask


def random_rgba_tileset(seed, tile_size=8):
    """Up to 5x5 tiles mixing flat colour, noise and 30% transparent pixels."""
    rng = np.random.default_rng(seed)
    rows, cols = (int(x) for x in rng.integers(1, 6, size=2))
    px = rng.integers(0, 256, size=(rows * tile_size, cols * tile_size, 4), dtype=np.uint8)
    flat = rng.random((rows, cols)) < 0.5
    for r in range(rows):
        for c in range(cols):
            if flat[r, c]:
                px[r * tile_size:(r + 1) * tile_size, c * tile_size:(c + 1) * tile_size, :3] = rng.integers(0, 256, 3)
    px[..., 3] = np.where(rng.random(px.shape[:2]) < 0.3, 0, 255)
    return split_tileset(TileImage(px), tile_size)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
