"""Deterministic synthetic tileset used by the demo pipeline and tests."""
from __future__ import annotations

from importlib import resources

import numpy as np

from .image import TileImage, load_png

TILE = 32


def _mirror_noise(rng, color, spread):
    """Fully opaque tile whose pattern is mirror-symmetric, so copies tile seamlessly."""
    q = rng.integers(-spread, spread + 1, size=(TILE // 2, TILE // 2))
    half = np.concatenate([q, q[:, ::-1]], axis=1)
    full = np.concatenate([half, half[::-1]], axis=0)
    px = np.zeros((TILE, TILE, 4), dtype=np.int64)
    px[..., :3] = np.asarray(color) + full[..., None]
    px[..., 3] = 255
    return np.clip(px, 0, 255)


def make_fixture_tileset(seed: int = 7) -> TileImage:
    """4x4 grid of 32px tiles: a two-tile tree, a coin, a stone block, cropped grass and fence."""
    rng = np.random.default_rng(seed)
    img = np.zeros((4 * TILE, 4 * TILE, 4), dtype=np.int64)

    def put(r, c, px):
        img[r * TILE:(r + 1) * TILE, c * TILE:(c + 1) * TILE] = px

    # tree: canopy in (0, 0) flowing into trunk in (1, 0), 2px transparent outer margin
    canopy = np.zeros((TILE, TILE, 4), dtype=np.int64)
    canopy[2:, 2:TILE - 2] = (40, 140, 60, 255)
    canopy[6:12, 8:14] = (70, 180, 90, 255)
    trunk = np.zeros((TILE, TILE, 4), dtype=np.int64)
    trunk[:8, 2:TILE - 2] = (40, 140, 60, 255)
    trunk[8:TILE - 2, 12:20] = (110, 70, 30, 255)
    put(0, 0, canopy)
    put(1, 0, trunk)

    # grass: one repeating texture across (0, 2)-(0, 3), cropped by the tileset edge
    grass = _mirror_noise(rng, (80, 160, 70), 12)
    put(0, 2, grass)
    put(0, 3, grass)

    # coin sprite, fully enclosed
    coin = np.zeros((TILE, TILE, 4), dtype=np.int64)
    yy, xx = np.mgrid[:TILE, :TILE]
    disk = (yy - 15.5) ** 2 + (xx - 15.5) ** 2 <= 8 ** 2
    coin[disk] = (230, 190, 40, 255)
    coin[disk & ((yy - 13) ** 2 + (xx - 13) ** 2 <= 4)] = (255, 240, 150, 255)
    put(1, 1, coin)

    # stone block alone in the interior: a complete texture
    put(2, 2, _mirror_noise(rng, (120, 120, 130), 20))

    # fence cropped at the tileset's left edge, spanning (3, 0)-(3, 1)
    for c in (0, 1):
        fence = np.zeros((TILE, TILE, 4), dtype=np.int64)
        fence[12:16, :] = (150, 110, 60, 255)
        fence[20:24, :] = (150, 110, 60, 255)
        if c == 0:
            fence[8:30, 4:8] = (130, 90, 50, 255)
        fence[8:30, 24:28] = (130, 90, 50, 255)
        put(3, c, fence)
    return TileImage(np.clip(img, 0, 255).astype(np.uint8))


def fixture_path():
    return resources.files("tilescape").joinpath("data/fixture_tileset.png")


def load_fixture() -> TileImage:
    with resources.as_file(fixture_path()) as p:
        return load_png(p)
