"""Directional (8 half-edge) connectivity inference and its evaluation."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .image import TileImage, Tileset, to_grayscale
from .similarity import DEFAULT_PARAMS, DEFAULT_STRIP_WIDTH, DEFAULT_THRESHOLD, SsimParams, _oriented

DEFAULT_ALPHA_FRACTION = 0.5


class Direction8(str, Enum):
    TOP_LEFT = "top_left"
    TOP_RIGHT = "top_right"
    RIGHT_UP = "right_up"
    RIGHT_DOWN = "right_down"
    BOTTOM_RIGHT = "bottom_right"
    BOTTOM_LEFT = "bottom_left"
    LEFT_DOWN = "left_down"
    LEFT_UP = "left_up"

    @property
    def side(self) -> str:
        return _GEOMETRY[self][0]

    @property
    def half(self) -> str:
        """``first`` is the half with the lesser pixel coordinates."""
        return _GEOMETRY[self][1]

    @property
    def offset(self) -> tuple[int, int]:
        return _OFFSETS[self.side]

    @property
    def facing(self) -> "Direction8":
        """The neighbour's direction that shares this half-edge."""
        return _BY_GEOMETRY[(_OPPOSITE[self.side], self.half)]


_GEOMETRY = {
    Direction8.TOP_LEFT: ("top", "first"),
    Direction8.TOP_RIGHT: ("top", "second"),
    Direction8.RIGHT_UP: ("right", "first"),
    Direction8.RIGHT_DOWN: ("right", "second"),
    Direction8.BOTTOM_RIGHT: ("bottom", "second"),
    Direction8.BOTTOM_LEFT: ("bottom", "first"),
    Direction8.LEFT_DOWN: ("left", "second"),
    Direction8.LEFT_UP: ("left", "first"),
}
_BY_GEOMETRY = {v: k for k, v in _GEOMETRY.items()}
_OPPOSITE = {"top": "bottom", "bottom": "top", "left": "right", "right": "left"}
_OFFSETS = {"top": (-1, 0), "bottom": (1, 0), "left": (0, -1), "right": (0, 1)}
DIRECTIONS = tuple(Direction8)


@dataclass
class ConnectivitySet:
    tile: tuple[int, int]
    connected: set = field(default_factory=set)
    no_neighbor: set = field(default_factory=set)

    def to_dict(self) -> dict:
        return {
            "tile": list(self.tile),
            "connected": [d.value for d in DIRECTIONS if d in self.connected],
            "no_neighbor": [d.value for d in DIRECTIONS if d in self.no_neighbor],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConnectivitySet":
        return cls(tuple(d["tile"]), {Direction8(x) for x in d.get("connected", [])},
                   {Direction8(x) for x in d.get("no_neighbor", [])})


def _half_slice(length: int, half: str) -> slice:
    mid = length // 2
    return slice(0, mid) if half == "first" else slice(mid, length)


def edge_segment(tile: TileImage, direction, strip_width: int = DEFAULT_STRIP_WIDTH) -> np.ndarray:
    """RGBA pixels of one half-edge, in image orientation."""
    direction = Direction8(direction)
    if tile.width != tile.height:
        raise ValueError("edge segments need a square tile")
    n = tile.width
    if n % 2:
        raise ValueError(f"tile size {n} is odd; half-edges are undefined")
    if not 1 <= strip_width <= n:
        raise ValueError(f"strip_width {strip_width} outside [1, {n}]")
    half = _half_slice(n, direction.half)
    px = tile.pixels
    if direction.side == "top":
        return px[:strip_width, half]
    if direction.side == "bottom":
        return px[n - strip_width:, half]
    if direction.side == "left":
        return px[half, :strip_width]
    return px[half, n - strip_width:]


def _half_strip(gray: np.ndarray, direction: Direction8, strip_width: int) -> np.ndarray:
    strip = _oriented(gray, direction.side)[:strip_width]
    return strip[:, _half_slice(strip.shape[1], direction.half)]


def infer_connectivity(tileset: Tileset, segments=None, ssim_threshold: float = DEFAULT_THRESHOLD,
                       alpha_fraction_min: float = DEFAULT_ALPHA_FRACTION,
                       strip_width: int = DEFAULT_STRIP_WIDTH,
                       params: SsimParams = DEFAULT_PARAMS) -> list[ConnectivitySet]:
    """Per-tile connected half-edges.

    A half-edge is a candidate when at least ``alpha_fraction_min`` of its
    pixels are opaque. With a neighbour on that side the facing half-strips
    must also reach ``ssim_threshold``; without one the candidate is kept and
    recorded in ``no_neighbor``. When ``segments`` is given, only tiles that
    belong to a segment count as neighbours.
    """
    ts = tileset.tile_size
    if ts % 2:
        raise ValueError(f"tile size {ts} is odd; half-edges are undefined")
    members = None
    if segments is not None:
        members = {tuple(m) for s in segments for m in s.members}

    grays = {}
    candidates = {}
    for pos in tileset.positions():
        tile = tileset.tile(*pos)
        grays[pos] = to_grayscale(tile).astype(np.float64)
        candidates[pos] = [d for d in DIRECTIONS
                           if (edge_segment(tile, d, strip_width)[..., 3] > 0).mean() >= alpha_fraction_min]

    # batch every (tile, direction) that needs an SSIM into one kernel call
    pending, lhs, rhs = [], [], []
    results = {}
    for pos, dirs in candidates.items():
        results[pos] = ConnectivitySet(pos)
        for d in dirs:
            nb = (pos[0] + d.offset[0], pos[1] + d.offset[1])
            has_nb = tileset.in_grid(*nb) and (members is None or nb in members)
            if not has_nb:
                results[pos].connected.add(d)
                results[pos].no_neighbor.add(d)
                continue
            pending.append((pos, d))
            lhs.append(_half_strip(grays[pos], d, strip_width).ravel())
            rhs.append(_half_strip(grays[nb], d.facing, strip_width).ravel())
    if pending:
        scores = kernels.ssim_batch(np.array(lhs), np.array(rhs), params.c1, params.c2)
        for (pos, d), s in zip(pending, scores):
            if s >= ssim_threshold:
                results[pos].connected.add(d)
    return [results[pos] for pos in tileset.positions()]


@dataclass(frozen=True)
class ConnectivityEval:
    precision: float
    recall: float
    f1: float
    exact_match_rate: float

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "exact_match_rate": self.exact_match_rate}


def evaluate_connectivity(predicted, truth) -> ConnectivityEval:
    """Micro-averaged P/R/F1 over (tile, direction) pairs plus per-tile exact match."""
    pred = {tuple(p.tile): set(p.connected) for p in predicted}
    true = {tuple(t.tile): set(t.connected) for t in truth}
    if pred.keys() != true.keys():
        missing = sorted(pred.keys() ^ true.keys())
        raise ValueError(f"tile keys differ between prediction and truth: {missing[:5]}")
    tp = fp = fn = exact = 0
    for key, p in pred.items():
        t = true[key]
        tp += len(p & t)
        fp += len(p - t)
        fn += len(t - p)
        exact += p == t
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ConnectivityEval(precision, recall, f1, exact / len(pred) if pred else 0.0)
