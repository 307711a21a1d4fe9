"""Region growing over the tile grid and heuristic completeness classification."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .image import TRANSPARENCY_THRESHOLD, Tileset, opacity_stats
from .similarity import DEFAULT_PARAMS, DEFAULT_STRIP_WIDTH, DEFAULT_THRESHOLD, SsimParams, seam_opacity, seam_scores

CLASSES = ("complete", "partial", "texture", "complete_texture", "partial_texture")
USABLE_CLASSES = ("complete", "complete_texture")
TEXTURE_OPACITY = 0.99

Cell = tuple[int, int]


@dataclass
class SegmentRecord:
    parent: Cell
    members: list[Cell]
    cls: str | None = None

    @property
    def bounding_box(self) -> tuple[int, int, int, int]:
        rs = [r for r, _ in self.members]
        cs = [c for _, c in self.members]
        return min(rs), min(cs), max(rs), max(cs)

    def to_dict(self) -> dict:
        return {
            "parent": list(self.parent),
            "members": [list(m) for m in self.members],
            "bbox": list(self.bounding_box),
            "class": self.cls,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SegmentRecord":
        return cls(tuple(d["parent"]), [tuple(m) for m in d["members"]], d.get("class"))


def opacity_grid(tileset: Tileset) -> np.ndarray:
    return (tileset.stack()[..., 3] > 0).mean(axis=(2, 3))


def grow_segments(tileset: Tileset, similarity_threshold: float = DEFAULT_THRESHOLD,
                  transparency_threshold: float = TRANSPARENCY_THRESHOLD,
                  strip_width: int = DEFAULT_STRIP_WIDTH, params: SsimParams = DEFAULT_PARAMS,
                  opaque_seams_only: bool = False) -> list[SegmentRecord]:
    """Group non-transparent tiles whose shared seams pass the SSIM threshold.

    Unvisited tiles are seeded in raster order, so each segment's parent is its
    first tile in raster order. Members are returned sorted.

    Two fully transparent facing strips always score 1.0; ``opaque_seams_only``
    refuses such seams so sprites separated only by their margins stay apart.
    """
    if tileset.rows == 0 or tileset.cols == 0:
        return []
    active = opacity_grid(tileset) >= transparency_threshold
    horizontal, vertical = seam_scores(tileset, strip_width, params)
    h_join = horizontal >= similarity_threshold
    v_join = vertical >= similarity_threshold
    if opaque_seams_only:
        h_opaque, v_opaque = seam_opacity(tileset, strip_width)
        h_join &= h_opaque
        v_join &= v_opaque
    labels = kernels.grid_components(active, h_join, v_join)
    n = int(labels.max()) + 1 if labels.size and labels.max() >= 0 else 0
    buckets: list[list[Cell]] = [[] for _ in range(n)]
    for r, c in zip(*np.nonzero(labels >= 0)):
        buckets[labels[r, c]].append((int(r), int(c)))
    # np.nonzero walks in raster order, so bucket[0] is the seed tile
    return [SegmentRecord(members[0], members) for members in buckets]


def merged_image(segment: SegmentRecord, tileset: Tileset) -> np.ndarray:
    """RGBA image of the segment's bounding box; non-member tiles are transparent."""
    ts = tileset.tile_size
    r0, c0, r1, c1 = segment.bounding_box
    out = np.zeros(((r1 - r0 + 1) * ts, (c1 - c0 + 1) * ts, 4), dtype=np.uint8)
    for r, c in segment.members:
        out[(r - r0) * ts:(r - r0 + 1) * ts, (c - c0) * ts:(c - c0 + 1) * ts] = tileset.grid[r][c].pixels
    return out


def _outside_edges_transparent(segment: SegmentRecord, tileset: Tileset) -> bool:
    r0, c0, r1, c1 = segment.bounding_box
    if r0 == 0 or c0 == 0 or r1 == tileset.rows - 1 or c1 == tileset.cols - 1:
        return False
    for c in range(c0, c1 + 1):
        if tileset.grid[r0 - 1][c].alpha[-1].any() or tileset.grid[r1 + 1][c].alpha[0].any():
            return False
    for r in range(r0, r1 + 1):
        if tileset.grid[r][c0 - 1].alpha[:, -1].any() or tileset.grid[r][c1 + 1].alpha[:, 0].any():
            return False
    return True


def classify_segment(segment: SegmentRecord, tileset: Tileset) -> str:
    texture = all(opacity_stats(tileset.grid[r][c]).opaque_fraction >= TEXTURE_OPACITY
                  for r, c in segment.members)
    alpha = merged_image(segment, tileset)[:, :, 3] > 0
    border_clear = not (alpha[0].any() or alpha[-1].any() or alpha[:, 0].any() or alpha[:, -1].any())
    complete = border_clear or _outside_edges_transparent(segment, tileset)
    if texture:
        return "complete_texture" if complete else "partial_texture"
    return "complete" if complete else "partial"


def load_overrides(path) -> dict[Cell, str]:
    """Manual classes keyed by parent tile: ``{"r,c": class}`` or ``[{parent, class}]``."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    items = data.items() if isinstance(data, dict) else ((tuple(d["parent"]), d["class"]) for d in data)
    out = {}
    for key, cls in items:
        if isinstance(key, str):
            key = tuple(int(x) for x in key.split(","))
        if cls not in CLASSES:
            raise ValueError(f"override for {key}: unknown class {cls!r}")
        out[tuple(key)] = cls
    return out


def classify_all(segments, tileset: Tileset, overrides=None) -> list[SegmentRecord]:
    overrides = overrides or {}
    for seg in segments:
        seg.cls = overrides.get(tuple(seg.parent)) or classify_segment(seg, tileset)
    return segments


@dataclass
class SegmentationReport:
    total_segments: int
    counts: dict = field(default_factory=dict)
    usable_rate: float = 0.0

    def to_dict(self) -> dict:
        return {
            "total_segments": self.total_segments,
            "counts": dict(self.counts),
            "usable": sum(self.counts.get(c, 0) for c in USABLE_CLASSES),
            "usable_rate": self.usable_rate,
            "usable_definition": "(complete + complete_texture) / total_segments",
        }


def segmentation_report(segments) -> SegmentationReport:
    """Accepts SegmentRecords or a plain ``{class: count}`` mapping."""
    if isinstance(segments, dict):
        counts = Counter({k: int(v) for k, v in segments.items()})
    else:
        classes = [s.cls for s in segments]
        if any(c is None for c in classes):
            raise ValueError("all segments must be classified before reporting")
        counts = Counter(classes)
    unknown = set(counts) - set(CLASSES)
    if unknown:
        raise ValueError(f"unknown classes {sorted(unknown)}")
    total = sum(counts.values())
    usable = sum(counts[c] for c in USABLE_CLASSES)
    return SegmentationReport(total, {c: counts.get(c, 0) for c in CLASSES}, usable / total if total else 0.0)
