"""Rule-based placement of graph entities onto walkable terrain."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .terrain import WALKABLE, TerrainMap

log = logging.getLogger(__name__)

PLACEHOLDER_PREFIX = "placeholder:"
TERRAIN_LEGEND = {0: "walkable", 1: "blocked"}
NEAR_DISTANCE = 2
_INVERSE = {"above": "below", "below": "above", "left_of": "right_of", "right_of": "left_of",
            "near": "near", "on_top_of": "under", "contains": "inside"}


class PlacementError(RuntimeError):
    pass


@dataclass
class PlacedObject:
    entity: str
    tile: str
    anchor: tuple[int, int]
    footprint: tuple[int, int] = (1, 1)
    layer: int = 0

    def cells(self):
        r, c = self.anchor
        h, w = self.footprint
        return [(r + i, c + j) for i in range(h) for j in range(w)]

    def to_dict(self) -> dict:
        return {"entity": self.entity, "tile": self.tile, "anchor": list(self.anchor),
                "footprint": list(self.footprint), "layer": self.layer}


@dataclass
class SceneMatrix:
    terrain: np.ndarray
    objects: list = field(default_factory=list)
    relations: list = field(default_factory=list)  # {subject, relation, object, retained}
    frame: int = 0
    warnings: list = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return self.terrain.shape

    def object(self, entity: str) -> PlacedObject:
        for o in self.objects:
            if o.entity == entity:
                return o
        raise KeyError(entity)

    def to_dict(self) -> dict:
        rows, cols = self.terrain.shape
        return {
            "frame": self.frame,
            "rows": rows,
            "cols": cols,
            "terrain_legend": {str(k): v for k, v in TERRAIN_LEGEND.items()},
            "terrain": self.terrain.astype(int).tolist(),
            "objects": [o.to_dict() for o in self.objects],
            "relations": self.relations,
            "warnings": self.warnings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SceneMatrix":
        objects = [PlacedObject(o["entity"], o["tile"], tuple(o["anchor"]), tuple(o["footprint"]), o.get("layer", 0))
                   for o in d["objects"]]
        return cls(np.array(d["terrain"], dtype=np.int64), objects, list(d["relations"]), d.get("frame", 0),
                   list(d.get("warnings", [])))


def _satisfied(rel: str, pos, fp, ref: PlacedObject) -> bool:
    """Does a node at ``pos`` with footprint ``fp`` satisfy ``node <rel> ref``?"""
    r, c = pos
    rr, rc = ref.anchor
    if rel == "above":
        return c == rc and r < rr
    if rel == "below":
        return c == rc and r > rr
    if rel == "left_of":
        return r == rr and c < rc
    if rel == "right_of":
        return r == rr and c > rc
    if rel == "on_top_of":
        return (r, c) == (rr, rc)
    if rel == "under":
        return (r, c) == (rr, rc)
    if rel == "contains":  # ref anchored inside this node's footprint
        return r <= rr < r + fp[0] and c <= rc < c + fp[1]
    if rel == "inside":  # this node anchored inside ref's footprint
        return rr <= r < rr + ref.footprint[0] and rc <= c < rc + ref.footprint[1]
    if rel == "near":
        return max(abs(r - rr), abs(c - rc)) <= NEAR_DISTANCE
    raise ValueError(f"unknown relation {rel!r}")


def _ideal(rel: str, ref: PlacedObject):
    rr, rc = ref.anchor
    return {"above": (rr - 1, rc), "below": (rr + 1, rc), "left_of": (rr, rc - 1), "right_of": (rr, rc + 1),
            "near": (rr, rc + 1)}.get(rel, (rr, rc))


def _centroid_cell(walkable: np.ndarray):
    cells = np.argwhere(walkable)
    if len(cells) == 0:
        raise PlacementError("terrain has no walkable cell")
    centre = cells.mean(axis=0)
    d = ((cells - centre) ** 2).sum(axis=1)
    return tuple(int(x) for x in cells[np.lexsort((cells[:, 1], cells[:, 0], d))[0]])


def place_objects(graph, terrain: TerrainMap, footprints=None) -> SceneMatrix:
    """Anchor every graph node so its canonical relations to earlier nodes hold.

    Nodes go in order of descending degree, then name. Each is put on the free
    walkable cell nearest to the point its constraints suggest; when no cell
    satisfies them all, the lowest-confidence edge is dropped with a warning.
    """
    footprints = footprints or {}
    walkable = terrain.grid == WALKABLE
    rows, cols = walkable.shape
    order = sorted(graph.nodes, key=lambda n: (-graph.degree(n), n))
    edge_state = {i: True for i in range(len(graph.edges))}
    placed: dict[str, PlacedObject] = {}
    owner = {}  # cell -> entity
    warnings = []
    all_cells = [(r, c) for r in range(rows) for c in range(cols)]

    for name in order:
        node = graph.nodes[name]
        fp = tuple(footprints.get(name, (1, 1)))
        tile = node.matched_tile or PLACEHOLDER_PREFIX + name
        while True:
            cons = []  # (edge index, relation from this node's view, ref)
            for i, e in enumerate(graph.edges):
                if not edge_state[i]:
                    continue
                if e.source == name and e.target in placed and e.target != name:
                    cons.append((i, e.relation, placed[e.target]))
                elif e.target == name and e.source in placed and e.source != name:
                    cons.append((i, _INVERSE[e.relation], placed[e.source]))
            overlap_ok = {ref.entity for _, rel, ref in cons if rel in ("on_top_of", "under", "contains", "inside")}

            def free(pos):
                for cell in PlacedObject(name, tile, pos, fp).cells():
                    if not (0 <= cell[0] < rows and 0 <= cell[1] < cols) or not walkable[cell]:
                        return False
                    if owner.get(cell) and not owner[cell] <= overlap_ok:
                        return False
                return True

            if not placed:
                start = _centroid_cell(walkable)
                ideal = start
            elif cons:
                pts = np.array([_ideal(rel, ref) for _, rel, ref in cons], dtype=float)
                ideal = tuple(int(np.floor(v + 0.5)) for v in pts.mean(axis=0))
            else:
                ideal = _centroid_cell(walkable)
            ranked = sorted(all_cells, key=lambda p: ((p[0] - ideal[0]) ** 2 + (p[1] - ideal[1]) ** 2, p))
            spot = None
            for pos in ranked:
                if free(pos) and all(_satisfied(rel, pos, fp, ref) for _, rel, ref in cons):
                    spot = pos
                    break
            if spot is not None:
                break
            if not cons:
                raise PlacementError(f"no free walkable cell for {name!r}")
            drop = min(cons, key=lambda c: (graph.edge_confidence(graph.edges[c[0]]), c[0]))[0]
            edge_state[drop] = False
            e = graph.edges[drop]
            msg = f"dropped relation {e.source} {e.relation} {e.target}: unsatisfiable while placing {name}"
            log.warning(msg)
            warnings.append(msg)
        obj = PlacedObject(name, tile, spot, fp)
        placed[name] = obj
        for cell in obj.cells():
            owner.setdefault(cell, set()).add(name)

    relations = [{"subject": e.source, "relation": e.relation, "object": e.target, "retained": edge_state[i]}
                 for i, e in enumerate(graph.edges)]
    objects = [placed[n] for n in order]
    _assign_layers(objects, relations)
    return SceneMatrix(terrain.grid.copy(), objects, relations, graph.frame, warnings)


def _assign_layers(objects, relations) -> None:
    by_name = {o.entity: o for o in objects}
    for _ in range(len(objects)):
        changed = False
        for rel in relations:
            if not rel["retained"]:
                continue
            if rel["relation"] == "on_top_of":
                upper, lower = by_name[rel["subject"]], by_name[rel["object"]]
            elif rel["relation"] == "contains":
                upper, lower = by_name[rel["object"]], by_name[rel["subject"]]
            else:
                continue
            if upper.layer <= lower.layer:
                upper.layer = lower.layer + 1
                changed = True
        if not changed:
            break
