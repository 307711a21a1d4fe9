"""Scene-level knowledge graphs and their temporal merge."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources

from ..semantics import AFFORDANCES, query_index
from .predicates import canonicalize_relation, load_relation_lexicon

log = logging.getLogger(__name__)


@dataclass
class Node:
    name: str
    affordance_hint: str | None = None
    matched_tile: str | None = None
    placement_confidence: float = 0.0
    terrain: str | None = None

    @property
    def unmatched(self) -> bool:
        return self.matched_tile is None

    def to_dict(self) -> dict:
        return {"name": self.name, "affordance_hint": self.affordance_hint, "matched_tile": self.matched_tile,
                "placement_confidence": self.placement_confidence, "terrain": self.terrain,
                "unmatched": self.unmatched}


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    relation: str
    raw: str = ""

    def to_dict(self) -> dict:
        return {"from": self.source, "to": self.target, "spatial_relation": self.relation, "raw": self.raw}


@dataclass
class SceneGraph:
    frame: int
    nodes: dict = field(default_factory=dict)  # name -> Node, insertion ordered
    edges: list = field(default_factory=list)

    def degree(self, name: str) -> int:
        return sum((e.source == name) + (e.target == name) for e in self.edges)

    def edge_confidence(self, edge: Edge) -> float:
        return min(self.nodes[edge.source].placement_confidence, self.nodes[edge.target].placement_confidence)

    def to_dict(self) -> dict:
        return {"frame": self.frame, "nodes": [n.to_dict() for n in self.nodes.values()],
                "edges": [e.to_dict() for e in self.edges]}


def load_affordance_hints(path=None) -> dict[str, str]:
    if path is None:
        text = resources.files("tilescape").joinpath("data/affordance_hints.json").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    hints = json.loads(text)
    bad = set(hints.values()) - set(AFFORDANCES)
    if bad:
        raise ValueError(f"unknown affordances in hint lexicon: {sorted(bad)}")
    return hints


def affordance_hint(name: str, hints: dict, index=None) -> str | None:
    """Affordance shared by index entries whose group label equals ``name``, else the keyword lexicon.

    An exact index hit is the stronger evidence; among lexicon keywords the last one wins.
    """
    if index is not None:
        shared = None
        for rec in index.records:
            if rec.group_label == name:
                shared = set(rec.affordances) if shared is None else shared & rec.affordances
        if shared:
            return min(shared)
    hit = None
    for word in name.split():
        if word in hints:
            hit = hints[word]
    return hit


def build_scene_graph(predicates, index, embedder, frame: int | None = None, hints=None, lexicon=None,
                      terrain_tags=None) -> SceneGraph:
    """One node per entity matched to its top-1 tile, one deduplicated edge per predicate."""
    predicates = list(predicates)
    if len(index) == 0:
        raise ValueError("semantic index is empty")
    lexicon = load_relation_lexicon() if lexicon is None else lexicon
    hints = load_affordance_hints() if hints is None else hints
    terrain_tags = terrain_tags or {}
    if frame is None:
        frame = predicates[0].frame if predicates else 0
    graph = SceneGraph(frame)
    for p in predicates:
        for name in (p.subject, p.object):
            if name in graph.nodes:
                continue
            node = Node(name, affordance_hint(name, hints, index), terrain=terrain_tags.get(name))
            vec = embedder.embed(name)
            if vec is not None and vec.any():
                filt = None if node.affordance_hint is None else {node.affordance_hint}
                hits = query_index(index, vec, k=1, affordance_filter=filt)
                if hits:
                    node.matched_tile = hits[0][0].tile_ref
                    node.placement_confidence = hits[0][1]
            if node.unmatched:
                log.warning("frame %d: no tile matched for %r", frame, name)
            graph.nodes[name] = node
        edge = Edge(p.subject, p.object, canonicalize_relation(p.relation, lexicon), p.relation)
        if all((e.source, e.target, e.relation) != (edge.source, edge.target, edge.relation) for e in graph.edges):
            graph.edges.append(edge)
    return graph


@dataclass
class MergedGraph:
    frames: list
    precedes: list  # (frame_a, name, frame_b, name)

    def to_dict(self) -> dict:
        return {
            "frames": [g.to_dict() for g in self.frames],
            "precedes": [{"from": {"frame": fa, "entity": a}, "to": {"frame": fb, "entity": b},
                          "relation": "precedes"} for fa, a, fb, b in self.precedes],
        }


def merge_graphs(frames) -> MergedGraph:
    """Link each entity to its namesake in the next frame with a ``precedes`` edge."""
    frames = list(frames)
    precedes = []
    for cur, nxt in zip(frames, frames[1:]):
        for name in cur.nodes:
            if name in nxt.nodes:
                precedes.append((cur.frame, name, nxt.frame, name))
    return MergedGraph(frames, precedes)
