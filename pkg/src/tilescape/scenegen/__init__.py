"""Narrative predicates to tile scenes: parsing, knowledge graphs, CA terrain, placement, rendering."""
from .checker import check_relations
from .graph import MergedGraph, SceneGraph, build_scene_graph, merge_graphs
from .placement import PlacementError, SceneMatrix, place_objects
from .predicates import ParseError, Predicate, canonicalize_relation, load_relation_lexicon, parse_predicates
from .render import RenderError, render_scene
from .terrain import GenerationError, TerrainMap, TerrainParams, generate_terrain

__all__ = [
    "GenerationError", "MergedGraph", "ParseError", "PlacementError", "Predicate", "RenderError",
    "SceneGraph", "SceneMatrix", "TerrainMap", "TerrainParams", "build_scene_graph", "canonicalize_relation",
    "check_relations", "generate_terrain", "load_relation_lexicon", "merge_graphs", "parse_predicates",
    "place_objects", "render_scene",
]
