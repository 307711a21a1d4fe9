"""Relation checker that reads only a finished scene matrix.

Kept separate from the placer on purpose: it re-derives every relation from
the emitted anchors and footprints.
"""
from __future__ import annotations


def relation_holds(relation: str, subject: dict, obj: dict) -> bool:
    (sr, sc), (orow, ocol) = subject["anchor"], obj["anchor"]
    if relation == "above":
        return sc == ocol and sr < orow
    if relation == "below":
        return sc == ocol and sr > orow
    if relation == "left_of":
        return sr == orow and sc < ocol
    if relation == "right_of":
        return sr == orow and sc > ocol
    if relation == "on_top_of":
        return [sr, sc] == [orow, ocol]
    if relation == "contains":
        h, w = subject["footprint"]
        return sr <= orow < sr + h and sc <= ocol < sc + w
    if relation == "near":
        return max(abs(sr - orow), abs(sc - ocol)) <= 2
    raise ValueError(f"unknown relation {relation!r}")


def check_relations(scene) -> list[dict]:
    """Evaluate every retained relation of a scene (SceneMatrix or its dict form).

    Returns one ``{subject, relation, object, ok}`` entry per retained relation;
    also flags objects off-grid or on blocked terrain.
    """
    data = scene if isinstance(scene, dict) else scene.to_dict()
    objs = {o["entity"]: o for o in data["objects"]}
    terrain = data["terrain"]
    out = []
    for rel in data["relations"]:
        if not rel.get("retained", True):
            continue
        s, o = objs.get(rel["subject"]), objs.get(rel["object"])
        ok = s is not None and o is not None and relation_holds(rel["relation"], s, o)
        out.append({"subject": rel["subject"], "relation": rel["relation"], "object": rel["object"], "ok": ok})
    for name, o in objs.items():
        r, c = o["anchor"]
        h, w = o["footprint"]
        on_grid = 0 <= r and 0 <= c and r + h <= data["rows"] and c + w <= data["cols"]
        walk = on_grid and all(terrain[r + i][c + j] == 0 for i in range(h) for j in range(w))
        if not walk:
            out.append({"subject": name, "relation": "on_walkable_terrain", "object": None, "ok": False})
    return out
