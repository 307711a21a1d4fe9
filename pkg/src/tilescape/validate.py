"""Schema and cross-reference checks for annotation artifacts."""
from __future__ import annotations

import json
import re
from pathlib import Path

import jsonschema

from .connectivity import DIRECTIONS
from .segmentation import CLASSES
from .semantics import AFFORDANCES, PROVENANCE

_CELL = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2}
_NUM_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}

SCHEMAS = {
    "tileset": {
        "type": "object",
        "required": ["tile_size", "rows", "cols", "dropped_pixels"],
        "properties": {
            "source_path": {"type": ["string", "null"]},
            "tile_size": {"type": "integer", "minimum": 1},
            "rows": {"type": "integer", "minimum": 1},
            "cols": {"type": "integer", "minimum": 1},
            "dropped_pixels": {"type": "integer", "minimum": 0},
        },
    },
    "segments": {
        "type": "array",
        "items": {
            "type": "object",
            "required": ["parent", "members", "bbox", "class"],
            "properties": {
                "parent": _CELL,
                "members": {"type": "array", "items": _CELL, "minItems": 1},
                "bbox": {"type": "array", "items": {"type": "integer"}, "minItems": 4, "maxItems": 4},
                "class": {"enum": list(CLASSES)},
            },
        },
    },
    "connectivity": {
        "type": "array",
        "items": {
            "type": "object",
            "required": ["tile", "connected"],
            "properties": {
                "tile": _CELL,
                "connected": {"type": "array", "items": {"enum": [d.value for d in DIRECTIONS]}, "uniqueItems": True},
                "no_neighbor": {"type": "array", "items": {"enum": [d.value for d in DIRECTIONS]}},
            },
        },
    },
    "records": {
        "type": "array",
        "items": {
            "type": "object",
            "required": ["tile_ref", "detailed_name", "group_label", "supercategory", "affordances"],
            "properties": {
                "tile_ref": {"type": "string", "minLength": 1},
                "detailed_name": {"type": "string"},
                "group_label": {"type": "string", "minLength": 1},
                "supercategory": {"type": "string"},
                "affordances": {"type": "array", "items": {"enum": list(AFFORDANCES)}, "minItems": 1},
                "provenance": {"enum": list(PROVENANCE)},
            },
        },
    },
    "model": {
        "type": "object",
        "required": ["dims", "w1", "b1", "w2", "b2", "label_order"],
        "properties": {
            "dims": {"type": "object", "required": ["input", "hidden", "output"]},
            "w1": _NUM_MATRIX, "w2": _NUM_MATRIX,
            "b1": {"type": "array", "items": {"type": "number"}},
            "b2": {"type": "array", "items": {"type": "number"}},
            "label_order": {"type": "array", "items": {"enum": list(AFFORDANCES)}},
        },
    },
}

_SEGMENT_REF = re.compile(r"#(\d+),(\d+)$")


def _violation(artifact, message, item=None) -> dict:
    return {"artifact": str(artifact), "item": item, "message": message}


def _schema_errors(kind, data, path) -> list[dict]:
    validator = jsonschema.Draft202012Validator(SCHEMAS[kind])
    return [_violation(path, e.message, "/".join(map(str, e.absolute_path)) or None)
            for e in sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))]


def _load(path, violations):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        violations.append(_violation(path, f"unreadable JSON: {exc}"))
        return None


def _check_model(data, path) -> list[dict]:
    out = _schema_errors("model", data, path)
    if out:
        return out
    dims = data["dims"]
    shapes = {"w1": (dims["hidden"], dims["input"]), "w2": (dims["output"], dims["hidden"])}
    for name, (r, c) in shapes.items():
        m = data[name]
        if len(m) != r or any(len(row) != c for row in m):
            out.append(_violation(path, f"{name} is not {r}x{c}", name))
    if len(data["b1"]) != dims["hidden"]:
        out.append(_violation(path, "b1 length != hidden", "b1"))
    if len(data["b2"]) != dims["output"] or len(data["label_order"]) != dims["output"]:
        out.append(_violation(path, "b2/label_order length != output", "b2"))
    return out


def validate_annotations(path) -> list[dict]:
    """Return a list of violations for the artifacts under ``path`` (a directory or a single file)."""
    path = Path(path)
    if not path.exists():
        return [_violation(path, "path does not exist")]
    root = path if path.is_dir() else path.parent
    violations: list[dict] = []

    def find(name):
        if path.is_file():
            return path if path.name == name else None
        for cand in (root / name, root / "index" / name):
            if cand.exists():
                return cand
        return None

    grid = None
    tileset_path = find("tileset.json")
    if tileset_path:
        data = _load(tileset_path, violations)
        if data is not None:
            errs = _schema_errors("tileset", data, tileset_path)
            violations += errs
            if not errs:
                grid = (data["rows"], data["cols"])

    parents = None
    seg_path = find("segments.json")
    if seg_path:
        data = _load(seg_path, violations)
        if data is not None:
            errs = _schema_errors("segments", data, seg_path)
            violations += errs
            if not errs:
                parents = {tuple(s["parent"]) for s in data}
                seen = set()
                for i, seg in enumerate(data):
                    members = {tuple(m) for m in seg["members"]}
                    if tuple(seg["parent"]) not in members:
                        violations.append(_violation(seg_path, "parent is not a member", str(i)))
                    if members & seen:
                        violations.append(_violation(seg_path, "segment overlaps an earlier segment", str(i)))
                    seen |= members
                    if grid and any(r >= grid[0] or c >= grid[1] for r, c in members):
                        violations.append(_violation(seg_path, f"member outside {grid[0]}x{grid[1]} grid", str(i)))

    conn_path = find("connectivity.json")
    if conn_path:
        data = _load(conn_path, violations)
        if data is not None:
            errs = _schema_errors("connectivity", data, conn_path)
            violations += errs
            if not errs and grid:
                for i, item in enumerate(data):
                    r, c = item["tile"]
                    if r >= grid[0] or c >= grid[1]:
                        violations.append(_violation(conn_path, "tile outside grid", str(i)))

    rec_path = find("records.json")
    if rec_path:
        data = _load(rec_path, violations)
        if data is not None:
            errs = _schema_errors("records", data, rec_path)
            violations += errs
            if not errs:
                refs = [r["tile_ref"] for r in data]
                if len(set(refs)) != len(refs):
                    violations.append(_violation(rec_path, "duplicate tile_ref"))
                for rec in data:
                    if not _ref_resolves(rec["tile_ref"], rec_path.parent, root, parents):
                        violations.append(_violation(rec_path, f"tile_ref {rec['tile_ref']!r} does not resolve",
                                                     rec["tile_ref"]))

    emb_path = find("embeddings.jsonl")
    if emb_path:
        dims = {}
        try:
            with open(emb_path, encoding="utf-8") as fh:
                for n, line in enumerate(fh, 1):
                    if not line.strip():
                        continue
                    row = json.loads(line)
                    if not isinstance(row.get("key"), str) or not isinstance(row.get("vector"), list):
                        violations.append(_violation(emb_path, "line needs 'key' and 'vector'", f"line {n}"))
                        continue
                    dims.setdefault(len(row["vector"]), []).append(n)
        except (OSError, json.JSONDecodeError) as exc:
            violations.append(_violation(emb_path, f"unreadable JSONL: {exc}"))
        if len(dims) > 1:
            violations.append(_violation(emb_path, f"mixed embedding dimensions {sorted(dims)}"))

    model_paths = [path] if path.is_file() and path.name not in (
        "tileset.json", "segments.json", "connectivity.json", "records.json") else sorted(root.glob("*model*.json"))
    for mp in model_paths:
        if mp.suffix != ".json" or mp.name == "manifest.json":
            continue
        data = _load(mp, violations)
        if data is not None:
            violations += _check_model(data, mp)
    return violations


def _ref_resolves(ref: str, rec_dir: Path, root: Path, parents) -> bool:
    m = _SEGMENT_REF.search(ref)
    if m and parents is not None:
        return (int(m.group(1)), int(m.group(2))) in parents
    p = Path(ref)
    if p.is_absolute():
        return p.exists()
    return (rec_dir / p).exists() or (root / p).exists()
