"""End-to-end annotation run: split, adjacency, segment, classify, connectivity, optional index."""
from __future__ import annotations

import hashlib
import json
import logging
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import PipelineConfig
from .connectivity import infer_connectivity
from .image import load_png, save_tileset_metadata, split_tileset
from .segmentation import classify_all, grow_segments, load_overrides, segmentation_report
from .semantics import FileEmbedder, HashingEmbedder, SemanticIndex, SemanticRecord
from .similarity import SsimParams, adjacency_pairs

log = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def dump_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_pipeline(config: PipelineConfig, tileset_path, out_dir, records_path=None, embeddings_path=None,
                 overrides_path=None) -> Path:
    """Write every artifact plus ``manifest.json`` into ``out_dir`` and return it.

    On failure every artifact written by this run is removed and a
    :class:`PipelineError` names the failing stage.
    """
    out = Path(out_dir)
    written: list[Path] = []
    stage = "load"
    try:
        image = load_png(tileset_path)
        out.mkdir(parents=True, exist_ok=True)

        stage = "split"
        tileset = split_tileset(image, config.tile_size, source_path=Path(tileset_path).name)
        save_tileset_metadata(tileset, out / "tileset.json")
        written.append(out / "tileset.json")

        stage = "adjacency"
        params = SsimParams()
        pairs = adjacency_pairs(tileset, config.adjacency_threshold, config.strip_width, params)
        written.append(dump_json(pairs, out / "adjacency.json"))

        stage = "segment"
        segments = grow_segments(tileset, config.ssim_threshold, config.transparency_threshold,
                                 config.strip_width, params, config.opaque_seams_only)

        stage = "classify"
        overrides = load_overrides(overrides_path) if overrides_path else None
        classify_all(segments, tileset, overrides)
        written.append(dump_json([s.to_dict() for s in segments], out / "segments.json"))
        written.append(dump_json(segmentation_report(segments).to_dict(), out / "report.json"))

        stage = "connectivity"
        conn = infer_connectivity(tileset, segments, config.ssim_threshold, config.alpha_fraction_min,
                                  config.strip_width, params)
        written.append(dump_json([c.to_dict() for c in conn], out / "connectivity.json"))

        if records_path:
            stage = "index"
            records = [SemanticRecord.from_dict(d) for d in json.loads(Path(records_path).read_text(encoding="utf-8"))]
            if embeddings_path:
                index = SemanticIndex.build(records, FileEmbedder.from_jsonl(embeddings_path), key="tile_ref")
            else:
                index = SemanticIndex.build(records, HashingEmbedder())
            index.save(out / "index")
            written += [out / "index" / "records.json", out / "index" / "embeddings.jsonl"]

        stage = "manifest"
        manifest = {
            "tool": "tilescape",
            "version": __version__,
            "config": config.to_dict(),
            "config_hash": config.digest(),
            "source": Path(tileset_path).name,
            "source_sha256": sha256_file(tileset_path),
            "artifacts": [{"path": p.relative_to(out).as_posix(), "sha256": sha256_file(p)} for p in written],
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        dump_json(manifest, out / "manifest.json")
    except Exception as exc:
        for p in written:
            p.unlink(missing_ok=True)
        if (out / "index").is_dir() and not any((out / "index").iterdir()):
            (out / "index").rmdir()
        raise PipelineError(stage, exc) from exc
    log.info("pipeline wrote %d artifacts to %s", len(written), out)
    return out
