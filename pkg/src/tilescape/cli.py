"""Command-line interface.

Exit codes: 0 success, 1 domain failure (generation, placement, training),
2 I/O or argument error.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .affordance import (AffordanceModel, TrainConfig, TrainingError, evaluate, forward, labels_from_probs,
                         load_dataset, train)
from .config import PipelineConfig
from .connectivity import ConnectivitySet, evaluate_connectivity, infer_connectivity
from .fixtures import fixture_path
from .image import load_png, save_png, save_tileset_metadata, split_tileset
from .pipeline import PipelineError, dump_json, run_pipeline
from .scenegen.graph import build_scene_graph, merge_graphs
from .scenegen.placement import PLACEHOLDER_PREFIX, PlacementError, place_objects
from .scenegen.predicates import group_frames, load_relation_lexicon, parse_predicates, predicates_from_json
from .scenegen.render import RenderError, default_terrain_assets, placeholder_sprite, render_scene
from .scenegen.terrain import GenerationError, generate_terrain
from .segmentation import classify_all, grow_segments, load_overrides, segmentation_report
from .semantics import (AFFORDANCES, FileEmbedder, HashingEmbedder, SemanticIndex, SemanticRecord,
                        aggregate_matches, match_caption, query_index, read_jsonl)
from .similarity import SsimParams, adjacency_pairs
from .validate import validate_annotations

log = logging.getLogger("tilescape")

DOMAIN_ERRORS = (GenerationError, PlacementError, TrainingError)


def _cfg(ctx) -> PipelineConfig:
    return ctx.obj["config"]


def _out(ctx, out):
    return out if out is not None else ctx.obj.get("out")


def _emit(obj, out=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def _load_tileset(ctx, image_path, tile_size):
    cfg = _cfg(ctx)
    return split_tileset(load_png(image_path), cfg.tile_size if tile_size is None else tile_size, source_path=Path(image_path).name)


def _embedder(embeddings, dim):
    if embeddings:
        return FileEmbedder.from_jsonl(embeddings)
    return HashingEmbedder(dim)


@click.group()
@click.version_option(__version__)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON config file.")
@click.option("--seed", type=int, help="Overrides the config seed.")
@click.option("--out", "out", type=click.Path(), help="Default output path for subcommands.")
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def cli(ctx, config_path, seed, out, verbose):
    """Tileset analysis and narrative scene generation."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    ctx.ensure_object(dict)
    ctx.obj["config"] = PipelineConfig.load(config_path, seed=seed)
    ctx.obj["out"] = out


@cli.command()
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("--tile-size", type=int)
@click.option("--out", type=click.Path(file_okay=False))
@click.pass_context
def split(ctx, image, tile_size, out):
    """Cut IMAGE into tiles; writes tileset.json and tiles/r<row>_c<col>.png."""
    out = Path(_out(ctx, out) or "tiles_out")
    tileset = _load_tileset(ctx, image, tile_size)
    (out / "tiles").mkdir(parents=True, exist_ok=True)
    for r, c in tileset.positions():
        save_png(tileset.tile(r, c), out / "tiles" / f"r{r}_c{c}.png")
    save_tileset_metadata(tileset, out / "tileset.json")
    click.echo(json.dumps(tileset.metadata(), sort_keys=True))


@cli.command()
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("--tile-size", type=int)
@click.option("--strip-width", type=int)
@click.option("--threshold", type=float)
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_context
def adjacency(ctx, image, tile_size, strip_width, threshold, out):
    """Boundary SSIM for every neighbouring tile pair."""
    cfg = _cfg(ctx)
    tileset = _load_tileset(ctx, image, tile_size)
    pairs = adjacency_pairs(tileset, cfg.adjacency_threshold if threshold is None else threshold,
                            cfg.strip_width if strip_width is None else strip_width, SsimParams())
    _emit(pairs, _out(ctx, out))


@cli.command()
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("--tile-size", type=int)
@click.option("--overrides", type=click.Path(exists=True, dir_okay=False), help="Manual classes by parent tile.")
@click.option("--out", type=click.Path(file_okay=False))
@click.pass_context
def segment(ctx, image, tile_size, overrides, out):
    """Region-grow object segments and classify them; writes segments.json and report.json."""
    cfg = _cfg(ctx)
    out = Path(_out(ctx, out) or ".")
    out.mkdir(parents=True, exist_ok=True)
    tileset = _load_tileset(ctx, image, tile_size)
    segs = grow_segments(tileset, cfg.ssim_threshold, cfg.transparency_threshold, cfg.strip_width,
                         SsimParams(), cfg.opaque_seams_only)
    classify_all(segs, tileset, load_overrides(overrides) if overrides else None)
    dump_json([s.to_dict() for s in segs], out / "segments.json")
    report = segmentation_report(segs).to_dict()
    dump_json(report, out / "report.json")
    click.echo(json.dumps(report, sort_keys=True))


@cli.command()
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("--tile-size", type=int)
@click.option("--threshold", type=float, help="SSIM threshold (default from config).")
@click.option("--segments/--no-segments", "use_segments", default=True,
              help="Only tiles inside segments count as neighbours.")
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_context
def connectivity(ctx, image, tile_size, threshold, use_segments, out):
    """Infer the 8 directional half-edge connections of every tile."""
    cfg = _cfg(ctx)
    tileset = _load_tileset(ctx, image, tile_size)
    segs = None
    if use_segments:
        segs = grow_segments(tileset, cfg.ssim_threshold, cfg.transparency_threshold, cfg.strip_width,
                             SsimParams(), cfg.opaque_seams_only)
    conn = infer_connectivity(tileset, segs, cfg.ssim_threshold if threshold is None else threshold,
                              cfg.alpha_fraction_min, cfg.strip_width)
    _emit([c.to_dict() for c in conn], _out(ctx, out))


@cli.command("eval-connectivity")
@click.option("--pred", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--truth", required=True, type=click.Path(exists=True, dir_okay=False))
def eval_connectivity_cmd(pred, truth):
    """Precision, recall, F1 and exact-match rate of predicted connectivity."""
    load = lambda p: [ConnectivitySet.from_dict(d) for d in json.loads(Path(p).read_text(encoding="utf-8"))]
    _emit(evaluate_connectivity(load(pred), load(truth)).to_dict())


@cli.group()
def index():
    """Build or query the semantic tile index."""


@index.command("build")
@click.option("--records", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False),
              help="JSONL {key, vector} keyed by tile_ref; default hashes record text.")
@click.option("--hash-dim", type=int, default=64, show_default=True)
@click.option("--out", type=click.Path(file_okay=False))
@click.pass_context
def index_build(ctx, records, embeddings, hash_dim, out):
    recs = [SemanticRecord.from_dict(d) for d in json.loads(Path(records).read_text(encoding="utf-8"))]
    if embeddings:
        idx = SemanticIndex.build(recs, FileEmbedder.from_jsonl(embeddings), key="tile_ref")
    else:
        idx = SemanticIndex.build(recs, HashingEmbedder(hash_dim))
    out = Path(_out(ctx, out) or "index")
    idx.save(out)
    click.echo(json.dumps({"entries": len(idx), "dimension": idx.dimension, "out": str(out)}))


@index.command("query")
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--text", required=True)
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--affordance", multiple=True, type=click.Choice(AFFORDANCES), help="Repeatable filter.")
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), help="Query vectors keyed by text.")
def index_query(index_dir, text, k, affordance, embeddings):
    idx = SemanticIndex.load(index_dir)
    vec = _embedder(embeddings, idx.dimension).embed(text)
    if vec is None:
        raise click.BadParameter(f"no embedding available for {text!r}", param_hint="--text")
    hits = query_index(idx, vec, k, set(affordance) or None)
    _emit([{**rec.to_dict(), "score": score} for rec, score in hits])


@cli.command("match-captions")
@click.option("--captions", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL {tile_ref, caption}.")
@click.option("--records", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--synonyms", type=click.Path(exists=True, dir_okay=False), help="JSON {term: [synonyms]}.")
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), help="Text-keyed vectors.")
@click.option("--hash-dim", type=int, default=64, show_default=True)
@click.option("--threshold", type=float)
@click.option("--out", type=click.Path(dir_okay=False), help="Per-caption results (JSON).")
@click.pass_context
def match_captions(ctx, captions, records, synonyms, embeddings, hash_dim, threshold, out):
    """Direct / synonym / semantic agreement between captions and labels."""
    cfg = _cfg(ctx)
    recs = {d["tile_ref"]: SemanticRecord.from_dict(d) for d in json.loads(Path(records).read_text(encoding="utf-8"))}
    lexicon = json.loads(Path(synonyms).read_text(encoding="utf-8")) if synonyms else {}
    embedder = _embedder(embeddings, hash_dim)
    thr = cfg.semantic_sim_threshold if threshold is None else threshold
    rows = []
    for row in read_jsonl(captions):
        rec = recs.get(row["tile_ref"])
        if rec is None:
            raise click.BadParameter(f"caption references unknown tile_ref {row['tile_ref']!r}")
        rows.append({"tile_ref": rec.tile_ref, "caption": row["caption"],
                     "match": match_caption(row["caption"], rec, lexicon, embedder, thr)})
    if _out(ctx, out):
        _emit(rows, _out(ctx, out))
    _emit(aggregate_matches(r["match"] for r in rows).to_dict())


@cli.group()
def affordance():
    """Train, apply and evaluate the affordance classifier."""


@affordance.command("train")
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False))
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--lr", type=float, default=0.05, show_default=True)
@click.option("--batch", type=int, default=32, show_default=True)
@click.option("--hidden", type=int, default=128, show_default=True)
@click.option("--momentum", type=float, default=0.0, show_default=True)
@click.option("--val-fraction", type=float, default=0.15, show_default=True)
@click.pass_context
def affordance_train(ctx, data, out, epochs, lr, batch, hidden, momentum, val_fraction):
    _, x, t = load_dataset(data)
    config = TrainConfig(lr=lr, epochs=epochs, batch=batch, seed=_cfg(ctx).seed, val_fraction=val_fraction,
                         hidden_size=hidden, momentum=momentum)
    model, history = train(x, t, config)
    out = Path(_out(ctx, out) or "model.json")
    model.save(out)
    click.echo(json.dumps({"model": str(out), "train_loss": history.train_loss[-1:] or None,
                           "val_loss": history.val_loss[-1:] or None}))


@affordance.command("predict")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--threshold", type=float)
@click.option("--out", type=click.Path(dir_okay=False))
@click.pass_context
def affordance_predict(ctx, model_path, data, threshold, out):
    model = AffordanceModel.load(model_path)
    keys, x, _ = load_dataset(data)
    thr = _cfg(ctx).affordance_threshold if threshold is None else threshold
    probs = forward(model, x)
    rows = [{"key": k, "probabilities": dict(zip(model.label_order, map(float, p))),
             "affordances": sorted(labels_from_probs(p, thr, model.label_order))} for k, p in zip(keys, probs)]
    _emit(rows, _out(ctx, out))


@affordance.command("eval")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--threshold", type=float)
@click.option("--scatter", type=click.Path(dir_okay=False), help="CSV of per-label precision/recall.")
@click.option("--out", type=click.Path(dir_okay=False), help="Metrics JSON.")
@click.pass_context
def affordance_eval(ctx, model_path, data, threshold, scatter, out):
    model = AffordanceModel.load(model_path)
    _, x, t = load_dataset(data)
    metrics = evaluate(model, x, t, _cfg(ctx).affordance_threshold if threshold is None else threshold)
    click.echo(metrics.table())
    if scatter:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "precision", "recall", "support"])
        for lab, m in metrics.per_label.items():
            w.writerow([lab, f"{m['precision']:.6f}", f"{m['recall']:.6f}", m["support"]])
        Path(scatter).write_text(buf.getvalue(), encoding="utf-8")
    if _out(ctx, out):
        _emit(metrics.to_dict(), _out(ctx, out))


@cli.command()
@click.option("--rows", type=int, default=24, show_default=True)
@click.option("--cols", type=int, default=24, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="CSV path (default stdout).")
@click.pass_context
def terrain(ctx, rows, cols, out):
    """Cellular-automaton terrain as a 0 (walkable) / 1 (blocked) CSV grid."""
    cfg = _cfg(ctx)
    tm = generate_terrain(rows, cols, cfg.seed, cfg.terrain_params)
    out = _out(ctx, out)
    if out:
        Path(out).write_text(tm.to_csv(), encoding="utf-8")
        click.echo(json.dumps({"seed": tm.seed, "attempts": tm.attempts, "walkable_fraction": tm.walkable_fraction}))
    else:
        click.echo(tm.to_csv(), nl=False)


def _scene_assets(idx_dir: Path, idx, matrices, tile_size):
    assets = default_terrain_assets(tile_size)
    for m in matrices:
        for obj in m.objects:
            if obj.tile in assets:
                continue
            if obj.tile.startswith(PLACEHOLDER_PREFIX):
                assets[obj.tile] = placeholder_sprite(obj.tile[len(PLACEHOLDER_PREFIX):], tile_size)
                continue
            path = Path(obj.tile)
            path = path if path.is_absolute() else idx_dir / path
            if path.exists():
                assets[obj.tile] = load_png(path)
    return assets


@cli.command()
@click.option("--predicates", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Text with '# frame N' headers, or JSON list.")
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False), help="Entity vectors keyed by text.")
@click.option("--rows", type=int, default=24, show_default=True)
@click.option("--cols", type=int, default=24, show_default=True)
@click.option("--tile-size", type=int)
@click.option("--lexicon", type=click.Path(exists=True, dir_okay=False), help="Relation alias JSON.")
@click.option("--no-render", is_flag=True, help="Skip scene.png.")
@click.option("--out", type=click.Path(file_okay=False))
@click.pass_context
def scene(ctx, predicates, index_dir, embeddings, rows, cols, tile_size, lexicon, no_render, out):
    """Predicates -> knowledge graphs -> terrain -> placement -> scene.json/terrain.csv/scene.png per frame."""
    cfg = _cfg(ctx)
    tile_size = cfg.tile_size if tile_size is None else tile_size
    lex = load_relation_lexicon(lexicon)
    text = Path(predicates).read_text(encoding="utf-8")
    terrain_tags = {}
    if predicates.endswith(".json"):
        data = json.loads(text)
        preds = predicates_from_json(data, lex)
        for row, p in zip(data, preds):
            for key, name in (("subject_terrain", p.subject), ("object_terrain", p.object)):
                if row.get(key):
                    terrain_tags[name] = row[key]
    else:
        preds = parse_predicates(text, lex)
    idx = SemanticIndex.load(index_dir)
    embedder = _embedder(embeddings, idx.dimension)
    out = Path(_out(ctx, out) or "scene_out")
    out.mkdir(parents=True, exist_ok=True)
    graphs, matrices = [], []
    for frame, frame_preds in group_frames(preds):
        graph = build_scene_graph(frame_preds, idx, embedder, frame, lexicon=lex, terrain_tags=terrain_tags)
        tm = generate_terrain(rows, cols, cfg.seed + frame, cfg.terrain_params)
        graphs.append(graph)
        matrices.append(place_objects(graph, tm))
    merged = merge_graphs(graphs)
    dump_json(merged.to_dict(), out / "graph.json")
    assets = _scene_assets(Path(index_dir), idx, matrices, tile_size) if not no_render else None
    summary = []
    for m in matrices:
        fdir = out / f"frame_{m.frame}"
        fdir.mkdir(exist_ok=True)
        (fdir / "scene.json").write_text(m.to_json(), encoding="utf-8")
        (fdir / "terrain.csv").write_text("\n".join(",".join(map(str, r)) for r in m.terrain.tolist()) + "\n",
                                          encoding="utf-8")
        if assets is not None:
            save_png(render_scene(m, assets, tile_size), fdir / "scene.png")
        summary.append({"frame": m.frame, "objects": len(m.objects),
                        "dropped_relations": sum(not r["retained"] for r in m.relations)})
    click.echo(json.dumps({"out": str(out), "frames": summary, "precedes": len(merged.precedes)}))


@cli.command()
@click.argument("image", type=click.Path())
@click.option("--records", type=click.Path(exists=True, dir_okay=False), help="Also build the semantic index.")
@click.option("--embeddings", type=click.Path(exists=True, dir_okay=False))
@click.option("--overrides", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False))
@click.pass_context
def pipeline(ctx, image, records, embeddings, overrides, out):
    """Run split -> segment -> classify -> connectivity (-> index) and write a manifest."""
    out = Path(_out(ctx, out) or "artifacts")
    run_pipeline(_cfg(ctx), image, out, records, embeddings, overrides)
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    click.echo(json.dumps({"out": str(out), "artifacts": [a["path"] for a in manifest["artifacts"]]}))


@cli.command()
@click.argument("dest", type=click.Path(dir_okay=False), default="fixture_tileset.png")
def fixture(dest):
    """Write the bundled synthetic 4x4 tileset (32px tiles) to DEST."""
    Path(dest).parent.mkdir(parents=True, exist_ok=True)
    Path(dest).write_bytes(fixture_path().read_bytes())
    click.echo(dest)


@cli.command()
@click.argument("path", type=click.Path())
def validate(path):
    """Schema-check artifacts and their cross references; non-zero exit on violations."""
    violations = validate_annotations(path)
    _emit({"violations": violations, "ok": not violations})
    if violations:
        sys.exit(1)


def _report(exc, code):
    click.echo(f"error: {exc}", err=True)
    return code


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="tilescape", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.Abort:
        return 1
    except PipelineError as exc:
        payload = json.dumps({"stage": exc.stage, "error": str(exc.cause)})
        click.echo(payload, err=True)
        return 2 if exc.stage == "load" or isinstance(exc.cause, OSError) else 1
    except DOMAIN_ERRORS as exc:
        return _report(exc, 1)
    except RenderError as exc:
        return _report(exc, 1)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        return _report(exc, 2)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    return 0


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
