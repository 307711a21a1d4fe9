"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line (visible without ``-s``)
with the measured quantities, then asserts. Run on its own with
``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

import caption_fixture
from conftest import random_blob_tileset, random_rgba_tileset
from oracles import flood_fill_components, scalar_ssim, walkable_components
from story_fixture import STORY, TEASER, story_index
from tilescape.affordance import TrainConfig, bce_loss, encode_targets, forward, init_model, loss_and_grads, train
from tilescape.config import PipelineConfig
from tilescape.connectivity import DIRECTIONS, ConnectivitySet, Direction8, evaluate_connectivity, infer_connectivity
from tilescape.fixtures import fixture_path
from tilescape.pipeline import run_pipeline
from tilescape.scenegen import (GenerationError, build_scene_graph, check_relations, generate_terrain,
                                parse_predicates, place_objects)
from tilescape.scenegen.predicates import group_frames
from tilescape.segmentation import grow_segments
from tilescape.semantics import LABEL_TYPES, FileEmbedder, SemanticRecord, aggregate_matches, match_caption
from tilescape.similarity import DEFAULT_PARAMS, ssim

C1, C2 = DEFAULT_PARAMS.c1, DEFAULT_PARAMS.c2


@pytest.fixture
def report(capsys):
    def emit(number, name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number} {name}: {detail}")
        return ok
    return emit


def test_criterion_1_ssim(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst_sym, worst_bound, not_one = 0.0, 0.0, 0
    for _ in range(1000):
        a = rng.integers(0, 256, size=(4, 32)).astype(np.float64)
        b = rng.integers(0, 256, size=(4, 32)).astype(np.float64)
        not_one += ssim(a, a) != 1.0
        s_ab, s_ba = ssim(a, b), ssim(b, a)
        worst_sym = max(worst_sym, abs(s_ab - s_ba))
        worst_bound = max(worst_bound, abs(s_ab))
    zeros, full = np.zeros((4, 32)), np.full((4, 32), 255.0)
    hand = 6.5025 / 65031.5025
    const_err = max(abs(ssim(zeros, full) - hand), abs(ssim(zeros, full) - scalar_ssim(zeros, full, C1, C2)))
    strip = (np.arange(128).reshape(4, 32) * 37 % 256).astype(np.float64)
    inverted = 255.0 - strip
    inv = ssim(strip, inverted)
    inv_err = abs(inv - scalar_ssim(strip, inverted, C1, C2))
    elapsed = time.perf_counter() - t0
    ok = (not_one == 0 and worst_sym <= 1e-12 and worst_bound <= 1 + 1e-12 and const_err <= 1e-9
          and inv_err <= 1e-9 and inv < 0 and elapsed < 5)
    assert report(1, "SSIM suite", ok,
                  f"self!=1: {not_one}/1000, max asym {worst_sym:.1e}, max |s| {worst_bound:.4f}, "
                  f"constant case {ssim(zeros, full):.6e} (err {const_err:.1e}), inverted {inv:.4f} "
                  f"(err {inv_err:.1e}), {elapsed:.2f}s")


def test_criterion_2_segmentation_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    mismatches = unstable = 0
    for _ in range(200):
        ts, mask = random_blob_tileset(rng, max_side=16, tile_size=8)
        runs = [[s.to_dict() for s in grow_segments(ts)] for _ in range(3)]
        unstable += not (runs[0] == runs[1] == runs[2])
        got = {frozenset(tuple(m) for m in seg["members"]) for seg in runs[0]}
        mismatches += got != flood_fill_components(mask)
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and unstable == 0 and elapsed < 30
    assert report(2, "segmentation oracle", ok,
                  f"{200 - mismatches}/200 equal to flood fill, {unstable} nondeterministic, {elapsed:.2f}s")


def test_criterion_3_connectivity(report):
    rng = np.random.default_rng(3)
    violations = 0
    for seed in range(100):
        ts = random_rgba_tileset(seed)
        t1 = float(rng.uniform(-0.5, 0.9))
        t2 = t1 + float(rng.uniform(0.01, 0.5))
        low, high = infer_connectivity(ts, ssim_threshold=t1), infer_connectivity(ts, ssim_threshold=t2)
        violations += sum(not h.connected <= l.connected for l, h in zip(low, high))
    x = [ConnectivitySet((0, 0), {Direction8.TOP_LEFT, Direction8.RIGHT_DOWN}), ConnectivitySet((0, 1), set(DIRECTIONS))]
    ident = evaluate_connectivity(x, x)
    ident_ok = (ident.precision, ident.recall, ident.f1, ident.exact_match_rate) == (1.0, 1.0, 1.0, 1.0)
    half = evaluate_connectivity([ConnectivitySet((0, 0), {Direction8.RIGHT_UP, Direction8.BOTTOM_LEFT})],
                                 [ConnectivitySet((0, 0), {Direction8.TOP_LEFT, Direction8.RIGHT_UP})])
    half_ok = (half.precision, half.recall, half.f1) == (0.5, 0.5, 0.5)
    ok = violations == 0 and ident_ok and half_ok
    assert report(3, "connectivity properties", ok,
                  f"monotonicity violations {violations} over 100 tilesets, identity all-ones {ident_ok}, "
                  f"P/R/F1 fixture {half.precision}/{half.recall}/{half.f1}")


def _max_grad_rel_error():
    rng = np.random.default_rng(4)
    m = init_model(4, 8, seed=4)
    m.b1 += rng.normal(0, 0.1, 8)
    x = rng.normal(size=(5, 4))
    t = (rng.random((5, 5)) < 0.5).astype(float)
    _, grads = loss_and_grads(m, x, t)
    worst = 0.0
    for name, param in m.params().items():
        num = np.zeros_like(param)
        for idx in np.ndindex(param.shape):
            orig = param[idx]
            param[idx] = orig + 1e-4
            up = bce_loss(forward(m, x), t)
            param[idx] = orig - 1e-4
            down = bce_loss(forward(m, x), t)
            param[idx] = orig
            num[idx] = (up - down) / 2e-4
        denom = max(np.linalg.norm(num) + np.linalg.norm(grads[name]), 1e-12)
        worst = max(worst, float(np.linalg.norm(num - grads[name]) / denom))
    return worst


def test_criterion_4_affordance(report):
    t0 = time.perf_counter()
    worst = _max_grad_rel_error()
    ln2_err = abs(bce_loss(np.full(5, 0.5), [1, 0, 0, 1, 0]) - math.log(2))
    hand_err = abs(bce_loss([0.9, 0.1, 0.5, 0.5, 0.5], [1, 0, 0, 0, 0]) - (-2 * math.log(0.9) - 3 * math.log(0.5)) / 5)
    rng = np.random.default_rng(3)
    x = np.vstack([rng.normal(0, 0.3, (10, 4)) + [1.5, 1.5, 0, 0], rng.normal(0, 0.3, (10, 4)) + [-1.5, -1.5, 0, 0]])
    t = encode_targets([{"Characters"}] * 10 + [{"Terrain"}] * 10)
    cfg = TrainConfig(lr=0.5, epochs=200, batch=5, seed=7, val_fraction=0.0, hidden_size=16, momentum=0.9)
    _, hist = train(x, t, cfg)
    reached = next((i + 1 for i, v in enumerate(hist.train_loss) if v < 0.05), None)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and ln2_err <= 1e-6 and hand_err <= 1e-6 and reached is not None and elapsed < 10
    assert report(4, "affordance gradients and training", ok,
                  f"max grad rel err {worst:.2e}, ln2 err {ln2_err:.1e}, hand-case err {hand_err:.1e}, "
                  f"loss<0.05 at epoch {reached}, {elapsed:.2f}s")


def test_criterion_5_terrain(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    bad = errors = 0
    for seed in range(500):
        rows, cols = (int(v) for v in rng.integers(24, 65, size=2))
        try:
            tm = generate_terrain(rows, cols, seed)
        except GenerationError:
            errors += 1
            continue
        bad += len(walkable_components(tm.grid.tolist())) != 1 or tm.walkable_fraction < 0.25
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 20
    assert report(5, "terrain guarantee", ok,
                  f"{500 - bad - errors}/500 single-component maps, {errors} generation errors, {bad} violations, "
                  f"{elapsed:.2f}s")


def test_criterion_6_placement(report):
    idx, emb = story_index()
    frames = [("teaser", 0, parse_predicates(TEASER))]
    frames += [(f"story frame {f}", f, ps) for f, ps in group_frames(parse_predicates(STORY))]
    failures, checked, dropped = [], 0, 0
    for label, f, preds in frames:
        outputs = []
        for _ in range(2):
            g = build_scene_graph(preds, idx, emb, frame=f)
            m = place_objects(g, generate_terrain(24, 24, 42 + f))
            outputs.append(m.to_json())
            results = check_relations(m)
        checked += len(results)
        dropped += sum(not r["retained"] for r in m.relations)
        failures += [f"{label}: {r}" for r in results if not r["ok"]]
        if outputs[0] != outputs[1]:
            failures.append(f"{label}: nondeterministic")
    ok = not failures
    assert report(6, "placement oracle", ok,
                  f"{checked} retained relations checked over 4 frame sets, {dropped} dropped, "
                  f"failures {failures or 'none'}")


def test_criterion_7_caption_matcher(report):
    rng = np.random.default_rng(7)
    vocab = ["barrel", "cask", "keg", "tree", "oak", "pine", "gold", "coin", "piece", "floor", "ground", "stone",
             "hero", "items", "and", "collectibles", "object", "terrain", "a", "the", "wall", "door", "plant"]
    affs = ["Terrain", "Characters", "Items and Collectibles", "Interactive Object", "Environmental Object"]
    violations = 0
    for i in range(1000):
        pick = lambda n: " ".join(rng.choice(vocab, size=int(rng.integers(1, n + 1))))
        syn = {str(rng.choice(vocab)): list(rng.choice(vocab, size=2)) for _ in range(int(rng.integers(0, 5)))}
        rec = SemanticRecord(f"r{i}", "x", pick(3), pick(2),
                             frozenset(rng.choice(affs, size=int(rng.integers(1, 3)), replace=False)))
        res = match_caption(pick(8), rec, synonyms=syn)
        violations += sum(bool(res["direct"][lt]) and not res["synonym"][lt] for lt in LABEL_TYPES)

    def semantic(cos):
        emb = FileEmbedder({"caption": [1.0, 0.0], "barrel": [cos, math.sqrt(1 - cos * cos)]})
        rec = SemanticRecord("r", "barrel", "barrel", "container", frozenset({"Interactive Object"}))
        return match_caption("caption", rec, embedder=emb)["semantic"]["group"]

    flips = (semantic(0.31), semantic(0.29))
    table = aggregate_matches(match_caption(c, r, synonyms=caption_fixture.SYNONYMS)
                              for c, r in caption_fixture.records())
    counts_ok = all(table.counts[lv] == want for lv, want in caption_fixture.EXPECTED_COUNTS.items())
    ok = violations == 0 and flips == (True, False) and counts_ok
    assert report(7, "caption matcher", ok,
                  f"direct=>synonym violations {violations}/1000 pairs, cos 0.31/0.29 -> {flips[0]}/{flips[1]}, "
                  f"10-record counts match hand enumeration {counts_ok}")


def _artifact_bytes(directory: Path):
    out = {}
    for p in sorted(directory.rglob("*")):
        if p.is_file():
            data = p.read_bytes()
            if p.name == "manifest.json":
                manifest = json.loads(data)
                manifest.pop("created")
                data = json.dumps(manifest, sort_keys=True).encode()
            out[str(p.relative_to(directory))] = data
    return out


def test_criterion_8_reproducibility(report, tmp_path):
    t0 = time.perf_counter()
    cfg = PipelineConfig()
    src = tmp_path / "fixture.png"
    src.write_bytes(fixture_path().read_bytes())
    run_pipeline(cfg, src, tmp_path / "run1")
    run_pipeline(cfg, src, tmp_path / "run2")
    a, b = _artifact_bytes(tmp_path / "run1"), _artifact_bytes(tmp_path / "run2")
    differing = sorted(k for k in a.keys() | b.keys() if a.get(k) != b.get(k))
    elapsed = time.perf_counter() - t0
    ok = not differing and len(a) == 6 and elapsed < 60
    assert report(8, "end-to-end reproducibility", ok,
                  f"{len(a)} files per run, differing {differing or 'none'}, {elapsed:.2f}s for two runs")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
