import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import caption_fixture
from tilescape.semantics import (LABEL_TYPES, FileEmbedder, HashingEmbedder, NormalizationError, SemanticIndex,
                                 SemanticRecord, aggregate_matches, cosine_similarity, expand_synonyms, match_caption,
                                 normalize_label, query_index)

PLURALS = [
    ("berries", "berry"), ("trees", "tree"), ("boxes", "box"), ("bushes", "bush"), ("torches", "torch"),
    ("keys", "key"), ("potatoes", "potato"), ("leaves", "leaf"), ("wolves", "wolf"), ("knives", "knife"),
    ("mice", "mouse"), ("coins", "coin"), ("glasses", "glass"), ("ponies", "pony"), ("cherries", "cherry"),
    ("foxes", "fox"), ("benches", "bench"), ("chests", "chest"), ("crosses", "cross"), ("heroes", "hero"),
]


def rec(ref, group="thing", sup="misc", aff=("Interactive Object",)):
    return SemanticRecord(ref, group, group, sup, frozenset(aff))


class TestNormalize:
    @pytest.mark.parametrize("raw, want", [("Trees", "tree"), ("  Tree_Stump ", "tree stump"), ("berries", "berry"),
                                           ("Stone   Walls!", "stone wall"), ("Café", "cafe")])
    def test_examples(self, raw, want):
        assert normalize_label(raw) == want

    @pytest.mark.parametrize("plural, singular", PLURALS)
    def test_plural_table(self, plural, singular):
        assert normalize_label(plural) == singular
        assert normalize_label(singular) == singular

    @pytest.mark.parametrize("word", ["moss", "cactus", "grass", "gas", "oasis"])
    def test_non_plurals_kept(self, word):
        assert normalize_label(word) == word

    @pytest.mark.parametrize("raw", ["", "   ", "!!_-"])
    def test_empty_rejected(self, raw):
        with pytest.raises(NormalizationError):
            normalize_label(raw)

    @given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz _-ABC", min_size=1, max_size=20))
    def test_output_is_canonical_text(self, raw):
        try:
            once = normalize_label(raw)
        except NormalizationError:
            return
        assert once == " ".join(once.split()) and once == once.lower()
        assert all(ch.isalnum() or ch == " " for ch in once)


class TestRecord:
    def test_group_label_normalized(self):
        assert rec("a", "Oak Trees").group_label == "oak tree"

    @pytest.mark.parametrize("aff", [(), ("Weapons",)])
    def test_bad_affordances(self, aff):
        with pytest.raises(ValueError):
            SemanticRecord("a", "x", "x", "y", frozenset(aff))

    def test_round_trip(self):
        r = SemanticRecord("t.png", "Old Barrel", "barrels", "container",
                           frozenset({"Interactive Object", "Items and Collectibles"}), "author")
        assert SemanticRecord.from_dict(json.loads(json.dumps(r.to_dict()))) == r


class TestCosine:
    def test_values(self):
        assert cosine_similarity([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
        assert cosine_similarity([1, 0], [0, 1]) == 0.0
        assert cosine_similarity([1, 2, 2], [2, 2, 1]) == pytest.approx(8 / 9, abs=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError):
            cosine_similarity([0, 0], [1, 0])
        with pytest.raises(ValueError):
            cosine_similarity([1, 0], [1, 0, 0])

    @given(st.lists(st.floats(-10, 10), min_size=3, max_size=3), st.lists(st.floats(-10, 10), min_size=3, max_size=3),
           st.floats(0.01, 100))
    def test_symmetric_scale_invariant(self, a, b, lam):
        if np.linalg.norm(a) < 1e-3 or np.linalg.norm(b) < 1e-3:
            return
        c = cosine_similarity(a, b)
        assert c == pytest.approx(cosine_similarity(b, a), abs=1e-12)
        assert c == pytest.approx(cosine_similarity(a, np.array(b) * lam), abs=1e-12)
        assert -1 - 1e-12 <= c <= 1 + 1e-12


def brute_force(entries, q, k, wanted=None):
    scored = []
    for r, v in entries:
        if wanted is not None and not (r.affordances & wanted):
            continue
        s = sum(x * y for x, y in zip(v, q)) / (math.sqrt(sum(x * x for x in v)) * math.sqrt(sum(x * x for x in q)))
        scored.append((-s, r.tile_ref, r))
    scored.sort(key=lambda t: (t[0], t[1]))
    return [(r.tile_ref, -s) for s, _, r in scored[:k]]


class TestIndex:
    def test_exact_hit(self):
        entries = [(rec("a"), [1, 0, 0]), (rec("b"), [0, 1, 0]), (rec("c"), [1, 1, 0])]
        idx = SemanticIndex([e[0] for e in entries], [e[1] for e in entries])
        ((r, s),) = query_index(idx, [0, 1, 0], k=1)
        assert r.tile_ref == "b" and s == pytest.approx(1.0)

    def test_three_entry_ranking(self):
        entries = [(rec("a"), [1, 0, 0]), (rec("b"), [0.6, 0.8, 0]), (rec("c"), [0, 0, 1])]
        idx = SemanticIndex([e[0] for e in entries], [e[1] for e in entries])
        got = [(r.tile_ref, s) for r, s in query_index(idx, [1, 1, 0], k=3)]
        want = brute_force(entries, [1, 1, 0], 3)
        assert [g[0] for g in got] == [w[0] for w in want] == ["b", "a", "c"]
        assert [g[1] for g in got] == pytest.approx([w[1] for w in want], abs=1e-12)

    def test_filter_excludes_regardless_of_score(self):
        entries = [(rec("a", aff=("Terrain",)), [1, 0]), (rec("b", aff=("Characters", "Terrain")), [0, 1]),
                   (rec("c", aff=("Environmental Object",)), [1, 0.1])]
        idx = SemanticIndex([e[0] for e in entries], [e[1] for e in entries])
        hits = query_index(idx, [1, 0], k=10, affordance_filter={"Characters"})
        assert [r.tile_ref for r, _ in hits] == ["b"]

    def test_ties_by_tile_ref(self):
        refs = ["z", "m", "a"]
        idx = SemanticIndex([rec(x) for x in refs], [[1, 0]] * 3)
        assert [r.tile_ref for r, _ in query_index(idx, [2, 0], k=3)] == ["a", "m", "z"]

    def test_empty_index_and_bad_k(self):
        assert query_index(SemanticIndex([], np.zeros((0, 3))), [1, 0, 0]) == []
        with pytest.raises(ValueError):
            query_index(SemanticIndex([rec("a")], [[1.0]]), [1.0], k=0)

    def test_duplicates_and_zero_vectors_rejected(self):
        with pytest.raises(ValueError):
            SemanticIndex([rec("a"), rec("a")], [[1, 0], [0, 1]])
        with pytest.raises(ValueError):
            SemanticIndex([rec("a")], [[0, 0]])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 12))
    def test_matches_brute_force(self, seed, k):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 10))
        affs = ["Terrain", "Characters", "Interactive Object"]
        # coarse integer vectors so exact score ties actually happen
        entries = [(rec(f"t{int(rng.integers(0, 1000)):04d}_{i}", aff=(affs[int(rng.integers(0, 3))],)),
                    list(rng.integers(1, 3, size=3).astype(float))) for i in range(n)]
        idx = SemanticIndex([e[0] for e in entries], [e[1] for e in entries])
        q = list(rng.integers(-2, 3, size=3).astype(float))
        if not any(q):
            q[0] = 1.0
        wanted = None if seed % 2 else {"Terrain"}
        got = query_index(idx, q, k=k, affordance_filter=wanted)
        scores = [s for _, s in got]
        assert all(s1 >= s2 - 1e-12 for s1, s2 in zip(scores, scores[1:]))
        want = brute_force(entries, q, k, wanted)
        assert len(got) == len(want)
        assert scores == pytest.approx([w[1] for w in want], abs=1e-9)
        # equal-score runs must follow tile_ref order
        for (r1, s1), (r2, s2) in zip(got, got[1:]):
            if abs(s1 - s2) < 1e-12:
                assert r1.tile_ref < r2.tile_ref

    def test_save_load(self, tmp_path):
        recs = [rec("b.png", "barrel"), rec("a.png", "coin", aff=("Items and Collectibles",))]
        idx = SemanticIndex.build(recs, HashingEmbedder())
        idx.save(tmp_path)
        back = SemanticIndex.load(tmp_path)
        assert back.records == idx.records
        assert np.array_equal(back.vectors, idx.vectors)

    def test_build_by_tile_ref(self, tmp_path):
        emb = FileEmbedder({"x.png": [1, 0], "y.png": [0, 2]})
        idx = SemanticIndex.build([rec("x.png"), rec("y.png")], emb, key="tile_ref")
        assert idx.dimension == 2
        with pytest.raises(ValueError):
            SemanticIndex.build([rec("missing.png")], emb, key="tile_ref")


class TestEmbedders:
    def test_file_embedder(self, tmp_path):
        p = tmp_path / "e.jsonl"
        p.write_text('{"key": "Barrels", "vector": [1, 2]}\n{"key": "x", "vector": [0, 1]}\n')
        emb = FileEmbedder.from_jsonl(p)
        assert list(emb.embed("barrel")) == [1, 2]
        assert emb.embed("nothing") is None

    def test_mixed_dims(self):
        with pytest.raises(ValueError):
            FileEmbedder({"a": [1, 2], "b": [1, 2, 3]})

    def test_hashing_deterministic(self):
        a, b = HashingEmbedder(32), HashingEmbedder(32)
        assert np.array_equal(a.embed("wooden barrel"), b.embed("wooden barrel"))
        assert a.embed("wooden barrel").shape == (32,)
        assert a.embed("!!!") is None


class TestMatchCaption:
    def test_direct(self):
        res = match_caption("a wooden barrel on grass", rec("r", "barrel"))
        assert res["direct"]["group"] is True

    def test_whole_word_only(self):
        assert match_caption("a catapult", rec("r", "cat"))["direct"]["group"] is False

    def test_synonym_not_direct(self):
        res = match_caption("a cask", rec("r", "barrel"), synonyms={"barrel": ["cask", "keg"]})
        assert res["direct"]["group"] is False
        assert res["synonym"]["group"] is True

    def test_stopwords_do_not_match(self):
        res = match_caption("a bag and a hat", rec("r", "gem", aff=("Items and Collectibles",)))
        assert res["direct"]["affordance"] is False

    @pytest.mark.parametrize("cos, want", [(0.31, True), (0.29, False), (0.3, True)])
    def test_semantic_threshold(self, cos, want):
        emb = FileEmbedder({"the caption": [1.0, 0.0], "barrel": [cos, math.sqrt(1 - cos * cos)],
                            "container": [-1.0, 0.0], "Interactive Object": [0.0, 1.0]})
        res = match_caption("the caption", rec("r", "barrel", "container"), embedder=emb)
        assert res["semantic"]["group"] is want
        assert res["semantic"]["supercategory"] is False

    def test_missing_embedding_unavailable(self):
        emb = FileEmbedder({"some caption": [1.0, 0.0], "barrel": [1.0, 0.0]})
        res = match_caption("some caption", rec("r", "barrel"), embedder=emb)
        assert res["semantic"]["group"] is True
        assert res["semantic"]["supercategory"] is None
        assert res["direct"]["supercategory"] is False
        res = match_caption("unknown text", rec("r", "barrel"), embedder=emb)
        assert all(res["semantic"][lt] is None for lt in LABEL_TYPES)

    def test_expand_synonyms(self):
        assert expand_synonyms("Oak Tree", {"tree": ["pine"]}) == {"oak tree", "oak", "tree", "pine"}

    VOCAB = ["barrel", "cask", "tree", "oak", "coin", "gold", "piece", "floor", "stone", "hero", "and", "the",
             "items", "collectibles", "terrain", "object", "wall", "door"]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.sampled_from(VOCAB), min_size=1, max_size=6),
           st.lists(st.sampled_from(VOCAB), min_size=1, max_size=3),
           st.lists(st.sampled_from(VOCAB), min_size=1, max_size=2),
           st.sets(st.sampled_from(["Terrain", "Characters", "Items and Collectibles"]), min_size=1),
           st.dictionaries(st.sampled_from(VOCAB), st.lists(st.sampled_from(VOCAB), max_size=3), max_size=5))
    def test_direct_implies_synonym(self, caption, group, sup, aff, syn):
        r = SemanticRecord("r", "x", " ".join(group), " ".join(sup), frozenset(aff))
        res = match_caption(" ".join(caption), r, synonyms=syn)
        for lt in LABEL_TYPES:
            assert not res["direct"][lt] or res["synonym"][lt]


class TestAggregate:
    def test_empty(self):
        t = aggregate_matches([])
        assert t.total == 0
        assert all(v == 0 for lv in t.counts.values() for v in lv.values())
        assert t.percent("direct", "group") == 0.0

    def test_two_records(self):
        results = [match_caption("a barrel", rec("a", "barrel")), match_caption("a tree", rec("b", "rock"))]
        t = aggregate_matches(results)
        assert t.counts["direct"]["group"] == 1
        assert t.percent("direct", "group") == 50.0

    def test_ten_record_fixture(self):
        results = [match_caption(cap, r, synonyms=caption_fixture.SYNONYMS) for cap, r in caption_fixture.records()]
        cols = [("direct", "group"), ("direct", "supercategory"), ("direct", "affordance"),
                ("synonym", "group"), ("synonym", "supercategory"), ("synonym", "affordance")]
        for res, row in zip(results, caption_fixture.HAND):
            assert tuple(int(res[lv][lt]) for lv, lt in cols) == row
        t = aggregate_matches(results)
        for lv, want in caption_fixture.EXPECTED_COUNTS.items():
            assert t.counts[lv] == want
        assert t.unavailable["semantic"] == {lt: 10 for lt in LABEL_TYPES}
        assert t.to_dict()["percent"]["synonym"]["group"] == 60.0
