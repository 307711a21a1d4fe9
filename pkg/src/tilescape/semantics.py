"""Label schema, label normalisation, embedding providers, the semantic index and caption matching."""
from __future__ import annotations

import json
import re
import unicodedata
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

AFFORDANCES = ("Characters", "Environmental Object", "Interactive Object", "Items and Collectibles", "Terrain")
PROVENANCE = ("author", "annotator", "model")
LEVELS = ("direct", "synonym", "semantic")
LABEL_TYPES = ("group", "supercategory", "affordance")
DEFAULT_SIM_THRESHOLD = 0.3
TIE_DECIMALS = 12


class NormalizationError(ValueError):
    pass


_IRREGULAR = {
    "leaves": "leaf", "wolves": "wolf", "knives": "knife", "lives": "life", "elves": "elf",
    "dwarves": "dwarf", "thieves": "thief", "shelves": "shelf", "loaves": "loaf", "halves": "half",
    "mice": "mouse", "geese": "goose", "feet": "foot", "teeth": "tooth", "men": "man", "women": "woman",
    "children": "child", "people": "person", "oxen": "ox", "dice": "die",
    "potatoes": "potato", "tomatoes": "tomato", "heroes": "hero", "volcanoes": "volcano", "torpedoes": "torpedo",
}
_KEEP_SUFFIXES = ("ss", "us", "is", "ous")
_ES_AFTER = ("s", "x", "z", "ch", "sh")


def singularize(word: str) -> str:
    if word in _IRREGULAR:
        return _IRREGULAR[word]
    if len(word) <= 3 or not word.endswith("s") or word.endswith(_KEEP_SUFFIXES):
        return word
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("es") and word[:-2].endswith(_ES_AFTER):
        return word[:-2]
    return word[:-1]


def normalize_label(raw: str) -> str:
    """Lowercase, ASCII-fold, drop punctuation/separators and singularize the head noun."""
    text = unicodedata.normalize("NFKD", str(raw)).encode("ascii", "ignore").decode("ascii").lower()
    words = re.sub(r"[^a-z0-9]+", " ", text).split()
    if not words:
        raise NormalizationError(f"label {raw!r} is empty after normalization")
    words[-1] = singularize(words[-1])
    return " ".join(words)


def tokenize(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", str(text).lower())


# function words inside multi-word labels ("Items and Collectibles") never count as matches
STOPWORDS = frozenset({"a", "an", "and", "of", "the", "or", "in", "on", "with"})


def label_tokens(term: str) -> list[str]:
    return [t for t in tokenize(term) if t not in STOPWORDS]


@dataclass
class SemanticRecord:
    tile_ref: str
    detailed_name: str
    group_label: str
    supercategory: str
    affordances: frozenset
    provenance: str = "annotator"

    def __post_init__(self):
        self.group_label = normalize_label(self.group_label)
        self.affordances = frozenset(self.affordances)
        if not self.affordances:
            raise ValueError(f"{self.tile_ref}: affordances must be non-empty")
        bad = self.affordances - set(AFFORDANCES)
        if bad:
            raise ValueError(f"{self.tile_ref}: unknown affordances {sorted(bad)}")
        if self.provenance not in PROVENANCE:
            raise ValueError(f"{self.tile_ref}: provenance must be one of {PROVENANCE}")

    def text(self) -> str:
        """Text fed to embedders when indexing this record."""
        return " ".join([self.detailed_name, self.group_label, self.supercategory, *sorted(self.affordances)])

    def to_dict(self) -> dict:
        return {
            "tile_ref": self.tile_ref,
            "detailed_name": self.detailed_name,
            "group_label": self.group_label,
            "supercategory": self.supercategory,
            "affordances": [a for a in AFFORDANCES if a in self.affordances],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SemanticRecord":
        return cls(d["tile_ref"], d["detailed_name"], d["group_label"], d["supercategory"],
                   frozenset(d["affordances"]), d.get("provenance", "annotator"))


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.dot(a, b) / (na * nb))


class Embedder(Protocol):
    dimension: int

    def embed(self, text: str) -> np.ndarray | None:
        """Vector for ``text`` or None when unavailable."""


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


class FileEmbedder:
    """Precomputed vectors from JSONL lines ``{"key": ..., "vector": [...]}``.

    Lookups try the exact key, then its normalized label form.
    """

    def __init__(self, vectors: dict[str, np.ndarray]):
        self.vectors = {k: np.asarray(v, dtype=np.float64) for k, v in vectors.items()}
        dims = {v.shape for v in self.vectors.values()}
        if len(dims) > 1:
            raise ValueError(f"mixed embedding dimensions {sorted(dims)}")
        self.dimension = dims.pop()[0] if dims else 0
        self._normalized = {}
        for k, v in self.vectors.items():
            try:
                self._normalized.setdefault(normalize_label(k), v)
            except NormalizationError:
                pass

    @classmethod
    def from_jsonl(cls, path) -> "FileEmbedder":
        return cls({row["key"]: row["vector"] for row in read_jsonl(path)})

    def embed(self, text):
        if text in self.vectors:
            return self.vectors[text]
        try:
            return self._normalized.get(normalize_label(text))
        except NormalizationError:
            return None


class HashingEmbedder:
    """Deterministic character n-gram hashing into a fixed dimension.

    Captures spelling overlap only, not meaning; meant for tests and demos.
    """

    def __init__(self, dimension: int = 64, n: int = 3):
        self.dimension = dimension
        self.n = n

    def embed(self, text):
        vec = np.zeros(self.dimension)
        for word in tokenize(text):
            padded = f" {word} "
            for i in range(max(1, len(padded) - self.n + 1)):
                h = zlib.crc32(padded[i:i + self.n].encode("utf-8"))
                vec[h % self.dimension] += 1.0 if (h >> 16) & 1 else -1.0
        return vec if np.any(vec) else None


class SemanticIndex:
    """Immutable collection of records with unit-normalized embedding rows."""

    def __init__(self, records, vectors):
        records = list(records)
        refs = [r.tile_ref for r in records]
        if len(set(refs)) != len(refs):
            raise ValueError("duplicate tile_ref in index")
        matrix = np.asarray(vectors, dtype=np.float64)
        if records and (matrix.ndim != 2 or matrix.shape[0] != len(records)):
            raise ValueError("need exactly one vector per record, all of one dimension")
        if not records:
            matrix = matrix.reshape(0, matrix.shape[-1] if matrix.ndim == 2 else 0)
        norms = np.linalg.norm(matrix, axis=1)
        if np.any(norms == 0):
            raise ValueError("indexed vectors must be non-zero")
        self.records = records
        self.vectors = matrix
        self._unit = matrix / norms[:, None] if len(records) else matrix
        self._order = np.argsort(np.array(refs, dtype=object), kind="stable") if refs else np.array([], int)

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.records)

    @classmethod
    def build(cls, records, embedder, key: str = "text") -> "SemanticIndex":
        """Embed each record by its label text (``key="text"``) or look it up by tile_ref."""
        if key not in ("text", "tile_ref"):
            raise ValueError("key must be 'text' or 'tile_ref'")
        vecs = []
        for r in records:
            v = embedder.embed(r.text() if key == "text" else r.tile_ref)
            if v is None:
                raise ValueError(f"no embedding for record {r.tile_ref!r}")
            vecs.append(v)
        return cls(records, vecs)

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        (d / "records.json").write_text(
            json.dumps([r.to_dict() for r in self.records], indent=2) + "\n", encoding="utf-8")
        with open(d / "embeddings.jsonl", "w", encoding="utf-8") as fh:
            for r, v in zip(self.records, self.vectors):
                fh.write(json.dumps({"key": r.tile_ref, "vector": [float(x) for x in v]}) + "\n")

    @classmethod
    def load(cls, directory) -> "SemanticIndex":
        d = Path(directory)
        records = [SemanticRecord.from_dict(x) for x in json.loads((d / "records.json").read_text(encoding="utf-8"))]
        vectors = {row["key"]: row["vector"] for row in read_jsonl(d / "embeddings.jsonl")}
        missing = [r.tile_ref for r in records if r.tile_ref not in vectors]
        if missing:
            raise ValueError(f"embeddings missing for {missing[:5]}")
        return cls(records, [vectors[r.tile_ref] for r in records])


def query_index(index: SemanticIndex, query_vec, k: int = 5, affordance_filter=None):
    """Exhaustive top-k by cosine score; ties go to the smaller tile_ref."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(index) == 0:
        return []
    q = np.asarray(query_vec, dtype=np.float64)
    if q.shape != (index.dimension,):
        raise ValueError(f"query dimension {q.shape} != index dimension {index.dimension}")
    qn = np.linalg.norm(q)
    if qn == 0:
        raise ValueError("query vector is zero")
    scores = index._unit @ (q / qn)
    wanted = None if affordance_filter is None else set(affordance_filter)
    hits = []
    for i in index._order:
        rec = index.records[i]
        if wanted is not None and not (rec.affordances & wanted):
            continue
        hits.append((rec, float(scores[i])))
    # scores equal up to rounding noise count as ties; the stable sort keeps tile_ref order among them
    hits.sort(key=lambda h: -round(h[1], TIE_DECIMALS))
    return hits[:k]


def _contains_phrase(tokens: list[str], phrase: list[str]) -> bool:
    n = len(phrase)
    return n > 0 and any(tokens[i:i + n] == phrase for i in range(len(tokens) - n + 1))


def _label_terms(record: SemanticRecord, label_type: str) -> list[str]:
    if label_type == "group":
        return [record.group_label]
    if label_type == "supercategory":
        return [record.supercategory]
    return [a for a in AFFORDANCES if a in record.affordances]


def expand_synonyms(term: str, synonyms: dict) -> set[str]:
    """The term, each of its words, and every lexicon synonym of either, lowercased."""
    lex = {k.lower(): v for k, v in (synonyms or {}).items()}
    base = {term.lower(), *label_tokens(term)}
    out = set(base)
    for t in base:
        out.update(s.lower() for s in lex.get(t, ()))
    return out


def match_caption(caption: str, record: SemanticRecord, synonyms=None, embedder=None,
                  sim_threshold: float = DEFAULT_SIM_THRESHOLD) -> dict:
    """Match one caption against a record's labels at three levels.

    Returns ``{level: {label_type: bool | None}}``; None means the semantic
    level could not be computed because an embedding was missing.
    """
    tokens = tokenize(caption)
    token_set = set(tokens)
    result = {level: {} for level in LEVELS}
    cap_vec = embedder.embed(caption) if embedder is not None else None
    for lt in LABEL_TYPES:
        terms = _label_terms(record, lt)
        result["direct"][lt] = any(tok in token_set for term in terms for tok in label_tokens(term))
        expanded = set().union(*(expand_synonyms(t, synonyms) for t in terms)) if terms else set()
        result["synonym"][lt] = any(_contains_phrase(tokens, tokenize(e)) for e in expanded)
        if cap_vec is None:
            result["semantic"][lt] = None
            continue
        sims = []
        for term in terms:
            v = embedder.embed(term)
            if v is None or not np.any(v) or not np.any(cap_vec):
                continue
            sims.append(cosine_similarity(cap_vec, v))
        result["semantic"][lt] = max(sims) >= sim_threshold if sims else None
    return result


@dataclass
class MatchTable:
    total: int
    counts: dict = field(default_factory=dict)
    unavailable: dict = field(default_factory=dict)

    def percent(self, level: str, label_type: str) -> float:
        return 100.0 * self.counts[level][label_type] / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "counts": self.counts,
            "percent": {lv: {lt: self.percent(lv, lt) for lt in LABEL_TYPES} for lv in LEVELS},
            "unavailable": self.unavailable,
        }


def aggregate_matches(results) -> MatchTable:
    results = list(results)
    counts = {lv: {lt: 0 for lt in LABEL_TYPES} for lv in LEVELS}
    unavailable = {lv: {lt: 0 for lt in LABEL_TYPES} for lv in LEVELS}
    for res in results:
        for lv in LEVELS:
            for lt in LABEL_TYPES:
                v = res[lv][lt]
                if v is None:
                    unavailable[lv][lt] += 1
                elif v:
                    counts[lv][lt] += 1
    return MatchTable(len(results), counts, unavailable)
