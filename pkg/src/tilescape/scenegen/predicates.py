"""Predicate lines (``subject relation object``) and the relation alias lexicon."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

from ..semantics import NormalizationError, normalize_label, tokenize

SPATIAL_RELATIONS = ("above", "below", "left_of", "right_of", "on_top_of", "contains", "near")
_FRAME_HEADER = re.compile(r"^#\s*frame\s+(\d+)\s*$", re.IGNORECASE)
_ARTICLES = {"a", "an", "the"}


class ParseError(ValueError):
    pass


class UnknownRelationError(KeyError):
    def __init__(self, raw):
        super().__init__(raw)
        self.raw = raw

    def __str__(self):
        return f"unknown relation {self.raw!r}; extend the relation lexicon"


@dataclass(frozen=True)
class Predicate:
    subject: str
    relation: str
    object: str
    frame: int = 0

    def to_dict(self) -> dict:
        return {"subject": self.subject, "relation": self.relation, "object": self.object, "frame": self.frame}


def load_relation_lexicon(path=None) -> dict[str, str]:
    if path is None:
        text = resources.files("tilescape").joinpath("data/relations.json").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    lexicon = {" ".join(tokenize(k.replace("_", " "))): v for k, v in json.loads(text).items()}
    bad = {v for v in lexicon.values() if v not in SPATIAL_RELATIONS}
    if bad:
        raise ValueError(f"lexicon maps to unknown spatial relations {sorted(bad)}")
    return lexicon


def canonicalize_relation(raw: str, lexicon=None) -> str:
    lexicon = load_relation_lexicon() if lexicon is None else lexicon
    key = " ".join(tokenize(raw.replace("_", " ")))
    if key not in lexicon:
        raise UnknownRelationError(raw)
    return lexicon[key]


def entity_name(phrase: str) -> str:
    words = tokenize(phrase)
    # a lone "A" is a name, not an article
    while len(words) > 1 and words[0] in _ARTICLES:
        words = words[1:]
    return normalize_label(" ".join(words))


def _split_line(line: str, lexicon, lineno: int):
    words = line.split()
    folded = [" ".join(tokenize(w)) for w in words]
    best = None
    for i in range(len(words)):
        for j in range(i + 1, len(words) + 1):
            key = " ".join(x for x in folded[i:j] if x)
            if key in lexicon and (best is None or len(key) > len(best[2])):
                best = (i, j, key)
    if best is None:
        raise ParseError(f"line {lineno}: no known relation in {line!r}")
    i, j, key = best
    try:
        subject = entity_name(" ".join(words[:i]))
        obj = entity_name(" ".join(words[j:]))
    except NormalizationError:
        raise ParseError(f"line {lineno}: empty subject or object in {line!r}") from None
    return subject, key, obj


def parse_predicates(lines, lexicon=None) -> list[Predicate]:
    """Parse predicate text; ``# frame N`` headers switch frames (default frame 0)."""
    if isinstance(lines, str):
        lines = lines.splitlines()
    lexicon = load_relation_lexicon() if lexicon is None else lexicon
    frame = 0
    out = []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        header = _FRAME_HEADER.match(line)
        if header:
            frame = int(header.group(1))
            continue
        if line.startswith("#"):
            continue
        subject, rel, obj = _split_line(line, lexicon, lineno)
        out.append(Predicate(subject, rel, obj, frame))
    return out


def predicates_from_json(data, lexicon=None) -> list[Predicate]:
    lexicon = load_relation_lexicon() if lexicon is None else lexicon
    out = []
    for n, row in enumerate(data, 1):
        try:
            subject, obj = entity_name(row["subject"]), entity_name(row["object"])
        except NormalizationError:
            raise ParseError(f"entry {n}: empty subject or object") from None
        rel = " ".join(tokenize(row["relation"].replace("_", " ")))
        if rel not in lexicon:
            raise ParseError(f"entry {n}: unknown relation {row['relation']!r}")
        out.append(Predicate(subject, rel, obj, int(row.get("frame", 0))))
    return out


def group_frames(predicates) -> list[tuple[int, list[Predicate]]]:
    frames: dict[int, list[Predicate]] = {}
    for p in predicates:
        frames.setdefault(p.frame, []).append(p)
    return sorted(frames.items())
