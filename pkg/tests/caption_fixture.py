"""Ten caption/record pairs whose match counts were enumerated by hand."""
from tilescape.semantics import SemanticRecord

SYNONYMS = {
    "barrel": ["cask", "keg"],
    "tree": ["oak", "pine"],
    "coin": ["gold piece"],
    "terrain": ["ground", "floor"],
    "characters": ["hero", "villager"],
    "vegetation": ["plant", "shrub"],
}

# caption, group, supercategory, affordances
ROWS = [
    ("a wooden barrel on grass", "barrel", "container", {"Interactive Object"}),
    ("an old cask", "barrel", "container", {"Interactive Object"}),
    ("a tall oak tree", "tree", "vegetation", {"Environmental Object"}),
    ("a green shrub", "bush", "vegetation", {"Environmental Object"}),
    ("a shiny gold piece", "coin", "currency", {"Items and Collectibles"}),
    ("a hero standing on the floor", "knight", "characters", {"Characters"}),
    ("stone floor tiles", "floor tile", "terrain", {"Terrain"}),
    ("items and collectibles", "gem", "treasure", {"Items and Collectibles"}),
    ("a pine in the snow", "tree", "vegetation", {"Environmental Object"}),
    ("an empty scene", "rock", "obstacle", {"Environmental Object"}),
]

# per row: (direct group, direct super, direct affordance, syn group, syn super, syn affordance)
HAND = [
    (1, 0, 0, 1, 0, 0),
    (0, 0, 0, 1, 0, 0),
    (1, 0, 0, 1, 0, 0),
    (0, 0, 0, 0, 1, 0),
    (0, 0, 0, 1, 0, 0),
    (0, 0, 0, 0, 1, 1),
    (1, 0, 0, 1, 1, 1),
    (0, 0, 1, 0, 0, 1),
    (0, 0, 0, 1, 0, 0),
    (0, 0, 0, 0, 0, 0),
]
EXPECTED_COUNTS = {
    "direct": {"group": 3, "supercategory": 0, "affordance": 1},
    "synonym": {"group": 6, "supercategory": 3, "affordance": 3},
}


def records():
    return [(cap, SemanticRecord(f"tiles/{i:02d}.png", cap, g, s, frozenset(a)))
            for i, (cap, g, s, a) in enumerate(ROWS)]
