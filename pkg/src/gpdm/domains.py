"""Built-in SFR, SFH, L6 and L11 domains with seeded synthetic databases.

Slot inventories follow the four venue/laptop domains (restaurants and hotels
in San Francisco, laptops with 6 or 11 user-specifiable properties).  Value
sets and value frequencies are invented; they are chosen so that the
normalised-entropy ranking of every semantic class reproduces a fixed
reference slot order (``reference_order``).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .ontology import Domain, load_domain

# requestable slots: (name, values, relative frequencies), listed in rank order
_YESNO = ("yes", "no")

_REQUESTABLE = {
    "SFR": [
        ("allowedforkids", _YESNO, (0.5, 0.5)),
        ("pricerange", ("cheap", "moderate", "expensive", "luxury"), (0.35, 0.3, 0.2, 0.15)),
        ("near", ("marina", "soma", "mission", "nobhill", "presidio"), (0.3, 0.25, 0.2, 0.15, 0.1)),
        ("goodformeal", ("breakfast", "brunch", "lunch", "dinner", "dessert", "latenight"),
         (0.3, 0.25, 0.2, 0.1, 0.1, 0.05)),
        ("food", ("american", "chinese", "thai", "italian", "indian", "mexican", "french",
                  "japanese", "korean", "seafood"),
         (0.2, 0.15, 0.12, 0.1, 0.1, 0.1, 0.08, 0.06, 0.05, 0.04)),
        ("area", ("centre", "north", "south", "east", "west", "bayview"),
         (0.7, 0.1, 0.08, 0.06, 0.04, 0.02)),
    ],
    "SFH": [
        ("dogsallowed", _YESNO, (0.5, 0.5)),
        ("pricerange", ("cheap", "moderate", "expensive", "luxury"), (0.4, 0.3, 0.2, 0.1)),
        ("near", ("marina", "soma", "mission", "nobhill", "presidio"), (0.35, 0.25, 0.2, 0.1, 0.1)),
        ("takescreditcards", _YESNO, (0.75, 0.25)),
        ("hasinternet", _YESNO, (0.85, 0.15)),
        ("area", ("centre", "north", "south", "east", "west", "bayview"),
         (0.72, 0.1, 0.08, 0.05, 0.03, 0.02)),
    ],
    "L6": [
        ("isforbusiness", _YESNO, (0.5, 0.5)),
        ("batteryratings", ("standard", "good", "exceptional"), (0.5, 0.3, 0.2)),
        ("pricerange", ("budget", "moderate", "expensive", "premium"), (0.4, 0.3, 0.2, 0.1)),
        ("driverange", ("small", "medium", "large", "huge", "massive"), (0.3, 0.25, 0.2, 0.15, 0.1)),
        ("weightrange", ("ultralight", "light", "mid", "heavy", "bulky"), (0.4, 0.25, 0.15, 0.1, 0.1)),
        ("family", ("aspire", "pavilion", "satellite", "thinkpad", "inspiron", "latitude",
                    "zenbook", "vaio"), (0.2, 0.15, 0.15, 0.13, 0.12, 0.1, 0.08, 0.07)),
    ],
    "L11": [
        ("isforbusiness", _YESNO, (0.5, 0.5)),
        ("batteryrating", ("standard", "good", "exceptional"), (0.5, 0.3, 0.2)),
        ("pricerange", ("budget", "moderate", "expensive", "premium"), (0.4, 0.3, 0.2, 0.1)),
        ("driverange", ("small", "medium", "large", "huge", "massive"), (0.3, 0.25, 0.2, 0.15, 0.1)),
        ("weightrange", ("ultralight", "light", "mid", "heavy", "bulky"), (0.4, 0.25, 0.15, 0.1, 0.1)),
        ("family", ("aspire", "pavilion", "satellite", "thinkpad", "inspiron", "latitude",
                    "zenbook", "vaio"), (0.2, 0.15, 0.15, 0.13, 0.12, 0.1, 0.08, 0.07)),
        ("platform", ("windows", "linux", "chromeos", "macos"), (0.7, 0.15, 0.1, 0.05)),
        ("utility", ("gaming", "office", "design", "travel", "student"), (0.7, 0.15, 0.07, 0.05, 0.03)),
        ("processorclass", ("celeron", "pentium", "i3", "i5", "i7", "xeon"),
         (0.74, 0.1, 0.06, 0.04, 0.03, 0.03)),
        ("sysmemory", ("2gb", "4gb", "8gb", "16gb", "32gb", "64gb", "128gb"),
         (0.76, 0.1, 0.05, 0.03, 0.02, 0.02, 0.02)),
    ],
}

# informable slots in rank order; value sets are open-ended strings
_INFORMABLE = {
    "SFR": ("addr", "price", "phone", "postcode"),
    "SFH": ("addr", "phone", "postcode"),
    "L6": ("price", "drive", "dimension"),
    "L11": ("weight", "battery", "price", "dimension", "drive", "display", "graphadaptor",
            "design", "processor"),
}

BUILTIN_DOMAINS = tuple(_REQUESTABLE)
_INFORMABLE_USED = 10


def ontology_document(domain_id: str) -> dict:
    """The ontology JSON document of a built-in domain."""
    slots = [{"name": "name", "class": "name", "values": []}]
    for name, values, _ in _REQUESTABLE[domain_id]:
        slots.append({"name": name, "class": "requestable", "values": list(values)})
    for rank, name in enumerate(_INFORMABLE[domain_id]):
        # larger declared sets for lower ranks: entropy / |V| decreases with rank
        n_declared = 30 + 5 * rank
        slots.append({"name": name, "class": "informable",
                      "values": [f"{name}-{i:03d}" for i in range(n_declared)]})
    return {"domain": domain_id, "slots": slots}


def _quota(weights, n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    raw = w / w.sum() * n
    counts = np.floor(raw).astype(int)
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[: n - counts.sum()]] += 1
    return counts


def database_document(domain_id: str, n_entities: int = 150, seed: int = 0) -> dict:
    """Synthetic entity database whose value frequencies follow the slot profiles."""
    rng = np.random.default_rng(seed)
    prefix = domain_id.lower()
    columns = {"name": [f"{prefix}-{i:03d}" for i in range(n_entities)]}
    for name, values, weights in _REQUESTABLE[domain_id]:
        col = np.repeat(np.arange(len(values)), _quota(weights, n_entities))
        rng.shuffle(col)
        columns[name] = [values[i] for i in col]
    for name in _INFORMABLE[domain_id]:
        col = np.arange(n_entities) % _INFORMABLE_USED
        rng.shuffle(col)
        columns[name] = [f"{name}-{i:03d}" for i in col]
    entities = [{k: v[i] for k, v in columns.items()} for i in range(n_entities)]
    return {"domain": domain_id, "entities": entities}


@lru_cache(maxsize=None)
def builtin_domain(domain_id: str, n_entities: int = 150, seed: int = 0) -> Domain:
    if domain_id not in _REQUESTABLE:
        raise KeyError(f"unknown built-in domain {domain_id!r}; choose from {BUILTIN_DOMAINS}")
    onto, db = load_domain(ontology_document(domain_id),
                           database_document(domain_id, n_entities, seed))
    return Domain(onto, db)


def reference_order(domain_id: str) -> dict[str, tuple[str, ...]]:
    """The intended per-class slot order of a built-in domain."""
    return {
        "name": ("name",),
        "requestable": tuple(s for s, _, _ in _REQUESTABLE[domain_id]),
        "informable": _INFORMABLE[domain_id],
    }
