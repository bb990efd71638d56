"""Domain ontologies, entity databases and entropy-based slot abstraction.

A domain is described by an ontology (slots, their semantic class and value
sets) and a database of entities.  Slots of each semantic class are ranked by
their normalised entropy over the database; the rank gives every slot an
abstract name that can be paired across domains.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

SEMANTIC_CLASSES = ("name", "requestable", "informable")


class OntologyError(ValueError):
    """Raised when an ontology or database document is malformed."""


class EntropyError(ValueError):
    """Raised when the normalised entropy is undefined (empty database)."""


@dataclass(frozen=True)
class SlotSpec:
    name: str
    semantic_class: str
    values: tuple[str, ...]

    def __post_init__(self):
        if self.semantic_class not in SEMANTIC_CLASSES:
            raise OntologyError(f"slot {self.name!r}: unknown class {self.semantic_class!r}")
        if not self.values:
            raise OntologyError(f"slot {self.name!r}: empty value set")
        if len(set(self.values)) != len(self.values):
            raise OntologyError(f"slot {self.name!r}: duplicate values")

    @property
    def cardinality(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DomainOntology:
    domain_id: str
    slots: tuple[SlotSpec, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        names = [s.name for s in self.slots]
        if len(set(names)) != len(names):
            raise OntologyError(f"domain {self.domain_id!r}: duplicate slot names")
        n_name = sum(s.semantic_class == "name" for s in self.slots)
        if n_name != 1:
            raise OntologyError(
                f"domain {self.domain_id!r}: expected exactly one name slot, found {n_name}")
        object.__setattr__(self, "_index", {s.name: s for s in self.slots})

    def slot(self, name: str) -> SlotSpec:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"domain {self.domain_id!r} has no slot {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def slots_of(self, semantic_class: str) -> list[SlotSpec]:
        return [s for s in self.slots if s.semantic_class == semantic_class]

    @property
    def name_slot(self) -> SlotSpec:
        return self.slots_of("name")[0]

    def class_sizes(self) -> dict[str, int]:
        return {c: len(self.slots_of(c)) for c in SEMANTIC_CLASSES}


@dataclass(frozen=True)
class Database:
    domain_id: str
    entities: tuple[Mapping[str, str], ...]

    def __len__(self):
        return len(self.entities)

    def value_counts(self, slot: str) -> Counter:
        return Counter(e[slot] for e in self.entities if slot in e)

    def matching(self, constraints: Mapping[str, str]) -> list[Mapping[str, str]]:
        return [e for e in self.entities
                if all(e.get(s) == v for s, v in constraints.items())]


@dataclass(frozen=True)
class AbstractOrdering:
    domain_id: str
    semantic_class: str
    ordered_slots: tuple[str, ...]
    entropies: tuple[float, ...]


@dataclass(frozen=True)
class SlotPair:
    semantic_class: str
    slot_a: str
    slot_b: str
    pad_length: int


@dataclass(frozen=True)
class SlotMap:
    """Pairing of the slots of two domains.

    ``pairs`` are ordered by semantic class and abstract rank.  Slots that have
    no partner in the other domain are listed in ``unmatched_a``/``unmatched_b``.
    """

    domain_a: str
    domain_b: str
    pairs: tuple[SlotPair, ...]
    unmatched_a: tuple[str, ...]
    unmatched_b: tuple[str, ...]

    def a_to_b(self) -> dict[str, str]:
        return {p.slot_a: p.slot_b for p in self.pairs}

    def b_to_a(self) -> dict[str, str]:
        return {p.slot_b: p.slot_a for p in self.pairs}

    def swapped(self) -> "SlotMap":
        return SlotMap(
            self.domain_b, self.domain_a,
            tuple(SlotPair(p.semantic_class, p.slot_b, p.slot_a, p.pad_length) for p in self.pairs),
            self.unmatched_b, self.unmatched_a)

    def to_dict(self) -> dict:
        return {
            "domain_a": self.domain_a,
            "domain_b": self.domain_b,
            "pairs": [[p.semantic_class, p.slot_a, p.slot_b, p.pad_length] for p in self.pairs],
            "unmatched_a": list(self.unmatched_a),
            "unmatched_b": list(self.unmatched_b),
        }


# -- loading -----------------------------------------------------------------

def _require(doc, key, kind, where):
    if not isinstance(doc, dict) or key not in doc:
        raise OntologyError(f"{where}: missing field {key!r}")
    if not isinstance(doc[key], kind):
        raise OntologyError(f"{where}: field {key!r} must be {kind.__name__}")
    return doc[key]


def load_domain(ontology_document: Mapping, database_document: Mapping
                ) -> tuple[DomainOntology, Database]:
    """Build a validated (ontology, database) pair from parsed JSON documents.

    A slot declared with an empty ``values`` list takes its value set from the
    database (used for open sets such as entity names).  A slot with declared
    values rejects any entity value outside the declaration.
    """
    domain = _require(ontology_document, "domain", str, "ontology")
    raw_slots = _require(ontology_document, "slots", list, f"ontology {domain!r}")
    db_domain = _require(database_document, "domain", str, "database")
    if db_domain != domain:
        raise OntologyError(f"database domain {db_domain!r} does not match ontology {domain!r}")
    raw_entities = _require(database_document, "entities", list, f"database {domain!r}")

    declared: list[tuple[str, str, list[str]]] = []
    for i, raw in enumerate(raw_slots):
        where = f"ontology {domain!r} slot #{i}"
        name = _require(raw, "name", str, where)
        cls = _require(raw, "class", str, f"ontology {domain!r} slot {name!r}")
        values = _require(raw, "values", list, f"ontology {domain!r} slot {name!r}")
        if any(not isinstance(v, str) for v in values):
            raise OntologyError(f"ontology {domain!r} slot {name!r}: values must be strings")
        declared.append((name, cls, list(values)))
    slot_names = {d[0] for d in declared}

    entities = []
    for i, raw in enumerate(raw_entities):
        if not isinstance(raw, dict):
            raise OntologyError(f"database {domain!r}: entity #{i} is not an object")
        label = raw.get("name", f"#{i}")
        for k, v in raw.items():
            if k not in slot_names:
                raise OntologyError(f"database {domain!r}: entity {label!r} has unknown slot {k!r}")
            if not isinstance(v, str):
                raise OntologyError(f"database {domain!r}: entity {label!r} slot {k!r} is not a string")
        entities.append(dict(raw))

    slots = []
    for name, cls, values in declared:
        if values:
            allowed = set(values)
            for e in entities:
                if name in e and e[name] not in allowed:
                    raise OntologyError(
                        f"database {domain!r}: entity {e.get('name', '?')!r} has value "
                        f"{e[name]!r} outside the declared set of slot {name!r}")
        else:
            seen = dict.fromkeys(e[name] for e in entities if name in e)
            values = list(seen)
            if not values:
                raise OntologyError(
                    f"ontology {domain!r} slot {name!r}: no declared values and none in database")
        slots.append(SlotSpec(name, cls, tuple(values)))

    ontology = DomainOntology(domain, tuple(slots))
    name_slot = ontology.name_slot.name
    seen_names = set()
    for i, e in enumerate(entities):
        if name_slot not in e:
            raise OntologyError(f"database {domain!r}: entity #{i} has no {name_slot!r}")
        if e[name_slot] in seen_names:
            raise OntologyError(f"database {domain!r}: duplicate entity name {e[name_slot]!r}")
        seen_names.add(e[name_slot])
    return ontology, Database(domain, tuple(entities))


def load_domain_files(ontology_path, database_path) -> tuple[DomainOntology, Database]:
    with open(ontology_path) as f:
        onto = json.load(f)
    with open(database_path) as f:
        db = json.load(f)
    return load_domain(onto, db)


def ontology_to_document(ontology: DomainOntology) -> dict:
    return {"domain": ontology.domain_id,
            "slots": [{"name": s.name, "class": s.semantic_class, "values": list(s.values)}
                      for s in ontology.slots]}


def database_to_document(db: Database) -> dict:
    return {"domain": db.domain_id, "entities": [dict(e) for e in db.entities]}


# -- entropy -----------------------------------------------------------------

def normalized_entropy(slot: SlotSpec, db: Database) -> float:
    """Empirical value entropy of ``slot`` over ``db`` divided by |V_s| (natural log)."""
    if len(db) == 0:
        raise EntropyError(f"normalised entropy of {slot.name!r} undefined: empty database")
    counts = db.value_counts(slot.name)
    n = len(db)
    h = 0.0
    for c in counts.values():
        p = c / n
        h -= p * math.log(p)
    return max(h, 0.0) / slot.cardinality


def abstract_ordering(ontology: DomainOntology, db: Database, semantic_class: str
                      ) -> AbstractOrdering:
    if semantic_class not in SEMANTIC_CLASSES:
        raise ValueError(f"unknown semantic class {semantic_class!r}")
    scored = [(normalized_entropy(s, db), s.name) for s in ontology.slots_of(semantic_class)]
    # descending entropy, ties by ascending name
    scored.sort(key=lambda t: (-t[0], t[1]))
    return AbstractOrdering(ontology.domain_id, semantic_class,
                            tuple(n for _, n in scored), tuple(e for e, _ in scored))


def match_slots(dom_a: DomainOntology, db_a: Database,
                dom_b: DomainOntology, db_b: Database) -> SlotMap:
    """Pair rank-i slots of each semantic class across two domains."""
    pairs, un_a, un_b = [], [], []
    for cls in SEMANTIC_CLASSES:
        oa = abstract_ordering(dom_a, db_a, cls).ordered_slots
        ob = abstract_ordering(dom_b, db_b, cls).ordered_slots
        n = min(len(oa), len(ob))
        for sa, sb in zip(oa[:n], ob[:n]):
            pad = max(dom_a.slot(sa).cardinality, dom_b.slot(sb).cardinality)
            pairs.append(SlotPair(cls, sa, sb, pad))
        un_a.extend(oa[n:])
        un_b.extend(ob[n:])
    return SlotMap(dom_a.domain_id, dom_b.domain_id, tuple(pairs), tuple(un_a), tuple(un_b))


def shared_slot_map(dom_a: DomainOntology, db_a: Database,
                    dom_b: DomainOntology, db_b: Database) -> SlotMap:
    """Pair identically named slots first, then fill the rest by entropy rank."""
    pairs, un_a, un_b = [], [], []
    for cls in SEMANTIC_CLASSES:
        oa = list(abstract_ordering(dom_a, db_a, cls).ordered_slots)
        ob = list(abstract_ordering(dom_b, db_b, cls).ordered_slots)
        shared = [s for s in oa if s in ob]
        rest_a = [s for s in oa if s not in shared]
        rest_b = [s for s in ob if s not in shared]
        n = min(len(rest_a), len(rest_b))
        cls_pairs = [(s, s) for s in shared] + list(zip(rest_a[:n], rest_b[:n]))
        # keep pairs in domain-a rank order
        cls_pairs.sort(key=lambda p: oa.index(p[0]))
        for sa, sb in cls_pairs:
            pad = max(dom_a.slot(sa).cardinality, dom_b.slot(sb).cardinality)
            pairs.append(SlotPair(cls, sa, sb, pad))
        un_a.extend(rest_a[n:])
        un_b.extend(rest_b[n:])
    return SlotMap(dom_a.domain_id, dom_b.domain_id, tuple(pairs), tuple(un_a), tuple(un_b))


def identity_map(ontology: DomainOntology) -> SlotMap:
    pairs = tuple(SlotPair(s.semantic_class, s.name, s.name, s.cardinality)
                  for cls in SEMANTIC_CLASSES for s in ontology.slots_of(cls))
    return SlotMap(ontology.domain_id, ontology.domain_id, pairs, (), ())


def entropy_table(ontology: DomainOntology, db: Database) -> list[tuple[str, str, float, int]]:
    """Rows ``(class, slot, entropy, rank)`` with 1-based rank per class."""
    rows = []
    for cls in SEMANTIC_CLASSES:
        order = abstract_ordering(ontology, db, cls)
        for rank, (slot, eta) in enumerate(zip(order.ordered_slots, order.entropies), 1):
            rows.append((cls, slot, eta, rank))
    return rows


@dataclass(frozen=True)
class Domain:
    """An ontology together with its database and cached entropy orderings."""

    ontology: DomainOntology
    db: Database
    orderings: dict = field(init=False, repr=False, compare=False)
    value_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "orderings", {
            c: abstract_ordering(self.ontology, self.db, c).ordered_slots
            for c in SEMANTIC_CLASSES})
        # per slot, each entity's value index (-1 when the entity lacks the slot)
        index = {}
        for spec in self.ontology.slots:
            pos = {v: i for i, v in enumerate(spec.values)}
            index[spec.name] = np.array([pos.get(e.get(spec.name), -1) for e in self.db.entities],
                                        dtype=int)
        object.__setattr__(self, "value_index", index)

    @property
    def domain_id(self) -> str:
        return self.ontology.domain_id

    def ranked(self, semantic_class: str) -> tuple[str, ...]:
        return self.orderings[semantic_class]

    def belief_slots(self) -> tuple[str, ...]:
        """Slots carrying goal/history nodes: name first, then requestable by rank."""
        return self.orderings["name"] + self.orderings["requestable"]

    @classmethod
    def from_documents(cls, ontology_document, database_document) -> "Domain":
        return cls(*load_domain(ontology_document, database_document))

    @classmethod
    def from_files(cls, ontology_path: str | Path, database_path: str | Path) -> "Domain":
        return cls(*load_domain_files(ontology_path, database_path))


def slot_map_for(a: Domain, b: Domain, mode: str = "entropy") -> SlotMap:
    if a.domain_id == b.domain_id:
        return identity_map(a.ontology)
    if mode == "entropy":
        return match_slots(a.ontology, a.db, b.ontology, b.db)
    if mode == "shared":
        return shared_slot_map(a.ontology, a.db, b.ontology, b.db)
    raise ValueError(f"unknown slot-map mode {mode!r}")


def iter_domains(domains: Iterable[Domain]) -> dict[str, Domain]:
    return {d.domain_id: d for d in domains}
