"""Kernels over (belief, summary action) points, within and across domains.

The belief kernel is a sum of linear inner products over hidden-node
distributions and the action kernel is a delta, so the joint kernel has an
explicit finite feature map.  :class:`KernelSpace` builds that map for a home
domain; the pairwise functions below are the direct definitions and are kept
independent of it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .acts import SLOT_KINDS, SummaryAction
from .belief import HISTORY_STATES, BeliefState, FeatureNode, feature_vector
from .ontology import Domain, SlotMap, slot_map_for


@dataclass(frozen=True)
class Point:
    """A belief-action pair.  ``action is None`` gives a point with zero kernel
    to everything; it marks episode ends and actions on unmatched slots."""

    features: tuple[FeatureNode, ...]
    action: SummaryAction | None
    domain_id: str

    @classmethod
    def terminal(cls, domain_id: str) -> "Point":
        return cls((), None, domain_id)

    @classmethod
    def from_belief(cls, b: BeliefState, action: SummaryAction | None) -> "Point":
        return cls(feature_vector(b), action, b.domain_id)

    @property
    def is_terminal(self) -> bool:
        return self.action is None and not self.features

    def to_dict(self) -> dict:
        return {"domain": self.domain_id,
                "action": None if self.action is None else str(self.action),
                "features": [[n.slot, n.kind, n.vector.tolist()] for n in self.features]}

    @classmethod
    def from_dict(cls, d: dict) -> "Point":
        action = None if d["action"] is None else SummaryAction.parse(d["action"])
        feats = tuple(FeatureNode(s, k, np.asarray(v, dtype=float)) for s, k, v in d["features"])
        return cls(feats, action, d["domain"])


@dataclass(frozen=True)
class KernelSpec:
    """Slot maps for cross-domain pairs plus per-node-kind weights."""

    slot_maps: Mapping[tuple[str, str], SlotMap] = field(default_factory=dict)
    node_weights: Mapping[str, float] = field(
        default_factory=lambda: {"goal": 1.0, "history": 1.0})

    def __post_init__(self):
        if any(w <= 0 for w in self.node_weights.values()):
            raise ValueError("node weights must be positive")

    def slot_map(self, domain_a: str, domain_b: str) -> SlotMap | None:
        if domain_a == domain_b:
            return None
        if (domain_a, domain_b) in self.slot_maps:
            return self.slot_maps[domain_a, domain_b]
        if (domain_b, domain_a) in self.slot_maps:
            return self.slot_maps[domain_b, domain_a].swapped()
        raise KeyError(f"no slot map between {domain_a!r} and {domain_b!r}")


def node_inner(u: np.ndarray, v: np.ndarray, kind: str) -> float:
    """Inner product with the shorter vector zero-padded.

    Goal vectors keep their trailing ``none`` entry aligned: the padding goes
    between the value entries and ``none``.
    """
    if kind == "goal":
        n = min(len(u), len(v)) - 1
        return float(np.dot(u[:n], v[:n]) + u[-1] * v[-1])
    n = min(len(u), len(v))
    return float(np.dot(u[:n], v[:n]))


def action_kernel(a: SummaryAction | None, b: SummaryAction | None,
                  slot_map: SlotMap | None = None) -> int:
    """1 iff the actions coincide (under ``slot_map`` from a's domain to b's)."""
    if a is None or b is None or a.kind != b.kind:
        return 0
    if a.slot is None and b.slot is None:
        return 1
    if slot_map is None:
        return int(a.slot == b.slot)
    return int(slot_map.a_to_b().get(a.slot) == b.slot)


def belief_kernel(f: Sequence[FeatureNode], g: Sequence[FeatureNode],
                  slot_map: SlotMap | None = None,
                  node_weights: Mapping[str, float] | None = None) -> float:
    w = node_weights or {}
    gi = {(n.slot, n.kind): n.vector for n in g}
    total = 0.0
    if slot_map is None:
        for n in f:
            other = gi.get((n.slot, n.kind))
            if other is not None:
                total += w.get(n.kind, 1.0) * node_inner(n.vector, other, n.kind)
        return total
    a_to_b = slot_map.a_to_b()
    for n in f:
        partner = a_to_b.get(n.slot)
        if partner is None:
            continue
        other = gi.get((partner, n.kind))
        if other is not None:
            total += w.get(n.kind, 1.0) * node_inner(n.vector, other, n.kind)
    return total


def joint_kernel(p: Point, q: Point, spec: KernelSpec | None = None) -> float:
    spec = spec or KernelSpec()
    if p.action is None or q.action is None:
        return 0.0
    smap = spec.slot_map(p.domain_id, q.domain_id)
    if not action_kernel(p.action, q.action, smap):
        return 0.0
    return belief_kernel(p.features, q.features, smap, spec.node_weights)


def gram_matrix(points: Sequence[Point], spec: KernelSpec | None = None) -> np.ndarray:
    n = len(points)
    K = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            K[i, j] = K[j, i] = joint_kernel(points[i], points[j], spec)
    return K


def map_point(p: Point, slot_map: SlotMap) -> Point:
    """Re-express a point of ``slot_map.domain_a`` in ``domain_b``'s slots.

    Nodes of unpaired slots are dropped; an action on an unpaired slot becomes
    ``None`` (zero action kernel).
    """
    if p.domain_id != slot_map.domain_a:
        raise ValueError(f"point from {p.domain_id!r} cannot use a map from {slot_map.domain_a!r}")
    a_to_b = slot_map.a_to_b()
    feats = tuple(FeatureNode(a_to_b[n.slot], n.kind, n.vector)
                  for n in p.features if n.slot in a_to_b)
    action = p.action
    if action is not None and action.slot is not None:
        partner = a_to_b.get(action.slot)
        action = None if partner is None else SummaryAction(action.kind, partner)
    return Point(feats, action, slot_map.domain_b)


def home_actions(home: Domain) -> tuple[SummaryAction, ...]:
    """Summary-action inventory of a domain in canonical order."""
    acts = [SummaryAction(kind, slot) for slot in home.ranked("requestable") for kind in SLOT_KINDS]
    return tuple(acts) + (SummaryAction("inform"), SummaryAction("repeat"), SummaryAction("bye"))


class KernelSpace:
    """Explicit feature map of the joint kernel in a home domain's coordinates.

    Points of any registered domain are mapped into the home domain through
    their slot map, so ``embed(p) @ embed(q)`` (with equal action indices)
    equals ``joint_kernel`` of the mapped points.
    """

    def __init__(self, home: Domain, domains: Sequence[Domain] = (), mode: str = "entropy",
                 node_weights: Mapping[str, float] | None = None):
        self.home = home
        self.mode = mode
        self.node_weights = dict(node_weights or {"goal": 1.0, "history": 1.0})
        self.domains = {home.domain_id: home}
        for d in domains:
            self.domains.setdefault(d.domain_id, d)
        self.slot_maps = {did: slot_map_for(d, home, mode) for did, d in self.domains.items()}
        self.actions = home_actions(home)
        self.action_index = {a: i for i, a in enumerate(self.actions)}

        home_onto = home.ontology
        slots = home.belief_slots()
        widths = {s: home_onto.slot(s).cardinality for s in slots}
        for did, smap in self.slot_maps.items():
            onto = self.domains[did].ontology
            for src, dst in smap.a_to_b().items():
                if dst in widths:
                    widths[dst] = max(widths[dst], onto.slot(src).cardinality)
        n_hist = len(HISTORY_STATES)
        self._goal_block = {}
        self._hist_block = {}
        off = 0
        for s in slots:
            self._goal_block[s] = (off, widths[s] + 1)
            off += widths[s] + 1
            self._hist_block[s] = (off, n_hist)
            off += n_hist
        self.dim = off
        self._gw = float(np.sqrt(self.node_weights.get("goal", 1.0)))
        self._hw = float(np.sqrt(self.node_weights.get("history", 1.0)))
        self._plans: dict[str, tuple] = {}
        self._action_maps: dict[str, dict] = {}

    def covers(self, domain_id: str) -> bool:
        return domain_id in self.domains

    def add_domain(self, domain: Domain) -> None:
        """Register a further domain; its slots are folded into existing blocks."""
        if domain.domain_id in self.domains:
            return
        smap = slot_map_for(domain, self.home, self.mode)
        for src, dst in smap.a_to_b().items():
            if dst in self._goal_block and domain.ontology.slot(src).cardinality + 1 > self._goal_block[dst][1]:
                raise ValueError(
                    f"domain {domain.domain_id!r} slot {src!r} is wider than the fixed block of "
                    f"{dst!r}; build the space with all domains up front")
        self.domains[domain.domain_id] = domain
        self.slot_maps[domain.domain_id] = smap

    def _plan(self, domain_id: str):
        plan = self._plans.get(domain_id)
        if plan is None:
            a_to_b = self.slot_maps[domain_id].a_to_b()
            plan = {}
            for src, dst in a_to_b.items():
                if dst in self._goal_block:
                    plan[src, "goal"] = self._goal_block[dst]
                    plan[src, "history"] = self._hist_block[dst]
            self._plans[domain_id] = plan
        return plan

    def map_action(self, action: SummaryAction | None, domain_id: str) -> int:
        """Index of the action in the home inventory, or -1 if it has no counterpart."""
        if action is None:
            return -1
        amap = self._action_maps.setdefault(domain_id, {})
        idx = amap.get(action)
        if idx is None:
            if action.slot is None:
                idx = self.action_index[action]
            else:
                partner = self.slot_maps[domain_id].a_to_b().get(action.slot)
                idx = -1 if partner is None else self.action_index.get(
                    SummaryAction(action.kind, partner), -1)
            amap[action] = idx
        return idx

    def embed_features(self, features: Sequence[FeatureNode], domain_id: str) -> np.ndarray:
        out = np.zeros(self.dim)
        plan = self._plan(domain_id)
        for n in features:
            block = plan.get((n.slot, n.kind))
            if block is None:
                continue
            off, width = block
            v = n.vector
            if n.kind == "goal":
                k = min(len(v) - 1, width - 1)
                out[off:off + k] = self._gw * v[:k]
                out[off + width - 1] = self._gw * v[-1]
            else:
                out[off:off + len(v)] = self._hw * v
        return out

    def embed(self, p: Point) -> tuple[int, np.ndarray]:
        idx = self.map_action(p.action, p.domain_id)
        if idx < 0:
            return -1, np.zeros(self.dim)
        return idx, self.embed_features(p.features, p.domain_id)

    def kernel(self, p: Point, q: Point) -> float:
        ip, fp = self.embed(p)
        iq, fq = self.embed(q)
        if ip < 0 or ip != iq:
            return 0.0
        return float(fp @ fq)
