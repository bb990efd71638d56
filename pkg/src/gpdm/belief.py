"""Per-slot belief tracking over noisy N-best user input.

The tracker is a linear-mixture simplification of a dynamic Bayesian network
tracker: each observed inform moves goal mass towards the informed values in
proportion to its confidence.  The policy only consumes the normalised
per-node distributions, so this is all the kernel needs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .acts import DONTCARE, DialogueAct
from .ontology import Domain

log = logging.getLogger(__name__)

HISTORY_STATES = ("nothing_said", "user_informed", "system_requested", "system_confirmed")
_H_INFORMED, _H_REQUESTED, _H_CONFIRMED = 1, 2, 3
_INFORMING = {"inform", "affirm", "negate", "reqalts"}


@dataclass(frozen=True)
class GoalNode:
    """Goal distribution over the slot's values with ``none`` as the last entry."""

    slot: str
    dist: np.ndarray


@dataclass(frozen=True)
class HistoryNode:
    slot: str
    dist: np.ndarray


@dataclass(frozen=True)
class NBestInput:
    hypotheses: tuple[tuple[DialogueAct, float], ...]

    def __post_init__(self):
        if not self.hypotheses:
            raise ValueError("N-best list must be non-empty")
        confs = [c for _, c in self.hypotheses]
        if any(c < 0 for c in confs):
            raise ValueError("confidences must be non-negative")
        if sum(confs) > 1 + 1e-9:
            raise ValueError(f"confidences sum to {sum(confs)} > 1")

    @property
    def residual(self) -> float:
        return max(0.0, 1.0 - sum(c for _, c in self.hypotheses))

    def to_dict(self) -> list:
        return [[a.to_dict(), c] for a, c in self.hypotheses]


@dataclass(frozen=True)
class BeliefState:
    domain: Domain = field(repr=False)
    goals: dict[str, GoalNode]
    histories: dict[str, HistoryNode]
    requested: frozenset[str] = frozenset()

    @property
    def domain_id(self) -> str:
        return self.domain.domain_id

    def goal(self, slot: str) -> np.ndarray:
        return self.goals[slot].dist

    def top_values(self, slot: str, n: int = 1) -> list[tuple[str, float]]:
        """The ``n`` most probable non-none values of a goal node, best first."""
        values = self.domain.ontology.slot(slot).values
        p = self.goals[slot].dist[:-1]
        order = np.argsort(-p, kind="stable")[:n]
        return [(values[i], float(p[i])) for i in order]


def init_belief(domain: Domain) -> BeliefState:
    goals, hists = {}, {}
    for slot in domain.belief_slots():
        k = domain.ontology.slot(slot).cardinality
        g = np.zeros(k + 1)
        g[-1] = 1.0
        h = np.zeros(len(HISTORY_STATES))
        h[0] = 1.0
        goals[slot] = GoalNode(slot, g)
        hists[slot] = HistoryNode(slot, h)
    return BeliefState(domain, goals, hists, frozenset())


def update_belief(b: BeliefState, obs: NBestInput, last_system_act: DialogueAct | None
                  ) -> BeliefState:
    onto = b.domain.ontology
    mass: dict[str, np.ndarray] = {}
    lam: dict[str, float] = {}
    requested = set(b.requested)
    for act, conf in obs.hypotheses:
        if conf <= 0:
            continue
        if act.act == "request":
            if act.slot not in onto or onto.slot(act.slot).semantic_class != "informable":
                log.debug("rejected hypothesis %s: not an informable slot", act)
            elif conf > 0.5:
                requested.add(act.slot)
            continue
        if act.act == "reqalts" and act.slot is None:
            # a bare request for alternatives rejects the offered entity: the
            # user does not care which name, as long as it is another one
            act = DialogueAct("inform", onto.name_slot.name, DONTCARE)
        if act.act not in _INFORMING or act.slot is None or act.value is None:
            continue
        if act.slot not in b.goals:
            log.debug("rejected hypothesis %s: unknown slot", act)
            continue
        spec = onto.slot(act.slot)
        if act.value != DONTCARE and act.value not in spec.values:
            log.debug("rejected hypothesis %s: unknown value", act)
            continue
        m = mass.setdefault(act.slot, np.zeros(spec.cardinality + 1))
        if act.value == DONTCARE:
            m[:-1] += conf / spec.cardinality
        else:
            m[spec.values.index(act.value)] += conf
        lam[act.slot] = lam.get(act.slot, 0.0) + conf

    goals = dict(b.goals)
    for slot, m in mass.items():
        new = (1.0 - lam[slot]) * b.goals[slot].dist + m
        goals[slot] = GoalNode(slot, new / new.sum())

    hists = dict(b.histories)
    sys_slot = last_system_act.slot if last_system_act is not None else None
    for slot in b.histories:
        if slot in mass:
            state = _H_INFORMED
        elif slot == sys_slot and last_system_act.act == "request":
            state = _H_REQUESTED
        elif slot == sys_slot and last_system_act.act in ("confirm", "select", "inform"):
            state = _H_CONFIRMED
        else:
            continue
        h = np.zeros(len(HISTORY_STATES))
        h[state] = 1.0
        hists[slot] = HistoryNode(slot, h)
    return BeliefState(b.domain, goals, hists, frozenset(requested))


def sorted_goal_vector(g: GoalNode | np.ndarray) -> np.ndarray:
    """Value entries sorted descending with the ``none`` mass kept last."""
    dist = g.dist if isinstance(g, GoalNode) else np.asarray(g, dtype=float)
    out = np.empty_like(dist)
    out[:-1] = -np.sort(-dist[:-1])
    out[-1] = dist[-1]
    return out


@dataclass(frozen=True)
class FeatureNode:
    slot: str
    kind: str  # "goal" or "history"
    vector: np.ndarray


def feature_vector(b: BeliefState) -> tuple[FeatureNode, ...]:
    """Per-node vectors ordered by semantic class, entropy rank, then node kind."""
    nodes = []
    for slot in b.domain.belief_slots():
        nodes.append(FeatureNode(slot, "goal", sorted_goal_vector(b.goals[slot])))
        nodes.append(FeatureNode(slot, "history", b.histories[slot].dist.copy()))
    return tuple(nodes)
