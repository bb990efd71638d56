"""Agenda-based simulated user, N-best error generator and reward function."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .acts import DONTCARE, DialogueAct
from .belief import NBestInput
from .ontology import Domain


class GoalSamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class UserGoal:
    constraints: tuple[tuple[str, str], ...]
    requests: tuple[str, ...]
    targets: tuple[str, ...]

    @property
    def constraint_map(self) -> dict[str, str]:
        return dict(self.constraints)

    def to_dict(self) -> dict:
        return {"constraints": [list(c) for c in self.constraints],
                "requests": list(self.requests), "n_targets": len(self.targets)}


@dataclass(frozen=True)
class ErrorModel:
    error_rate: float = 0.15
    nbest_len: int = 3
    confidence_beta: tuple[float, float] = (6.0, 2.0)
    confused_beta: tuple[float, float] = (3.0, 3.0)

    def __post_init__(self):
        if not 0 <= self.error_rate <= 1:
            raise ValueError("error_rate must lie in [0, 1]")
        if self.nbest_len < 1:
            raise ValueError("nbest_len must be at least 1")


@dataclass(frozen=True)
class RewardConfig:
    turn_penalty: float = -1.0
    success_bonus: float = 20.0
    max_turns: int = 30


def sample_goal(domain: Domain, rng: np.random.Generator, max_tries: int = 100) -> UserGoal:
    """1-3 constraints copied from a random entity, plus 1-3 informable requests.

    Copying the constraint values from an entity draws them with their
    empirical database frequency and guarantees a satisfying entity.
    """
    db, onto = domain.db, domain.ontology
    if len(db) == 0:
        raise GoalSamplingError(f"cannot sample a goal in {domain.domain_id!r}: empty database")
    requestable = list(domain.ranked("requestable"))
    informable = list(domain.ranked("informable"))
    name_slot = onto.name_slot.name
    for _ in range(max_tries):
        n_c = int(rng.integers(1, min(3, len(requestable)) + 1))
        slots = [requestable[i] for i in rng.choice(len(requestable), n_c, replace=False)]
        entity = db.entities[int(rng.integers(len(db)))]
        if any(s not in entity for s in slots):
            continue
        constraints = tuple((s, entity[s]) for s in slots)
        targets = tuple(e[name_slot] for e in db.matching(dict(constraints)))
        if not targets:
            continue
        requests: tuple[str, ...] = ()
        if informable:
            n_r = int(rng.integers(1, min(3, len(informable)) + 1))
            requests = tuple(informable[i] for i in
                             sorted(rng.choice(len(informable), n_r, replace=False)))
        return UserGoal(constraints, requests, targets)
    raise GoalSamplingError(f"no satisfiable goal in {domain.domain_id!r} after {max_tries} tries")


class SimulatedUser:
    """Stack-based agenda: each system act pushes the user's reply, which is popped."""

    def __init__(self, goal: UserGoal, domain: Domain, restate: float = 0.0,
                 rng: np.random.Generator | None = None, volunteer: float = 1.0):
        self.goal = goal
        self.restate = restate
        self.volunteer = volunteer
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.domain = domain
        self._constraints = goal.constraint_map
        self._entities = {e[domain.ontology.name_slot.name]: e for e in domain.db.entities}
        self.agenda: list[DialogueAct] = []
        self.last_act: DialogueAct | None = None
        self.answered: dict[str, set[str]] = {}
        self.mentioned: set[str] = set()
        self.terminated = False

    def opening(self) -> DialogueAct:
        s, v = self.goal.constraints[0]
        self.agenda.append(DialogueAct("inform", s, v))
        return self._pop()

    def _pop(self) -> DialogueAct:
        act = self.agenda.pop()
        self.last_act = act
        if act.value is not None and act.slot in self._constraints:
            self.mentioned.add(act.slot)
        if act.act == "bye":
            self.terminated = True
        return act

    def _inform(self, slot: str) -> DialogueAct:
        return DialogueAct("inform", slot, self._constraints.get(slot, DONTCARE))

    def respond(self, system_act: DialogueAct) -> DialogueAct:
        if self.terminated:
            raise RuntimeError("dialogue already terminated")
        kind = system_act.act
        if kind == "bye":
            self.terminated = True
            self.last_act = DialogueAct("bye")
            return self.last_act
        if kind in ("request", "select"):
            self.agenda.append(self._inform(system_act.slot))
        elif kind == "confirm":
            s = system_act.slot
            if s not in self._constraints:
                self.agenda.append(DialogueAct("inform", s, DONTCARE))
            elif self._constraints[s] == system_act.value:
                self.agenda.append(DialogueAct("affirm", s, system_act.value))
            else:
                self.agenda.append(DialogueAct("negate", s, self._constraints[s]))
        elif kind == "inform":
            self.agenda.append(self._react_to_offer(system_act))
        else:
            self.agenda.append(self.last_act or DialogueAct("hello"))
        return self._pop()

    def _react_to_offer(self, act: DialogueAct) -> DialogueAct:
        entity = self._entities.get(act.value)
        if entity is None:
            return DialogueAct("reqalts")
        violated = [(s, v) for s, v in self.goal.constraints if entity.get(s) != v]
        if violated:
            # with probability `volunteer`, state an unstated violated constraint;
            # otherwise just ask for another entity
            fresh = [(s, v) for s, v in violated if s not in self.mentioned]
            if fresh and self.volunteer > 0 and (self.volunteer >= 1
                                                  or self.rng.random() < self.volunteer):
                return DialogueAct("reqalts", *fresh[0])
            if self.restate > 0 and self.rng.random() < self.restate:
                return DialogueAct("reqalts", *violated[0])
            return DialogueAct("reqalts")
        got = self.answered.setdefault(act.value, set())
        got.update(s for s, _ in act.answers)
        for s in self.goal.requests:
            if s not in got:
                return DialogueAct("request", s)
        return DialogueAct("bye")


def _confusions(act: DialogueAct, domain: Domain) -> list[DialogueAct]:
    onto = domain.ontology
    if act.value is not None and act.slot in onto:
        values = [v for v in onto.slot(act.slot).values if v != act.value]
        return [DialogueAct(act.act, act.slot, v) for v in values]
    if act.act == "request" and act.slot in onto:
        return [DialogueAct("request", s) for s in domain.ranked("informable") if s != act.slot]
    swap = {"affirm": "negate", "negate": "affirm"}
    if act.act in swap:
        return [DialogueAct(swap[act.act], act.slot)]
    return [DialogueAct(t) for t in ("hello", "repeat", "reqalts") if t != act.act]


def corrupt(act: DialogueAct, model: ErrorModel, domain: Domain,
            rng: np.random.Generator) -> NBestInput:
    """N-best list whose top hypothesis is a confusion with probability ``error_rate``."""
    pool = _confusions(act, domain)
    head = act
    if pool and rng.random() < model.error_rate:
        head = pool[int(rng.integers(len(pool)))]
    c1 = float(rng.beta(*(model.confidence_beta if head == act else model.confused_beta)))
    rest = [act] if head != act else []
    rest += [c for c in pool if c != head]
    n_rest = min(model.nbest_len - 1, len(rest))
    hyps = [(head, c1)]
    if n_rest:
        # the true act (if displaced) stays in the list; other confusions are random
        if head != act:
            others = [act] + [rest[1:][i] for i in rng.permutation(len(rest) - 1)[: n_rest - 1]]
        else:
            others = [rest[i] for i in rng.permutation(len(rest))[:n_rest]]
        shares = rng.dirichlet(np.ones(n_rest + 1))[:n_rest] * (1.0 - c1)
        hyps += list(zip(others, shares.tolist()))
    return NBestInput(tuple(hyps))


def objective_success(system_acts: Iterable[DialogueAct], goal: UserGoal, domain: Domain) -> bool:
    """An offered entity met every constraint and every request was answered for it."""
    targets = set(goal.targets)
    answered: dict[str, set[str]] = {}
    for act in system_acts:
        if act.act == "inform" and act.slot == domain.ontology.name_slot.name \
                and act.value in targets:
            got = answered.setdefault(act.value, set())
            got.update(s for s, _ in act.answers)
            if all(r in got for r in goal.requests):
                return True
    return False


def score_episode(system_acts: Sequence[DialogueAct], goal: UserGoal, domain: Domain,
                  reward_config: RewardConfig = RewardConfig()) -> tuple[bool, float]:
    """(objective success, return) of a finished dialogue given its system acts."""
    if not system_acts:
        raise ValueError("an episode has at least one turn")
    ok = objective_success(system_acts, goal, domain)
    return ok, reward_config.turn_penalty * len(system_acts) + reward_config.success_bonus * ok
