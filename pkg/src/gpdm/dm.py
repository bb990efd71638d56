"""Dialogue-management loop: action masking, summary-to-master mapping, episodes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Protocol, Sequence

import numpy as np

from .acts import DialogueAct, SummaryAction
from .belief import BeliefState, FeatureNode, NBestInput, feature_vector, init_belief, update_belief
from .committee import PolicyCommittee
from .gp import GPPolicy, QEstimate, thompson_pick
from .kernel import Point
from .simuser import ErrorModel, RewardConfig, SimulatedUser, UserGoal, corrupt, score_episode


@dataclass(frozen=True)
class MaskConfig:
    confirm_threshold: float = 0.3
    select_threshold: float = 0.15


def candidate_actions(belief: BeliefState, masks: MaskConfig = MaskConfig()) -> list[SummaryAction]:
    """Unmasked summary actions in rank order, slot actions first."""
    out = []
    for slot in belief.domain.ranked("requestable"):
        out.append(SummaryAction("request", slot))
        p = np.sort(belief.goal(slot)[:-1])[::-1]
        if p.size and p[0] > masks.confirm_threshold:
            out.append(SummaryAction("confirm", slot))
        if p.size > 1 and p[1] > masks.select_threshold:
            out.append(SummaryAction("select", slot))
    out += [SummaryAction("inform"), SummaryAction("repeat"), SummaryAction("bye")]
    return out


def best_entity(belief: BeliefState) -> int | None:
    """Index of the entity satisfying the most constraints in expectation.

    The score of an entity is the summed goal probability of its values, i.e.
    the expected number of goal slots it matches.  Ties go to the first name.
    """
    domain = belief.domain
    entities = domain.db.entities
    if not entities:
        return None
    score = np.zeros(len(entities))
    for slot in domain.ranked("requestable"):
        idx = domain.value_index[slot]
        p = np.append(belief.goal(slot)[:-1], 0.0)  # index -1 reads the appended zero
        score += p[idx]
    name = domain.ontology.name_slot.name
    names = [e[name] for e in entities]
    best = score.max()
    return min((i for i in np.flatnonzero(score == best)), key=lambda i: names[i])


def summary_to_master(action: SummaryAction, belief: BeliefState) -> DialogueAct:
    kind = action.kind
    if kind in ("request", "confirm", "select"):
        top = belief.top_values(action.slot, 2)
        if kind == "request":
            return DialogueAct("request", action.slot)
        if kind == "confirm":
            return DialogueAct("confirm", action.slot, top[0][0])
        return DialogueAct("select", action.slot, top[0][0], alt=top[1][0])
    if kind == "inform":
        domain = belief.domain
        name = domain.ontology.name_slot.name
        i = best_entity(belief)
        if i is None:
            return DialogueAct("inform", name, "none")
        entity = domain.db.entities[i]
        answers = tuple((s, entity[s]) for s in sorted(belief.requested) if s in entity)
        return DialogueAct("inform", name, entity[name], answers=answers)
    return DialogueAct(kind)


@dataclass
class TurnRecord:
    features: tuple[FeatureNode, ...]
    action: SummaryAction
    reward: float
    system_act: DialogueAct
    user_act: DialogueAct | None = None
    nbest: NBestInput | None = None
    member_estimates: tuple[QEstimate, ...] | None = None

    def to_dict(self, turn: int) -> dict:
        d = {"turn": turn, "action": str(self.action), "system_act": self.system_act.to_dict(),
             "reward": self.reward,
             "user_act": None if self.user_act is None else self.user_act.to_dict(),
             "nbest": None if self.nbest is None else self.nbest.to_dict()}
        if self.member_estimates is not None:
            d["members"] = [[e.mean, e.variance] for e in self.member_estimates]
        return d


@dataclass
class Episode:
    domain_id: str
    goal: UserGoal
    opening: DialogueAct
    opening_nbest: NBestInput
    turns: list[TurnRecord] = field(default_factory=list)
    success: bool = False
    total: float = 0.0

    @property
    def n_turns(self) -> int:
        return len(self.turns)

    @property
    def rewards(self) -> list[float]:
        return [t.reward for t in self.turns]

    @property
    def system_acts(self) -> list[DialogueAct]:
        return [t.system_act for t in self.turns]

    def trace(self) -> list[tuple[Point, float | None]]:
        """(point, reward) pairs closed by a terminal point, ready for ingestion."""
        out: list[tuple[Point, float | None]] = [
            (Point(t.features, t.action, self.domain_id), t.reward) for t in self.turns]
        out.append((Point.terminal(self.domain_id), None))
        return out

    def write_transcript(self, fh: IO[str]) -> None:
        """One JSON line per turn; turn 0 is the user's opening."""
        fh.write(json.dumps({"turn": 0, "domain": self.domain_id, "goal": self.goal.to_dict(),
                             "user_act": self.opening.to_dict(),
                             "nbest": self.opening_nbest.to_dict()}) + "\n")
        for i, t in enumerate(self.turns, 1):
            fh.write(json.dumps(t.to_dict(i)) + "\n")


class Actor(Protocol):
    def choose(self, belief: BeliefState, candidates: Sequence[SummaryAction],
               rng: np.random.Generator, explore: bool
               ) -> tuple[SummaryAction, tuple[QEstimate, ...] | None]: ...


def argmax_random_ties(values: np.ndarray, rng: np.random.Generator) -> int:
    best = np.flatnonzero(values == values.max())
    return int(best[0]) if len(best) == 1 else int(rng.choice(best))


class PersistentDraws:
    """Standard-normal draws per action that follow an AR(1) process across turns.

    Every draw is marginally N(0, 1), so each turn still samples the posterior,
    but with ``rho`` near 1 exploration stays coherent over a dialogue instead
    of dithering.  ``rho=0`` gives independent draws, ``rho=1`` one draw per
    action per dialogue.
    """

    def __init__(self, rho: float = 0.0):
        if not 0 <= rho <= 1:
            raise ValueError("persistence must lie in [0, 1]")
        self.rho = rho
        self._z: dict = {}

    def reset(self) -> None:
        self._z = {}

    def __call__(self, actions: Sequence[SummaryAction], rng: np.random.Generator) -> np.ndarray:
        fresh = rng.standard_normal(len(actions))
        z = np.empty(len(actions))
        for i, a in enumerate(actions):
            prev = self._z.get(a)
            z[i] = fresh[i] if prev is None else \
                self.rho * prev + np.sqrt(1 - self.rho * self.rho) * fresh[i]
            self._z[a] = z[i]
        return z


class PolicyActor:
    """Thompson sampling when exploring, greedy (random among exact ties) otherwise."""

    def __init__(self, policy: GPPolicy, persistence: float = 0.0):
        self.policy = policy
        self.draws = PersistentDraws(persistence)

    def reset(self, user) -> None:
        self.draws.reset()

    def choose(self, belief, candidates, rng, explore):
        feats = feature_vector(belief)
        if explore:
            means, var = self.policy.estimates(feats, belief.domain_id, candidates)
            if self.draws.rho == 0:
                return candidates[thompson_pick(means, var, rng)], None
            z = self.draws(candidates, rng)
            return candidates[int(np.argmax(means + np.sqrt(np.maximum(var, 0)) * z))], None
        means = self.policy.means(feats, belief.domain_id, candidates)
        return candidates[argmax_random_ties(means, rng)], None


class CommitteeActor:
    """Acts on BCM-combined estimates and reports every member's estimate of the
    chosen action, which the multi-agent trainer turns into reward shares."""

    def __init__(self, committee: PolicyCommittee, persistence: float = 0.0):
        self.committee = committee
        self.draws = PersistentDraws(persistence)

    def reset(self, user) -> None:
        self.draws.reset()

    def choose(self, belief, candidates, rng, explore):
        mean, var, mm, mv = self.committee.estimates(
            feature_vector(belief), belief.domain_id, candidates)
        if explore:
            z = self.draws(candidates, rng) if self.draws.rho > 0 else \
                rng.standard_normal(len(candidates))
            i = int(np.argmax(mean + np.sqrt(np.maximum(var, 0)) * z))
        else:
            i = argmax_random_ties(mean, rng)
        members = tuple(QEstimate(float(a), float(b)) for a, b in zip(mm[:, i], mv[:, i]))
        return candidates[i], members


class OracleActor:
    """Cheating policy that reads the user's goal; an environment sanity check."""

    def __init__(self, confidence: float = 0.5):
        self.confidence = confidence
        self.goal: UserGoal | None = None

    def reset(self, user: SimulatedUser) -> None:
        self.goal = user.goal

    def choose(self, belief, candidates, rng, explore):
        for slot, value in self.goal.constraints:
            top, p = belief.top_values(slot, 1)[0]
            if top != value or p <= self.confidence:
                return SummaryAction("request", slot), None
        return SummaryAction("inform"), None


class RandomActor:
    def choose(self, belief, candidates, rng, explore):
        return candidates[int(rng.integers(len(candidates)))], None


def as_actor(actor, persistence: float = 0.0) -> Actor:
    if isinstance(actor, GPPolicy):
        return PolicyActor(actor, persistence)
    if isinstance(actor, PolicyCommittee):
        return CommitteeActor(actor, persistence)
    if hasattr(actor, "choose"):
        return actor
    raise TypeError(f"cannot drive a dialogue with {type(actor).__name__}")


def run_dialogue(actor, user: SimulatedUser, rng: np.random.Generator, train_mode: bool = False,
                 reward_config: RewardConfig = RewardConfig(),
                 error_model: ErrorModel = ErrorModel(),
                 masks: MaskConfig = MaskConfig()) -> Episode:
    """Run one dialogue to ``bye`` or ``max_turns``.

    User noise and action choice draw from separate child streams of ``rng``,
    so two actors facing the same seed meet the same user noise until their
    dialogues diverge.
    """
    actor = as_actor(actor)
    if hasattr(actor, "reset"):
        actor.reset(user)
    noise_rng, act_rng = rng.spawn(2)
    domain = user.domain
    opening = user.opening()
    nbest = corrupt(opening, error_model, domain, noise_rng)
    belief = update_belief(init_belief(domain), nbest, None)
    episode = Episode(domain.domain_id, user.goal, opening, nbest)

    for _ in range(reward_config.max_turns):
        cands = candidate_actions(belief, masks)
        action, members = actor.choose(belief, cands, act_rng, train_mode)
        if action not in cands:
            raise RuntimeError(f"actor chose {action}, which is masked")
        sys_act = summary_to_master(action, belief)
        rec = TurnRecord(feature_vector(belief), action, reward_config.turn_penalty, sys_act,
                         member_estimates=members)
        episode.turns.append(rec)
        if action.kind == "bye":
            break
        user_act = user.respond(sys_act)
        rec.user_act = user_act
        if user_act.act == "bye":
            break
        rec.nbest = corrupt(user_act, error_model, domain, noise_rng)
        belief = update_belief(belief, rec.nbest, sys_act)

    success, total = score_episode(episode.system_acts, user.goal, domain, reward_config)
    if success:
        episode.turns[-1].reward += reward_config.success_bonus
    episode.success, episode.total = success, total
    return episode
