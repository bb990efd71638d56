"""Multi-agent training: credit assignment of an episode's reward across committee members."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .acts import SummaryAction
from .committee import VARIANCE_FLOOR, PolicyCommittee
from .dm import Episode
from .gp import QEstimate
from .kernel import Point


class RewardStrategy(str, enum.Enum):
    NAIV = "NAIV"
    WINN = "WINN"
    SCALE = "SCALE"
    MBCM = "MBCM"


@dataclass(frozen=True)
class TurnAttribution:
    """Q-value over Q-variance ratio of each member for the action taken."""
    action: SummaryAction
    ratios: tuple[float, ...]

    @classmethod
    def from_estimates(cls, action: SummaryAction, estimates: Sequence[QEstimate],
                       floor: float = VARIANCE_FLOOR) -> "TurnAttribution":
        return cls(action, tuple(e.mean / max(e.variance, floor) for e in estimates))


@dataclass(frozen=True)
class EpisodeAttribution:
    turns: tuple[TurnAttribution, ...]

    def __post_init__(self):
        if not self.turns:
            raise ValueError("an attribution needs at least one turn")
        if len({len(t.ratios) for t in self.turns}) != 1:
            raise ValueError("every turn must carry one ratio per member")

    @property
    def n_members(self) -> int:
        return len(self.turns[0].ratios)

    @property
    def avg_ratio(self) -> np.ndarray:
        return np.mean([t.ratios for t in self.turns], axis=0)

    @classmethod
    def from_episode(cls, episode: Episode) -> "EpisodeAttribution":
        turns = []
        for t in episode.turns:
            if t.member_estimates is None:
                raise ValueError("episode was not run by a committee")
            turns.append(TurnAttribution.from_estimates(t.action, t.member_estimates))
        return cls(tuple(turns))


def distribute(strategy: RewardStrategy | str, attribution: EpisodeAttribution,
               current_domain: str, members: Sequence) -> np.ndarray:
    """Per-member reward weights in [0, 1].

    ``members`` are committee members (anything with a ``home`` domain id) in
    committee order; only MBCM looks at them.
    """
    strategy = RewardStrategy(strategy)
    m = len(members)
    if m == 0:
        raise ValueError("no committee members")
    if attribution.n_members != m:
        raise ValueError(f"attribution covers {attribution.n_members} members, committee has {m}")
    w = np.zeros(m)
    if strategy is RewardStrategy.NAIV:
        w[:] = 1.0
    elif strategy is RewardStrategy.WINN:
        w[int(np.argmax(attribution.avg_ratio))] = 1.0  # argmax takes the first of ties
    elif strategy is RewardStrategy.SCALE:
        r = np.maximum(attribution.avg_ratio, 0.0)
        total = r.sum()
        w = r / total if total > 0 else np.full(m, 1.0 / m)
    else:
        homes = [mem.home for mem in members]
        if current_domain not in homes:
            raise KeyError(f"no committee member has home domain {current_domain!r}")
        w[homes.index(current_domain)] = 1.0
    return w


def apply_rewards(committee: PolicyCommittee, trace: Sequence[tuple[Point, float | None]],
                  weights: Sequence[float]) -> PolicyCommittee:
    """Each member with a positive weight ingests the trace with scaled rewards.

    The members' kernel spaces map the current domain's points into their own
    domain, so the trace is passed through unchanged apart from the rewards.
    """
    if len(weights) != committee.size:
        raise ValueError("one weight per member is required")
    points = [p for p, _ in trace]
    for member, w in zip(committee.members, weights):
        if w > 0:
            member.policy.ingest_episode(points, [w * r for _, r in trace[:-1]])
    return committee


def attribution_log_line(strategy: RewardStrategy | str, attribution: EpisodeAttribution,
                         weights: Sequence[float], domain: str, committee: PolicyCommittee) -> str:
    return json.dumps({
        "strategy": RewardStrategy(strategy).value, "domain": domain,
        "members": [m.member_id for m in committee.members],
        "avg_ratio": [float(x) for x in attribution.avg_ratio],
        "weights": [float(x) for x in weights]})


def train_committee_episode(committee: PolicyCommittee, strategy: RewardStrategy | str,
                            episode: Episode) -> tuple[np.ndarray, EpisodeAttribution]:
    """Attribute, distribute and apply one finished committee episode."""
    att = EpisodeAttribution.from_episode(episode)
    w = distribute(strategy, att, episode.domain_id, committee.members)
    apply_rewards(committee, episode.trace(), w)
    return w, att
