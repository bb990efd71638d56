"""Bayesian committee machine over per-domain GP policies.

Every member answers a query through its own kernel space (foreign domains
reach it through slot maps) and the Gaussian answers are fused by precision
weighting with the prior correction ``-(M - 1) / k*``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .acts import SummaryAction
from .belief import BeliefState, FeatureNode, feature_vector
from .gp import GPPolicy, QEstimate, own_self_kernel
from .ontology import SlotMap

log = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-8


def bcm_arrays(means: np.ndarray, variances: np.ndarray, k_star: float | np.ndarray
               ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column-wise BCM over an (M, n) stack of member estimates.

    Returns combined means, combined variances and a boolean mask of columns
    whose corrected precision was non-positive; those fall back to the plain
    precision-weighted average.
    """
    means = np.atleast_2d(np.asarray(means, dtype=float))
    prec_i = 1.0 / np.maximum(np.atleast_2d(np.asarray(variances, dtype=float)), VARIANCE_FLOOR)
    m = means.shape[0]
    k_star = np.broadcast_to(np.asarray(k_star, dtype=float), means.shape[1:])
    if np.any(k_star <= 0):
        raise ValueError("k_star must be positive")
    plain = prec_i.sum(axis=0)
    prec = plain - (m - 1) / k_star
    fallback = prec <= 0
    prec = np.where(fallback, plain, prec)
    var = 1.0 / prec
    return var * (prec_i * means).sum(axis=0), var, fallback


def bcm_combine(estimates: Sequence[QEstimate], k_star: float) -> QEstimate:
    if not estimates:
        raise ValueError("bcm_combine needs at least one estimate")
    if len(estimates) == 1:
        return estimates[0]
    mean, var, fb = bcm_arrays(np.array([[e.mean] for e in estimates]),
                               np.array([[e.variance] for e in estimates]), k_star)
    if fb[0]:
        log.debug("BCM precision non-positive; used precision-weighted average")
    return QEstimate(float(mean[0]), float(var[0]))


@dataclass
class CommitteeMember:
    member_id: str
    policy: GPPolicy

    @property
    def home(self) -> str:
        return self.policy.domain_id

    @property
    def slot_maps(self) -> dict[str, SlotMap]:
        return self.policy.space.slot_maps


class PolicyCommittee:
    def __init__(self, members: Sequence[CommitteeMember],
                 serving_domains: Sequence[str] | None = None):
        if not members:
            raise ValueError("a committee needs at least one member")
        ids = [m.member_id for m in members]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate member ids in {ids}")
        self.members = list(members)
        if serving_domains is None:
            serving_domains = sorted(set.intersection(
                *(set(m.policy.space.domains) for m in members)))
        self.serving_domains = list(serving_domains)
        for m in self.members:
            missing = [d for d in self.serving_domains if not m.policy.space.covers(d)]
            if missing:
                raise ValueError(f"member {m.member_id!r} has no slot map for {missing}")
        self.fallback_events = 0

    @property
    def size(self) -> int:
        return len(self.members)

    def member_index(self, domain_id: str) -> int | None:
        for i, m in enumerate(self.members):
            if m.home == domain_id:
                return i
        return None

    def check_domain(self, domain_id: str) -> None:
        if domain_id not in self.serving_domains:
            raise KeyError(f"committee does not serve domain {domain_id!r}")

    def k_star(self, features: Sequence[FeatureNode], domain_id: str) -> float:
        """Self-kernel of the query in the current domain's own kernel."""
        i = self.member_index(domain_id)
        space = self.members[0 if i is None else i].policy.space
        return own_self_kernel(features, space)

    def estimates(self, features: Sequence[FeatureNode], domain_id: str,
                  actions: Sequence[SummaryAction]
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Combined means/variances plus the (M, n) member means/variances."""
        self.check_domain(domain_id)
        mm = np.empty((self.size, len(actions)))
        mv = np.empty((self.size, len(actions)))
        for i, m in enumerate(self.members):
            mm[i], mv[i] = m.policy.estimates(features, domain_id, actions)
        if self.size == 1:
            return mm[0].copy(), mv[0].copy(), mm, mv
        ks = self.k_star(features, domain_id)
        if ks <= 0:
            raise ValueError("query has a zero self-kernel")
        mean, var, fb = bcm_arrays(mm, mv, ks)
        self.fallback_events += int(fb.sum())
        return mean, var, mm, mv

    def manifest(self, snapshot_paths: dict[str, str] | None = None) -> dict:
        paths = snapshot_paths or {}
        return {"members": [{
            "member_id": m.member_id, "home": m.home,
            "domains": sorted(m.policy.space.domains),
            "snapshot": paths.get(m.member_id),
            "slot_maps": {d: sm.to_dict() for d, sm in sorted(m.slot_maps.items())},
        } for m in self.members], "serving_domains": self.serving_domains}


def committee_q(committee: PolicyCommittee, belief: BeliefState, action: SummaryAction,
                current_domain: str | None = None) -> QEstimate:
    domain = current_domain or belief.domain_id
    mean, var, _, _ = committee.estimates(feature_vector(belief), domain, [action])
    return QEstimate(float(mean[0]), float(var[0]))


def committee_select_action(committee: PolicyCommittee, belief: BeliefState,
                            candidates: Sequence[SummaryAction], current_domain: str | None,
                            rng: np.random.Generator, z: np.ndarray | None = None
                            ) -> tuple[SummaryAction, tuple[QEstimate, ...]]:
    """Thompson pick over combined estimates; also returns every member's estimate
    for the chosen action.  ``z`` overrides the standard-normal draws."""
    if not candidates:
        raise ValueError("no candidate actions")
    domain = current_domain or belief.domain_id
    mean, var, mm, mv = committee.estimates(feature_vector(belief), domain, candidates)
    if z is None:
        z = rng.standard_normal(len(candidates))
    i = int(np.argmax(mean + np.sqrt(np.maximum(var, 0.0)) * z))
    return candidates[i], tuple(QEstimate(float(a), float(b)) for a, b in zip(mm[:, i], mv[:, i]))
