"""GP-Sarsa: Gaussian-process estimation of Q over belief-action points.

Rewards are linked to Q through temporal differences,
``r_t = Q(x_t) - gamma Q(x_{t+1}) + noise`` with noise covariance
``sigma^2 H H^T`` inside each episode, and the posterior at a query point is

    mean = m(p) + k(p)^T H^T (H K H^T + sigma^2 H H^T)^{-1} (r - H m_B)
    var  = k(p, p) - k(p)^T H^T (H K H^T + sigma^2 H H^T)^{-1} H k(p).

Because the joint kernel is an inner product of explicit feature vectors
times an action delta, the same posterior is computed in weight space: each
action keeps an orthonormal basis of the features observed with it (the
dictionary) and the posterior over basis coordinates is updated episode by
episode.  Points whose action has no counterpart in the policy's home domain
are orthogonal to everything else; their Q-values enter as independent
nuisance variables folded into the episode noise.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .acts import SummaryAction
from .belief import BeliefState, FeatureNode, feature_vector
from .kernel import KernelSpace, Point, belief_kernel

log = logging.getLogger(__name__)

SNAPSHOT_VERSION = "gpdm-policy/1"


class GPNumericalError(RuntimeError):
    pass


class SnapshotError(ValueError):
    pass


def cholesky(A: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor, escalating diagonal jitter from 1e-10 to 1e-6."""
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        pass
    scale = max(1.0, float(np.mean(np.abs(np.diag(A))))) if A.size else 1.0
    for jitter in (1e-10, 1e-9, 1e-8, 1e-7, 1e-6):
        try:
            L = np.linalg.cholesky(A + jitter * scale * np.eye(len(A)))
            log.warning("cholesky of %s needed jitter %g", what, jitter)
            return L
        except np.linalg.LinAlgError:
            continue
    eig = np.linalg.eigvalsh((A + A.T) / 2) if A.size else np.array([0.0])
    raise GPNumericalError(
        f"{what} ({A.shape[0]}x{A.shape[0]}) is not positive definite even with jitter 1e-6; "
        f"eigenvalue range [{eig.min():.3e}, {eig.max():.3e}]")


@dataclass(frozen=True)
class GPHyper:
    sigma2: float = 1.0
    gamma: float = 1.0
    dict_cap: int = 1000
    novelty: float = 1e-4

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.dict_cap <= 0:
            raise ValueError("dict_cap must be positive")
        if self.novelty < 0:
            raise ValueError("novelty threshold must be non-negative")

    def to_dict(self) -> dict:
        return {"sigma2": self.sigma2, "gamma": self.gamma, "dict_cap": self.dict_cap,
                "novelty": self.novelty}


@dataclass(frozen=True)
class QEstimate:
    mean: float
    variance: float


class PriorMean:
    """Prior mean over points: zero, or the posterior mean of a frozen policy."""

    def __init__(self, policy: "GPPolicy | None" = None):
        self.policy = policy

    @property
    def tag(self) -> str:
        return "zero" if self.policy is None else "policy"

    def values(self, features: Sequence[FeatureNode], domain_id: str,
               actions: Sequence[SummaryAction | None]) -> np.ndarray:
        if self.policy is None:
            return np.zeros(len(actions))
        return self.policy.means(features, domain_id, actions)

    def __call__(self, p: Point) -> float:
        if self.policy is None or p.action is None:
            return 0.0
        return float(self.values(p.features, p.domain_id, [p.action])[0])


ZERO_PRIOR = PriorMean()


def own_self_kernel(features: Sequence[FeatureNode], space: KernelSpace) -> float:
    return belief_kernel(features, features, None, space.node_weights)


class GPPolicy:
    """GP-Sarsa policy for one home domain (possibly fed points of other domains).

    ``points``/``rewards``/``boundaries`` hold the full training record; the
    sparse dictionary is the per-action feature basis whose total size is
    bounded by ``hyper.dict_cap``.
    """

    def __init__(self, space: KernelSpace, hyper: GPHyper | None = None,
                 prior: PriorMean | None = None):
        self.space = space
        self.hyper = hyper or GPHyper()
        self.prior = prior or ZERO_PRIOR
        self.points: list[Point] = []
        self.rewards: list[float] = []
        self.boundaries: list[int] = []
        n_act = len(space.actions)
        self._basis = [np.zeros((space.dim, 0)) for _ in range(n_act)]
        self._coords: list[list[int]] = [[] for _ in range(n_act)]
        self._mu = np.zeros(0)
        self._sigma = np.zeros((0, 0))
        self._blocks: list | None = None
        self.dropped_residuals = 0
        self.clamp_events = 0

    @property
    def domain_id(self) -> str:
        return self.space.home.domain_id

    @property
    def dictionary_size(self) -> int:
        return len(self._mu)

    @property
    def n_episodes(self) -> int:
        return len(self.boundaries)

    # -- dictionary -----------------------------------------------------------

    def _grow(self, a: int, phi: np.ndarray) -> None:
        U = self._basis[a]
        r = phi - U @ (U.T @ phi)
        r = r - U @ (U.T @ r)
        nov = float(r @ r)
        if nov <= self.hyper.novelty or nov < 1e-12:
            if nov > 1e-12:
                self.dropped_residuals += 1
            return
        if self.dictionary_size >= self.hyper.dict_cap:
            self.dropped_residuals += 1
            return
        self._basis[a] = np.column_stack([U, r / np.sqrt(nov)])
        k = self.dictionary_size
        self._coords[a].append(k)
        mu = np.zeros(k + 1)
        mu[:k] = self._mu
        sig = np.zeros((k + 1, k + 1))
        sig[:k, :k] = self._sigma
        sig[k, k] = 1.0
        self._mu, self._sigma = mu, sig

    def _project(self, a: int, phi: np.ndarray) -> np.ndarray:
        return self._basis[a].T @ phi

    # -- training -------------------------------------------------------------

    def ingest_episode(self, points: Sequence[Point], rewards: Sequence[float]) -> "GPPolicy":
        """Add one episode: ``n`` points and the ``n - 1`` rewards between them."""
        n = len(points)
        if n < 2:
            raise ValueError("an episode needs at least two points (one transition)")
        if len(rewards) != n - 1:
            raise ValueError(f"expected {n - 1} rewards for {n} points, got {len(rewards)}")
        for p in points:
            if not self.space.covers(p.domain_id):
                raise ValueError(f"policy space of {self.domain_id!r} does not cover {p.domain_id!r}")

        embedded = []
        for p in points:
            if p.action is None:
                embedded.append((-1, None, 0.0))
                continue
            a, phi = self.space.embed(p)
            if a < 0:
                embedded.append((-1, None, own_self_kernel(p.features, self.space)))
            else:
                self._grow(a, phi)
                embedded.append((a, phi, 0.0))

        prior = np.array([self.prior(p) for p in points])
        k = self.dictionary_size
        C = np.zeros((n, k))
        nuisance = np.zeros(n)
        for t, (a, phi, s) in enumerate(embedded):
            if a >= 0:
                C[t, self._coords[a]] = self._project(a, phi)
            else:
                nuisance[t] = s
        r = np.asarray(rewards, dtype=float)
        g = self.hyper.gamma
        HC = C[:-1] - g * C[1:]
        y = r - (prior[:-1] - g * prior[1:])
        # episode noise: sigma^2 H H^T + H diag(nuisance) H^T, tridiagonal
        d = self.hyper.sigma2 + nuisance
        N = np.diag(d[:-1] + g * g * d[1:])
        off = -g * d[1:-1]
        N[np.arange(n - 2), np.arange(1, n - 1)] = off
        N[np.arange(1, n - 1), np.arange(n - 2)] = off
        L = cholesky(N, "episode noise covariance")
        Z = solve_triangular(L, HC, lower=True)
        yw = solve_triangular(L, y, lower=True)

        SZ = self._sigma @ Z.T
        S = np.eye(n - 1) + Z @ SZ
        Ls = cholesky(S, "innovation covariance")
        gain = cho_solve((Ls, True), SZ.T).T
        self._mu = self._mu + gain @ (yw - Z @ self._mu)
        sig = self._sigma - gain @ SZ.T
        self._sigma = (sig + sig.T) / 2
        self._blocks = None

        self.points.extend(points)
        self.rewards.extend(float(x) for x in rewards)
        self.boundaries.append(len(self.points))
        return self

    # -- queries --------------------------------------------------------------

    def _action_blocks(self):
        if self._blocks is None:
            blocks = []
            for a, idx in enumerate(self._coords):
                ix = np.asarray(idx, dtype=int)
                blocks.append((self._basis[a], self._mu[ix], self._sigma[np.ix_(ix, ix)]))
            self._blocks = blocks
        return self._blocks

    def estimates(self, features: Sequence[FeatureNode], domain_id: str,
                  actions: Sequence[SummaryAction | None], with_variance: bool = True
                  ) -> tuple[np.ndarray, np.ndarray]:
        """Posterior means and variances of Q for one belief and several actions."""
        means = self.prior.values(features, domain_id, actions).astype(float)
        var = np.zeros(len(actions))
        blocks = self._action_blocks()
        phi = None
        own = None
        for i, action in enumerate(actions):
            if action is None:
                continue
            a = self.space.map_action(action, domain_id)
            if a < 0:
                if with_variance:
                    if own is None:
                        own = own_self_kernel(features, self.space)
                    var[i] = own
                continue
            if phi is None:
                phi = self.space.embed_features(features, domain_id)
                phi_sq = float(phi @ phi)
            U, mu, sig = blocks[a]
            if U.shape[1] == 0:
                var[i] = phi_sq
                continue
            c = U.T @ phi
            means[i] += float(mu @ c)
            if with_variance:
                v = float(c @ sig @ c) + max(phi_sq - float(c @ c), 0.0)
                if v < 0:
                    self.clamp_events += 1
                    v = 0.0
                var[i] = v
        return means, var

    def means(self, features, domain_id, actions) -> np.ndarray:
        return self.estimates(features, domain_id, actions, with_variance=False)[0]

    def q_posterior(self, p: Point) -> QEstimate:
        m, v = self.estimates(p.features, p.domain_id, [p.action])
        return QEstimate(float(m[0]), float(v[0]))

    def snapshot(self) -> "GPPolicy":
        """Frozen deep copy (the prior chain is shared, it is immutable in use)."""
        clone = copy.copy(self)
        clone.points = list(self.points)
        clone.rewards = list(self.rewards)
        clone.boundaries = list(self.boundaries)
        clone._basis = list(self._basis)
        clone._coords = [list(c) for c in self._coords]
        clone._mu = self._mu.copy()
        clone._sigma = self._sigma.copy()
        clone._blocks = None
        return clone

    def episodes(self):
        start = 0
        r_start = 0
        for i, end in enumerate(self.boundaries):
            n = end - start
            yield self.points[start:end], self.rewards[r_start:r_start + n - 1]
            r_start += n - 1
            start = end

    # -- persistence ----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "version": SNAPSHOT_VERSION,
            "space": {"home": self.space.home.domain_id, "domains": sorted(self.space.domains),
                      "mode": self.space.mode, "node_weights": dict(self.space.node_weights)},
            "hyper": self.hyper.to_dict(),
            "prior": {"tag": "zero"} if self.prior.policy is None
            else {"tag": "policy", "policy": self.prior.policy.to_dict()},
            "episodes": [{"points": [p.to_dict() for p in pts], "rewards": rw}
                         for pts, rw in self.episodes()],
        }

    @classmethod
    def from_dict(cls, d: dict, domains: Callable[[str], "object"]) -> "GPPolicy":
        """Rebuild a policy by replaying its episodes; ``domains`` resolves domain ids."""
        if not isinstance(d, dict) or d.get("version") != SNAPSHOT_VERSION:
            got = d.get("version") if isinstance(d, dict) else type(d).__name__
            raise SnapshotError(f"policy snapshot version {got!r} != {SNAPSHOT_VERSION!r}")
        try:
            sp = d["space"]
            space = KernelSpace(domains(sp["home"]), [domains(x) for x in sp["domains"]],
                                sp["mode"], sp["node_weights"])
            hyper = GPHyper(**d["hyper"])
            pr = d["prior"]
            if pr["tag"] == "zero":
                prior = ZERO_PRIOR
            elif pr["tag"] == "policy":
                prior = PriorMean(cls.from_dict(pr["policy"], domains))
            else:
                raise SnapshotError(f"unknown prior tag {pr['tag']!r}")
            policy = cls(space, hyper, prior)
            for ep in d["episodes"]:
                policy.ingest_episode([Point.from_dict(p) for p in ep["points"]], ep["rewards"])
        except SnapshotError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise SnapshotError(f"malformed policy snapshot: {exc!r}") from exc
        return policy


# -- functional surface -------------------------------------------------------

def q_posterior(policy: GPPolicy, p: Point) -> QEstimate:
    return policy.q_posterior(p)


def ingest_episode(policy: GPPolicy, trace: Sequence[tuple[Point, float | None]]) -> GPPolicy:
    """``trace`` holds (point, reward after the step); the last reward is unused."""
    points = [p for p, _ in trace]
    rewards = [r for _, r in trace[:-1]]
    return policy.ingest_episode(points, rewards)


def thompson_pick(means: np.ndarray, variances: np.ndarray, rng: np.random.Generator) -> int:
    draws = means + np.sqrt(np.maximum(variances, 0.0)) * rng.standard_normal(len(means))
    return int(np.argmax(draws))


def select_action(policy: GPPolicy, belief: BeliefState, candidates: Sequence[SummaryAction],
                  rng: np.random.Generator) -> tuple[SummaryAction, QEstimate]:
    if not candidates:
        raise ValueError("no candidate actions")
    means, var = policy.estimates(feature_vector(belief), belief.domain_id, candidates)
    i = thompson_pick(means, var, rng)
    return candidates[i], QEstimate(float(means[i]), float(var[i]))


def greedy_action(policy: GPPolicy, belief: BeliefState,
                  candidates: Sequence[SummaryAction]) -> SummaryAction:
    if not candidates:
        raise ValueError("no candidate actions")
    means = policy.means(feature_vector(belief), belief.domain_id, candidates)
    return candidates[int(np.argmax(means))]


def as_prior(generic: GPPolicy) -> PriorMean:
    return PriorMean(generic.snapshot())


def adapted_policy(generic: GPPolicy, space: KernelSpace, hyper: GPHyper | None = None
                   ) -> GPPolicy:
    """Empty in-domain policy whose prior mean is the generic posterior mean."""
    for did in space.domains:
        if not generic.space.covers(did):
            raise ValueError(f"generic policy does not cover domain {did!r}")
    return GPPolicy(space, hyper or generic.hyper, as_prior(generic))
