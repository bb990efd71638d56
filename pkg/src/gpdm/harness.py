"""Experiment orchestration: configs, seeded training schedules, evaluation and reports.

Every dialogue draws its randomness from ``numpy.random.default_rng`` seeded by
``(seed, domain code, stream, index)``.  Strategies run with the same seed
therefore meet the same users in the same order, which makes per-seed
comparisons between strategies paired.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .agents import RewardStrategy, attribution_log_line, train_committee_episode
from .committee import CommitteeMember, PolicyCommittee
from .dm import CommitteeActor, Episode, MaskConfig, PolicyActor, run_dialogue
from .domains import BUILTIN_DOMAINS, builtin_domain
from .gp import GPHyper, GPPolicy, SnapshotError, adapted_policy
from .kernel import KernelSpace
from .ontology import Domain, slot_map_for
from .simuser import ErrorModel, RewardConfig, SimulatedUser, sample_goal

log = logging.getLogger(__name__)

STRATEGIES = ("INDOM", "GEN", "MBCM", "GOLD", "NAIV", "WINN", "SCALE", "PRIOR-ADAPT")
COMMITTEE_STRATEGIES = ("MBCM", "NAIV", "WINN", "SCALE")
DEFAULT_CHECKPOINTS = (250, 500, 750, 2500, 5000, 7500)
CSV_COLUMNS = ("strategy", "domain", "train_dialogues", "seed", "reward", "reward_ci",
               "success", "success_ci", "turns", "turns_ci")
VENUE_DOMAINS = frozenset({"SFR", "SFH"})
SNAPSHOT_VERSION = "gpdm-run/1"

# random streams
TRAIN, EVAL, GENERIC, EXTEND = 0, 1, 2, 3

DEFAULT_HYPER = {
    "sigma2": 500.0, "gamma": 0.9, "dict_cap": 1000, "novelty": 1e-4,
    "goal_weight": 3.0, "history_weight": 3.0, "persistence": 1.0,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a strategy trained on ``domains`` under several seeds.

    ``train_dialogues`` and ``checkpoints`` count dialogues per domain.
    ``eval_domains`` defaults to ``domains``.  PRIOR-ADAPT first trains a GEN
    policy on ``generic_domains`` for ``generic_dialogues`` each.  A non-empty
    ``extend_domains`` continues committee training on new domains for
    ``extend_dialogues`` each after the main schedule.
    """
    domains: tuple[str, ...]
    strategy: str
    train_dialogues: int
    eval_dialogues: int
    seeds: tuple[int, ...]
    hyper: dict = field(default_factory=dict)
    error_rate: float = 0.15
    checkpoints: tuple[int, ...] | None = None
    eval_domains: tuple[str, ...] | None = None
    generic_domains: tuple[str, ...] = ("SFR", "SFH")
    generic_dialogues: int = 200
    extend_domains: tuple[str, ...] = ()
    extend_dialogues: int = 0
    extend_checkpoints: tuple[int, ...] | None = None
    restate: float = 0.0
    volunteer: float = 0.5
    n_entities: int = 150
    db_seed: int = 0
    max_turns: int = 30
    transcripts: bool = False

    def __post_init__(self):
        for name in ("domains", "seeds", "eval_domains", "generic_domains", "extend_domains",
                     "checkpoints", "extend_checkpoints"):
            v = getattr(self, name)
            if v is not None and not isinstance(v, tuple):
                object.__setattr__(self, name, tuple(v))
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if not self.domains:
            raise ConfigError("at least one domain is required")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.train_dialogues <= 0 or self.eval_dialogues <= 0:
            raise ConfigError("dialogue counts must be positive")
        unknown = set(self.hyper) - set(DEFAULT_HYPER)
        if unknown:
            raise ConfigError(f"unknown hyper keys {sorted(unknown)}")
        for did in self.all_domains:
            if did not in BUILTIN_DOMAINS:
                raise ConfigError(f"unknown domain {did!r}; built-ins are {BUILTIN_DOMAINS}")
        if self.extend_domains and self.strategy not in COMMITTEE_STRATEGIES:
            raise ConfigError("extend_domains needs a committee strategy")
        if self.extend_domains and self.extend_dialogues <= 0:
            raise ConfigError("extend_dialogues must be positive when extending")
        for cps in (self.checkpoints or (), self.extend_checkpoints or ()):
            if any(c < 0 for c in cps):
                raise ConfigError("checkpoints must be non-negative")
        if self.strategy in ("INDOM", "GOLD", "PRIOR-ADAPT") and \
                not set(self.targets) <= set(self.domains):
            raise ConfigError(f"{self.strategy} can only evaluate its training domains")
        ErrorModel(self.error_rate)  # validates the rate

    @property
    def all_domains(self) -> tuple[str, ...]:
        seen = dict.fromkeys(self.domains + (self.eval_domains or ()) + self.extend_domains)
        if self.strategy == "PRIOR-ADAPT":
            seen.update(dict.fromkeys(self.generic_domains))
        return tuple(seen)

    @property
    def targets(self) -> tuple[str, ...]:
        return self.eval_domains or self.domains

    @property
    def hyperparameters(self) -> dict:
        return {**DEFAULT_HYPER, **self.hyper}

    def schedule(self) -> tuple[int, ...]:
        cps = self.checkpoints if self.checkpoints is not None else DEFAULT_CHECKPOINTS
        return tuple(sorted({c for c in cps if c <= self.train_dialogues} | {self.train_dialogues}))

    def extend_schedule(self) -> tuple[int, ...]:
        cps = self.extend_checkpoints if self.extend_checkpoints is not None else (0,)
        return tuple(sorted({c for c in cps if c <= self.extend_dialogues} | {self.extend_dialogues}))

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v
                for k, v in dataclasses.asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# -- environment ---------------------------------------------------------------

def domain_code(domain_id: str) -> int:
    return zlib.crc32(domain_id.encode())


def dialogue_rng(seed: int, domain_id: str, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, domain_code(domain_id), stream, index])


class Environment:
    """Domains, simulated users, error model and reward of one configuration."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.domains = {d: builtin_domain(d, config.n_entities, config.db_seed)
                        for d in config.all_domains}
        self.error_model = ErrorModel(config.error_rate)
        self.reward = RewardConfig(max_turns=config.max_turns)
        self.masks = MaskConfig()

    def __getitem__(self, domain_id: str) -> Domain:
        return self.domains[domain_id]

    def run(self, actor, domain_id: str, rng: np.random.Generator, train: bool) -> Episode:
        domain = self.domains[domain_id]
        goal_rng, dlg_rng = rng.spawn(2)
        user = SimulatedUser(sample_goal(domain, goal_rng), domain, self.config.restate, goal_rng,
                             self.config.volunteer)
        return run_dialogue(actor, user, dlg_rng, train_mode=train, reward_config=self.reward,
                            error_model=self.error_model, masks=self.masks)


# -- statistics ----------------------------------------------------------------

def mean_ci(x: Sequence[float]) -> tuple[float, float]:
    """Mean and 95% normal-approximation half-width, 1.96 standard errors."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("no samples")
    if x.size == 1:
        return float(x[0]), 0.0
    return float(x.mean()), float(1.96 * x.std(ddof=1) / np.sqrt(x.size))


def moving_average(rewards: Sequence[float], window: int = 100) -> np.ndarray:
    """Element ``t`` is the mean of the last ``min(t + 1, window)`` values."""
    if window < 1:
        raise ValueError("window must be at least 1")
    x = np.asarray(rewards, dtype=float)
    c = np.concatenate([[0.0], np.cumsum(x)])
    t = np.arange(1, x.size + 1)
    lo = np.maximum(t - window, 0)
    return (c[t] - c[lo]) / (t - lo)


@dataclass(frozen=True)
class DialogueStats:
    rewards: np.ndarray
    successes: np.ndarray
    turns: np.ndarray

    @classmethod
    def from_episodes(cls, episodes: Iterable[Episode]) -> "DialogueStats":
        eps = list(episodes)
        return cls(np.array([e.total for e in eps], float),
                   np.array([e.success for e in eps], float),
                   np.array([e.n_turns for e in eps], float))

    @classmethod
    def pooled(cls, stats: Iterable["DialogueStats"]) -> "DialogueStats":
        stats = list(stats)
        return cls(*(np.concatenate([getattr(s, f) for s in stats])
                     for f in ("rewards", "successes", "turns")))

    def summary(self) -> dict:
        r, rc = mean_ci(self.rewards)
        s, sc = mean_ci(self.successes)
        t, tc = mean_ci(self.turns)
        return {"reward": r, "reward_ci": rc, "success": s, "success_ci": sc,
                "turns": t, "turns_ci": tc}


@dataclass
class EvalReport:
    """Per-domain pooled statistics plus the per-seed rows they came from."""
    domains: dict[str, dict]
    rows: list[dict]

    @classmethod
    def from_rows(cls, rows: list[dict], stats: list[DialogueStats]) -> "EvalReport":
        by_domain: dict[str, list[DialogueStats]] = {}
        for row, st in zip(rows, stats):
            by_domain.setdefault(row["domain"], []).append(st)
        return cls({d: DialogueStats.pooled(s).summary() for d, s in by_domain.items()}, rows)


def evaluate_actor(env: Environment, actor, domain_id: str, n: int, seed: int,
                   transcript: io.TextIOBase | None = None) -> DialogueStats:
    """``n`` greedy dialogues; the users depend only on (seed, domain, index)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    episodes = []
    for j in range(n):
        ep = env.run(actor, domain_id, dialogue_rng(seed, domain_id, EVAL, j), train=False)
        if transcript is not None:
            ep.write_transcript(transcript)
        episodes.append(ep)
    return DialogueStats.from_episodes(episodes)


def evaluate(actor, domain_id: str, n: int, seeds: Sequence[int],
             env: Environment | None = None, strategy: str = "", train_dialogues: int = 0
             ) -> EvalReport:
    """Greedy evaluation of a fixed actor over several evaluation seeds."""
    env = env or Environment(ExperimentConfig((domain_id,), "INDOM", 1, n, tuple(seeds)))
    rows, stats = [], []
    for s in seeds:
        st = evaluate_actor(env, actor, domain_id, n, s)
        rows.append(result_row(strategy, domain_id, train_dialogues, s, st))
        stats.append(st)
    return EvalReport.from_rows(rows, stats)


def result_row(strategy: str, domain: str, train_dialogues: int, seed: int, st: DialogueStats) -> dict:
    return {"strategy": strategy, "domain": domain, "train_dialogues": train_dialogues,
            "seed": seed, **st.summary()}


def write_csv(rows: Sequence[dict], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r[c] if not isinstance(r[c], float) else repr(r[c]) for c in CSV_COLUMNS])


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        out = []
        for r in csv.DictReader(fh):
            r = dict(r)
            r["train_dialogues"] = int(r["train_dialogues"])
            r["seed"] = int(r["seed"])
            for c in CSV_COLUMNS[4:]:
                r[c] = float(r[c])
            out.append(r)
        return out


# -- learners --------------------------------------------------------------------

def make_hyper(config: ExperimentConfig) -> GPHyper:
    h = config.hyperparameters
    return GPHyper(sigma2=h["sigma2"], gamma=h["gamma"], dict_cap=int(h["dict_cap"]),
                   novelty=h["novelty"])


def make_space(env: Environment, home: str, domains: Sequence[str], mode: str = "entropy"
               ) -> KernelSpace:
    h = env.config.hyperparameters
    return KernelSpace(env[home], [env[d] for d in domains], mode,
                       {"goal": h["goal_weight"], "history": h["history_weight"]})


def generic_mode(domains: Iterable[str]) -> str:
    """Shared-slot kernel for the venue pair, entropy matching otherwise."""
    return "shared" if set(domains) <= VENUE_DOMAINS else "entropy"


class Learner:
    """Actor/learner for one strategy; ``policies`` lists what gets saved."""

    label = ""

    def actor(self, domain_id: str):
        raise NotImplementedError

    def learn(self, episode: Episode) -> None:
        raise NotImplementedError

    def policies(self) -> dict[str, GPPolicy]:
        raise NotImplementedError


class PerDomainLearner(Learner):
    """One independent policy per domain (INDOM, GOLD, PRIOR-ADAPT)."""

    def __init__(self, policies: dict[str, GPPolicy], persistence: float):
        self._policies = policies
        self.persistence = persistence

    def actor(self, domain_id):
        return PolicyActor(self._policies[domain_id], self.persistence)

    def learn(self, episode):
        self._policies[episode.domain_id].ingest_episode(*_split(episode.trace()))

    def policies(self):
        return dict(self._policies)


class SharedLearner(Learner):
    """A single policy fed by every domain (GEN)."""

    def __init__(self, policy: GPPolicy, persistence: float):
        self.policy = policy
        self.persistence = persistence

    def actor(self, domain_id):
        return PolicyActor(self.policy, self.persistence)

    def learn(self, episode):
        self.policy.ingest_episode(*_split(episode.trace()))

    def policies(self):
        return {"generic": self.policy}


class CommitteeLearner(Learner):
    def __init__(self, committee: PolicyCommittee, strategy: str, persistence: float,
                 attribution_log: list[str] | None = None):
        self.committee = committee
        self.strategy = RewardStrategy(strategy)
        self.persistence = persistence
        self.attribution_log = attribution_log

    def actor(self, domain_id):
        return CommitteeActor(self.committee, self.persistence)

    def learn(self, episode):
        w, att = train_committee_episode(self.committee, self.strategy, episode)
        if self.attribution_log is not None:
            self.attribution_log.append(attribution_log_line(
                self.strategy, att, w, episode.domain_id, self.committee))

    def policies(self):
        return {m.member_id: m.policy for m in self.committee.members}

    def add_member(self, env: Environment, domain_id: str) -> None:
        covered = list(self.committee.members[0].policy.space.domains)
        policy = GPPolicy(make_space(env, domain_id, covered), make_hyper(env.config))
        members = self.committee.members + [CommitteeMember(domain_id, policy)]
        self.committee = PolicyCommittee(members, self.committee.serving_domains)


def _split(trace):
    return [p for p, _ in trace], [r for _, r in trace[:-1]]


def build_committee(env: Environment, homes: Sequence[str]) -> PolicyCommittee:
    """One empty member per home domain; every member covers all configured domains."""
    covered = env.config.all_domains
    hyper = make_hyper(env.config)
    return PolicyCommittee([CommitteeMember(d, GPPolicy(make_space(env, d, covered), hyper))
                            for d in homes], serving_domains=covered)


def train_generic(env: Environment, domains: Sequence[str], n: int, seed: int,
                  stream: int = TRAIN) -> GPPolicy:
    """GEN policy on ``n`` round-robin dialogues per domain."""
    cfg = env.config
    policy = GPPolicy(make_space(env, domains[0], domains, generic_mode(domains)), make_hyper(cfg))
    learner = SharedLearner(policy, cfg.hyperparameters["persistence"])
    for i in range(n):
        for d in domains:
            learner.learn(env.run(learner.actor(d), d, dialogue_rng(seed, d, stream, i), True))
    return policy


def build_learner(env: Environment, seed: int, attribution_log: list[str] | None = None
                  ) -> Learner:
    cfg = env.config
    rho = cfg.hyperparameters["persistence"]
    hyper = make_hyper(cfg)
    s = cfg.strategy
    if s in ("INDOM", "GOLD"):
        return PerDomainLearner({d: GPPolicy(make_space(env, d, [d]), hyper) for d in cfg.domains},
                                rho)
    if s == "GEN":
        doms = cfg.all_domains
        policy = GPPolicy(make_space(env, cfg.domains[0], doms, generic_mode(doms)), hyper)
        return SharedLearner(policy, rho)
    if s == "PRIOR-ADAPT":
        generic = train_generic(env, cfg.generic_domains, cfg.generic_dialogues, seed, GENERIC)
        return PerDomainLearner({d: adapt(generic, env, d) for d in cfg.domains}, rho)
    return CommitteeLearner(build_committee(env, cfg.domains), s, rho, attribution_log)


def adapt(generic: GPPolicy, env: Environment, domain_id: str) -> GPPolicy:
    """Empty in-domain policy using the generic posterior mean as its prior."""
    if not generic.space.covers(domain_id):
        try:
            generic.space.add_domain(env[domain_id])
        except ValueError as exc:
            smap = slot_map_for(env[domain_id], generic.space.home, generic.space.mode)
            raise ConfigError(
                f"generic policy cannot reach {domain_id!r} (slots without a counterpart: "
                f"{list(smap.unmatched_a)}): {exc}") from exc
    return adapted_policy(generic, make_space(env, domain_id, [domain_id]), make_hyper(env.config))


# -- schedules -------------------------------------------------------------------

@dataclass
class SeedResult:
    seed: int
    rows: list[dict]
    stats: list[DialogueStats]
    learner: Learner
    learning_curve: dict[str, list[float]]
    attribution: list[str]


def _evaluate_all(env, learner, label, count, seed, domains, rows, stats, out):
    for d in domains:
        fh = None
        if out is not None and env.config.transcripts:
            fh = open(out / f"transcripts_{label}_{d}_{count}_seed{seed}.jsonl", "w")
        try:
            st = evaluate_actor(env, learner.actor(d), d, env.config.eval_dialogues, seed, fh)
        finally:
            if fh is not None:
                fh.close()
        rows.append(result_row(label, d, count, seed, st))
        stats.append(st)
    if out is not None:
        save_learner(learner, out / "snapshots" / f"seed{seed}" / f"{label}_{count}", env.config)


def run_seed(config: ExperimentConfig, seed: int, out: str | Path | None = None) -> SeedResult:
    """Train one seed on the round-robin schedule, evaluating at each checkpoint."""
    env = Environment(config)
    out = Path(out) if out is not None else None
    attribution: list[str] = []
    learner = build_learner(env, seed, attribution)
    rows: list[dict] = []
    stats: list[DialogueStats] = []
    curve: dict[str, list[float]] = {d: [] for d in config.domains}
    label = config.strategy
    cps = config.schedule()
    gold = len(config.domains) if config.strategy == "GOLD" else 1
    done = 0
    for c in cps:
        while done < c:
            # GOLD gives each domain N dialogues for every one the others get
            for d in config.domains:
                for k in range(gold):
                    ep = env.run(learner.actor(d), d,
                                 dialogue_rng(seed, d, TRAIN, done * gold + k), True)
                    learner.learn(ep)
                    curve[d].append(ep.total)
            done += 1
        _evaluate_all(env, learner, label, c, seed, config.targets, rows, stats, out)

    if config.extend_domains:
        assert isinstance(learner, CommitteeLearner)
        for d in config.extend_domains:
            if learner.committee.member_index(d) is None:
                learner.add_member(env, d)
            curve.setdefault(d, [])
        label = f"{config.strategy}>{'+'.join(config.extend_domains)}"
        done = 0
        for c in config.extend_schedule():
            while done < c:
                for d in config.extend_domains:
                    ep = env.run(learner.actor(d), d, dialogue_rng(seed, d, EXTEND, done), True)
                    learner.learn(ep)
                    curve[d].append(ep.total)
                done += 1
            _evaluate_all(env, learner, label, c, seed, config.targets, rows, stats, out)
    if out is not None and attribution:
        (out / f"attribution_seed{seed}.jsonl").write_text("\n".join(attribution) + "\n")
    return SeedResult(seed, rows, stats, learner, curve, attribution)


def thread_cap() -> int:
    """Worker processes allowed by ``GPDM_THREADS`` (default: all cores)."""
    raw = os.environ.get("GPDM_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"GPDM_THREADS must be an integer, got {raw!r}") from exc
    return max(1, n)


def _run_seed_rows(config_dict: dict, seed: int, out: str | None):
    r = run_seed(ExperimentConfig.from_dict(config_dict), seed, out)
    return r.rows, r.stats


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[dict]
    stats: list[DialogueStats]
    seeds: list[SeedResult] = field(default_factory=list)

    def report(self, strategy: str | None = None, train_dialogues: int | None = None
               ) -> EvalReport:
        keep = [(r, s) for r, s in zip(self.rows, self.stats)
                if (strategy is None or r["strategy"] == strategy)
                and (train_dialogues is None or r["train_dialogues"] == train_dialogues)]
        return EvalReport.from_rows([r for r, _ in keep], [s for _, s in keep])

    def per_seed(self, domain: str, train_dialogues: int, strategy: str | None = None
                 ) -> np.ndarray:
        """Mean evaluation reward per seed, in seed order."""
        strategy = strategy or self.config.strategy
        return np.array([r["reward"] for r in self.rows if r["domain"] == domain
                         and r["train_dialogues"] == train_dialogues
                         and r["strategy"] == strategy])


def train(config: ExperimentConfig, out: str | Path | None = None, keep_learners: bool = True
          ) -> ExperimentResult:
    """Run every seed (in parallel up to ``GPDM_THREADS`` processes when learners are
    not needed in memory), then write ``results.csv`` to ``out`` if given."""
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "config.json").write_text(json.dumps(config.to_dict(), indent=2) + "\n")
    workers = min(thread_cap(), len(config.seeds))
    seeds: list[SeedResult] = []
    rows: list[dict] = []
    stats: list[DialogueStats] = []
    if keep_learners or workers == 1:
        for s in config.seeds:
            r = run_seed(config, s, out)
            if keep_learners:
                seeds.append(r)
            rows += r.rows
            stats += r.stats
    else:
        with ProcessPoolExecutor(workers) as pool:
            futures = [pool.submit(_run_seed_rows, config.to_dict(), s,
                                   None if out is None else str(out)) for s in config.seeds]
            for f in futures:
                r_rows, r_stats = f.result()
                rows += r_rows
                stats += r_stats
    if out is not None:
        with open(Path(out) / "results.csv", "w", newline="") as fh:
            write_csv(rows, fh)
    return ExperimentResult(config, rows, stats, seeds)


# -- persistence -----------------------------------------------------------------

def save_learner(learner: Learner, path: str | Path, config: ExperimentConfig) -> Path:
    """Write one JSON file per policy plus a manifest naming them."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, policy in learner.policies().items():
        fname = f"{name}.json"
        (path / fname).write_text(json.dumps(policy.to_dict()))
        files[name] = fname
    manifest = {"version": SNAPSHOT_VERSION, "kind": type(learner).__name__,
                "strategy": config.strategy, "config": config.to_dict(), "policies": files}
    if isinstance(learner, CommitteeLearner):
        manifest["committee"] = learner.committee.manifest(files)
    (path / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return path


def load_learner(path: str | Path) -> tuple[Learner, ExperimentConfig]:
    path = Path(path)
    try:
        manifest = json.loads((path / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"cannot read snapshot manifest in {path}: {exc}") from exc
    if manifest.get("version") != SNAPSHOT_VERSION:
        raise SnapshotError(f"snapshot version {manifest.get('version')!r} != {SNAPSHOT_VERSION!r}")
    config = ExperimentConfig.from_dict(manifest["config"])
    env = Environment(config)
    policies = {}
    for name, fname in manifest["policies"].items():
        try:
            doc = json.loads((path / fname).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SnapshotError(f"cannot read policy snapshot {fname}: {exc}") from exc
        policies[name] = GPPolicy.from_dict(doc, env.__getitem__)
    rho = config.hyperparameters["persistence"]
    kind = manifest["kind"]
    if kind == "PerDomainLearner":
        return PerDomainLearner(policies, rho), config
    if kind == "SharedLearner":
        return SharedLearner(policies["generic"], rho), config
    if kind == "CommitteeLearner":
        spec = manifest["committee"]
        members = [CommitteeMember(m["member_id"], policies[m["member_id"]])
                   for m in spec["members"]]
        return CommitteeLearner(PolicyCommittee(members, spec["serving_domains"]),
                                config.strategy, rho), config
    raise SnapshotError(f"unknown learner kind {kind!r}")
