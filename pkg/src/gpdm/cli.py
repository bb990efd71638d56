"""Command-line entry point ``gpdm``.

Subcommands::

    gpdm train       --config cfg.json --out runs/x [--seed N]
    gpdm evaluate    --config cfg.json --out runs/x --snapshot runs/x/snapshots/seed0/INDOM_200
    gpdm adapt       --config cfg.json --out runs/x [--generic SNAPSHOT]
    gpdm committee   --config cfg.json --out runs/x
    gpdm multiagent  --config cfg.json --out runs/x
    gpdm entropy     SFR
    gpdm chat        SFR [--snapshot DIR]

``committee`` and ``multiagent`` are ``train`` with the strategy checked to be
MBCM or one of NAIV/WINN/SCALE respectively.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .acts import parse_act
from .belief import NBestInput, init_belief, update_belief
from .dm import PolicyActor, candidate_actions, summary_to_master
from .domains import BUILTIN_DOMAINS, builtin_domain
from .gp import GPPolicy, SnapshotError
from .harness import (TRAIN, ConfigError, Environment, ExperimentConfig, PerDomainLearner,
                      SharedLearner, adapt, dialogue_rng, evaluate_actor, load_learner,
                      make_hyper, make_space, result_row, train, write_csv)
from .ontology import entropy_table

def _config(args, strategies: tuple[str, ...] | None = None, force: str | None = None
            ) -> ExperimentConfig:
    if args.config is None:
        raise ConfigError("--config is required")
    cfg = ExperimentConfig.from_json(args.config)
    if force is not None and cfg.strategy != force:
        cfg = cfg.replace(strategy=force)
    if strategies is not None and cfg.strategy not in strategies:
        raise ConfigError(f"{args.command} needs strategy in {strategies}, got {cfg.strategy!r}")
    if args.seed is not None:
        cfg = cfg.replace(seeds=(args.seed,))
    return cfg


def _summarise(result) -> None:
    final = result.config.train_dialogues
    for label in dict.fromkeys(r["strategy"] for r in result.rows):
        counts = sorted({r["train_dialogues"] for r in result.rows if r["strategy"] == label})
        rep = result.report(label, counts[-1] if label != result.config.strategy else final)
        for d, s in rep.domains.items():
            print(f"{label:>14} {d:>4} reward {s['reward']:7.2f} ± {s['reward_ci']:.2f}  "
                  f"success {100 * s['success']:5.1f} ± {100 * s['success_ci']:.1f}  "
                  f"turns {s['turns']:5.2f}")


def cmd_train(args, strategies=None, force=None) -> int:
    cfg = _config(args, strategies, force)
    result = train(cfg, args.out, keep_learners=False)
    _summarise(result)
    if args.out:
        print(f"wrote {Path(args.out) / 'results.csv'}")
    return 0


def cmd_committee(args) -> int:
    return cmd_train(args, ("MBCM",))


def cmd_multiagent(args) -> int:
    return cmd_train(args, ("NAIV", "WINN", "SCALE"))


def cmd_adapt(args) -> int:
    if args.generic is None:
        return cmd_train(args, force="PRIOR-ADAPT")
    # adapt a stored generic policy instead of training one
    learner, _ = load_learner(args.generic)
    if not isinstance(learner, SharedLearner):
        raise SnapshotError(f"{args.generic} does not hold a generic (GEN) policy")
    cfg = _config(args, force="INDOM")
    env = Environment(cfg)
    rows = []
    for seed in cfg.seeds:
        policies = {d: adapt(learner.policy, env, d) for d in cfg.domains}
        ad = PerDomainLearner(policies, cfg.hyperparameters["persistence"])
        done = 0
        for c in cfg.schedule():
            while done < c:
                for d in cfg.domains:
                    ad.learn(env.run(ad.actor(d), d, dialogue_rng(seed, d, TRAIN, done), True))
                done += 1
            for d in cfg.targets:
                st = evaluate_actor(env, ad.actor(d), d, cfg.eval_dialogues, seed)
                rows.append(result_row("ADAPT", d, c, seed, st))
    _emit(rows, args.out)
    return 0


def _emit(rows, out) -> None:
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        with open(Path(out) / "results.csv", "w", newline="") as fh:
            write_csv(rows, fh)
        print(f"wrote {Path(out) / 'results.csv'}")
    else:
        write_csv(rows, sys.stdout)


def cmd_evaluate(args) -> int:
    if args.snapshot is None:
        raise ConfigError("evaluate needs --snapshot")
    learner, stored = load_learner(args.snapshot)
    cfg = _config(args) if args.config else stored
    env = Environment(stored.replace(eval_dialogues=cfg.eval_dialogues, seeds=cfg.seeds))
    rows = []
    for seed in cfg.seeds:
        for d in stored.targets:
            st = evaluate_actor(env, learner.actor(d), d, cfg.eval_dialogues, seed)
            rows.append(result_row(stored.strategy, d, 0, seed, st))
    _emit(rows, args.out)
    return 0


def cmd_entropy(args) -> int:
    domain = builtin_domain(args.domain)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("class", "slot", "entropy", "rank"))
    for cls, slot, eta, rank in entropy_table(domain.ontology, domain.db):
        w.writerow((cls, slot, repr(eta), rank))
    return 0


def cmd_chat(args, stdin=None, stdout=None) -> int:
    """Type user acts such as ``inform(food=thai)``; the policy answers each turn."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    if args.snapshot:
        learner, cfg = load_learner(args.snapshot)
        actor = learner.actor(args.domain)
    else:
        cfg = ExperimentConfig((args.domain,), "INDOM", 1, 1, (0,))
        env = Environment(cfg)
        actor = PolicyActor(GPPolicy(make_space(env, args.domain, [args.domain]), make_hyper(cfg)))
    domain = builtin_domain(args.domain, cfg.n_entities, cfg.db_seed)
    rng = np.random.default_rng(args.seed or 0)
    belief = init_belief(domain)
    last = None
    print(f"[{args.domain}] type dialogue acts, e.g. inform(pricerange=cheap); bye() ends",
          file=stdout)
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            user_act = parse_act(line)
        except ValueError as exc:
            print(f"? {exc}", file=stdout)
            continue
        if user_act.act == "bye":
            break
        belief = update_belief(belief, NBestInput(((user_act, 1.0),)), last)
        action, _ = actor.choose(belief, candidate_actions(belief), rng, False)
        last = summary_to_master(action, belief)
        print(f"system: {last}   [{action}]", file=stdout)
        if action.kind == "bye":
            break
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gpdm", description="GP-Sarsa multi-domain dialogue policies")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="run this single seed")
        return sp

    common(sub.add_parser("train", help="train a strategy over its seeds"))
    common(sub.add_parser("committee", help="train an MBCM committee"))
    common(sub.add_parser("multiagent", help="train a NAIV/WINN/SCALE committee"))
    sp = common(sub.add_parser("adapt", help="adapt a generic policy to in-domain data"))
    sp.add_argument("--generic", help="snapshot of a trained GEN policy")
    sp = common(sub.add_parser("evaluate", help="evaluate a stored snapshot"))
    sp.add_argument("--snapshot", help="snapshot directory")
    sp = common(sub.add_parser("entropy", help="normalised entropy table as CSV"))
    sp.add_argument("domain", choices=BUILTIN_DOMAINS)
    sp = common(sub.add_parser("chat", help="interactive act-level dialogue"))
    sp.add_argument("domain", choices=BUILTIN_DOMAINS)
    sp.add_argument("--snapshot", help="snapshot directory holding a policy for the domain")
    return p


COMMANDS = {"train": cmd_train, "committee": cmd_committee, "multiagent": cmd_multiagent,
            "adapt": cmd_adapt, "evaluate": cmd_evaluate, "entropy": cmd_entropy,
            "chat": cmd_chat}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, SnapshotError, json.JSONDecodeError, OSError) as exc:
        print(f"gpdm {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
