"""A generic policy as the prior of an in-domain one.

A policy trained on pooled SFR and SFH dialogues supplies the prior mean of a
fresh SFR policy.  Before it has seen any SFR data the adapted policy already
behaves like the generic one, and after some in-domain training it is
compared with a policy that started from a zero prior.

    python demos/02_generic_prior.py          # two seeds, a few minutes
"""

from gpdm.harness import ExperimentConfig, train

SEEDS = (0, 1)
adapted = train(ExperimentConfig(("SFR",), "PRIOR-ADAPT", 100, 200, SEEDS, checkpoints=(0,),
                                 generic_domains=("SFR", "SFH"), generic_dialogues=100),
                keep_learners=False)
plain = train(ExperimentConfig(("SFR",), "INDOM", 100, 200, SEEDS, checkpoints=(0,)),
              keep_learners=False)

print("SFR mean evaluation reward (per seed)")
for n in (0, 100):
    print(f"  after {n:>3} in-domain dialogues: "
          f"adapted {adapted.per_seed('SFR', n).round(2)}  "
          f"zero prior {plain.per_seed('SFR', n).round(2)}")
