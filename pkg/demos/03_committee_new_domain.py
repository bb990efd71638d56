"""Growing a committee to a new domain.

A committee of SFR and SFH policies is trained with SCALE reward sharing, then
asked to serve the laptop domain L11.  A new member is added for L11 and
training continues there; the restaurant performance is tracked alongside.
The per-turn reward split is written to ``attribution_seed<N>.jsonl``.

With short training some seeds settle on ending the dialogue at once: ``bye``
has a certain return of -1 while every other action still looks worse.  Two
seeds and 150 dialogues per domain keep that effect visible but small.

    python demos/03_committee_new_domain.py [OUT_DIR]
"""

import sys

from gpdm.harness import ExperimentConfig, train

out = sys.argv[1] if len(sys.argv) > 1 else None
cfg = ExperimentConfig(("SFR", "SFH"), "SCALE", 150, 200, (0, 1), checkpoints=(),
                       eval_domains=("SFR", "L11"), extend_domains=("L11",),
                       extend_dialogues=150, extend_checkpoints=(0, 75))
result = train(cfg, out)

for n in (0, 75, 150):
    rep = result.report("SCALE>L11", n).domains
    print(f"after {n:>3} L11 dialogues: "
          + "  ".join(f"{d} {s['reward']:6.2f} ± {s['reward_ci']:.2f}" for d, s in rep.items()))
committee = result.seeds[0].learner.committee
print("members:", [m.home for m in committee.members])
