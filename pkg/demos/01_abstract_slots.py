"""How two unlike domains become comparable.

Slots are ranked inside each semantic class by normalised entropy, and slots
of equal rank are paired across domains.  A restaurant belief can then be
scored against a laptop belief by the same kernel.

    python demos/01_abstract_slots.py
"""

import numpy as np

from gpdm import SummaryAction, builtin_domain, init_belief, update_belief
from gpdm.acts import DialogueAct
from gpdm.belief import NBestInput, feature_vector
from gpdm.kernel import KernelSpace, Point
from gpdm.ontology import entropy_table, slot_map_for

sfr, l11 = builtin_domain("SFR"), builtin_domain("L11")

for dom in (sfr, l11):
    print(f"\n{dom.domain_id}: requestable slots by normalised entropy")
    for cls, slot, eta, rank in entropy_table(dom.ontology, dom.db):
        if cls == "requestable":
            print(f"  {rank}. {slot:<16} {eta:.4f}")

smap = slot_map_for(sfr, l11)
print("\nSFR -> L11 pairing")
for a, b in smap.a_to_b().items():
    print(f"  {a:<16} ~ {b}")
print(f"  unpaired in L11: {', '.join(smap.unmatched_b)}")


def told(domain, slot, value):
    b = init_belief(domain)
    return update_belief(b, NBestInput(((DialogueAct("inform", slot, value), 0.9),)), None)


# a restaurant user fixing the top-ranked slot, a laptop user doing the same
top_sfr, top_l11 = sfr.ranked("requestable")[0], l11.ranked("requestable")[0]
b_sfr = told(sfr, top_sfr, sfr.ontology.slot(top_sfr).values[0])
b_l11 = told(l11, top_l11, l11.ontology.slot(top_l11).values[0])

space = KernelSpace(sfr, [l11])
act = SummaryAction("inform")


def similarity(a, b):
    p, q = Point.from_belief(a, act), Point.from_belief(b, act)
    return space.kernel(p, q) / np.sqrt(space.kernel(p, p) * space.kernel(q, q))


second = l11.ranked("requestable")[1]
b_other = told(l11, second, l11.ontology.slot(second).values[0])
print(f"\nnormalised kernel under 'inform', SFR user fixing {top_sfr!r} against")
print(f"  L11 user fixing {top_l11!r} (same rank):   {similarity(b_sfr, b_l11):.3f}")
print(f"  L11 user fixing {second!r} (rank two): {similarity(b_sfr, b_other):.3f}")
print(f"feature nodes per belief: SFR {len(feature_vector(b_sfr))}, L11 {len(feature_vector(b_l11))}")
