"""Gaussian-process dialogue management across domains.

GP-Sarsa policies over belief/action pairs, kernels that compare domains
through entropy-ranked abstract slots, generic policies used as priors,
Bayesian committees of per-domain policies and multi-agent reward sharing,
all driven by an agenda-based simulated user.
"""

from .acts import DialogueAct, SummaryAction, parse_act
from .agents import RewardStrategy, distribute
from .belief import BeliefState, NBestInput, feature_vector, init_belief, update_belief
from .committee import CommitteeMember, PolicyCommittee, bcm_combine
from .dm import run_dialogue
from .domains import BUILTIN_DOMAINS, builtin_domain
from .gp import GPHyper, GPPolicy, QEstimate, adapted_policy, as_prior
from .harness import ExperimentConfig, evaluate, load_learner, save_learner, train
from .kernel import KernelSpace, Point, joint_kernel
from .ontology import Domain, abstract_ordering, match_slots, normalized_entropy

__all__ = [
    "DialogueAct", "SummaryAction", "parse_act", "RewardStrategy", "distribute",
    "BeliefState", "NBestInput", "feature_vector", "init_belief", "update_belief",
    "CommitteeMember", "PolicyCommittee", "bcm_combine", "run_dialogue",
    "BUILTIN_DOMAINS", "builtin_domain", "GPHyper", "GPPolicy", "QEstimate",
    "adapted_policy", "as_prior", "ExperimentConfig", "evaluate", "load_learner",
    "save_learner", "train", "KernelSpace", "Point", "joint_kernel", "Domain",
    "abstract_ordering", "match_slots", "normalized_entropy",
]
__version__ = "0.1.0"
