import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpdm.acts import SummaryAction
from gpdm.belief import feature_vector, init_belief
from gpdm.committee import (VARIANCE_FLOOR, CommitteeMember, PolicyCommittee, bcm_arrays,
                            bcm_combine, committee_q, committee_select_action)
from gpdm.domains import builtin_domain
from gpdm.gp import GPHyper, GPPolicy, QEstimate, select_action
from gpdm.kernel import KernelSpace, Point

from oracles import random_point

ALL = ("SFR", "SFH", "L6")


def bcm_direct(means, variances, k_star):
    """Precision-weighted combination with the prior correction, term by term."""
    m = len(means)
    prec = -(m - 1) / k_star
    acc = 0.0
    for mu, v in zip(means, variances):
        v = max(v, VARIANCE_FLOOR)
        prec += 1.0 / v
        acc += mu / v
    if prec <= 0:
        prec = sum(1.0 / max(v, VARIANCE_FLOOR) for v in variances)
    return acc / prec, 1.0 / prec


def _committee(homes=ALL, covered=ALL, train=0, seed=0):
    rng = np.random.default_rng(seed)
    doms = [builtin_domain(d) for d in covered]
    members = []
    for h in homes:
        pol = GPPolicy(KernelSpace(builtin_domain(h), doms), GPHyper(sigma2=1.0))
        for _ in range(train):
            pts = [random_point(builtin_domain(h), rng, n_slots=3) for _ in range(3)]
            pol.ingest_episode(pts + [Point.terminal(h)], list(rng.normal(0, 3, 3)))
        members.append(CommitteeMember(h, pol))
    return PolicyCommittee(members, covered)


@pytest.mark.parametrize("ests, k, expected", [
    ([QEstimate(1, 0.5), QEstimate(3, 0.5)], 1.0, (8 / 3, 1 / 3)),
    ([QEstimate(1, 1.0), QEstimate(3, 1.0)], 1.0, (4.0, 1.0)),
])
def test_worked_examples(ests, k, expected):
    q = bcm_combine(ests, k)
    assert q.mean == pytest.approx(expected[0], abs=1e-12)
    assert q.variance == pytest.approx(expected[1], abs=1e-12)


def test_single_member_identity():
    e = QEstimate(2.5, 0.7)
    assert bcm_combine([e], 3.0) is e


def test_direct_oracle_on_random_draws():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        m = int(rng.integers(1, 6))
        mu = rng.normal(0, 5, m)
        var = rng.uniform(1e-3, 4, m)
        k = float(rng.uniform(0.1, 5))
        got = bcm_combine([QEstimate(a, b) for a, b in zip(mu, var)], k)
        want = (mu[0], var[0]) if m == 1 else bcm_direct(mu, var, k)
        assert got.mean == pytest.approx(want[0], abs=1e-10, rel=1e-10)
        assert got.variance == pytest.approx(want[1], abs=1e-10, rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(0.01, 10)), min_size=2, max_size=6),
       st.floats(0.1, 10), st.randoms(use_true_random=False))
def test_permutation_invariance(pairs, k, rnd):
    a = bcm_combine([QEstimate(*p) for p in pairs], k)
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    b = bcm_combine([QEstimate(*p) for p in shuffled], k)
    assert a.mean == pytest.approx(b.mean, rel=1e-9, abs=1e-9)
    assert a.variance == pytest.approx(b.variance, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("m", [2, 3, 5])
def test_uninformative_members_keep_prior_precision(m):
    v = 0.8
    q = bcm_combine([QEstimate(float(i), v) for i in range(m)], v)
    assert 1 / q.variance == pytest.approx(1 / v)


def test_fallback_on_non_positive_precision():
    mean, var, fb = bcm_arrays(np.array([[1.0], [3.0]]), np.array([[4.0], [4.0]]), 1.0)
    assert fb[0]
    assert var[0] == pytest.approx(2.0) and mean[0] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        bcm_arrays(np.zeros((2, 1)), np.ones((2, 1)), 0.0)
    with pytest.raises(ValueError):
        bcm_combine([], 1.0)


def test_committee_validation():
    pol = GPPolicy(KernelSpace(builtin_domain("SFR")))
    with pytest.raises(ValueError):
        PolicyCommittee([])
    with pytest.raises(ValueError, match="duplicate"):
        PolicyCommittee([CommitteeMember("a", pol), CommitteeMember("a", pol)])
    with pytest.raises(ValueError, match="slot map"):
        PolicyCommittee([CommitteeMember("a", pol)], ["SFR", "L6"])


def test_single_member_committee_equals_member():
    c = _committee(("SFR",), ("SFR",), train=4)
    b = init_belief(builtin_domain("SFR"))
    for a in (SummaryAction("inform"), SummaryAction("request", "food")):
        assert committee_q(c, b, a) == c.members[0].policy.q_posterior(Point.from_belief(b, a))
    cands = [SummaryAction("inform"), SummaryAction("bye"), SummaryAction("request", "area")]
    for s in range(5):
        a1, _ = committee_select_action(c, b, cands, "SFR", np.random.default_rng(s))
        a2, _ = select_action(c.members[0].policy, b, cands, np.random.default_rng(s))
        assert a1 == a2


def test_three_member_committee_matches_oracle():
    c = _committee(train=5)
    rng = np.random.default_rng(3)
    for dom in ALL:
        d = builtin_domain(dom)
        for _ in range(10):
            p = random_point(d, rng, n_slots=3)
            q = c.estimates(p.features, dom, [p.action])
            members = [m.policy.q_posterior(p) for m in c.members]
            want = bcm_direct([e.mean for e in members], [e.variance for e in members],
                              c.k_star(p.features, dom))
            assert q[0][0] == pytest.approx(want[0], abs=1e-10)
            assert q[1][0] == pytest.approx(want[1], abs=1e-10)


def test_unmatched_action_gives_member_prior():
    c = _committee(("SFR", "L11"), ("SFR", "L11"), train=4)
    b = init_belief(builtin_domain("L11"))
    action = SummaryAction("request", "sysmemory")
    _, _, mm, mv = c.estimates(feature_vector(b), "L11", [action])
    sfr = c.member_index("SFR")
    assert mm[sfr, 0] == 0.0
    own = sum(float(f.vector @ f.vector) for f in feature_vector(b))
    assert mv[sfr, 0] == pytest.approx(own)


def test_select_records_every_member():
    c = _committee(train=2)
    b = init_belief(builtin_domain("SFH"))
    cands = [SummaryAction("inform"), SummaryAction("request", "area")]
    a, ests = committee_select_action(c, b, cands, "SFH", np.random.default_rng(0))
    assert len(ests) == c.size and a in cands
    with pytest.raises(KeyError):
        committee_q(c, init_belief(builtin_domain("L11")), SummaryAction("inform"), "L11")


def test_zero_variance_members_pick_argmax_mean():
    c = _committee(("SFR", "SFH"), ("SFR", "SFH"))
    for m, offset in zip(c.members, (0.0, 1.0)):
        m.policy.estimates = (lambda off: lambda f, d, acts, with_variance=True:
                              (np.arange(len(acts), dtype=float)[::-1] + off,
                               np.zeros(len(acts))))(offset)
    b = init_belief(builtin_domain("SFR"))
    cands = [SummaryAction("repeat"), SummaryAction("inform"), SummaryAction("bye")]
    a, _ = committee_select_action(c, b, cands, "SFR", np.random.default_rng(0))
    assert a == cands[0]


def test_manifest_is_json():
    c = _committee(("SFR", "SFH"), ("SFR", "SFH"))
    doc = json.loads(json.dumps(c.manifest({"SFR": "SFR.json"})))
    assert [m["member_id"] for m in doc["members"]] == ["SFR", "SFH"]
    assert doc["members"][0]["snapshot"] == "SFR.json"
    assert set(doc["members"][1]["slot_maps"]) == {"SFR", "SFH"}
