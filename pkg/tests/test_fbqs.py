"""Quorum-system tests: worked examples, randomized structural properties."""

import itertools
import random

import pytest

from fbqsim.fbqs import (
    CapacityError,
    FaultModel,
    Fbqs,
    SubjectiveFbqs,
    enumerate_quorums,
    greatest_quorum,
    intertwined,
    is_intact_set,
    is_intact_set_subjective,
    is_quorum,
    is_v_blocking,
    maximal_intact_sets,
    maximal_intact_sets_subjective,
    project,
    threshold_slices,
)

V1, V2, V3, V4 = 0, 1, 2, 3


def split_system() -> Fbqs:
    """Four nodes partitioned into a v1/v2 cluster, a hub v3, and a loner v4."""
    return Fbqs.from_dict(
        {
            V1: {frozenset({V1, V2})},
            V2: {frozenset({V1, V2}), frozenset({V2, V3})},
            V3: {frozenset({V3})},
            V4: {frozenset({V4})},
        }
    )


SPLIT_QUORUMS = {
    frozenset({V1, V2}),
    frozenset({V2, V3}),
    frozenset({V3}),
    frozenset({V4}),
    frozenset({V1, V2, V3}),
    frozenset({V3, V4}),
    frozenset({V1, V2, V4}),
    frozenset({V2, V3, V4}),
    frozenset({V1, V2, V3, V4}),
}


def random_fbqs(rng: random.Random, n: int) -> Fbqs:
    universe = tuple(range(n))
    slices = {}
    for v in universe:
        count = rng.randint(1, 3)
        qs = set()
        for _ in range(count):
            others = [u for u in universe if u != v]
            size = rng.randint(0, len(others))
            qs.add(frozenset([v] + rng.sample(others, size)))
        slices[v] = qs
    return Fbqs.from_dict(slices)


def random_fault_model(rng: random.Random, n: int) -> FaultModel:
    faulty = [v for v in range(n) if rng.random() < 0.3]
    malicious = frozenset(v for v in faulty if rng.random() < 0.7)
    return FaultModel(crashed=frozenset(faulty) - malicious, malicious=malicious)


def test_split_quorum_membership():
    s = split_system()
    assert is_quorum(s, frozenset({V1, V2}))
    assert not is_quorum(s, frozenset({V2}))
    assert not is_quorum(s, frozenset())


def test_is_quorum_rejects_foreign_nodes():
    s = split_system()
    with pytest.raises(ValueError):
        is_quorum(s, frozenset({7}))


def test_split_quorum_enumeration_exact():
    assert set(enumerate_quorums(split_system())) == SPLIT_QUORUMS


def test_threshold_quorums_are_supermajorities():
    s = threshold_slices(4, 3)
    expected = {
        frozenset(c)
        for r in (3, 4)
        for c in itertools.combinations(range(4), r)
    }
    assert set(enumerate_quorums(s)) == expected


def test_single_node_system():
    s = Fbqs.from_dict({0: {frozenset({0})}})
    assert enumerate_quorums(s) == (frozenset({0}),)


def test_enumeration_cap():
    s = threshold_slices(5, 3)
    with pytest.raises(CapacityError):
        enumerate_quorums(s, cap=4)


def test_v_blocking_examples():
    s3f1 = threshold_slices(4, 3)
    for v in range(4):
        for pair in itertools.combinations(range(4), 2):
            assert is_v_blocking(s3f1, v, frozenset(pair) | frozenset())
    s = split_system()
    assert is_v_blocking(s, V1, frozenset({V2}))
    assert is_v_blocking(s, V2, frozenset({V1, V3}))
    assert not is_v_blocking(s, V2, frozenset({V1}))


def test_projection_threshold_example():
    s = threshold_slices(4, 3)
    i = frozenset({V1, V2, V4})
    proj = project(s, i)
    expected = {
        frozenset({V1, V2}),
        frozenset({V2, V4}),
        frozenset({V1, V4}),
        frozenset({V1, V2, V4}),
    }
    assert set(enumerate_quorums(proj)) == expected


def test_projection_identity_and_split_slices():
    s = split_system()
    assert project(s, frozenset(s.universe)) == s
    proj = project(s, frozenset({V1, V2}))
    assert proj.slices_of(V2) == frozenset({frozenset({V1, V2}), frozenset({V2})})


def test_intertwined_examples():
    s = threshold_slices(4, 3)
    fm = FaultModel(malicious=frozenset({V3}))
    proj = project(s, frozenset({V1, V2, V4}))
    assert intertwined(proj, fm, V1, V2)
    assert not intertwined(s, fm, V3, V1)
    split = split_system()
    assert not intertwined(split, FaultModel(malicious=frozenset({V3})), V1, V4)


def test_intact_examples():
    fm = FaultModel(malicious=frozenset({V3}))
    s3f1 = threshold_slices(4, 3)
    assert is_intact_set(s3f1, fm, frozenset({V1, V2, V4}))
    split = split_system()
    assert is_intact_set(split, fm, frozenset({V1, V2}))
    assert is_intact_set(split, fm, frozenset({V4}))
    assert not is_intact_set(split, fm, frozenset({V3}))
    assert not is_intact_set(split, fm, frozenset())


def test_maximal_intact_sets_paper_examples():
    fm = FaultModel(malicious=frozenset({V3}))
    assert maximal_intact_sets(threshold_slices(4, 3), fm) == (frozenset({V1, V2, V4}),)
    assert set(maximal_intact_sets(split_system(), fm)) == {
        frozenset({V4}),
        frozenset({V1, V2}),
    }
    all_faulty = FaultModel(malicious=frozenset(range(4)))
    assert maximal_intact_sets(split_system(), all_faulty) == ()


def test_greatest_quorum_matches_enumeration():
    rng = random.Random(11)
    for _ in range(60):
        s = random_fbqs(rng, rng.randint(1, 6))
        quorums = enumerate_quorums(s)
        for _ in range(8):
            within = frozenset(v for v in s.universe if rng.random() < 0.6)
            gq = greatest_quorum(s, within)
            inside = [u for u in quorums if u <= within]
            if inside:
                best = frozenset().union(*inside)
                assert gq == best
            else:
                assert gq == frozenset()


def test_quorum_union_closure():
    rng = random.Random(5)
    for _ in range(40):
        s = random_fbqs(rng, rng.randint(1, 6))
        quorums = enumerate_quorums(s)
        for u1, u2 in itertools.combinations(quorums, 2):
            assert is_quorum(s, u1 | u2)


def test_lemma_quorum_intersection_in_intact_set():
    rng = random.Random(23)
    for _ in range(200):
        s = random_fbqs(rng, rng.randint(1, 6))
        fm = random_fault_model(rng, len(s.universe))
        quorums = enumerate_quorums(s)
        for i in maximal_intact_sets(s, fm):
            hitting = [u for u in quorums if u & i]
            for u1, u2 in itertools.combinations_with_replacement(hitting, 2):
                assert u1 & u2 & i, (s, fm, i, u1, u2)


def test_lemma_intact_union():
    rng = random.Random(29)
    checked = 0
    for _ in range(200):
        s = random_fbqs(rng, rng.randint(1, 6))
        fm = random_fault_model(rng, len(s.universe))
        correct = sorted(fm.correct_in(s.universe))
        intacts = []
        for r in range(1, len(correct) + 1):
            for combo in itertools.combinations(correct, r):
                if is_intact_set(s, fm, frozenset(combo)):
                    intacts.append(frozenset(combo))
        for i1, i2 in itertools.combinations(intacts, 2):
            if i1 & i2:
                checked += 1
                assert is_intact_set(s, fm, i1 | i2)
    assert checked > 0


def test_lemma_no_v_blocking_disjoint_from_intact():
    rng = random.Random(31)
    for _ in range(200):
        s = random_fbqs(rng, rng.randint(1, 6))
        fm = random_fault_model(rng, len(s.universe))
        outside_all = frozenset(s.universe)
        for i in maximal_intact_sets(s, fm):
            rest = outside_all - i
            for r in range(len(rest) + 1):
                for combo in itertools.combinations(sorted(rest), r):
                    b = frozenset(combo)
                    for v in i:
                        assert not is_v_blocking(s, v, b) or not b.isdisjoint(i)


def test_maximal_intact_sets_disjoint():
    rng = random.Random(37)
    for _ in range(120):
        s = random_fbqs(rng, rng.randint(1, 6))
        fm = random_fault_model(rng, len(s.universe))
        sets = maximal_intact_sets(s, fm)
        for i1, i2 in itertools.combinations(sets, 2):
            assert i1.isdisjoint(i2)


# --- subjective systems ---


def lying_split_subjective() -> tuple[SubjectiveFbqs, FaultModel]:
    """Split system where faulty v3 advertises slice {v3,v4} to v4 only."""
    fm = FaultModel(malicious=frozenset({V3}))
    base = split_system()
    lied = Fbqs.from_dict(
        {
            V1: {frozenset({V1, V2})},
            V2: {frozenset({V1, V2}), frozenset({V2, V3})},
            V3: {frozenset({V3, V4})},
            V4: {frozenset({V4})},
        }
    )
    views = {V1: base, V2: base, V4: lied}
    return SubjectiveFbqs(frozenset({V1, V2, V4}), views), fm


def test_subjective_degenerate_equals_objective():
    s = split_system()
    fm = FaultModel(malicious=frozenset({V3}))
    sub = SubjectiveFbqs.degenerate(s, fm)
    for r in range(1, 4):
        for combo in itertools.combinations(sorted(fm.correct_in(s.universe)), r):
            cand = frozenset(combo)
            assert is_intact_set_subjective(sub, fm, cand) == is_intact_set(s, fm, cand)


def test_subjective_lying_split():
    sub, fm = lying_split_subjective()
    assert is_intact_set_subjective(sub, fm, frozenset({V1, V2}))
    assert set(maximal_intact_sets_subjective(sub, fm)) == {
        frozenset({V1, V2}),
        frozenset({V4}),
    }


def test_subjective_views_must_agree_on_correct():
    base = split_system()
    other = Fbqs.from_dict(
        {
            V1: {frozenset({V1})},
            V2: {frozenset({V1, V2}), frozenset({V2, V3})},
            V3: {frozenset({V3})},
            V4: {frozenset({V4})},
        }
    )
    with pytest.raises(ValueError):
        SubjectiveFbqs(frozenset({V1, V2, V4}), {V1: base, V2: other, V4: base})


def random_subjective(rng: random.Random, n: int) -> tuple[SubjectiveFbqs, FaultModel]:
    base = random_fbqs(rng, n)
    fm = random_fault_model(rng, n)
    correct = fm.correct_in(base.universe)
    views = {}
    for v in sorted(correct):
        lied = {u: set(base.slices_of(u)) for u in base.universe}
        for liar in sorted(fm.malicious):
            fake = random_fbqs(rng, n)
            lied[liar] = set(fake.slices_of(liar))
        views[v] = Fbqs.from_dict(lied)
    return SubjectiveFbqs(correct, views), fm


def test_subjective_per_view_agreement():
    """Every correct view computes the same intact sets (per-view lemma)."""
    rng = random.Random(41)
    for _ in range(200):
        n = rng.randint(1, 5)
        sub, fm = random_subjective(rng, n)
        if not sub.correct:
            continue
        for r in range(1, len(sub.correct) + 1):
            for combo in itertools.combinations(sorted(sub.correct), r):
                cand = frozenset(combo)
                verdicts = {is_intact_set(view, fm, cand) for view in sub.views.values()}
                assert len(verdicts) == 1
                assert verdicts.pop() == is_intact_set_subjective(sub, fm, cand)


def test_subjective_quorum_intersection_lemma():
    rng = random.Random(43)
    for _ in range(120):
        n = rng.randint(1, 5)
        sub, fm = random_subjective(rng, n)
        if not sub.correct:
            continue
        all_quorums = set()
        for view in sub.views.values():
            all_quorums.update(enumerate_quorums(view))
        for i in maximal_intact_sets_subjective(sub, fm):
            hitting = [u for u in all_quorums if u & i]
            for u1, u2 in itertools.combinations_with_replacement(hitting, 2):
                assert u1 & u2 & i
