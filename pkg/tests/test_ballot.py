"""Ballot order/relation tests, pinned against brute-force oracles."""

import itertools

import pytest

from fbqsim.ballot import (
    NULL,
    Ballot,
    all_ballots,
    below_and_incompatible,
    compatible,
    interval,
    lic_set,
    predecessor,
    prep_covers,
    successor,
)


def brute_lic(b, k):
    return tuple(b2 for b2 in all_ballots(b.n, k) if b2 < b and b2.x != b.x)


def brute_covers(b_u, b, k):
    """Subset oracle over the whole finite domain."""
    bound = max(b.n, b_u.n) + 1
    dom = all_ballots(bound, k)
    lic_b = {b2 for b2 in dom if below_and_incompatible(b2, b)}
    lic_bu = {b2 for b2 in dom if below_and_incompatible(b2, b_u)}
    return lic_b <= lic_bu


def test_order_examples():
    assert Ballot(1, 2) < Ballot(1, 3)
    assert NULL < Ballot(1, 1)
    assert Ballot(1, 3) < Ballot(2, 1)


def test_null_ballot_shape():
    with pytest.raises(ValueError):
        Ballot(0, 1)
    with pytest.raises(ValueError):
        Ballot(1, None)
    with pytest.raises(ValueError):
        Ballot(-1, None)


def test_total_order_exhaustive():
    for k in (1, 2, 3, 4):
        dom = all_ballots(5, k)
        assert dom[0] == NULL
        # antisymmetric + transitive + total via strict sortedness
        assert all(a < b for a, b in zip(dom, dom[1:]))
        for a, b in itertools.product(dom, repeat=2):
            assert (a < b) + (b < a) + (a == b) == 1


def test_compatible():
    assert compatible(Ballot(1, 2), Ballot(2, 2))
    assert not compatible(NULL, Ballot(1, 1))
    assert not compatible(Ballot(1, 2), Ballot(1, 3))
    for b in all_ballots(3, 3)[1:]:
        assert not compatible(NULL, b)


def test_lic_examples():
    assert lic_set(Ballot(1, 3), 3) == (NULL, Ballot(1, 1), Ballot(1, 2))
    assert lic_set(NULL, 3) == ()
    expected = tuple(
        b for b in all_ballots(2, 3) if b < Ballot(2, 2) and b.x != 2
    )
    assert lic_set(Ballot(2, 2), 3) == expected
    assert Ballot(1, 2) not in lic_set(Ballot(2, 2), 3)


def test_lic_matches_definition():
    for k in (1, 2, 3):
        for b in all_ballots(4, k):
            assert lic_set(b, k) == brute_lic(b, k)


def test_successor_predecessor_roundtrip():
    for k in (1, 2, 3, 4):
        dom = all_ballots(5, k)
        for a, b in zip(dom, dom[1:]):
            assert successor(a, k) == b
            assert predecessor(b, k) == a
    with pytest.raises(ValueError):
        predecessor(NULL, 3)


def test_prep_covers_examples():
    for b_u in all_ballots(3, 3):
        assert prep_covers(b_u, NULL, 3)
    assert prep_covers(Ballot(1, 3), Ballot(1, 2), 3)
    assert not prep_covers(Ballot(1, 2), Ballot(2, 2), 3)


def test_prep_covers_exhaustive_against_oracle():
    # Acceptance: exact agreement with the subset oracle, rounds <= 5, K <= 4.
    for k in (1, 2, 3, 4):
        dom = all_ballots(5, k)
        for b_u, b in itertools.product(dom, repeat=2):
            assert prep_covers(b_u, b, k) == brute_covers(b_u, b, k), (b_u, b, k)


def test_prep_covers_transitive():
    for k in (2, 3):
        dom = all_ballots(3, k)
        for a, b, c in itertools.product(dom, repeat=3):
            if prep_covers(a, b, k) and prep_covers(b, c, k):
                assert prep_covers(a, c, k)


def test_lic_iff_order_and_incompatible():
    for k in (2, 3):
        dom = all_ballots(4, k)
        for b1, b2 in itertools.product(dom, repeat=2):
            assert below_and_incompatible(b1, b2) == (b1 < b2 and not compatible(b1, b2))
            assert (b1 in lic_set(b2, k)) == below_and_incompatible(b1, b2)


def test_interval_examples():
    assert interval(NULL, Ballot(1, 1), 3) == (NULL,)
    assert interval(Ballot(1, 3), Ballot(2, 2), 3) == (Ballot(1, 3), Ballot(2, 1))
    with pytest.raises(ValueError):
        interval(Ballot(1, 1), Ballot(1, 1), 3)


def test_parse_format_roundtrip():
    for b in all_ballots(3, 3):
        assert Ballot.parse(str(b)) == b
    assert str(NULL) == "<0:_>"
    assert str(Ballot(2, 3)) == "<2:3>"
