"""Quorum-slice systems: quorums, v-blocking sets, projection, intact sets.

Nodes are small integer ids indexed into an ordered universe.  A system
assigns each node a non-empty set of slices; a node belongs to each of its
own slices.  Quorums emerge from slices: a non-empty set U is a quorum iff
it contains a slice of every member.

Enumeration-based analysis (quorum listing, intertwined pairs, intact
sets) is capped at a configurable universe size and raises
``CapacityError`` beyond it rather than approximating.  The protocol
engines never enumerate: they use the greatest-quorum fixpoint, which is
exact because quorums are closed under union.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

ENUMERATION_CAP = 12

NodeSet = frozenset[int]


class CapacityError(RuntimeError):
    """Universe too large for exhaustive quorum analysis."""


def node_name(v: int) -> str:
    return f"v{v + 1}"


def parse_node(name: str) -> int:
    if not name.startswith("v"):
        raise ValueError(f"bad node name {name!r}")
    return int(name[1:]) - 1


@dataclass(frozen=True)
class Fbqs:
    """A slice assignment over the universe ``universe[0..len-1]``.

    ``slices[i]`` holds the slices of ``universe[i]``.  Kept hashable so
    quorum enumerations can be cached per system.
    """

    universe: tuple[int, ...]
    slices: tuple[frozenset[NodeSet], ...]

    def __post_init__(self) -> None:
        members = set(self.universe)
        if len(self.universe) != len(members):
            raise ValueError("duplicate nodes in universe")
        if len(self.slices) != len(self.universe):
            raise ValueError("one slice set required per universe node")
        for v, qs in zip(self.universe, self.slices):
            if not qs:
                raise ValueError(f"{node_name(v)} has no slices")
            for q in qs:
                if not q:
                    raise ValueError(f"{node_name(v)} has an empty slice")
                if v not in q:
                    raise ValueError(f"{node_name(v)} missing from its own slice {sorted(q)}")
                if not q <= members:
                    raise ValueError(f"slice of {node_name(v)} leaves the universe: {sorted(q)}")

    def slices_of(self, v: int) -> frozenset[NodeSet]:
        try:
            return self.slices[self.universe.index(v)]
        except ValueError:
            raise ValueError(f"{node_name(v)} not in universe") from None

    @staticmethod
    def from_dict(slices: dict[int, set[frozenset[int]] | frozenset[NodeSet]]) -> "Fbqs":
        universe = tuple(sorted(slices))
        return Fbqs(universe, tuple(frozenset(slices[v]) for v in universe))


@dataclass(frozen=True)
class FaultModel:
    """Which nodes deviate, and how: crash-only nodes stay honest."""

    crashed: NodeSet = frozenset()
    malicious: NodeSet = frozenset()

    def __post_init__(self) -> None:
        if self.crashed & self.malicious:
            raise ValueError("a node cannot be both crash-only and malicious")

    @property
    def faulty(self) -> NodeSet:
        return self.crashed | self.malicious

    def correct_in(self, universe: tuple[int, ...]) -> NodeSet:
        return frozenset(universe) - self.faulty

    def honest_in(self, universe: tuple[int, ...]) -> NodeSet:
        return frozenset(universe) - self.malicious


def is_quorum(s: Fbqs, u: NodeSet) -> bool:
    """U is a quorum iff non-empty and containing a slice of each member."""
    if not u <= set(s.universe):
        raise ValueError(f"nodes outside universe: {sorted(u - set(s.universe))}")
    if not u:
        return False
    return all(any(q <= u for q in s.slices_of(v)) for v in u)


def greatest_quorum(s: Fbqs, within: NodeSet) -> NodeSet:
    """The unique maximal quorum contained in ``within`` (empty if none).

    Fixpoint: repeatedly drop members with no slice inside the candidate.
    Union-closure of quorums makes the result unique and maximal.
    """
    cur = frozenset(within) & frozenset(s.universe)
    while cur:
        keep = frozenset(v for v in cur if any(q <= cur for q in s.slices_of(v)))
        if keep == cur:
            return cur
        cur = keep
    return frozenset()


def contains_quorum_with(s: Fbqs, senders: NodeSet, v: int) -> bool:
    """True iff some quorum U with v in U satisfies U <= senders."""
    return v in greatest_quorum(s, senders)


def is_v_blocking(s: Fbqs, v: int, b: NodeSet) -> bool:
    """B blocks v iff it overlaps every slice of v."""
    return all(q & b for q in s.slices_of(v))


def _check_cap(s: Fbqs, cap: int) -> None:
    if len(s.universe) > cap:
        raise CapacityError(
            f"universe of {len(s.universe)} nodes exceeds enumeration cap {cap}"
        )


@lru_cache(maxsize=256)
def _enumerate_quorums_cached(s: Fbqs) -> tuple[NodeSet, ...]:
    members = list(s.universe)
    found = []
    for r in range(1, len(members) + 1):
        for combo in itertools.combinations(members, r):
            u = frozenset(combo)
            if is_quorum(s, u):
                found.append(u)
    found.sort(key=lambda q: (len(q), sorted(q)))
    return tuple(found)


def enumerate_quorums(s: Fbqs, cap: int = ENUMERATION_CAP) -> tuple[NodeSet, ...]:
    """All quorums, sorted by cardinality then member order."""
    _check_cap(s, cap)
    return _enumerate_quorums_cached(s)


def project(s: Fbqs, i: NodeSet) -> Fbqs:
    """Quotient the system to universe i by intersecting every slice with i."""
    if not i:
        raise ValueError("cannot project to an empty universe")
    if not i <= set(s.universe):
        raise ValueError(f"nodes outside universe: {sorted(i - set(s.universe))}")
    universe = tuple(v for v in s.universe if v in i)
    return Fbqs(universe, tuple(frozenset(q & i for q in s.slices_of(v)) for v in universe))


def intertwined(s: Fbqs, fm: FaultModel, v1: int, v2: int, cap: int = ENUMERATION_CAP) -> bool:
    """Correct nodes whose containing quorums always meet in a correct node."""
    correct = fm.correct_in(s.universe)
    if v1 not in correct or v2 not in correct:
        return False
    quorums = enumerate_quorums(s, cap)
    with_v1 = [u for u in quorums if v1 in u]
    with_v2 = [u for u in quorums if v2 in u]
    return all(u1 & u2 & correct for u1 in with_v1 for u2 in with_v2)


def is_intact_set(s: Fbqs, fm: FaultModel, i: NodeSet, cap: int = ENUMERATION_CAP) -> bool:
    """i is intact iff it is a quorum of correct nodes whose members are
    pairwise intertwined in the projection to i."""
    _check_cap(s, cap)
    if not i:
        return False
    if not i <= fm.correct_in(s.universe):
        return False
    if not is_quorum(s, i):
        return False
    proj = project(s, i)
    return all(intertwined(proj, fm, v1, v2, cap) for v1 in i for v2 in i if v1 <= v2)


def maximal_intact_sets(s: Fbqs, fm: FaultModel, cap: int = ENUMERATION_CAP) -> tuple[NodeSet, ...]:
    """All maximal intact sets, in canonical order. Pairwise disjoint."""
    _check_cap(s, cap)
    correct = sorted(fm.correct_in(s.universe))
    intacts = []
    for r in range(len(correct), 0, -1):
        for combo in itertools.combinations(correct, r):
            cand = frozenset(combo)
            if any(cand <= found for found in intacts):
                continue
            if is_intact_set(s, fm, cand, cap):
                intacts.append(cand)
    maximal = [i for i in intacts if not any(i < j for j in intacts)]
    maximal.sort(key=lambda q: (len(q), sorted(q)))
    return tuple(maximal)


@dataclass
class SubjectiveFbqs:
    """Per-correct-node views of the slice assignment.

    Views share one universe and agree on the slices of correct nodes;
    they may disagree arbitrarily about faulty nodes' slices.
    """

    correct: NodeSet
    views: dict[int, Fbqs] = field(repr=False)

    def __post_init__(self) -> None:
        if set(self.views) != set(self.correct):
            raise ValueError("exactly one view per correct node required")
        universes = {view.universe for view in self.views.values()}
        if len(universes) > 1:
            raise ValueError("views disagree on the universe")
        for v in self.correct:
            for v1 in self.correct:
                for v2 in self.correct:
                    if self.views[v1].slices_of(v) != self.views[v2].slices_of(v):
                        raise ValueError(
                            f"views of {node_name(v1)} and {node_name(v2)} disagree "
                            f"on slices of correct node {node_name(v)}"
                        )

    @property
    def universe(self) -> tuple[int, ...]:
        return next(iter(self.views.values())).universe

    @staticmethod
    def degenerate(s: Fbqs, fm: FaultModel) -> "SubjectiveFbqs":
        """All correct nodes share the objective system."""
        correct = fm.correct_in(s.universe)
        return SubjectiveFbqs(correct, {v: s for v in correct})


def is_intact_set_subjective(
    sub: SubjectiveFbqs, fm: FaultModel, i: NodeSet, cap: int = ENUMERATION_CAP
) -> bool:
    """Intact in the subjective sense: intact in every correct node's view."""
    if not i or not sub.correct:
        return False
    return all(is_intact_set(view, fm, i, cap) for view in sub.views.values())


def maximal_intact_sets_subjective(
    sub: SubjectiveFbqs, fm: FaultModel, cap: int = ENUMERATION_CAP
) -> tuple[NodeSet, ...]:
    if not sub.correct:
        return ()
    for view in sub.views.values():
        _check_cap(view, cap)
    correct = sorted(sub.correct)
    intacts = []
    for r in range(len(correct), 0, -1):
        for combo in itertools.combinations(correct, r):
            cand = frozenset(combo)
            if any(cand <= found for found in intacts):
                continue
            if is_intact_set_subjective(sub, fm, cand, cap):
                intacts.append(cand)
    maximal = [i for i in intacts if not any(i < j for j in intacts)]
    maximal.sort(key=lambda q: (len(q), sorted(q)))
    return tuple(maximal)


def threshold_slices(n: int, threshold: int) -> Fbqs:
    """The cardinality system: each node's slices are the threshold-sized
    subsets containing it."""
    if not 1 <= threshold <= n:
        raise ValueError(f"threshold {threshold} out of range for {n} nodes")
    universe = tuple(range(n))
    slices = []
    for v in universe:
        others = [u for u in universe if u != v]
        qs = frozenset(
            frozenset((v, *combo)) for combo in itertools.combinations(others, threshold - 1)
        )
        slices.append(qs)
    return Fbqs(universe, tuple(slices))
