"""Ballot arithmetic over a finite, totally ordered value domain.

A ballot pairs a round number with a value drawn from ``1..K``.  The
distinguished null ballot ``<0:_>`` is the minimum of the total order and
carries no value.  All set-valued operations here materialize their result
explicitly, which keeps every downstream protocol state finite and
directly inspectable.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass


@functools.total_ordering
@dataclass(frozen=True)
class Ballot:
    """A ``(round, value)`` pair; ``Ballot(0, None)`` is the null ballot."""

    n: int
    x: int | None

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"negative round: {self.n}")
        if (self.n == 0) != (self.x is None):
            raise ValueError(f"null ballot must be exactly <0:_>, got <{self.n}:{self.x}>")
        if self.x is not None and self.x < 1:
            raise ValueError(f"value must be >= 1, got {self.x}")

    def _key(self) -> tuple[int, int]:
        return (self.n, 0 if self.x is None else self.x)

    def __lt__(self, other: "Ballot") -> bool:
        return self._key() < other._key()

    def __str__(self) -> str:
        return f"<{self.n}:{'_' if self.x is None else self.x}>"

    @staticmethod
    def parse(text: str) -> "Ballot":
        if not (text.startswith("<") and text.endswith(">")):
            raise ValueError(f"bad ballot syntax: {text!r}")
        n_part, _, x_part = text[1:-1].partition(":")
        n = int(n_part)
        return Ballot(n, None if x_part == "_" else int(x_part))


NULL = Ballot(0, None)


def compatible(b1: Ballot, b2: Ballot) -> bool:
    """True iff both ballots carry the same value; null matches only null."""
    return b1.x == b2.x


def below_and_incompatible(b1: Ballot, b2: Ballot) -> bool:
    return b1 < b2 and not compatible(b1, b2)


def all_ballots(max_round: int, k: int) -> list[Ballot]:
    """Every ballot with round <= max_round, ascending; includes the null ballot."""
    if k < 1:
        raise ValueError(f"value domain size must be >= 1, got {k}")
    out = [NULL]
    for n in range(1, max_round + 1):
        out.extend(Ballot(n, x) for x in range(1, k + 1))
    return out


def successor(b: Ballot, k: int) -> Ballot:
    """The least ballot strictly above b in the total order over 1..k values."""
    if b.x is None:
        return Ballot(1, 1)
    if b.x < k:
        return Ballot(b.n, b.x + 1)
    return Ballot(b.n + 1, 1)


def predecessor(b: Ballot, k: int) -> Ballot:
    """The greatest ballot strictly below b; undefined for the null ballot."""
    if b == NULL:
        raise ValueError("the null ballot has no predecessor")
    if b.x is not None and b.x > 1:
        return Ballot(b.n, b.x - 1)
    if b.n == 1:
        return NULL
    return Ballot(b.n - 1, k)


def lic_set(b: Ballot, k: int) -> tuple[Ballot, ...]:
    """All ballots below and incompatible with b, ascending.

    Aborting exactly this set is what it means to prepare b.
    """
    return tuple(b2 for b2 in all_ballots(b.n, k) if below_and_incompatible(b2, b))


def prep_covers(b_u: Ballot, b: Ballot, k: int) -> bool:
    """True iff aborting everything below-and-incompatible with b_u also
    aborts everything below-and-incompatible with b.

    Closed form; ``tests`` pin it against the brute-force subset check
    over the whole finite domain.
    """
    if b == NULL:
        return True
    if k == 1:
        # Only <0:_> is ever below-and-incompatible with anything.
        return b_u != NULL
    if b > b_u:
        return False
    if compatible(b, b_u):
        return True
    # b <= b_u with a different value: the chain of b_u-compatible ballots
    # <m:b_u.x> must stay above b, i.e. b may not exceed <1:b_u.x>.
    return b <= Ballot(1, b_u.x)


def interval(z: Ballot, b: Ballot, k: int) -> tuple[Ballot, ...]:
    """The right-open ballot interval [z, b), ascending. Rejects z >= b."""
    if z >= b:
        raise ValueError(f"empty interval [{z}, {b})")
    return tuple(b2 for b2 in all_ballots(b.n, k) if z <= b2 < b)


def format_ballots(ballots: tuple[Ballot, ...] | list[Ballot]) -> str:
    return ",".join(str(b) for b in ballots)


def parse_ballots(text: str) -> tuple[Ballot, ...]:
    if text == "-":
        return ()
    return tuple(Ballot.parse(part) for part in text.split(","))
