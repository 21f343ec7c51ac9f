"""Bunched voting: every per-ballot voting instance folded into finite state.

Prepare progress is tracked by three watermark ballots (highest voted,
readied, delivered prepare statement); commit progress by three finite
ballot sets.  A prepare statement for b stands for aborting everything
below and incompatible with b, so the stage rules quantify over the
coverage relation ``prep_covers`` rather than per-ballot counters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from fbqsim.ballot import NULL, Ballot, all_ballots, prep_covers
from fbqsim.fbqs import Fbqs, contains_quorum_with, is_v_blocking

VOTE = "VOTE"
READY = "READY"
PREP = "PREP"
CMT = "CMT"


@dataclass(frozen=True)
class Statement:
    kind: str  # PREP | CMT
    ballot: Ballot

    def __str__(self) -> str:
        return f"{self.kind} {self.ballot}"


@dataclass(frozen=True)
class BvMessage:
    kind: str  # VOTE | READY
    statement: Statement

    def __str__(self) -> str:
        return f"{self.kind} {self.statement}"


@dataclass
class BvState:
    max_voted_prep: Ballot = NULL
    max_readied_prep: Ballot = NULL
    max_delivered_prep: Ballot = NULL
    voted_cmt: set[Ballot] = field(default_factory=set)
    readied_cmt: set[Ballot] = field(default_factory=set)
    delivered_cmt: set[Ballot] = field(default_factory=set)
    vote_prep: dict[int, set[Ballot]] = field(default_factory=dict)
    ready_prep: dict[int, set[Ballot]] = field(default_factory=dict)
    vote_cmt: dict[Ballot, set[int]] = field(default_factory=dict)
    ready_cmt: dict[Ballot, set[int]] = field(default_factory=dict)
    stmt_round_top: dict[int, int] = field(default_factory=dict)

    def record(self, msg: BvMessage, sender: int) -> None:
        stmt = msg.statement
        if stmt.kind == PREP:
            table = self.vote_prep if msg.kind == VOTE else self.ready_prep
            table.setdefault(sender, set()).add(stmt.ballot)
        else:
            table = self.vote_cmt if msg.kind == VOTE else self.ready_cmt
            table.setdefault(stmt.ballot, set()).add(sender)
        top = self.stmt_round_top.get(sender, 0)
        self.stmt_round_top[sender] = max(top, stmt.ballot.n)


def bv_prepare(state: BvState, b: Ballot) -> list[BvMessage]:
    """Vote to prepare b, if it advances the prepare-vote watermark."""
    if state.max_voted_prep < b:
        state.max_voted_prep = b
        return [BvMessage(VOTE, Statement(PREP, b))]
    return []


def bv_commit(state: BvState, b: Ballot) -> list[BvMessage]:
    """Vote to commit b once, provided b is not behind the prepare-vote
    watermark.

    The watermark guard is `<=` so that a node may endorse committing a
    ballot it learned to be prepared beyond its own prepare votes.
    """
    if b not in state.voted_cmt and state.max_voted_prep <= b:
        state.voted_cmt.add(b)
        return [BvMessage(VOTE, Statement(CMT, b))]
    return []


def _prep_candidates(state: BvState, table: dict[int, set[Ballot]], k: int) -> list[Ballot]:
    """Search space for the maximum coverable ballot, descending.

    Coverage cannot reach past the largest recorded prepare ballot (for a
    degenerate one-value domain we still cap there, keeping the search
    finite).
    """
    tops = [max(bs) for bs in table.values() if bs]
    if not tops:
        return []
    cap = max(tops)
    return [b for b in reversed(all_ballots(cap.n, k)) if b <= cap]


def _covering_senders(table: dict[int, set[Ballot]], b: Ballot, k: int) -> frozenset[int]:
    return frozenset(
        u for u, recorded in table.items() if any(prep_covers(b_u, b, k) for b_u in recorded)
    )


def bv_on_message(
    state: BvState, view: Fbqs, self_id: int, msg: BvMessage, sender: int, k: int
) -> tuple[list[BvMessage], list[tuple[str, Ballot]]]:
    """Record one statement message and fire enabled stage rules.

    Rule order is fixed: prepare ready via quorum, prepare ready via
    blocking set, prepare delivery, then the three commit rules.  Returns
    broadcast messages plus ``("prepared", b)`` / ``("committed", b)``
    indications.
    """
    state.record(msg, sender)
    out: list[BvMessage] = []
    indications: list[tuple[str, Ballot]] = []

    for b in _prep_candidates(state, state.vote_prep, k):
        if b <= state.max_readied_prep:
            break
        if contains_quorum_with(view, _covering_senders(state.vote_prep, b, k), self_id):
            state.max_readied_prep = b
            out.append(BvMessage(READY, Statement(PREP, b)))
            break

    for b in _prep_candidates(state, state.ready_prep, k):
        if b <= state.max_readied_prep:
            break
        if is_v_blocking(view, self_id, _covering_senders(state.ready_prep, b, k)):
            state.max_readied_prep = b
            out.append(BvMessage(READY, Statement(PREP, b)))
            break

    for b in _prep_candidates(state, state.ready_prep, k):
        if b <= state.max_delivered_prep:
            break
        if contains_quorum_with(view, _covering_senders(state.ready_prep, b, k), self_id):
            state.max_delivered_prep = b
            indications.append(("prepared", b))
            break

    for b in sorted(state.vote_cmt):
        if b not in state.readied_cmt and contains_quorum_with(
            view, frozenset(state.vote_cmt[b]), self_id
        ):
            state.readied_cmt.add(b)
            out.append(BvMessage(READY, Statement(CMT, b)))

    for b in sorted(state.ready_cmt):
        if b not in state.readied_cmt and is_v_blocking(
            view, self_id, frozenset(state.ready_cmt[b])
        ):
            state.readied_cmt.add(b)
            out.append(BvMessage(READY, Statement(CMT, b)))

    for b in sorted(state.ready_cmt):
        if b not in state.delivered_cmt and contains_quorum_with(
            view, frozenset(state.ready_cmt[b]), self_id
        ):
            state.delivered_cmt.add(b)
            indications.append(("committed", b))

    return out, indications


def max_coverable(state: BvState, view: Fbqs, self_id: int, k: int, *, via_ready: bool) -> Ballot:
    """Test helper: maximum ballot for which the quorum stage rule holds,
    ignoring watermarks. NULL if none."""
    table = state.ready_prep if via_ready else state.vote_prep
    for b in _prep_candidates(state, table, k):
        if contains_quorum_with(view, _covering_senders(table, b, k), self_id):
            return b
    return NULL
