"""Executable reference model of the abstract ballot consensus protocol.

Each node holds one lazily created voting instance per ballot and talks
to the network in per-recipient batches: all messages emitted while
processing one event form one batch per recipient, and an incoming batch
is processed atomically, messages in ascending ballot order.  A finite
value domain of size K makes every batch a finite, explicit sequence.

Effects returned by handlers are interpreted by the simulator in order:
``("event", kind, payload)`` trace records, ``("arm", round)`` timer
(re)starts, ``("batch", messages)`` a broadcast batch, and
``("decide", value)`` which also halts the node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from fbqsim.ballot import NULL, Ballot, all_ballots, lic_set, successor
from fbqsim.events import DELIVER_BATCH, PROPOSE, TIMEOUT, VOTE_BATCH, AbstractMsg
from fbqsim.fbqs import Fbqs, greatest_quorum
from fbqsim.fv import READY, VOTE, FvMessage, FvState, fv_on_message, fv_vote

Effect = tuple


class ProtocolError(RuntimeError):
    """Locally detectable protocol misuse (double propose, early timeout)."""


@dataclass
class AscpNode:
    view: Fbqs
    self_id: int
    k: int
    ballots: dict[Ballot, FvState] = field(default_factory=dict)
    candidate: Ballot = NULL
    prepared: Ballot = NULL
    round: int = 0
    proposed: bool = False
    decided: int | None = None
    halted: bool = False
    delivered_false: set[Ballot] = field(default_factory=set)
    rcv_false: dict[tuple[int, str], set[Ballot]] = field(default_factory=dict)
    rcv_true: dict[tuple[int, str], set[Ballot]] = field(default_factory=dict)

    def fv(self, b: Ballot) -> FvState:
        return self.ballots.setdefault(b, FvState())

    # -- local steps ------------------------------------------------------

    def propose(self, x: int) -> list[Effect]:
        if self.proposed:
            raise ProtocolError(f"node {self.self_id} proposed twice")
        self.proposed = True
        self.candidate = Ballot(1, x)
        effects: list[Effect] = [("event", PROPOSE, (x,))]
        out: list[AbstractMsg] = []
        invoked = self._abort_votes_for_candidate(out)
        effects.append(("event", VOTE_BATCH, (False, invoked)))
        if out:
            effects.append(("batch", tuple(out)))
        return effects

    def on_timeout(self) -> list[Effect]:
        if not self.proposed:
            raise ProtocolError(f"node {self.self_id} timed out before proposing")
        if self.halted:
            return []
        carried = self.candidate.x if self.prepared == NULL else self.prepared.x
        self.candidate = Ballot(self.round + 1, carried)
        effects: list[Effect] = [("event", TIMEOUT, ())]
        out: list[AbstractMsg] = []
        invoked = self._abort_votes_for_candidate(out)
        effects.append(("event", VOTE_BATCH, (False, invoked)))
        if out:
            effects.append(("batch", tuple(out)))
        return effects

    def _abort_votes_for_candidate(self, out: list[AbstractMsg]) -> tuple[Ballot, ...]:
        """Invoke vote(false) on everything below-and-incompatible with the
        candidate; already-voted instances absorb the call silently."""
        invoked = lic_set(self.candidate, self.k)
        for b in invoked:
            for msg in fv_vote(self.fv(b), False):
                out.append((msg.kind, b, msg.value))
        return invoked

    # -- network ----------------------------------------------------------

    def on_receive_batch(self, sender: int, msgs: tuple[AbstractMsg, ...]) -> list[Effect]:
        if self.halted:
            return []
        out: list[AbstractMsg] = []
        new_false: list[Ballot] = []
        new_true: list[Ballot] = []
        for kind, ballot, value in msgs:
            table = self.rcv_true if value else self.rcv_false
            table.setdefault((sender, kind), set()).add(ballot)
            emitted, delivered = fv_on_message(
                self.fv(ballot), self.view, self.self_id, FvMessage(kind, value), sender
            )
            out.extend((m.kind, ballot, m.value) for m in emitted)
            if delivered is not None:
                (new_true if delivered else new_false).append(ballot)

        effects: list[Effect] = []
        if new_false:
            self.delivered_false.update(new_false)
            effects.append(("event", DELIVER_BATCH, (False, tuple(sorted(new_false)))))
        commit_votes = self._prepare_cascade(out)
        if commit_votes:
            effects.append(("event", VOTE_BATCH, (True, commit_votes)))
        for b in sorted(new_true):
            effects.append(("event", DELIVER_BATCH, (True, (b,))))
        if new_true and self.decided is None:
            b = min(new_true)
            self.decided = b.x
            effects.append(("decide", b.x))
        new_round = self._timer_round()
        if new_round is not None:
            self.round = new_round
            effects.append(("arm", new_round))
        if out:
            effects.append(("batch", tuple(out)))
        if self.decided is not None:
            self.halted = True
        return effects

    def _prepare_cascade(self, out: list[AbstractMsg]) -> tuple[Ballot, ...]:
        """Fire the prepared rule for every newly coverable ballot in
        ascending order, committing the candidate along the way.

        Candidates are capped at max(candidate, successor of the top
        delivered ballot); for domains of size >= 2 the successor bound is
        implied by coverage, the cap only tames the one-value domain.
        """
        if not self.delivered_false:
            return ()
        top = max(self.delivered_false)
        bound = max(self.candidate, successor(top, self.k))
        commit_votes: list[Ballot] = []
        for b in all_ballots(bound.n, self.k):
            if b == NULL or b > bound or b <= self.prepared:
                continue
            if all(b2 in self.delivered_false for b2 in lic_set(b, self.k)):
                self.prepared = b
                if self.candidate <= self.prepared:
                    self.candidate = self.prepared
                    commit_votes.append(self.candidate)
                    for msg in fv_vote(self.fv(self.candidate), True):
                        out.append((msg.kind, self.candidate, msg.value))
        return tuple(commit_votes)

    def _sender_round_cap(self, u: int) -> int:
        """Largest round u's messages endorse: a true-voted ballot, or the
        successor of the top of a false-covered interval."""
        cap = 0
        for kind in (VOTE, READY):
            falses = self.rcv_false.get((u, kind))
            if falses:
                cap = max(cap, successor(max(falses), self.k).n)
            trues = self.rcv_true.get((u, kind))
            if trues:
                cap = max(cap, max(b.n for b in trues))
        return cap

    def _timer_round(self) -> int | None:
        """Quorum-of-higher-rounds timer rule; returns the new round when the
        guard holds.  The re-armed round is the smallest the quorum
        supports, so it follows the slowest member."""
        senders = {u for (u, _kind) in self.rcv_false} | {u for (u, _kind) in self.rcv_true}
        caps = {u: self._sender_round_cap(u) for u in senders}
        eligible = frozenset(u for u, cap in caps.items() if cap > self.round)
        gq = greatest_quorum(self.view, eligible)
        if self.self_id not in gq:
            return None
        return min(caps[u] for u in gq)
