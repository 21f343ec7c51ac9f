"""Concrete ballot consensus: one bunched-voting instance per node.

Structurally parallel to the abstract protocol but finite-state: prepare
and commit intentions travel as single statements rather than per-ballot
message batches, and the timer guard accepts any received statement with
a high enough round.

Effects mirror the abstract engine's: ``("event", ...)``, ``("arm", n)``,
``("broadcast", BvMessage)``, ``("decide", x)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from fbqsim.ballot import NULL, Ballot
from fbqsim.ascp import Effect, ProtocolError
from fbqsim.bv import BvMessage, BvState, bv_commit, bv_on_message, bv_prepare
from fbqsim.events import COMMIT, COMMITTED, PREPARE, PREPARED, PROPOSE, TIMEOUT
from fbqsim.fbqs import Fbqs, greatest_quorum


@dataclass
class CscpNode:
    view: Fbqs
    self_id: int
    k: int
    brs: BvState = field(default_factory=BvState)
    candidate: Ballot = NULL
    prepared: Ballot = NULL
    round: int = 0
    proposed: bool = False
    decided: int | None = None
    halted: bool = False

    def propose(self, x: int) -> list[Effect]:
        if self.proposed:
            raise ProtocolError(f"node {self.self_id} proposed twice")
        self.proposed = True
        self.candidate = Ballot(1, x)
        effects: list[Effect] = [("event", PROPOSE, (x,))]
        self._invoke_prepare(effects)
        return effects

    def on_timeout(self) -> list[Effect]:
        if not self.proposed:
            raise ProtocolError(f"node {self.self_id} timed out before proposing")
        if self.halted:
            return []
        carried = self.candidate.x if self.prepared == NULL else self.prepared.x
        self.candidate = Ballot(self.round + 1, carried)
        effects: list[Effect] = [("event", TIMEOUT, ())]
        self._invoke_prepare(effects)
        return effects

    def _invoke_prepare(self, effects: list[Effect]) -> None:
        effects.append(("event", PREPARE, (self.candidate,)))
        for msg in bv_prepare(self.brs, self.candidate):
            effects.append(("broadcast", msg))

    def on_receive(self, sender: int, msg: BvMessage) -> list[Effect]:
        if self.halted:
            return []
        effects: list[Effect] = []
        self.brs.record(msg, sender)
        new_round = self._timer_round()
        if new_round is not None:
            self.round = new_round
            effects.append(("arm", new_round))
        # re-dispatch through the stage rules (recording twice is harmless,
        # the underlying maps are sets)
        out, indications = bv_on_message(self.brs, self.view, self.self_id, msg, sender, self.k)
        for m in out:
            effects.append(("broadcast", m))
        for what, b in indications:
            if what == "prepared":
                effects.append(("event", PREPARED, (b,)))
                self._on_prepared(b, effects)
            else:
                effects.append(("event", COMMITTED, (b,)))
                if self.decided is None:
                    self.decided = b.x
                    effects.append(("decide", b.x))
                    self.halted = True
        return effects

    def _on_prepared(self, b: Ballot, effects: list[Effect]) -> None:
        if self.prepared < b:
            self.prepared = b
            if self.candidate <= self.prepared:
                self.candidate = self.prepared
                effects.append(("event", COMMIT, (self.candidate,)))
                for msg in bv_commit(self.brs, self.candidate):
                    effects.append(("broadcast", msg))

    def _timer_round(self) -> int | None:
        """Any statement with a round above the current one counts as an
        endorsement; a quorum of endorsers containing this node re-arms."""
        caps = self.brs.stmt_round_top
        eligible = frozenset(u for u, cap in caps.items() if cap > self.round)
        gq = greatest_quorum(self.view, eligible)
        if self.self_id not in gq:
            return None
        return min(caps[u] for u in gq)
