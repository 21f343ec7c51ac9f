"""Three-stage broadcast voting over a quorum-slice system.

One ``FvState`` instance exists per (node, tag).  A node votes a value,
escalates to READY on a quorum of matching VOTEs containing itself or on
a blocking set of READYs, and delivers on a quorum of matching READYs
containing itself.  Every flag is monotone and each instance delivers at
most once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from fbqsim.fbqs import Fbqs, contains_quorum_with, is_v_blocking

VOTE = "VOTE"
READY = "READY"


@dataclass(frozen=True)
class FvMessage:
    kind: str  # VOTE | READY
    value: bool


@dataclass
class FvState:
    voted: bool = False
    ready: bool = False
    delivered: bool = False
    votes: dict[bool, set[int]] = field(default_factory=dict)
    readys: dict[bool, set[int]] = field(default_factory=dict)

    def senders(self, kind: str, value: bool) -> set[int]:
        table = self.votes if kind == VOTE else self.readys
        return table.setdefault(value, set())


def fv_vote(state: FvState, value: bool) -> list[FvMessage]:
    """Vote once; re-votes (same or different value) are absorbed."""
    if state.voted:
        return []
    state.voted = True
    return [FvMessage(VOTE, value)]


def fv_on_message(
    state: FvState, view: Fbqs, self_id: int, msg: FvMessage, sender: int
) -> tuple[list[FvMessage], bool | None]:
    """Record one message, then fire whatever stage rules became enabled.

    Returns broadcast messages and, when the deliver rule fires, the
    delivered value.  Duplicate messages are harmless.
    """
    state.senders(msg.kind, msg.value).add(sender)

    out: list[FvMessage] = []
    delivered: bool | None = None
    for value in (False, True):
        if not state.ready and contains_quorum_with(view, frozenset(state.senders(VOTE, value)), self_id):
            state.ready = True
            out.append(FvMessage(READY, value))
            break
    for value in (False, True):
        if not state.ready and is_v_blocking(view, self_id, frozenset(state.senders(READY, value))):
            state.ready = True
            out.append(FvMessage(READY, value))
            break
    for value in (False, True):
        if not state.delivered and contains_quorum_with(
            view, frozenset(state.senders(READY, value)), self_id
        ):
            state.delivered = True
            delivered = value
            break
    return out, delivered
