"""Trace events and their line-oriented file format.

One event per line: ``seq time node kind payload...`` with space-separated
payload fields, ballots rendered ``<n:x>`` (``<0:_>`` for the null
ballot), booleans as ``true``/``false``.  Lines starting with ``#`` are
metadata comments.  The format is byte-stable for fixed inputs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable

from fbqsim.ballot import Ballot, format_ballots, parse_ballots
from fbqsim.fbqs import node_name, parse_node

# Event kinds
PROPOSE = "propose"
DECIDE = "decide"
START_TIMER = "start-timer"
TIMEOUT = "timeout"
CRASH = "crash"
VOTE_EV = "vote"
DELIVER_EV = "deliver"
SEND = "send"
RECEIVE = "receive"
PREPARE = "prepare"
COMMIT = "commit"
PREPARED = "prepared"
COMMITTED = "committed"
VOTE_BATCH = "vote-batch"
DELIVER_BATCH = "deliver-batch"
SEND_BATCH = "send-batch"
RECEIVE_BATCH = "receive-batch"

AbstractMsg = tuple[str, Ballot, bool]  # (VOTE|READY, ballot, value)


def fmt_bool(b: bool) -> str:
    return "true" if b else "false"


def parse_bool(text: str) -> bool:
    if text == "true":
        return True
    if text == "false":
        return False
    raise ValueError(f"bad boolean {text!r}")


def fmt_abstract_msgs(ms: Iterable[AbstractMsg]) -> str:
    parts = [f"{kind}:{ballot}:{fmt_bool(value)}" for kind, ballot, value in ms]
    return ",".join(parts) if parts else "-"


def parse_abstract_msgs(text: str) -> tuple[AbstractMsg, ...]:
    if text == "-":
        return ()
    out = []
    for part in text.split(","):
        kind, _, rest = part.partition(":")
        ballot, _, value = rest.rpartition(":")
        out.append((kind, Ballot.parse(ballot), parse_bool(value)))
    return tuple(out)


@dataclass(frozen=True)
class SimEvent:
    seq: int
    time: int
    node: int
    kind: str
    payload: tuple

    def to_line(self) -> str:
        return f"{self.seq} {self.time} {node_name(self.node)} {self.kind} {self._payload_str()}".rstrip()

    def _payload_str(self) -> str:
        k, p = self.kind, self.payload
        if k in (PROPOSE, DECIDE):
            (value,) = p
            return fmt_bool(value) if isinstance(value, bool) else str(value)
        if k == START_TIMER:
            return str(p[0])
        if k in (TIMEOUT, CRASH):
            return ""
        if k in (PREPARE, COMMIT, PREPARED, COMMITTED):
            return str(p[0])
        if k in (VOTE_EV, DELIVER_EV):
            return fmt_bool(p[0])
        if k in (SEND, RECEIVE):
            if len(p) == 3:  # plain voting message: kind value peer
                mkind, value, peer = p
                return f"{mkind} {fmt_bool(value)} {node_name(peer)}"
            mkind, skind, ballot, peer = p
            return f"{mkind} {skind} {ballot} {node_name(peer)}"
        if k in (VOTE_BATCH, DELIVER_BATCH):
            value, ballots = p
            return f"{fmt_bool(value)} {format_ballots(ballots) if ballots else '-'}"
        if k in (SEND_BATCH, RECEIVE_BATCH):
            peer, msgs = p
            return f"{node_name(peer)} {fmt_abstract_msgs(msgs)}"
        raise ValueError(f"unknown event kind {k!r}")

    @staticmethod
    def parse(line: str) -> "SimEvent":
        parts = line.split(" ")
        if len(parts) < 4:
            raise ValueError(f"malformed trace line: {line!r}")
        seq, time, node, kind = int(parts[0]), int(parts[1]), parse_node(parts[2]), parts[3]
        rest = parts[4:]
        payload: tuple
        if kind in (PROPOSE, DECIDE):
            (raw,) = rest
            payload = (parse_bool(raw),) if raw in ("true", "false") else (int(raw),)
        elif kind == START_TIMER:
            payload = (int(rest[0]),)
        elif kind in (TIMEOUT, CRASH):
            payload = ()
        elif kind in (PREPARE, COMMIT, PREPARED, COMMITTED):
            payload = (Ballot.parse(rest[0]),)
        elif kind in (VOTE_EV, DELIVER_EV):
            payload = (parse_bool(rest[0]),)
        elif kind in (SEND, RECEIVE):
            if len(rest) == 3:
                payload = (rest[0], parse_bool(rest[1]), parse_node(rest[2]))
            elif len(rest) == 4:
                payload = (rest[0], rest[1], Ballot.parse(rest[2]), parse_node(rest[3]))
            else:
                raise ValueError(f"malformed {kind} payload: {line!r}")
        elif kind in (VOTE_BATCH, DELIVER_BATCH):
            ballots = parse_ballots(rest[1]) if rest[1] != "-" else ()
            payload = (parse_bool(rest[0]), ballots)
        elif kind in (SEND_BATCH, RECEIVE_BATCH):
            payload = (parse_node(rest[0]), parse_abstract_msgs(rest[1]))
        else:
            raise ValueError(f"unknown event kind {kind!r} in {line!r}")
        return SimEvent(seq, time, node, kind, payload)


def write_trace(events: Iterable[SimEvent], header: Iterable[str] = ()) -> str:
    lines = [f"# {h}" for h in header]
    lines.extend(ev.to_line() for ev in events)
    return "\n".join(lines) + "\n"


def read_trace(text: str) -> list[SimEvent]:
    events = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        events.append(SimEvent.parse(line))
    return events


def trace_digest(text: str) -> str:
    """Digest of the event lines only, so headers can carry run metadata."""
    body = "\n".join(l for l in text.splitlines() if l and not l.startswith("#"))
    return hashlib.sha256(body.encode("utf-8")).hexdigest()
