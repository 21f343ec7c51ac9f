"""Concrete-to-abstract trace rewriting and the entailment checker.

``sigma`` rewrites each concrete event into its batched abstract
counterpart: statement messages unfold into the per-ballot message
ranges they stand for, with per-direction filters so no (ballot, value)
pair is conveyed twice between a pair of nodes; prepare/commit
invocations and prepared/committed indications unfold into vote/deliver
batches.  Receives of messages whose send was rewritten earlier reuse
the sender's batch, which keeps links perfect on the abstract side.

``check_abstract`` replays an abstract trace against per-node abstract
protocol states and reports the first event not enabled by the rules,
treating nodes outside the projection set as free adversaries.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from fbqsim.ballot import NULL, Ballot, all_ballots, lic_set, successor
from fbqsim.events import (
    COMMIT,
    COMMITTED,
    CRASH,
    DECIDE,
    DELIVER_BATCH,
    PREPARE,
    PREPARED,
    PROPOSE,
    RECEIVE,
    RECEIVE_BATCH,
    SEND,
    SEND_BATCH,
    START_TIMER,
    TIMEOUT,
    VOTE_BATCH,
    AbstractMsg,
    SimEvent,
)
from fbqsim.fbqs import greatest_quorum, is_v_blocking, node_name
from fbqsim.fv import READY, VOTE
from fbqsim.scenario import Scenario

HistoryEntry = tuple[int, str, object]  # (node, propose|decide, value)


def project_trace(events: list[SimEvent], nodes: frozenset[int]) -> list[SimEvent]:
    """Order-preserving restriction to the given acting nodes."""
    return [ev for ev in events if ev.node in nodes]


def history(events: list[SimEvent]) -> list[HistoryEntry]:
    return [
        (ev.node, ev.kind, ev.payload[0])
        for ev in events
        if ev.kind in (PROPOSE, DECIDE)
    ]


class SigmaError(ValueError):
    """Structurally malformed concrete trace; carries the offending seq."""

    def __init__(self, seq: int, message: str) -> None:
        super().__init__(f"seq {seq}: {message}")
        self.seq = seq


@dataclass
class _DirectionState:
    """What has already been conveyed from one node to another."""

    votes: set[tuple[Ballot, bool]] = field(default_factory=set)
    ready_false: set[Ballot] = field(default_factory=set)
    true_top: Ballot = NULL


def _phi(delivered_false: set[Ballot]) -> Ballot:
    """The largest ballot aborted so far: lower bound of commit batches."""
    return max(delivered_false) if delivered_false else NULL


def sigma(events: list[SimEvent], k: int) -> list[SimEvent]:
    """Rewrite a concrete trace into its abstract counterpart, event by
    event.  Output events keep the source seq/time for error reporting."""
    out: list[SimEvent] = []
    delivered_false: dict[int, set[Ballot]] = {}
    send_dirs: dict[tuple[int, int], _DirectionState] = {}
    recv_dirs: dict[tuple[int, int], _DirectionState] = {}
    in_flight: dict[tuple, deque[tuple[AbstractMsg, ...]]] = {}

    def emit(ev: SimEvent, kind: str, payload: tuple) -> None:
        out.append(SimEvent(ev.seq, ev.time, ev.node, kind, payload))

    def direction(table: dict, a: int, b: int) -> _DirectionState:
        return table.setdefault((a, b), _DirectionState())

    def unfold(
        ev: SimEvent, kind: str, skind: str, b: Ballot, dstate: _DirectionState, sender_phi: Ballot
    ) -> tuple[AbstractMsg, ...]:
        """The per-ballot messages a statement stands for, minus what this
        direction already carried."""
        if skind == "PREP":
            if kind == VOTE:
                fresh = [
                    b2
                    for b2 in lic_set(b, k)
                    if (b2, False) not in dstate.votes and (b2, True) not in dstate.votes
                ]
                dstate.votes.update((b2, False) for b2 in fresh)
                return tuple((VOTE, b2, False) for b2 in fresh)
            fresh = [b2 for b2 in lic_set(b, k) if b2 not in dstate.ready_false]
            dstate.ready_false.update(fresh)
            return tuple((READY, b2, False) for b2 in fresh)
        if kind == VOTE:
            lo = max(sender_phi, dstate.true_top)
            rng = [b2 for b2 in all_ballots(b.n, k) if lo < b2 <= b and b2 != NULL]
            dstate.votes.update((b2, True) for b2 in rng)
            dstate.true_top = max(dstate.true_top, b)
            return tuple((VOTE, b2, True) for b2 in rng)
        return ((READY, b, True),)

    for ev in events:
        kind = ev.kind
        if kind in (PROPOSE, DECIDE, START_TIMER, TIMEOUT, CRASH):
            out.append(ev)
        elif kind == PREPARE:
            (b,) = ev.payload
            emit(ev, VOTE_BATCH, (False, lic_set(b, k)))
        elif kind == COMMIT:
            (b,) = ev.payload
            lo = _phi(delivered_false.setdefault(ev.node, set()))
            rng = tuple(b2 for b2 in all_ballots(b.n, k) if lo < b2 <= b and b2 != NULL)
            emit(ev, VOTE_BATCH, (True, rng))
        elif kind == PREPARED:
            (b,) = ev.payload
            seen = delivered_false.setdefault(ev.node, set())
            fresh = tuple(b2 for b2 in lic_set(b, k) if b2 not in seen)
            seen.update(fresh)
            emit(ev, DELIVER_BATCH, (False, fresh))
        elif kind == COMMITTED:
            (b,) = ev.payload
            emit(ev, DELIVER_BATCH, (True, (b,)))
        elif kind == SEND:
            if len(ev.payload) != 4:
                raise SigmaError(ev.seq, f"not a statement message: {ev.payload}")
            mkind, skind, b, peer = ev.payload
            dstate = direction(send_dirs, ev.node, peer)
            phi = _phi(delivered_false.setdefault(ev.node, set()))
            batch = unfold(ev, mkind, skind, b, dstate, phi)
            emit(ev, SEND_BATCH, (peer, batch))
            in_flight.setdefault((ev.node, peer, mkind, skind, b), deque()).append(batch)
        elif kind == RECEIVE:
            if len(ev.payload) != 4:
                raise SigmaError(ev.seq, f"not a statement message: {ev.payload}")
            mkind, skind, b, peer = ev.payload
            queue = in_flight.get((peer, ev.node, mkind, skind, b))
            if queue:
                batch = queue.popleft()
                dstate = direction(recv_dirs, peer, ev.node)
                for m_kind, m_ballot, m_value in batch:
                    if m_value:
                        dstate.votes.add((m_ballot, True))
                        dstate.true_top = max(dstate.true_top, m_ballot)
                    elif m_kind == VOTE:
                        dstate.votes.add((m_ballot, False))
                    else:
                        dstate.ready_false.add(m_ballot)
            else:
                # sender outside the projected trace: reconstruct from what
                # this direction has carried so far
                dstate = direction(recv_dirs, peer, ev.node)
                batch = unfold(ev, mkind, skind, b, dstate, dstate.true_top)
            emit(ev, RECEIVE_BATCH, (peer, batch))
        else:
            raise SigmaError(ev.seq, f"unexpected concrete event kind {kind!r}")
    return out


# -- abstract entailment ---------------------------------------------------


@dataclass
class CheckResult:
    ok: bool
    fail_seq: int | None = None
    rule: str = ""
    detail: str = ""

    def text(self) -> str:
        if self.ok:
            return "abstract-entailment PASS"
        return f"abstract-entailment FAIL at seq {self.fail_seq} ({self.rule}): {self.detail}"


class _Abort(Exception):
    def __init__(self, rule: str, detail: str) -> None:
        self.rule = rule
        self.detail = detail


@dataclass
class _AbstractNode:
    view: object
    self_id: int
    k: int
    proposed: bool = False
    candidate: Ballot = NULL
    round: int = 0
    timer_armed: bool = False
    prepared_floor: Ballot = NULL
    pending_abort: tuple[Ballot, ...] | None = None
    voted: dict[Ballot, bool] = field(default_factory=dict)
    readied: dict[Ballot, bool] = field(default_factory=dict)
    delivered: dict[Ballot, bool] = field(default_factory=dict)
    received: dict[tuple[int, str, bool], set[Ballot]] = field(default_factory=dict)
    sent_keys: set[tuple[int, str, Ballot, bool]] = field(default_factory=set)
    decided: object = None

    def rcv(self, peer: int, kind: str, value: bool) -> set[Ballot]:
        return self.received.setdefault((peer, kind, value), set())

    def delivered_false_set(self) -> set[Ballot]:
        return {b for b, v in self.delivered.items() if v is False}

    def eager_prepared(self) -> Ballot:
        """Largest preparable ballot given current deliveries."""
        delivered = self.delivered_false_set()
        if not delivered:
            return NULL
        bound = max(self.candidate, successor(max(delivered), self.k))
        best = NULL
        for b in all_ballots(bound.n, self.k):
            if b != NULL and b <= bound and all(b2 in delivered for b2 in lic_set(b, self.k)):
                best = max(best, b)
        return best

    def sender_cap(self, u: int) -> int:
        cap = 0
        for kind in (VOTE, READY):
            falses = self.rcv(u, kind, False)
            if falses:
                cap = max(cap, successor(max(falses), self.k).n)
            trues = self.rcv(u, kind, True)
            if trues:
                cap = max(cap, max(b.n for b in trues))
        return cap


def check_abstract(
    abs_events: list[SimEvent], scenario: Scenario, inside: frozenset[int]
) -> CheckResult:
    """Replay an abstract trace; nodes outside ``inside`` move freely."""
    views = scenario.subjective().views
    nodes = {
        v: _AbstractNode(views[v], v, scenario.k) for v in inside
    }
    available: dict[tuple[int, int], dict[AbstractMsg, int]] = {}

    def check_event(ev: SimEvent) -> None:
        st = nodes[ev.node]
        kind = ev.kind
        if st.decided is not None and kind not in (RECEIVE_BATCH,):
            raise _Abort("halt", f"{node_name(ev.node)} acts after deciding")
        if st.pending_abort is not None and kind != VOTE_BATCH:
            raise _Abort("abort-votes", "propose/timeout not followed by its abort vote-batch")

        if kind == PROPOSE:
            if st.proposed:
                raise _Abort("propose", "second proposal")
            st.proposed = True
            st.candidate = Ballot(1, ev.payload[0])
            st.pending_abort = lic_set(st.candidate, st.k)
        elif kind == TIMEOUT:
            if not st.timer_armed:
                raise _Abort("timeout", "no armed timer")
            st.timer_armed = False
            prepared = st.eager_prepared()
            carried = st.candidate.x if prepared == NULL else prepared.x
            st.candidate = Ballot(st.round + 1, carried)
            st.pending_abort = lic_set(st.candidate, st.k)
        elif kind == VOTE_BATCH:
            value, ballots = ev.payload
            if not value:
                if st.pending_abort is None:
                    raise _Abort("vote-batch", "abort votes without propose/timeout")
                if tuple(ballots) != st.pending_abort:
                    raise _Abort(
                        "vote-batch",
                        f"abort batch {list(map(str, ballots))} != expected "
                        f"{list(map(str, st.pending_abort))}",
                    )
                st.pending_abort = None
                for b in ballots:
                    st.voted.setdefault(b, False)
            else:
                if st.pending_abort is not None:
                    raise _Abort("vote-batch", "commit votes while abort votes pending")
                delivered = st.delivered_false_set()
                for b in ballots:
                    if b <= st.prepared_floor:
                        raise _Abort("vote-batch", f"commit vote on already-settled {b}")
                    if not all(b2 in delivered for b2 in lic_set(b, st.k)):
                        raise _Abort("vote-batch", f"commit vote on unprepared {b}")
                    if st.candidate > b:
                        raise _Abort("vote-batch", f"commit vote below candidate on {b}")
                    st.candidate = b
                    st.prepared_floor = b
                    st.voted.setdefault(b, True)
        elif kind == DELIVER_BATCH:
            value, ballots = ev.payload
            for b in ballots:
                if b in st.delivered:
                    raise _Abort("deliver-batch", f"duplicate delivery of {b}")
                senders = frozenset(
                    u for u in scenario.universe if b in st.rcv(u, READY, value)
                )
                if st.self_id not in greatest_quorum(st.view, senders):
                    raise _Abort(
                        "deliver-batch",
                        f"no ready quorum containing {node_name(st.self_id)} for "
                        f"({b},{str(value).lower()})",
                    )
                st.delivered[b] = value
        elif kind == SEND_BATCH:
            peer, msgs = ev.payload
            for m in msgs:
                m_kind, b, value = m
                if m_kind == VOTE:
                    if st.voted.get(b) != value:
                        raise _Abort("send-batch", f"VOTE({b},{str(value).lower()}) never voted")
                else:
                    if b in st.readied:
                        if st.readied[b] != value:
                            raise _Abort("send-batch", f"conflicting READY for {b}")
                    else:
                        vote_senders = frozenset(
                            u for u in scenario.universe if b in st.rcv(u, VOTE, value)
                        )
                        ready_senders = frozenset(
                            u for u in scenario.universe if b in st.rcv(u, READY, value)
                        )
                        if st.self_id in greatest_quorum(st.view, vote_senders):
                            pass
                        elif is_v_blocking(st.view, st.self_id, ready_senders):
                            pass
                        else:
                            raise _Abort(
                                "send-batch",
                                f"READY({b},{str(value).lower()}) without quorum or blocking set",
                            )
                        st.readied[b] = value
                key = (peer, m_kind, b, value)
                if key in st.sent_keys:
                    raise _Abort("send-batch", f"duplicate send of {m} to {node_name(peer)}")
                st.sent_keys.add(key)
                pool = available.setdefault((ev.node, peer), {})
                pool[m] = pool.get(m, 0) + 1
        elif kind == RECEIVE_BATCH:
            peer, msgs = ev.payload
            for m in msgs:
                m_kind, b, value = m
                if peer in nodes:
                    pool = available.setdefault((peer, ev.node), {})
                    if pool.get(m, 0) < 1:
                        raise _Abort(
                            "receive-batch",
                            f"{m_kind}({b},{str(value).lower()}) from {node_name(peer)} "
                            "was never sent",
                        )
                    pool[m] -= 1
                st.rcv(peer, m_kind, value).add(b)
        elif kind == START_TIMER:
            (n,) = ev.payload
            caps = {u: st.sender_cap(u) for u in scenario.universe}
            eligible = frozenset(u for u, cap in caps.items() if cap > st.round)
            gq = greatest_quorum(st.view, eligible)
            if st.self_id not in gq:
                raise _Abort("start-timer", "no quorum endorsing a higher round")
            expected = min(caps[u] for u in gq)
            if n != expected:
                raise _Abort("start-timer", f"round {n} but rule yields {expected}")
            st.round = n
            st.timer_armed = True
        elif kind == DECIDE:
            x = ev.payload[0]
            if st.decided is not None:
                raise _Abort("decide", "second decision")
            if not any(value and b.x == x for b, value in st.delivered.items()):
                raise _Abort("decide", f"decide({x}) without a committed ballot for {x}")
            st.decided = x
        else:
            raise _Abort("alphabet", f"unexpected abstract event kind {kind!r}")

    for ev in abs_events:
        if ev.node not in nodes:
            raise ValueError(f"event at seq {ev.seq} by node outside the projection")
        try:
            check_event(ev)
        except _Abort as abort:
            return CheckResult(False, ev.seq, abort.rule, abort.detail)
    return CheckResult(True)


# -- end-to-end refinement -------------------------------------------------


@dataclass
class RefinementEntry:
    intact: frozenset[int]
    check: CheckResult
    histories_equal: bool

    @property
    def ok(self) -> bool:
        return self.check.ok and self.histories_equal

    def text(self) -> str:
        label = "{" + " ".join(node_name(v) for v in sorted(self.intact)) + "}"
        parts = [
            f"intact {label}:",
            self.check.text(),
            f"history-equality {'PASS' if self.histories_equal else 'FAIL'}",
        ]
        return " ".join(parts)


@dataclass
class RefinementReport:
    entries: list[RefinementEntry]

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def text(self) -> str:
        if not self.entries:
            return "no intact sets: refinement vacuously PASS"
        return "\n".join(e.text() for e in self.entries)


def refinement_report(
    events: list[SimEvent], scenario: Scenario, intact_sets=None
) -> RefinementReport:
    """For each maximal intact set: rewrite the projected trace, check the
    result is abstractly entailed, and compare histories."""
    from fbqsim.fbqs import maximal_intact_sets_subjective

    if scenario.mode != "cscp":
        raise ValueError("refinement applies to concrete-protocol traces")
    if intact_sets is None:
        intact_sets = maximal_intact_sets_subjective(scenario.subjective(), scenario.fault_model)
    entries = []
    for intact in intact_sets:
        projected = project_trace(events, intact)
        abstract = sigma(projected, scenario.k)
        check = check_abstract(abstract, scenario, intact)
        entries.append(
            RefinementEntry(
                intact=intact,
                check=check,
                histories_equal=history(projected) == history(abstract),
            )
        )
    return RefinementReport(entries)
