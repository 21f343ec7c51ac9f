"""Deterministic discrete-event simulator with authenticated perfect links.

The event loop is a priority queue keyed by (time, enqueue-seq): identical
inputs replay to byte-identical traces.  Links never lose, duplicate, or
forge messages; delivery delay is drawn per message from the seeded
generator (bounded by ``delta-post`` after the stabilization time, by
``pre-max`` before it) unless the scenario pins ``fixed-delay``.  Local
timers run with a per-node constant skew offset applied to durations.

Crash-only nodes run the protocol until their stop time.  Malicious nodes
run nothing: their behavior is exactly their adversary script.
"""

from __future__ import annotations

import copy
import heapq
import random
from dataclasses import dataclass, field

from fbqsim.ascp import AscpNode
from fbqsim.ballot import NULL
from fbqsim.bv import BvMessage
from fbqsim.cscp import CscpNode
from fbqsim.events import (
    CRASH,
    DECIDE,
    DELIVER_EV,
    RECEIVE,
    RECEIVE_BATCH,
    SEND,
    SEND_BATCH,
    START_TIMER,
    VOTE_EV,
    SimEvent,
    write_trace,
)
from fbqsim.fbqs import CapacityError, Fbqs, maximal_intact_sets_subjective, node_name
from fbqsim.fv import FvMessage, FvState, fv_on_message, fv_vote
from fbqsim.scenario import Scenario, ScriptSend

Payload = FvMessage | BvMessage | tuple  # tuple = abstract message batch


@dataclass
class FvSingleNode:
    """One voting instance (a single fixed tag) driven directly by a vote."""

    view: Fbqs
    self_id: int
    state: FvState = field(default_factory=FvState)
    delivered: bool | None = None

    def vote(self, a: bool) -> list[tuple]:
        effects: list[tuple] = [("event", VOTE_EV, (a,))]
        for msg in fv_vote(self.state, a):
            effects.append(("broadcast", msg))
        return effects

    def on_receive(self, sender: int, msg: FvMessage) -> list[tuple]:
        effects: list[tuple] = []
        out, delivered = fv_on_message(self.state, self.view, self.self_id, msg, sender)
        for m in out:
            effects.append(("broadcast", m))
        if delivered is not None and self.delivered is None:
            self.delivered = delivered
            effects.append(("event", DELIVER_EV, (delivered,)))
        return effects


@dataclass
class SimResult:
    scenario: Scenario
    events: list[SimEvent]
    decided: dict[int, int]
    fv_delivered: dict[int, bool]
    quiesced: bool
    end_time: int
    anomalies: list[str]

    def trace_text(self) -> str:
        sc = self.scenario
        header = [
            f"fbqsim trace mode={sc.mode} nodes={sc.n} k={sc.k} seed={sc.seed}",
            f"quiesced={self.quiesced} end-time={self.end_time}",
        ]
        return write_trace(self.events, header)


class Simulation:
    """One run; deep-copyable mid-flight for continuation experiments."""

    def __init__(self, scenario: Scenario, seed: int | None = None):
        self.sc = scenario
        self.rng = random.Random(scenario.seed if seed is None else seed)
        self.time = 0
        self.seq = 0
        self.queue: list[tuple[int, int, str, object]] = []
        self.events: list[SimEvent] = []
        self.stopped: set[int] = set()
        self.halted: set[int] = set()
        self.decided: dict[int, int] = {}
        self.fv_delivered: dict[int, bool] = {}
        self.timer_token: dict[int, int] = {}
        self.anomalies: list[str] = []
        self.post_gst_forced = False

        sub = scenario.subjective()
        self.skew = {v: self.rng.randint(0, scenario.skew) for v in scenario.universe}
        honest = sorted(scenario.fault_model.honest_in(scenario.universe))
        self.nodes: dict[int, object] = {}
        for v in honest:
            view = sub.views[v] if v in sub.views else scenario.base
            if scenario.mode == "fv":
                self.nodes[v] = FvSingleNode(view, v)
            elif scenario.mode == "ascp":
                self.nodes[v] = AscpNode(view, v, scenario.k)
            else:
                self.nodes[v] = CscpNode(view, v, scenario.k)
        try:
            self.intact_sets = maximal_intact_sets_subjective(sub, scenario.fault_model)
        except CapacityError:
            self.intact_sets = ()

        for v, t in scenario.crash_times.items():
            self._push(t, "crash", v)
        for v, script in scenario.scripts.items():
            if script.stop_at is not None:
                self._push(script.stop_at, "script-stop", v)
            for send in script.sends:
                self._push(send.at, "script-send", (v, send))

    # -- plumbing ---------------------------------------------------------

    def _push(self, time: int, kind: str, data: object) -> None:
        heapq.heappush(self.queue, (time, self.seq, kind, data))
        self.seq += 1

    def _record(self, node: int, kind: str, payload: tuple) -> None:
        self.events.append(SimEvent(len(self.events), self.time, node, kind, payload))

    def _delay(self) -> int:
        if self.sc.fixed_delay is not None:
            return self.sc.fixed_delay
        if self.post_gst_forced or self.time >= self.sc.gst:
            return self.rng.randint(1, self.sc.delta_post)
        raw = self.rng.randint(1, max(1, self.sc.pre_max))
        cutoff = self.sc.gst + self.rng.randint(1, self.sc.delta_post)
        return max(1, min(raw, cutoff - self.time))

    def _send(
        self, sender: int, recipient: int, payload: Payload, delay: int | None = None
    ) -> None:
        if isinstance(payload, FvMessage):
            self._record(sender, SEND, (payload.kind, payload.value, recipient))
        elif isinstance(payload, BvMessage):
            stmt = payload.statement
            self._record(sender, SEND, (payload.kind, stmt.kind, stmt.ballot, recipient))
        else:
            self._record(sender, SEND_BATCH, (recipient, tuple(payload)))
        if delay is None:
            delay = self._delay()
        self._push(self.time + delay, "deliver", (recipient, sender, payload))

    def _interpret(self, node: int, effects: list[tuple]) -> None:
        for effect in effects:
            tag = effect[0]
            if tag == "event":
                self._record(node, effect[1], effect[2])
            elif tag in ("broadcast", "batch"):
                for peer in self.sc.universe:
                    self._send(node, peer, effect[1])
            elif tag == "arm":
                round_no = effect[1]
                self._record(node, START_TIMER, (round_no,))
                token = self.timer_token.get(node, 0) + 1
                self.timer_token[node] = token
                delay = self.sc.timer_delay(round_no) + self.skew[node]
                self._push(self.time + delay, "timer", (node, token))
            elif tag == "decide":
                self._record(node, DECIDE, (effect[1],))
                self.decided[node] = effect[1]
                self.halted.add(node)
            else:
                raise AssertionError(f"unknown effect {tag!r}")
        self._check_bunched_invariants(node)

    def _check_bunched_invariants(self, node: int) -> None:
        """Commit stages of intact nodes may not outrun their prepare stages;
        anything else is logged, never dropped."""
        engine = self.nodes.get(node)
        if not isinstance(engine, CscpNode):
            return
        if not any(node in i for i in self.intact_sets):
            return
        brs = engine.brs
        for b in brs.delivered_cmt:
            if b > brs.max_delivered_prep:
                self.anomalies.append(
                    f"t={self.time} {node_name(node)}: committed {b} beyond "
                    f"delivered-prepare watermark {brs.max_delivered_prep}"
                )
        for b in brs.readied_cmt:
            if b > brs.max_readied_prep:
                self.anomalies.append(
                    f"t={self.time} {node_name(node)}: readied commit {b} beyond "
                    f"readied-prepare watermark {brs.max_readied_prep}"
                )

    # -- run --------------------------------------------------------------

    def start(self) -> None:
        for v in sorted(self.nodes):
            if self.sc.crash_times.get(v) == 0:
                continue
            proposal = self.sc.proposals.get(v)
            if proposal is None:
                continue
            node = self.nodes[v]
            if isinstance(node, FvSingleNode):
                self._interpret(v, node.vote(proposal))
            else:
                self._interpret(v, node.propose(proposal))

    def step(self) -> bool:
        """Process one queue entry; False when the queue has drained."""
        if not self.queue:
            return False
        time, _seq, kind, data = heapq.heappop(self.queue)
        if time > self.sc.max_time:
            self.queue.clear()
            return False
        self.time = time
        if kind == "crash":
            v = data
            if v not in self.stopped:
                self._record(v, CRASH, ())
                self.stopped.add(v)
        elif kind == "script-stop":
            self.stopped.add(data)
        elif kind == "script-send":
            v, send = data
            if v not in self.stopped:
                for recipient in send.recipients:
                    self._send(v, recipient, send.payload, send.delay)
        elif kind == "timer":
            v, token = data
            if self.timer_token.get(v) != token or v in self.stopped or v in self.halted:
                return True
            node = self.nodes[v]
            self._interpret(v, node.on_timeout())
        elif kind == "deliver":
            recipient, sender, payload = data
            if recipient in self.stopped or recipient not in self.nodes:
                return True
            if isinstance(payload, FvMessage):
                self._record(recipient, RECEIVE, (payload.kind, payload.value, sender))
            elif isinstance(payload, BvMessage):
                stmt = payload.statement
                self._record(recipient, RECEIVE, (payload.kind, stmt.kind, stmt.ballot, sender))
            else:
                self._record(recipient, RECEIVE_BATCH, (sender, tuple(payload)))
            if recipient in self.halted:
                return True
            node = self.nodes[recipient]
            if isinstance(node, FvSingleNode):
                self._interpret(recipient, node.on_receive(sender, payload))
            elif isinstance(node, AscpNode):
                self._interpret(recipient, node.on_receive_batch(sender, payload))
            else:
                self._interpret(recipient, node.on_receive(sender, payload))
        else:
            raise AssertionError(f"unknown queue entry {kind!r}")
        return True

    def run(self) -> SimResult:
        self.start()
        while self.step():
            pass
        quiesced = not self.queue
        for v, node in self.nodes.items():
            if isinstance(node, FvSingleNode) and node.delivered is not None:
                self.fv_delivered[v] = node.delivered
        return SimResult(
            scenario=self.sc,
            events=self.events,
            decided=dict(self.decided),
            fv_delivered=dict(self.fv_delivered),
            quiesced=quiesced,
            end_time=self.time,
            anomalies=list(self.anomalies),
        )

    def checkpoint(self) -> "Simulation":
        return copy.deepcopy(self)


def run(scenario: Scenario, seed: int | None = None) -> SimResult:
    return Simulation(scenario, seed).run()


def run_with_checkpoint(
    scenario: Scenario, checkpoint_time: int, seed: int | None = None
) -> tuple[SimResult, "Simulation"]:
    """Run to completion, also returning a copy of the state frozen at the
    first event at or beyond ``checkpoint_time``."""
    sim = Simulation(scenario, seed)
    sim.start()
    snapshot: Simulation | None = None
    while True:
        if snapshot is None and sim.queue and sim.queue[0][0] >= checkpoint_time:
            snapshot = sim.checkpoint()
        if not sim.step():
            break
    if snapshot is None:
        snapshot = sim.checkpoint()
    quiesced = not sim.queue
    for v, node in sim.nodes.items():
        if isinstance(node, FvSingleNode) and node.delivered is not None:
            sim.fv_delivered[v] = node.delivered
    result = SimResult(
        scenario=sim.sc,
        events=sim.events,
        decided=dict(sim.decided),
        fv_delivered=dict(sim.fv_delivered),
        quiesced=not sim.queue,
        end_time=sim.time,
        anomalies=list(sim.anomalies),
    )
    return result, snapshot


def liveness_budget(sim: Simulation, extra_rounds: int = 8) -> int:
    """How long a malicious-silenced continuation may take before every
    intact node must have decided: the doubling timeout schedule from the
    highest round any node has reached, plus slack for message hops."""
    base_round = 0
    for node in sim.nodes.values():
        base_round = max(base_round, getattr(node, "round", 0))
    total = sum(sim.sc.timer_delay(n) for n in range(base_round + 1, base_round + extra_rounds + 1))
    slack = 4 * (sim.sc.delta_post + sim.sc.skew + 1) * (extra_rounds + 1)
    return sim.time + total + slack


def continue_with_stopped_malicious(
    snapshot: Simulation, extra_rounds: int = 8
) -> tuple[SimResult, int]:
    """Resume a checkpoint with every malicious node silenced and post-GST
    delays; run until all intact nodes decide, the liveness budget
    expires, or the queue drains.  Returns the continuation result and
    the budget used as its deadline."""
    sim = copy.deepcopy(snapshot)
    sim.stopped.update(sim.sc.fault_model.malicious)
    sim.queue = [
        entry for entry in sim.queue if entry[2] != "script-send"
    ]
    heapq.heapify(sim.queue)
    sim.post_gst_forced = True
    budget = liveness_budget(sim, extra_rounds)
    intact_nodes = set().union(*sim.intact_sets) if sim.intact_sets else set()

    def all_intact_decided() -> bool:
        return intact_nodes <= set(sim.decided)

    while sim.queue and not all_intact_decided():
        if sim.queue[0][0] > budget:
            break
        if not sim.step():
            break
    quiesced = not sim.queue
    for v, node in sim.nodes.items():
        if isinstance(node, FvSingleNode) and node.delivered is not None:
            sim.fv_delivered[v] = node.delivered
    result = SimResult(
        scenario=sim.sc,
        events=sim.events,
        decided=dict(sim.decided),
        fv_delivered=dict(sim.fv_delivered),
        quiesced=quiesced,
        end_time=sim.time,
        anomalies=list(sim.anomalies),
    )
    return result, budget
