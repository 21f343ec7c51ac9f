"""Safety and liveness verdicts evaluated over recorded traces.

Each verdict names a property, says PASS / FAIL / N-A, and cites the
sequence numbers of the witnessing events on failure.  Liveness-style
properties can only fail on runs that reached quiescence: a run cut off
mid-flight has not yet broken an "eventually".
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from fbqsim.events import DECIDE, DELIVER_EV, PROPOSE, VOTE_EV, SimEvent
from fbqsim.fbqs import (
    CapacityError,
    intertwined,
    maximal_intact_sets_subjective,
    node_name,
)
from fbqsim.scenario import Scenario

PASS = "PASS"
FAIL = "FAIL"
NA = "N/A"


@dataclass
class Verdict:
    name: str
    status: str
    detail: str = ""
    witnesses: tuple[int, ...] = ()

    def line(self) -> str:
        w = f" [seq {','.join(map(str, self.witnesses))}]" if self.witnesses else ""
        d = f" - {self.detail}" if self.detail else ""
        return f"{self.status:4} {self.name}{d}{w}"


@dataclass
class Report:
    verdicts: list[Verdict] = field(default_factory=list)
    intact_sets: tuple[frozenset[int], ...] = ()
    anomalies: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(v.status != FAIL for v in self.verdicts)

    def text(self) -> str:
        lines = [
            "intact sets: "
            + (
                "; ".join("{" + " ".join(node_name(v) for v in sorted(i)) + "}" for i in self.intact_sets)
                or "(none)"
            )
        ]
        lines.extend(v.line() for v in self.verdicts)
        for a in self.anomalies:
            lines.append(f"note {a}")
        return "\n".join(lines)


def _fmt_set(i: frozenset[int]) -> str:
    return "{" + " ".join(node_name(v) for v in sorted(i)) + "}"


def evaluate(events: list[SimEvent], scenario: Scenario, quiesced: bool = True) -> Report:
    """Run every applicable property check against a recorded trace."""
    try:
        intact = maximal_intact_sets_subjective(scenario.subjective(), scenario.fault_model)
    except CapacityError:
        return Report(
            verdicts=[Verdict("intact-set-analysis", NA, "universe beyond enumeration cap")]
        )
    report = Report(intact_sets=intact)
    if scenario.mode == "fv":
        _voting_verdicts(report, events, scenario, quiesced)
    else:
        _consensus_verdicts(report, events, scenario, quiesced)
    return report


# -- reliable voting ------------------------------------------------------


def _voting_verdicts(report: Report, events: list[SimEvent], sc: Scenario, quiesced: bool) -> None:
    correct = sc.correct()
    delivers: dict[int, list[SimEvent]] = {}
    votes: dict[int, bool] = {}
    for ev in events:
        if ev.kind == DELIVER_EV and ev.node in correct:
            delivers.setdefault(ev.node, []).append(ev)
        elif ev.kind == VOTE_EV:
            votes[ev.node] = ev.payload[0]

    dups = [evs for evs in delivers.values() if len(evs) > 1]
    report.verdicts.append(
        Verdict("no-duplication", FAIL if dups else PASS, "at most one delivery per correct node",
                tuple(ev.seq for evs in dups for ev in evs))
    )

    views = sc.subjective().views
    bad: list[int] = []
    for v1, v2 in itertools.combinations(sorted(delivers), 2):
        pair_intertwined = all(
            intertwined(view, sc.fault_model, v1, v2) for view in views.values()
        )
        if pair_intertwined:
            a1, a2 = delivers[v1][0], delivers[v2][0]
            if a1.payload[0] != a2.payload[0]:
                bad.extend((a1.seq, a2.seq))
    report.verdicts.append(
        Verdict("consistency-intertwined", FAIL if bad else PASS,
                "intertwined nodes deliver equal values", tuple(bad))
    )

    for i in report.intact_sets:
        delivered_in_i = [v for v in i if v in delivers]
        if delivered_in_i and quiesced and set(delivered_in_i) != i:
            missing = ", ".join(node_name(v) for v in sorted(i - set(delivered_in_i)))
            report.verdicts.append(
                Verdict(f"totality-{_fmt_set(i)}", FAIL, f"no delivery at {missing}",
                        tuple(delivers[v][0].seq for v in delivered_in_i))
            )
        else:
            report.verdicts.append(Verdict(f"totality-{_fmt_set(i)}", PASS))

        votes_in_i = {votes.get(v) for v in i}
        if len(votes_in_i) == 1 and None not in votes_in_i:
            (a,) = votes_in_i
            if quiesced:
                wrong = [v for v in i if v not in delivers or delivers[v][0].payload[0] != a]
                report.verdicts.append(
                    Verdict(f"validity-{_fmt_set(i)}", FAIL if wrong else PASS,
                            f"unanimous vote {str(a).lower()} must be delivered by all")
                )
            else:
                report.verdicts.append(Verdict(f"validity-{_fmt_set(i)}", PASS, "run not finished"))
        else:
            report.verdicts.append(Verdict(f"validity-{_fmt_set(i)}", NA, "votes not unanimous"))


# -- consensus ------------------------------------------------------------


def _consensus_verdicts(report: Report, events: list[SimEvent], sc: Scenario, quiesced: bool) -> None:
    correct = sc.correct()
    decides: dict[int, list[SimEvent]] = {}
    proposed: list[SimEvent] = []
    for ev in events:
        if ev.kind == DECIDE and ev.node in correct:
            decides.setdefault(ev.node, []).append(ev)
        elif ev.kind == PROPOSE:
            proposed.append(ev)

    dups = [evs for evs in decides.values() if len(evs) > 1]
    report.verdicts.append(
        Verdict("integrity", FAIL if dups else PASS, "no correct node decides twice",
                tuple(ev.seq for evs in dups for ev in evs))
    )

    for i in report.intact_sets:
        values = {decides[v][0].payload[0] for v in i if v in decides}
        if len(values) > 1:
            report.verdicts.append(
                Verdict(f"agreement-{_fmt_set(i)}", FAIL, f"decided values {sorted(values)}",
                        tuple(decides[v][0].seq for v in i if v in decides))
            )
        else:
            report.verdicts.append(Verdict(f"agreement-{_fmt_set(i)}", PASS))

    if sc.fault_model.malicious:
        report.verdicts.append(Verdict("weak-validity", NA, "malicious nodes present"))
    else:
        proposals = {ev.payload[0] for ev in proposed}
        problems: list[int] = []
        detail = "decisions drawn from proposals"
        for i in report.intact_sets:
            for v in i:
                if v in decides and decides[v][0].payload[0] not in proposals:
                    problems.append(decides[v][0].seq)
                    detail = "decided value never proposed"
        if len(proposals) == 1:
            (x,) = proposals
            for i in report.intact_sets:
                for v in i:
                    if v in decides and decides[v][0].payload[0] != x:
                        problems.append(decides[v][0].seq)
                        detail = f"unanimous proposal {x} contradicted"
        report.verdicts.append(
            Verdict("weak-validity", FAIL if problems else PASS, detail, tuple(problems))
        )

    report.verdicts.append(
        Verdict("non-blocking", NA, "evaluated by continuation runs (liveness campaign)")
    )
