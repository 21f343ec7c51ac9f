"""Quorum-structure analysis rendered as deterministic text."""

from __future__ import annotations

from fbqsim.fbqs import (
    enumerate_quorums,
    maximal_intact_sets_subjective,
    node_name,
)
from fbqsim.scenario import Scenario


def _set_text(nodes: frozenset[int]) -> str:
    return "{" + " ".join(node_name(v) for v in sorted(nodes)) + "}"


def analysis_text(sc: Scenario) -> str:
    lines = [f"system: {sc.n} nodes, value domain 1..{sc.k}"]
    fm = sc.fault_model
    if fm.faulty:
        parts = [f"{node_name(v)} (malicious)" for v in sorted(fm.malicious)]
        parts += [f"{node_name(v)} (crash)" for v in sorted(fm.crashed)]
        lines.append("faulty: " + ", ".join(parts))
    else:
        lines.append("faulty: none")
    quorums = enumerate_quorums(sc.base)
    lines.append(f"quorums ({len(quorums)}):")
    lines.extend(f"  {_set_text(q)}" for q in quorums)
    intact = maximal_intact_sets_subjective(sc.subjective(), fm)
    if intact:
        lines.append("maximal intact sets: " + "; ".join(_set_text(i) for i in intact))
    else:
        lines.append("maximal intact sets: none")
    return "\n".join(lines) + "\n"
