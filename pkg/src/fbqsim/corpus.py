"""Random scenario generation for property campaigns.

Sampling distribution (documented so campaigns are reproducible from a
seed): half the systems are cardinality systems with a supermajority
threshold, half assign each node one to three random slices containing
itself; each non-anchor node is faulty with the configured probability,
split between crash-only and scripted-malicious; malicious scripts send
a handful of random statements at random times.  Proposals, timing
parameters, and per-scenario seeds are drawn from the same generator.
"""

from __future__ import annotations

import random

from fbqsim.ballot import Ballot
from fbqsim.fbqs import node_name
from fbqsim.scenario import Scenario, parse_scenario


def _random_slices_lines(rng: random.Random, n: int) -> list[str]:
    lines = []
    for v in range(n):
        groups = []
        for _ in range(rng.randint(1, 3)):
            others = [u for u in range(n) if u != v]
            size = rng.randint(0, len(others))
            members = sorted([v] + rng.sample(others, size))
            groups.append("{" + " ".join(node_name(u) for u in members) + "}")
        lines.append(f"{node_name(v)} = {' '.join(sorted(set(groups)))}")
    return lines


def _random_statement(rng: random.Random, k: int) -> str:
    kind = rng.choice(["VOTE", "READY"])
    skind = rng.choice(["PREP", "CMT"])
    ballot = Ballot(rng.randint(1, 2), rng.randint(1, k))
    return f"{kind} {skind} {ballot}"


def _random_fv_message(rng: random.Random) -> str:
    return f"FV {rng.choice(['VOTE', 'READY'])} {rng.choice(['true', 'false'])}"


def generate_scenario_text(
    rng: random.Random,
    *,
    mode: str = "cscp",
    max_nodes: int = 5,
    max_k: int = 3,
    max_malicious: int = 1,
    allow_crash: bool = True,
) -> str:
    n = rng.randint(3, max_nodes)
    k = rng.randint(2, max_k)
    lines = [
        "[system]",
        f"nodes = {n}",
        f"k = {k}",
        f"seed = {rng.randint(0, 10**6)}",
        "max-time = 600",
        "",
        "[slices]",
    ]
    if rng.random() < 0.5:
        threshold = rng.randint((2 * n + 2) // 3, n)
        lines.append(f"* = threshold {threshold}")
    else:
        lines.extend(_random_slices_lines(rng, n))

    faulty: list[int] = []
    malicious: list[int] = []
    crashed: list[int] = []
    for v in range(1, n):  # node v1 stays correct, anchoring a candidate intact set
        if len(faulty) >= max(1, n // 3):
            break
        if rng.random() < 0.35:
            faulty.append(v)
            if len(malicious) < max_malicious and rng.random() < 0.7:
                malicious.append(v)
            elif allow_crash:
                crashed.append(v)
            else:
                faulty.pop()

    lines.append("")
    lines.append("[faults]")
    for v in malicious:
        lines.append(f"{node_name(v)} = malicious")
        for _ in range(rng.randint(0, 4)):
            at = rng.randint(0, 20)
            to = rng.choice(["*"] + [node_name(u) for u in range(n)])
            if mode == "fv":
                msg = _random_fv_message(rng)
            elif mode == "ascp":
                b = Ballot(rng.randint(1, 2), rng.randint(1, k))
                val = rng.choice(["true", "false"])
                msg = f"BATCH VOTE:{b}:{val}"
            else:
                msg = _random_statement(rng, k)
            lines.append(f"script {node_name(v)} = send {at} {to} {msg}")
        if rng.random() < 0.5:
            lines.append(f"script {node_name(v)} = stop {rng.randint(10, 60)}")
    for v in crashed:
        lines.append(f"{node_name(v)} = crash {rng.randint(0, 30)}")

    lines.append("")
    lines.append("[proposals]")
    for v in range(n):
        if v in malicious:
            continue
        if mode == "fv":
            lines.append(f"{node_name(v)} = {rng.choice(['true', 'false'])}")
        else:
            lines.append(f"{node_name(v)} = {rng.randint(1, k)}")

    lines.extend(
        [
            "",
            "[timing]",
            f"gst = {rng.choice([0, 0, 5, 10])}",
            f"delta-post = {rng.randint(1, 2)}",
            f"pre-max = {rng.randint(1, 4)}",
            f"t0 = {rng.choice([2, 4])}",
            f"skew = {rng.choice([0, 0, 1])}",
            "",
            "[protocol]",
            f"mode = {mode}",
        ]
    )
    return "\n".join(lines) + "\n"


def generate_scenario(rng: random.Random, **kwargs) -> Scenario:
    return parse_scenario(generate_scenario_text(rng, **kwargs))
