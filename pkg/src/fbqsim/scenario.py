"""Scenario files: declarative descriptions of a simulated run.

Sections (``[name]`` headers, ``#`` comments, blank lines ignored):

``[system]``
    ``nodes``, ``k`` (value-domain size), ``seed``, ``max-time``.
``[slices]``
    One line per node: ``v2 = {v1 v2} {v2 v3}``, or the shorthand
    ``* = threshold N`` for the cardinality system.
``[views]`` (optional)
    ``v4 <- v3 = {v3 v4}``: what the (faulty) node v3 advertises to v4.
``[faults]`` (optional)
    ``v3 = malicious`` or ``v2 = crash 10``; plus script lines
    ``script v3 = send <t> <to|*> <message>`` and
    ``script v3 = stop <t>`` and
    ``script v3 = advertise <viewer> {slice} {slice}``.
    Message forms: ``VOTE PREP <1:2>`` (statement), ``FV VOTE false``
    (plain voting message), ``BATCH VOTE:<0:_>:false,...`` (batch).
``[proposals]``
    ``v1 = 3`` (consensus value) or ``v1 = false`` (voting mode).
``[timing]``
    ``gst``, ``delta-post``, ``pre-max``, ``t0``, ``skew``, and the
    optional ``fixed-delay`` that pins every link delay for golden runs.
``[protocol]``
    ``mode = fv | ascp | cscp``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from fbqsim.ballot import Ballot
from fbqsim.bv import BvMessage, Statement
from fbqsim.events import AbstractMsg, parse_abstract_msgs, parse_bool
from fbqsim.fbqs import FaultModel, Fbqs, SubjectiveFbqs, node_name, parse_node, threshold_slices
from fbqsim.fv import FvMessage

MODES = ("fv", "ascp", "cscp")


class ScenarioError(ValueError):
    """Invalid scenario content; carries the offending field path."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


ScriptPayload = BvMessage | FvMessage | tuple[AbstractMsg, ...]


@dataclass(frozen=True)
class ScriptSend:
    at: int
    recipients: tuple[int, ...]
    payload: ScriptPayload
    delay: int | None = None


@dataclass(frozen=True)
class AdversaryScript:
    sends: tuple[ScriptSend, ...] = ()
    stop_at: int | None = None


@dataclass
class Scenario:
    n: int
    k: int
    seed: int
    max_time: int
    mode: str
    base: Fbqs
    view_overrides: dict[tuple[int, int], frozenset[frozenset[int]]]
    fault_model: FaultModel
    crash_times: dict[int, int]
    scripts: dict[int, AdversaryScript]
    proposals: dict[int, object]  # node -> int (ascp/cscp) or bool (fv)
    gst: int = 0
    delta_post: int = 1
    pre_max: int = 1
    fixed_delay: int | None = None
    t0: int = 2
    skew: int = 0
    source_text: str = ""

    @property
    def universe(self) -> tuple[int, ...]:
        return self.base.universe

    def correct(self) -> frozenset[int]:
        return self.fault_model.correct_in(self.universe)

    def subjective(self) -> SubjectiveFbqs:
        """Per-node views: the base system with any advertised lies applied."""
        views = {}
        for viewer in sorted(self.correct()):
            slices = {v: self.base.slices_of(v) for v in self.universe}
            for (target, liar), lied in self.view_overrides.items():
                if target == viewer:
                    slices[liar] = lied
            views[viewer] = Fbqs.from_dict(dict(slices))
        return SubjectiveFbqs(self.correct(), views)

    def view_of(self, v: int) -> Fbqs:
        return self.subjective().views[v]

    def timer_delay(self, round_no: int) -> int:
        """Doubling timeout schedule."""
        return self.t0 * (2**round_no)


_SLICE_RE = re.compile(r"\{([^{}]*)\}")


def _parse_slices(text: str, path: str) -> frozenset[frozenset[int]]:
    found = _SLICE_RE.findall(text)
    if not found or _SLICE_RE.sub("", text).strip():
        raise ScenarioError(path, f"expected one or more {{v1 v2}} groups, got {text!r}")
    out = set()
    for group in found:
        names = group.split()
        if not names:
            raise ScenarioError(path, "empty slice")
        try:
            out.add(frozenset(parse_node(nm) for nm in names))
        except ValueError as exc:
            raise ScenarioError(path, str(exc)) from None
    return frozenset(out)


def _parse_script_message(tokens: list[str], path: str) -> ScriptPayload:
    try:
        if tokens[0] == "FV":
            _, kind, value = tokens
            return FvMessage(kind, parse_bool(value))
        if tokens[0] == "BATCH":
            return parse_abstract_msgs(tokens[1])
        kind, skind, ballot = tokens
        if kind not in ("VOTE", "READY") or skind not in ("PREP", "CMT"):
            raise ValueError(f"bad statement message {' '.join(tokens)!r}")
        return BvMessage(kind, Statement(skind, Ballot.parse(ballot)))
    except (ValueError, IndexError) as exc:
        raise ScenarioError(path, f"bad script message: {exc}") from None


def _sections(text: str) -> dict[str, list[tuple[int, str]]]:
    sections: dict[str, list[tuple[int, str]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            sections.setdefault(current, [])
            continue
        if current is None:
            raise ScenarioError(f"line {lineno}", f"content before any section: {line!r}")
        sections[current].append((lineno, line))
    return sections


def _kv(lines: list[tuple[int, str]], section: str) -> dict[str, str]:
    out = {}
    for lineno, line in lines:
        if "=" not in line:
            raise ScenarioError(f"{section} line {lineno}", f"expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def parse_scenario(text: str) -> Scenario:
    sections = _sections(text)
    for required in ("system", "slices", "proposals", "protocol"):
        if required not in sections:
            raise ScenarioError(required, "missing section")

    sys_kv = _kv(sections["system"], "system")
    try:
        n = int(sys_kv["nodes"])
        k = int(sys_kv.get("k", "3"))
        seed = int(sys_kv.get("seed", "0"))
        max_time = int(sys_kv.get("max-time", "10000"))
    except KeyError as exc:
        raise ScenarioError(f"system.{exc.args[0]}", "missing") from None
    except ValueError as exc:
        raise ScenarioError("system", str(exc)) from None
    if n < 1:
        raise ScenarioError("system.nodes", "need at least one node")
    if k < 1:
        raise ScenarioError("system.k", "value domain must have size >= 1")

    mode = _kv(sections["protocol"], "protocol").get("mode", "")
    if mode not in MODES:
        raise ScenarioError("protocol.mode", f"expected one of {MODES}, got {mode!r}")

    # slices
    slice_map: dict[int, frozenset[frozenset[int]]] = {}
    base: Fbqs | None = None
    for lineno, line in sections["slices"]:
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        path = f"slices line {lineno}"
        if key == "*":
            words = value.split()
            if len(words) != 2 or words[0] != "threshold":
                raise ScenarioError(path, f"expected 'threshold N', got {value!r}")
            base = threshold_slices(n, int(words[1]))
        else:
            try:
                v = parse_node(key)
            except ValueError as exc:
                raise ScenarioError(path, str(exc)) from None
            slice_map[v] = _parse_slices(value, path)
    if base is None:
        missing = [node_name(v) for v in range(n) if v not in slice_map]
        if missing:
            raise ScenarioError("slices", f"no slices for {', '.join(missing)}")
        try:
            base = Fbqs.from_dict(dict(slice_map))
        except ValueError as exc:
            raise ScenarioError("slices", str(exc)) from None
    elif slice_map:
        raise ScenarioError("slices", "threshold shorthand cannot be mixed with per-node lines")
    if len(base.universe) != n:
        raise ScenarioError("slices", f"slices cover {len(base.universe)} nodes, system has {n}")

    # faults
    crashed: set[int] = set()
    malicious: set[int] = set()
    crash_times: dict[int, int] = {}
    script_sends: dict[int, list[ScriptSend]] = {}
    script_stops: dict[int, int] = {}
    view_overrides: dict[tuple[int, int], frozenset[frozenset[int]]] = {}
    for lineno, line in sections.get("faults", []):
        path = f"faults line {lineno}"
        if line.startswith("script "):
            body = line[len("script ") :]
            key, _, value = body.partition("=")
            try:
                actor = parse_node(key.strip())
            except ValueError as exc:
                raise ScenarioError(path, str(exc)) from None
            tokens = value.split()
            if not tokens:
                raise ScenarioError(path, "empty script action")
            if tokens[0] == "stop":
                script_stops[actor] = int(tokens[1])
            elif tokens[0] == "send":
                at = int(tokens[1])
                to = tokens[2]
                recipients = tuple(range(n)) if to == "*" else (parse_node(to),)
                body = tokens[3:]
                delay = None
                if len(body) >= 2 and body[-2] == "delay":
                    delay = int(body[-1])
                    if delay < 1:
                        raise ScenarioError(path, "script delay must be >= 1")
                    body = body[:-2]
                payload = _parse_script_message(body, path)
                script_sends.setdefault(actor, []).append(
                    ScriptSend(at, recipients, payload, delay)
                )
            elif tokens[0] == "advertise":
                viewer = parse_node(tokens[1])
                lied = _parse_slices(" ".join(tokens[2:]), path)
                view_overrides[(viewer, actor)] = lied
            else:
                raise ScenarioError(path, f"unknown script action {tokens[0]!r}")
            continue
        key, _, value = line.partition("=")
        try:
            v = parse_node(key.strip())
        except ValueError as exc:
            raise ScenarioError(path, str(exc)) from None
        words = value.split()
        if words == ["malicious"]:
            malicious.add(v)
        elif len(words) == 2 and words[0] == "crash":
            crashed.add(v)
            crash_times[v] = int(words[1])
        else:
            raise ScenarioError(path, f"expected 'malicious' or 'crash T', got {value!r}")

    for actor in list(script_sends) + list(script_stops):
        if actor not in malicious:
            raise ScenarioError("faults", f"script for non-malicious node {node_name(actor)}")
    for (viewer, liar) in view_overrides:
        if liar not in malicious:
            raise ScenarioError("views", f"slice lie by non-malicious node {node_name(liar)}")

    fault_model = FaultModel(crashed=frozenset(crashed), malicious=frozenset(malicious))
    scripts = {
        actor: AdversaryScript(
            sends=tuple(sorted(script_sends.get(actor, []), key=lambda s: s.at)),
            stop_at=script_stops.get(actor),
        )
        for actor in malicious
    }

    # views section (same meaning as advertise script lines)
    for lineno, line in sections.get("views", []):
        path = f"views line {lineno}"
        m = re.match(r"(\S+)\s*<-\s*(\S+)\s*=\s*(.*)", line)
        if not m:
            raise ScenarioError(path, f"expected 'viewer <- liar = {{...}}', got {line!r}")
        viewer, liar = parse_node(m.group(1)), parse_node(m.group(2))
        if liar not in malicious:
            raise ScenarioError(path, f"slice lie by non-malicious node {node_name(liar)}")
        view_overrides[(viewer, liar)] = _parse_slices(m.group(3), path)

    # proposals
    proposals: dict[int, object] = {}
    for lineno, line in sections["proposals"]:
        path = f"proposals line {lineno}"
        key, _, value = line.partition("=")
        try:
            v = parse_node(key.strip())
        except ValueError as exc:
            raise ScenarioError(path, str(exc)) from None
        value = value.strip()
        if mode == "fv":
            proposals[v] = parse_bool(value)
        else:
            x = int(value)
            if not 1 <= x <= k:
                raise ScenarioError(path, f"value {x} outside 1..{k}")
            proposals[v] = x

    correct = fault_model.correct_in(base.universe)
    for v in sorted(correct):
        if v not in proposals:
            raise ScenarioError("proposals", f"missing proposal for correct node {node_name(v)}")
    for v in proposals:
        if v in malicious:
            raise ScenarioError("proposals", f"malicious node {node_name(v)} cannot propose")

    timing = _kv(sections.get("timing", []), "timing")
    try:
        gst = int(timing.get("gst", "0"))
        delta_post = int(timing.get("delta-post", "1"))
        pre_max = int(timing.get("pre-max", "1"))
        t0 = int(timing.get("t0", "2"))
        skew = int(timing.get("skew", "0"))
        fixed_delay = int(timing["fixed-delay"]) if "fixed-delay" in timing else None
    except ValueError as exc:
        raise ScenarioError("timing", str(exc)) from None
    if gst < 0 or delta_post < 1 or pre_max < 0 or t0 < 1 or skew < 0:
        raise ScenarioError("timing", "gst/pre-max/skew must be >= 0; delta-post/t0 >= 1")
    if fixed_delay is not None and fixed_delay < 1:
        raise ScenarioError("timing.fixed-delay", "must be >= 1")

    scenario = Scenario(
        n=n,
        k=k,
        seed=seed,
        max_time=max_time,
        mode=mode,
        base=base,
        view_overrides=view_overrides,
        fault_model=fault_model,
        crash_times=crash_times,
        scripts=scripts,
        proposals=proposals,
        gst=gst,
        delta_post=delta_post,
        pre_max=pre_max,
        fixed_delay=fixed_delay,
        t0=t0,
        skew=skew,
        source_text=text,
    )
    scenario.subjective()  # validates view consistency
    return scenario


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())
