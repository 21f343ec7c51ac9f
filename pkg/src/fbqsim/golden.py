"""Built-in reference scenarios with pinned outcomes and trace digests.

Each case either runs the simulator (``run`` kind) or prints the quorum
analysis (``analyze`` kind).  Digests of the produced text are stored in
``golden_digests.json`` next to this module and only rewritten through
an explicit bless.  Run-kind cases are re-run under three different
seeds: their scenarios pin every delay, so the traces must be
byte-identical regardless of seed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from fbqsim import simnet
from fbqsim.analysis import analysis_text
from fbqsim.events import trace_digest
from fbqsim.refine import refinement_report
from fbqsim.scenario import Scenario, parse_scenario
from fbqsim.verdicts import evaluate

_DIGEST_PATH = Path(__file__).with_name("golden_digests.json")

FV_EXAMPLE3 = """\
[system]
nodes = 4
k = 3
seed = 0
max-time = 100

[slices]
* = threshold 3

[faults]
v3 = malicious
script v3 = send 0 * FV VOTE false delay 1

[proposals]
v1 = false
v2 = false
v4 = true

[timing]
fixed-delay = 1
t0 = 2

[protocol]
mode = fv
"""

ASCP_EXAMPLE = """\
[system]
nodes = 4
k = 3
seed = 0
max-time = 200

[slices]
* = threshold 3

[faults]
v3 = malicious
script v3 = send 0 * BATCH VOTE:<0:_>:false,VOTE:<1:1>:false delay 1

[proposals]
v1 = 3
v2 = 3
v4 = 1

[timing]
fixed-delay = 2
t0 = 4

[protocol]
mode = ascp
"""

CSCP_EXAMPLE = """\
[system]
nodes = 4
k = 3
seed = 0
max-time = 200

[slices]
* = threshold 3

[faults]
v3 = malicious
script v3 = send 0 * VOTE PREP <1:2> delay 1

[proposals]
v1 = 3
v2 = 3
v4 = 1

[timing]
fixed-delay = 2
t0 = 4

[protocol]
mode = cscp
"""

SPLIT_SYSTEM = """\
[system]
nodes = 4
k = 3
seed = 0
max-time = 100

[slices]
v1 = {v1 v2}
v2 = {v1 v2} {v2 v3}
v3 = {v3}
v4 = {v4}

[faults]
v3 = malicious

[proposals]
v1 = 1
v2 = 1
v4 = 2

[timing]
fixed-delay = 1
t0 = 2

[protocol]
mode = cscp
"""

THREEFPLUSONE_F1 = """\
[system]
nodes = 4
k = 3
seed = 0
max-time = 200

[slices]
* = threshold 3

[faults]
v3 = malicious

[proposals]
v1 = 1
v2 = 1
v4 = 1

[timing]
fixed-delay = 1
t0 = 2

[protocol]
mode = cscp
"""


@dataclass(frozen=True)
class GoldenCase:
    name: str
    kind: str  # run | analyze
    scenario_text: str
    expected_decided: dict[str, int] | None = None
    expected_fv_delivered: dict[str, bool] | None = None
    check_refinement: bool = False


CASES = {
    case.name: case
    for case in (
        GoldenCase(
            "fv-example3",
            "run",
            FV_EXAMPLE3,
            expected_fv_delivered={"v1": False, "v2": False, "v4": False},
        ),
        GoldenCase(
            "ascp-example",
            "run",
            ASCP_EXAMPLE,
            expected_decided={"v1": 2, "v2": 2, "v4": 2},
        ),
        GoldenCase(
            "cscp-example",
            "run",
            CSCP_EXAMPLE,
            expected_decided={"v1": 2, "v2": 2, "v4": 2},
            check_refinement=True,
        ),
        GoldenCase("split-system", "analyze", SPLIT_SYSTEM),
        GoldenCase("threefplusone-f1", "analyze", THREEFPLUSONE_F1),
    )
}


@dataclass
class GoldenOutcome:
    name: str
    ok: bool
    digest: str
    lines: list[str] = field(default_factory=list)
    text: str = ""
    result: simnet.SimResult | None = None

    def report(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        body = "\n".join(f"  {l}" for l in self.lines)
        return f"golden {self.name}: {status}\n{body}"


def _load_digests() -> dict[str, str]:
    if _DIGEST_PATH.exists():
        return json.loads(_DIGEST_PATH.read_text())
    return {}


def _store_digest(name: str, digest: str) -> None:
    digests = _load_digests()
    digests[name] = digest
    _DIGEST_PATH.write_text(json.dumps(digests, indent=2, sort_keys=True) + "\n")


def scenario_for(name: str) -> Scenario:
    return parse_scenario(CASES[name].scenario_text)


def run_golden(name: str, bless: bool = False) -> GoldenOutcome:
    if name not in CASES:
        raise KeyError(name)
    case = CASES[name]
    lines: list[str] = []
    ok = True

    if case.kind == "analyze":
        text = analysis_text(scenario_for(name))
        digest = hashlib.sha256(text.encode()).hexdigest()
        result = None
    else:
        sc = scenario_for(name)
        result = simnet.run(sc)
        text = result.trace_text()
        digest = trace_digest(text)

        for seed_shift in (1, 2):
            other = simnet.run(sc, seed=sc.seed + seed_shift)
            if trace_digest(other.trace_text()) != digest:
                ok = False
                lines.append(f"trace digest varies under seed shift +{seed_shift}")
        if ok:
            lines.append("trace digest stable across 3 seeds")

        report = evaluate(result.events, sc, result.quiesced)
        if report.ok:
            lines.append("verdicts: all pass")
        else:
            ok = False
            lines.extend(v.line() for v in report.verdicts if v.status == "FAIL")

        if case.expected_decided is not None:
            got = {f"v{v + 1}": x for v, x in sorted(result.decided.items())}
            if got != case.expected_decided:
                ok = False
                lines.append(f"decided {got} != expected {case.expected_decided}")
            else:
                lines.append(f"decided {got}")
        if case.expected_fv_delivered is not None:
            got_fv = {f"v{v + 1}": a for v, a in sorted(result.fv_delivered.items())}
            if got_fv != case.expected_fv_delivered:
                ok = False
                lines.append(f"delivered {got_fv} != expected {case.expected_fv_delivered}")
            else:
                lines.append(f"delivered {got_fv}")
        if case.check_refinement:
            ref = refinement_report(result.events, sc)
            if ref.ok:
                lines.append("refinement: pass for every maximal intact set")
            else:
                ok = False
                lines.append(ref.text())

    stored = _load_digests().get(name)
    if bless:
        _store_digest(name, digest)
        lines.append(f"blessed digest {digest[:16]}…")
    elif stored is None:
        ok = False
        lines.append("no blessed digest on record (run with --bless once)")
    elif stored != digest:
        ok = False
        lines.append(f"digest {digest[:16]}… != blessed {stored[:16]}…")
    else:
        lines.append(f"digest matches blessed {digest[:16]}…")

    return GoldenOutcome(name, ok, digest, lines, text, result)
