"""Command-line front end.

Subcommands: ``run`` (simulate a scenario to a trace), ``analyze``
(quorum structure), ``check`` (verdicts over a recorded trace),
``refine`` (concrete-to-abstract entailment), ``golden`` (built-in
reference scenarios), ``corpus`` (random scenario generation).

Exit codes: 0 success / all checks pass, 1 verdict or check failure,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from fbqsim import golden as golden_mod
from fbqsim import simnet
from fbqsim.analysis import analysis_text
from fbqsim.corpus import generate_scenario_text
from fbqsim.events import read_trace, trace_digest
from fbqsim.fbqs import CapacityError, maximal_intact_sets_subjective
from fbqsim.refine import refinement_report
from fbqsim.scenario import Scenario, ScenarioError, load_scenario, parse_scenario
from fbqsim.verdicts import evaluate

USAGE_ERROR = 2
CHECK_FAILED = 1


def _fail(message: str, code: int = USAGE_ERROR) -> SystemExit:
    print(f"error: {message}", file=sys.stderr)
    return SystemExit(code)


def _load(path: str) -> Scenario:
    try:
        return load_scenario(path)
    except FileNotFoundError:
        raise _fail(f"cannot read scenario file {path!r}")
    except ScenarioError as exc:
        raise _fail(f"invalid scenario: {exc}")


def _read_trace_file(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise _fail(f"cannot read trace file {path!r}")
    events = read_trace(text)
    quiesced = "quiesced=True" in text
    return events, quiesced


def _figures_dir(arg: str | None) -> Path | None:
    if arg is None:
        return None
    path = Path(arg)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _render_trace_figure(events, scenario, figdir: Path, stem: str) -> None:
    from fbqsim.viz import plot_trace

    out = figdir / f"{stem}.png"
    plot_trace(events, scenario.n, str(out), title=stem)
    print(f"figure written to {out}")


def _render_quorum_figure(scenario, figdir: Path, stem: str) -> None:
    from fbqsim.viz import plot_quorums

    intact = maximal_intact_sets_subjective(scenario.subjective(), scenario.fault_model)
    out = figdir / f"{stem}.png"
    plot_quorums(scenario.base, scenario.fault_model, intact, str(out), title=stem)
    print(f"figure written to {out}")


def _emit_report(report, fmt: str) -> None:
    if fmt == "ndjson":
        for v in report.verdicts:
            print(
                json.dumps(
                    {
                        "name": v.name,
                        "status": v.status,
                        "detail": v.detail,
                        "witnesses": list(v.witnesses),
                    }
                )
            )
    else:
        print(report.text())


def cmd_run(args) -> int:
    sc = _load(args.scenario)
    result = simnet.run(sc, seed=args.seed)
    text = result.trace_text()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"trace written to {args.out} (digest {trace_digest(text)[:16]}…)")
    else:
        sys.stdout.write(text)
    report = evaluate(result.events, sc, result.quiesced)
    _emit_report(report, args.format)
    figdir = _figures_dir(args.figures)
    if figdir:
        _render_trace_figure(result.events, sc, figdir, Path(args.scenario).stem)
    return 0 if report.ok else CHECK_FAILED


def cmd_analyze(args) -> int:
    sc = _load(args.scenario)
    try:
        text = analysis_text(sc)
    except CapacityError as exc:
        raise _fail(str(exc))
    if args.format == "ndjson":
        for line in text.strip().splitlines():
            print(json.dumps({"line": line}))
    else:
        sys.stdout.write(text)
    figdir = _figures_dir(args.figures)
    if figdir:
        _render_quorum_figure(sc, figdir, Path(args.scenario).stem + "-quorums")
    return 0


def cmd_check(args) -> int:
    sc = _load(args.scenario)
    events, quiesced = _read_trace_file(args.trace)
    report = evaluate(events, sc, quiesced)
    _emit_report(report, args.format)
    figdir = _figures_dir(args.figures)
    if figdir:
        _render_trace_figure(events, sc, figdir, Path(args.trace).stem + "-check")
    return 0 if report.ok else CHECK_FAILED


def cmd_refine(args) -> int:
    sc = _load(args.scenario)
    events, _quiesced = _read_trace_file(args.trace)
    try:
        report = refinement_report(events, sc)
    except ValueError as exc:
        raise _fail(str(exc))
    if args.format == "ndjson":
        for entry in report.entries:
            print(
                json.dumps(
                    {
                        "intact": sorted(f"v{v + 1}" for v in entry.intact),
                        "entailment": entry.check.ok,
                        "fail_seq": entry.check.fail_seq,
                        "rule": entry.check.rule,
                        "histories_equal": entry.histories_equal,
                    }
                )
            )
    else:
        print(report.text())
    return 0 if report.ok else CHECK_FAILED


def cmd_golden(args) -> int:
    names = list(golden_mod.CASES) if args.name == "all" else [args.name]
    overall = True
    for name in names:
        try:
            outcome = golden_mod.run_golden(name, bless=args.bless)
        except KeyError:
            raise _fail(
                f"unknown golden {args.name!r}; known: {', '.join(golden_mod.CASES)}"
            )
        print(outcome.report())
        overall = overall and outcome.ok
        if args.out:
            outdir = Path(args.out)
            outdir.mkdir(parents=True, exist_ok=True)
            suffix = "trace" if golden_mod.CASES[name].kind == "run" else "analysis"
            (outdir / f"{name}.{suffix}.txt").write_text(outcome.text, encoding="utf-8")
        figdir = _figures_dir(args.figures)
        if figdir and outcome.result is not None:
            sc = golden_mod.scenario_for(name)
            _render_trace_figure(outcome.result.events, sc, figdir, name)
    return 0 if overall else CHECK_FAILED


def cmd_corpus(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)
    for i in range(args.count):
        text = generate_scenario_text(
            rng, mode=args.mode, max_nodes=args.nodes, max_k=args.k,
            max_malicious=args.malicious,
        )
        parse_scenario(text)  # refuse to emit an invalid file
        (outdir / f"scenario-{i:03d}.cfg").write_text(text, encoding="utf-8")
    print(f"{args.count} scenarios written to {outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fbqsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trace=False, figures=True):
        p.add_argument("--scenario", required=True, help="scenario file")
        if trace:
            p.add_argument("--trace", required=True, help="trace file")
        p.add_argument("--format", choices=("text", "ndjson"), default="text")
        if figures:
            p.add_argument("--figures", help="directory for rendered figures")

    p_run = sub.add_parser("run", help="simulate a scenario")
    common(p_run)
    p_run.add_argument("--seed", type=int, help="override the scenario seed")
    p_run.add_argument("--out", help="write the trace here instead of stdout")
    p_run.set_defaults(func=cmd_run)

    p_an = sub.add_parser("analyze", help="quorums, blocking sets, intact sets")
    common(p_an)
    p_an.set_defaults(func=cmd_analyze)

    p_chk = sub.add_parser("check", help="evaluate verdicts over a trace")
    common(p_chk, trace=True)
    p_chk.set_defaults(func=cmd_check)

    p_ref = sub.add_parser("refine", help="abstract-entailment check of a trace")
    common(p_ref, trace=True, figures=False)
    p_ref.set_defaults(func=cmd_refine)

    p_gold = sub.add_parser("golden", help="run a built-in reference scenario")
    p_gold.add_argument("--name", required=True, help="case name or 'all'")
    p_gold.add_argument("--bless", action="store_true", help="record current digests")
    p_gold.add_argument("--out", help="directory for produced trace/analysis text")
    p_gold.add_argument("--figures", help="directory for rendered figures")
    p_gold.set_defaults(func=cmd_golden)

    p_corp = sub.add_parser("corpus", help="generate random scenarios")
    p_corp.add_argument("--nodes", type=int, default=5, help="maximum universe size")
    p_corp.add_argument("--k", type=int, default=3, help="maximum value-domain size")
    p_corp.add_argument("--count", type=int, default=50)
    p_corp.add_argument("--seed", type=int, default=0)
    p_corp.add_argument("--malicious", type=int, default=1)
    p_corp.add_argument("--mode", choices=("fv", "ascp", "cscp"), default="cscp")
    p_corp.add_argument("--out", required=True, help="output directory")
    p_corp.set_defaults(func=cmd_corpus)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit code 2 for usage errors already
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
