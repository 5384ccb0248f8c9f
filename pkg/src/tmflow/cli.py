"""Command-line front end.

Subcommands::

    tm check MODEL        parse + static checks (+ region/behavior checks)
    tm events MODEL       region summary; --bound N enumerates subdiagrams
    tm behavior MODEL     inferred or validated behavior graph
    tm simulate MODEL SCENARIO   run a scenario, print the trace
    tm export MODEL       DOT or JSON rendering of the model

Exit codes: 0 success (warnings allowed), 1 semantic failure, 2 syntax
failure.  A ``MODEL.tmb`` sidecar next to ``MODEL.tm`` is merged
automatically.  Set ``TM_COLOR=never`` to disable ANSI colors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import dot, jsonio
from .behavior import (
    BoundTooLarge,
    NoInitialEvents,
    RegionCheckFailed,
    check_regions,
    enumerate_subdiagrams,
    infer_behavior,
    validate_behavior,
)
from .diagnostics import Diagnostic, ValidationReport, error
from .model import ModelError, StageRef
from .parser import Document, merge_documents, parse_scenario, parse_with_diagnostics
from .simulate import UnseededCreateError, conformance, segment, simulate
from .validate import validate

EXIT_OK = 0
EXIT_SEMANTIC = 1
EXIT_SYNTAX = 2


def _use_color(stream) -> bool:
    mode = os.environ.get("TM_COLOR", "auto")
    if mode == "never":
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def _render_diagnostic(diag: Diagnostic, color: bool) -> str:
    text = str(diag)
    if not color:
        return text
    tint = "\x1b[31m" if diag.severity == "error" else "\x1b[33m"
    return f"{tint}{text}\x1b[0m"


def _print_report(report: ValidationReport, stream) -> None:
    color = _use_color(stream)
    for diag in report.diagnostics:
        print(_render_diagnostic(diag, color), file=stream)


def _write_output(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_document(path_text: str) -> tuple[Document | None, ValidationReport, int]:
    """Parse a model file plus its optional .tmb sidecar."""
    path = Path(path_text)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        report = ValidationReport([error("SYNTAX", f"cannot read '{path}': {exc}")])
        return None, report, EXIT_SYNTAX

    doc, diagnostics = parse_with_diagnostics(text)
    report = ValidationReport(list(diagnostics))
    if not report.ok:
        return None, report, EXIT_SYNTAX

    sidecar = path.with_suffix(".tmb")
    if path.suffix == ".tm" and sidecar.exists():
        side_doc, side_diags = parse_with_diagnostics(
            sidecar.read_text(encoding="utf-8")
        )
        report.diagnostics.extend(side_diags)
        if not report.ok:
            return None, report, EXIT_SYNTAX
        doc = merge_documents(doc, side_doc)
    return doc, report, EXIT_OK


def _full_check(doc: Document, mode: str) -> ValidationReport:
    report = validate(doc.model)
    if doc.regions:
        report.extend(check_regions(doc.model, doc.regions))
        if report.ok and doc.behavior is not None:
            report.extend(
                validate_behavior(doc.model, doc.regions, doc.behavior, mode=mode)
            )
    elif doc.behavior is not None:
        report.diagnostics.append(
            error("NO_REGIONS", "behavior section present but no regions declared")
        )
    return report


def _cmd_check(args) -> int:
    doc, report, code = _load_document(args.model)
    if doc is not None:
        report.extend(_full_check(doc, args.mode))
        code = EXIT_OK if report.ok else EXIT_SEMANTIC
    if args.format == "json":
        _write_output(jsonio.dumps(jsonio.report_to_obj(report)), args.out)
    else:
        _print_report(report, sys.stderr if code else sys.stdout)
        if code == EXIT_OK:
            print("ok" if not report.diagnostics else "ok (with warnings)")
    return code


def _cmd_events(args) -> int:
    doc, report, code = _load_document(args.model)
    if doc is None:
        _print_report(report, sys.stderr)
        return code

    if args.bound is not None:
        try:
            subs = enumerate_subdiagrams(doc.model, args.bound)
        except BoundTooLarge as exc:
            print(f"error[BOUND]: {exc}", file=sys.stderr)
            return EXIT_SEMANTIC
        lines = [f"{len(subs)} subdiagrams with at most {args.bound} elements"]
        for sub in subs:
            stages = ", ".join(
                str(ref) for ref in sorted(sub.stages, key=StageRef.sort_key)
            )
            arcs = ", ".join(sorted(sub.arcs)) or "-"
            lines.append(f"  stages [{stages}] arcs [{arcs}]")
        _write_output("\n".join(lines) + "\n", args.out)
        return EXIT_OK

    region_report = check_regions(doc.model, doc.regions)
    report.extend(region_report)
    if args.format == "json":
        payload = jsonio.regions_to_obj(doc.regions)
        payload["report"] = jsonio.report_to_obj(report)
        _write_output(jsonio.dumps(payload), args.out)
    else:
        _print_report(report, sys.stderr if not report.ok else sys.stdout)
        for region in doc.regions:
            refs = sorted(region.body.stages, key=StageRef.sort_key)
            print(
                f"region {region.id}: "
                f"{len(refs)} stages, {len(region.body.arcs)} arcs"
            )
        if not doc.regions:
            print("no regions declared")
    return EXIT_OK if report.ok else EXIT_SEMANTIC


def _graph_text(graph) -> str:
    lines = []
    for event in graph.events:
        line = f"event {event.id} region {event.region}"
        if event.interval is not None:
            line += f" interval {event.interval.start} {event.interval.duration}"
        lines.append(line)
    if graph.initial:
        lines.append("initial " + ", ".join(graph.initial))
    for src, dst in graph.edges:
        lines.append(f"edge {src} -> {dst}")
    return "\n".join(lines) + "\n"


def _cmd_behavior(args) -> int:
    doc, report, code = _load_document(args.model)
    if doc is None:
        _print_report(report, sys.stderr)
        return code
    if not doc.regions:
        print("error[NO_REGIONS]: model declares no regions", file=sys.stderr)
        return EXIT_SEMANTIC

    try:
        if doc.behavior is not None:
            graph = doc.behavior
            report.extend(
                validate_behavior(doc.model, doc.regions, graph, mode=args.mode)
            )
        else:
            graph = infer_behavior(doc.model, doc.regions)
    except RegionCheckFailed as exc:
        _print_report(exc.report, sys.stderr)
        return EXIT_SEMANTIC

    _print_report(report, sys.stderr)
    if args.format == "dot":
        _write_output(dot.behavior_to_dot(graph), args.out)
    elif args.format == "json":
        _write_output(jsonio.dumps(jsonio.graph_to_obj(graph)), args.out)
    else:
        _write_output(_graph_text(graph), args.out)
    return EXIT_OK if report.ok else EXIT_SEMANTIC


def _cmd_simulate(args) -> int:
    doc, report, code = _load_document(args.model)
    if doc is None:
        _print_report(report, sys.stderr)
        return code
    try:
        scenario = parse_scenario(Path(args.scenario).read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"error[SYNTAX]: cannot read '{args.scenario}': {exc}", file=sys.stderr)
        return EXIT_SYNTAX
    except Exception as exc:
        print(f"error[SYNTAX]: {exc}", file=sys.stderr)
        return EXIT_SYNTAX

    from dataclasses import replace

    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    if args.max_steps is not None:
        scenario = replace(scenario, max_steps=args.max_steps)

    from .model import desugar

    model = desugar(doc.model)
    try:
        trace = simulate(model, scenario)
    except (ModelError, UnseededCreateError) as exc:
        print(f"error[SIMULATION]: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC

    if args.format == "json":
        _write_output(jsonio.trace_to_jsonl(trace), args.out)
        return EXIT_OK

    lines = [
        f"step {r.step}: {r.arc} [{r.token}] {r.source} -> {r.target}"
        for r in trace.records
    ]
    lines.append(
        f"steps={trace.meta.steps_used} created={trace.meta.created} "
        f"consumed={trace.meta.consumed} "
        f"limit_hit={'yes' if trace.meta.step_limit_hit else 'no'}"
    )
    if doc.regions:
        seg = segment(trace, doc.regions)
        lines.append(
            "occurrences: "
            + " ".join(
                f"{o.region}@{o.interval.start}+{o.interval.duration}"
                for o in seg.occurrences
            )
        )
        graph = doc.behavior
        if graph is None:
            try:
                graph = infer_behavior(doc.model, doc.regions)
            except RegionCheckFailed:
                graph = None
        if graph is not None:
            verdict = conformance(seg.occurrences, graph)
            if verdict.ok:
                lines.append("conformance: ok")
            else:
                lines.append("conformance: " + "; ".join(str(d) for d in verdict.errors))
                _write_output("\n".join(lines) + "\n", args.out)
                return EXIT_SEMANTIC
    _write_output("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_export(args) -> int:
    doc, report, code = _load_document(args.model)
    if doc is None:
        _print_report(report, sys.stderr)
        return code
    if args.format == "json":
        _write_output(jsonio.dumps(jsonio.model_to_obj(doc.model)), args.out)
    else:
        _write_output(dot.model_to_dot(doc.model, name=Path(args.model).stem), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tm", description="Flow-machine model toolkit."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=("text", "json")):
        p.add_argument("model", help="model file (.tm)")
        p.add_argument("--format", choices=formats, default=formats[0])
        p.add_argument("--out", help="write output to a file instead of stdout")

    p = sub.add_parser("check", help="parse and statically validate a model")
    common(p)
    p.add_argument("--mode", choices=("overlap", "strict"), default="overlap")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("events", help="summarize regions or enumerate subdiagrams")
    common(p)
    p.add_argument("--bound", type=int,
                   help="enumerate subdiagrams up to this element count")
    p.set_defaults(func=_cmd_events)

    p = sub.add_parser("behavior", help="infer or validate the behavior graph")
    common(p, formats=("text", "json", "dot"))
    p.add_argument("--mode", choices=("overlap", "strict"), default="overlap")
    p.set_defaults(func=_cmd_behavior)

    p = sub.add_parser("simulate", help="run a scenario and print the trace")
    p.add_argument("model", help="model file (.tm)")
    p.add_argument("scenario", help="scenario file (.tms)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out", help="write output to a file instead of stdout")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--max-steps", type=int, dest="max_steps",
                   help="override the scenario step limit")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("export", help="render the model as DOT or JSON")
    common(p, formats=("dot", "json"))
    p.set_defaults(func=_cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NoInitialEvents as exc:
        print(f"error[NO_INITIAL]: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
