"""Static semantic checks for a parsed model.

Errors cover broken structure (unresolved references, illegal flow
adjacency, duplicate stages, self-triggers, guards naming undeclared
attributes).  Statically permitted contradictions, such as a pair of
opposing flows over one machine pair, are warnings only: the dynamic
description resolves them with events.
"""

from __future__ import annotations

from dataclasses import replace

from .diagnostics import ValidationReport, error, warning
from .exprs import ExprSyntaxError, names, parse_guard
from .model import (
    FlowArc,
    ModelError,
    StageKind,
    StageRef,
    TMModel,
    desugar,
    flow_allowed,
    normalize_ref,
    resolve,
)


def _check_duplicates(model: TMModel, report: ValidationReport) -> None:
    seen_machines: set[str] = set()
    for _, machine in model.walk():
        if machine.id in seen_machines:
            report.diagnostics.append(
                error("DUP_ID", f"duplicate machine id '{machine.id}'",
                      machine.span)
            )
        seen_machines.add(machine.id)
        dupes = {k for k in machine.stages if machine.stages.count(k) > 1}
        for kind in sorted(dupes, key=lambda k: k.value):
            report.diagnostics.append(
                error(
                    "DUPLICATE_STAGE",
                    f"machine '{machine.id}' declares {kind.value} more than once",
                    machine.span,
                )
            )
    seen_things: set[str] = set()
    for thing in model.things:
        if thing.name in seen_things:
            report.diagnostics.append(
                error("DUP_ID", f"duplicate thing '{thing.name}'", thing.span)
            )
        seen_things.add(thing.name)
    seen_arcs: set[str] = set()
    for arc in model.arcs():
        if arc.id in seen_arcs:
            report.diagnostics.append(
                error("DUP_ID", f"duplicate arc id '{arc.id}'", arc.span)
            )
        seen_arcs.add(arc.id)


def _check_guard(model: TMModel, arc, report: ValidationReport) -> None:
    if arc.guard is None:
        return
    try:
        guard = parse_guard(arc.guard)
    except ExprSyntaxError as exc:
        report.diagnostics.append(
            error("GUARD_SYNTAX", f"arc '{arc.id}': {exc}", arc.span)
        )
        return
    thing = getattr(arc, "thing", None)
    decl = model.thing_by_name(thing) if thing else None
    if decl is not None:
        declared = decl.attribute_names()
        scope = f"thing '{decl.name}'"
    else:
        declared = set()
        for t in model.things:
            declared |= t.attribute_names()
        scope = "any declared thing"
    for name in sorted(names(guard) - declared):
        report.diagnostics.append(
            error(
                "UNDECLARED_ATTR",
                f"arc '{arc.id}': guard references attribute '{name}' "
                f"not declared by {scope}",
                arc.span,
            )
        )


def validate(model: TMModel) -> ValidationReport:
    """Full static check; never raises, returns a report."""
    report = ValidationReport()
    _check_duplicates(model, report)

    # Drop sugared arcs whose machine endpoints do not resolve, then expand
    # the rest so every later check sees stage-level arcs only.
    keep: list[FlowArc] = []
    for arc in model.flows:
        if not arc.sugared:
            keep.append(arc)
            continue
        try:
            resolve(model, arc.source)
            resolve(model, arc.target)
        except ModelError as exc:
            report.diagnostics.append(
                error("UNRESOLVED", f"arc '{arc.id}': {exc}", arc.span)
            )
            continue
        keep.append(arc)
    model = desugar(replace(model, flows=tuple(keep)))

    resolved_flows: list[FlowArc] = []
    for arc in model.flows:
        try:
            src = normalize_ref(model, arc.source)
            tgt = normalize_ref(model, arc.target)
        except ModelError as exc:
            report.diagnostics.append(
                error("UNRESOLVED", f"flow '{arc.id}': {exc}", arc.span)
            )
            continue
        same = src.machine == tgt.machine
        if not flow_allowed(src.kind, tgt.kind, same):
            where = "within one machine" if same else "across machines"
            report.diagnostics.append(
                error(
                    "ADJACENCY",
                    f"flow '{arc.id}': {src.kind.value} -> {tgt.kind.value} "
                    f"is not a legal flow {where}",
                    arc.span,
                )
            )
        resolved_flows.append(replace(arc, source=src, target=tgt))
        _check_guard(model, arc, report)

    for arc in model.triggers:
        try:
            src = normalize_ref(model, arc.source)
            tgt = normalize_ref(model, arc.target)
        except ModelError as exc:
            report.diagnostics.append(
                error("UNRESOLVED", f"trigger '{arc.id}': {exc}", arc.span)
            )
            continue
        if src == tgt:
            report.diagnostics.append(
                error(
                    "SELF_TRIGGER",
                    f"trigger '{arc.id}' has identical source and target {src}",
                    arc.span,
                )
            )
        _check_guard(model, arc, report)

    _warn_opposing_flows(resolved_flows, report)
    _warn_unreachable(model, report)
    _warn_no_arcs(model, report)
    return report


def _warn_opposing_flows(flows: list[FlowArc], report: ValidationReport) -> None:
    directed: dict[tuple, set[tuple]] = {}
    for arc in flows:
        if arc.source.machine == arc.target.machine:
            continue
        key = (frozenset((arc.source.machine, arc.target.machine)), arc.thing)
        directed.setdefault(key, set()).add(
            (arc.source.machine, arc.target.machine)
        )
    for (machines, thing), directions in sorted(
        directed.items(), key=lambda item: str(item[0])
    ):
        if len(directions) > 1:
            a, b = sorted(".".join(m) for m in machines)
            what = f" of '{thing}'" if thing else ""
            report.diagnostics.append(
                warning(
                    "OPPOSING_FLOWS",
                    f"opposing flows{what} between '{a}' and '{b}' "
                    "(statically legal; resolved dynamically by events)",
                )
            )


def _warn_unreachable(model: TMModel, report: ValidationReport) -> None:
    targets: set[StageRef] = set()
    for arc in model.arcs():
        try:
            targets.add(normalize_ref(model, arc.target))
        except ModelError:
            continue
    for ref in model.stage_instances():
        if ref.kind != StageKind.CREATE and ref not in targets:
            report.diagnostics.append(
                warning("UNREACHABLE_STAGE",
                        f"stage {ref} has no incoming arc")
            )


def _warn_no_arcs(model: TMModel, report: ValidationReport) -> None:
    touched: set[tuple[str, ...]] = set()
    for arc in model.arcs():
        for endpoint in (arc.source, arc.target):
            try:
                path, _, _ = resolve(model, endpoint)
            except ModelError:
                continue
            touched.add(path)
    for path, machine in model.walk():
        if machine.stages and path not in touched:
            report.diagnostics.append(
                warning("NO_ARCS",
                        f"machine '{machine.id}' is connected to no arcs")
            )


def reachable_stages(
    model: TMModel, roots: set[StageRef] | list[StageRef]
) -> set[StageRef]:
    """Forward closure over flow and trigger arcs from the given stages.

    Roots must resolve; raises UnknownMachineError / StageNotDeclaredError
    otherwise.  Returned refs are fully qualified.
    """
    model = desugar(model)
    frontier = [normalize_ref(model, ref) for ref in roots]
    edges: dict[StageRef, list[StageRef]] = {}
    for arc in model.arcs():
        try:
            src = normalize_ref(model, arc.source)
            tgt = normalize_ref(model, arc.target)
        except ModelError:
            continue
        edges.setdefault(src, []).append(tgt)
    seen = set(frontier)
    while frontier:
        current = frontier.pop()
        for nxt in edges.get(current, []):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen
