"""Graphviz DOT emission: machines as nested clusters, stages as nodes,
solid flow edges, dashed trigger edges; behavior graphs as plain
digraphs.  Output is deterministic so it can be snapshot-tested."""

from __future__ import annotations

from .behavior import BehaviorGraph
from .model import Machine, StageRef, TMModel, desugar, normalize_ref


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _node_id(ref: StageRef) -> str:
    return _quote(str(ref))


def _emit_machine(machine: Machine, prefix: tuple[str, ...], out: list[str], depth: int):
    pad = "  " * (depth + 1)
    path = prefix + (machine.id,)
    out.append(f"{pad}subgraph cluster_{'_'.join(path)} {{")
    title = machine.name or machine.id
    out.append(f"{pad}  label={_quote(title)}")
    for kind in machine.stages:
        ref = StageRef(path, kind)
        out.append(f"{pad}  {_node_id(ref)} [label={_quote(kind.value)}]")
    for sub in machine.submachines:
        _emit_machine(sub, path, out, depth + 1)
    out.append(f"{pad}}}")


def _edge_label(thing: str | None, label: str | None) -> str | None:
    if thing and label:
        return f"{thing} ({label})"
    return thing or label


def model_to_dot(model: TMModel, name: str = "model") -> str:
    model = desugar(model)
    out = [f"digraph {_quote(name)} {{", "  compound=true", "  node [shape=box]"]
    for machine in model.machines:
        _emit_machine(machine, (), out, 0)
    for arc in model.flows:
        src = normalize_ref(model, arc.source)
        tgt = normalize_ref(model, arc.target)
        attrs = []
        label = _edge_label(arc.thing, arc.label)
        if label:
            attrs.append(f"label={_quote(label)}")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        out.append(f"  {_node_id(src)} -> {_node_id(tgt)}{suffix}")
    for arc in model.triggers:
        src = normalize_ref(model, arc.source)
        tgt = normalize_ref(model, arc.target)
        attrs = ["style=dashed"]
        label = _edge_label(None, arc.label)
        if arc.guard:
            label = f"{label} when {arc.guard}" if label else f"when {arc.guard}"
        if label:
            attrs.append(f"label={_quote(label)}")
        out.append(f"  {_node_id(src)} -> {_node_id(tgt)} [{', '.join(attrs)}]")
    out.append("}")
    return "\n".join(out) + "\n"


def behavior_to_dot(graph: BehaviorGraph, name: str = "behavior") -> str:
    out = [f"digraph {_quote(name)} {{", "  node [shape=ellipse]"]
    initial = set(graph.initial)
    for event in graph.events:
        attrs = []
        if event.interval is not None:
            # Event ids are plain identifiers, so no quoting is needed and
            # the \n stays a DOT line break.
            attrs.append(
                f'label="{event.id}\\n[{event.interval.start},'
                f'+{event.interval.duration}]"'
            )
        if event.id in initial:
            attrs.append("penwidth=2")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        out.append(f"  {_quote(event.id)}{suffix}")
    for src, dst in graph.edges:
        out.append(f"  {_quote(src)} -> {_quote(dst)}")
    out.append("}")
    return "\n".join(out) + "\n"
