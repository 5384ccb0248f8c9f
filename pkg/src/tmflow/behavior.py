"""Regions, events, and behavior graphs over a static model.

A subdiagram is a weakly connected sub-part of the diagram (stages plus
arcs).  A region set partitions chosen sub-parts without overlap; an
event pairs a region with an optional (start, duration) interval; the
behavior graph orders events, and walks through it are chronologies.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import ValidationReport, error, warning
from .model import (
    ModelError,
    StageKind,
    StageRef,
    TMModel,
    normalize_ref,
)


class RegionCheckFailed(Exception):
    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__(str(report))


class NoInitialEvents(Exception):
    pass


class BoundTooLarge(Exception):
    pass


@dataclass(frozen=True)
class Subdiagram:
    stages: frozenset[StageRef]
    arcs: frozenset[str]

    @property
    def size(self) -> int:
        return len(self.stages) + len(self.arcs)

    def sort_key(self) -> tuple:
        return (
            self.size,
            tuple(sorted(r.sort_key() for r in self.stages)),
            tuple(sorted(self.arcs)),
        )


@dataclass(frozen=True)
class Region:
    id: str
    body: Subdiagram
    label: str = ""


@dataclass(frozen=True)
class Interval:
    start: int
    duration: int  # >= 1


@dataclass(frozen=True)
class Event:
    id: str
    region: str
    interval: Interval | None = None


@dataclass(frozen=True)
class BehaviorGraph:
    events: tuple[Event, ...]
    edges: tuple[tuple[str, str], ...]
    initial: tuple[str, ...]

    @property
    def vertices(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.events)

    def event_by_id(self, event_id: str) -> Event | None:
        for event in self.events:
            if event.id == event_id:
                return event
        return None

    def events_by_region(self) -> dict[str, str]:
        """region id -> event id (first declaration wins)."""
        mapping: dict[str, str] = {}
        for event in self.events:
            mapping.setdefault(event.region, event.id)
        return mapping


def _normalized_regions(
    model: TMModel, regions: list[Region] | tuple[Region, ...]
) -> tuple[list[tuple[Region, frozenset[StageRef]]], ValidationReport]:
    """Resolve region stage refs to full paths, reporting dangling refs."""
    report = ValidationReport()
    resolved = []
    arc_ids = {arc.id for arc in model.arcs()}
    for region in regions:
        stages = set()
        ok = True
        for ref in region.body.stages:
            try:
                stages.add(normalize_ref(model, ref))
            except ModelError as exc:
                report.diagnostics.append(
                    error("DANGLING_REF", f"region '{region.id}': {exc}")
                )
                ok = False
        for arc_id in region.body.arcs:
            if arc_id not in arc_ids:
                report.diagnostics.append(
                    error("DANGLING_REF",
                          f"region '{region.id}': unknown arc '{arc_id}'")
                )
                ok = False
        if ok:
            resolved.append((region, frozenset(stages)))
    return resolved, report


def _connected(stages: frozenset[StageRef], arc_ends: list[tuple[StageRef, StageRef]]) -> bool:
    """Weak connectivity.  Two stages are adjacent when an arc joins them
    or when they belong to the same machine (stages are parts of a single
    machine node, so they touch through it)."""
    if not stages:
        return False
    nodes = list(stages)
    parent = {node: node for node in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in arc_ends:
        if a in parent and b in parent:
            parent[find(a)] = find(b)
    by_machine: dict[tuple[str, ...], StageRef] = {}
    for node in nodes:
        if node.machine in by_machine:
            parent[find(node)] = find(by_machine[node.machine])
        else:
            by_machine[node.machine] = node
    roots = {find(node) for node in nodes}
    return len(roots) == 1


def check_regions(model: TMModel, regions: list[Region] | tuple[Region, ...]) -> ValidationReport:
    """Verify a region set: resolvable refs, connected bodies, no overlap."""
    resolved, report = _normalized_regions(model, regions)
    arc_map = {arc.id: arc for arc in model.arcs()}

    for region, stages in resolved:
        ends = []
        for arc_id in region.body.arcs:
            arc = arc_map[arc_id]
            src = normalize_ref(model, arc.source)
            tgt = normalize_ref(model, arc.target)
            for ref in (src, tgt):
                if ref not in stages:
                    report.diagnostics.append(
                        error(
                            "DANGLING_REF",
                            f"region '{region.id}': arc '{arc_id}' endpoint "
                            f"{ref} is outside the region's stages",
                        )
                    )
            ends.append((src, tgt))
        if not _connected(stages, ends):
            report.diagnostics.append(
                error("NOT_CONNECTED",
                      f"region '{region.id}' is not weakly connected")
            )

    for i, (ra, stages_a) in enumerate(resolved):
        for rb, stages_b in resolved[i + 1:]:
            shared_stages = stages_a & stages_b
            shared_arcs = set(ra.body.arcs) & set(rb.body.arcs)
            if shared_stages or shared_arcs:
                what = ", ".join(
                    [str(s) for s in sorted(shared_stages, key=StageRef.sort_key)]
                    + sorted(shared_arcs)
                )
                report.diagnostics.append(
                    error("OVERLAP",
                          f"regions '{ra.id}' and '{rb.id}' overlap on {what}")
                )
    return report


def _region_maps(model: TMModel, regions) -> tuple[dict[StageRef, str], dict[str, str]]:
    """stage -> region id and arc id -> region id, over normalized refs."""
    resolved, _ = _normalized_regions(model, regions)
    stage_map: dict[StageRef, str] = {}
    arc_map: dict[str, str] = {}
    for region, stages in resolved:
        for ref in stages:
            stage_map[ref] = region.id
        for arc_id in region.body.arcs:
            arc_map[arc_id] = region.id
    return stage_map, arc_map


def _boundary_edges(model: TMModel, regions) -> list[tuple[str, str]]:
    stage_map, _ = _region_maps(model, regions)
    order = {region.id: i for i, region in enumerate(regions)}
    found: set[tuple[str, str]] = set()
    for arc in model.arcs():
        src = stage_map.get(normalize_ref(model, arc.source))
        tgt = stage_map.get(normalize_ref(model, arc.target))
        if src is not None and tgt is not None and src != tgt:
            found.add((src, tgt))
    return sorted(found, key=lambda e: (order[e[0]], order[e[1]]))


def infer_behavior(model: TMModel, regions: list[Region] | tuple[Region, ...]) -> BehaviorGraph:
    """Derive the candidate behavior graph from boundary arcs.

    One event per region (no intervals); an edge Ei -> Ej whenever some
    flow or trigger arc leaves region i and enters region j.  Initial
    events are those whose region holds a Create stage that no arc from
    another region feeds.
    """
    report = check_regions(model, regions)
    if not report.ok:
        raise RegionCheckFailed(report)

    stage_map, _ = _region_maps(model, regions)
    edges = _boundary_edges(model, regions)

    incoming_cross: dict[StageRef, set[str]] = {}
    for arc in model.arcs():
        src = stage_map.get(normalize_ref(model, arc.source))
        tgt_ref = normalize_ref(model, arc.target)
        if src is not None:
            incoming_cross.setdefault(tgt_ref, set()).add(src)

    initial = []
    for region in regions:
        creates = [
            ref for ref, rid in stage_map.items()
            if rid == region.id and ref.kind == StageKind.CREATE
        ]
        for ref in creates:
            sources = incoming_cross.get(ref, set())
            if not (sources - {region.id}):
                initial.append(region.id)
                break

    events = tuple(Event(region.id, region.id, None) for region in regions)
    return BehaviorGraph(events, tuple(edges), tuple(initial))


def validate_behavior(
    model: TMModel,
    regions: list[Region] | tuple[Region, ...],
    declared: BehaviorGraph,
    mode: str = "overlap",
) -> ValidationReport:
    """Check a declared behavior graph against the boundary-arc rule.

    Errors: edges with no supporting boundary arc, events naming unknown
    regions, interval-order violations (per ``mode``: "overlap" needs
    start(Ej) >= start(Ei); "strict" needs start(Ej) >= start(Ei) +
    duration(Ei)).  Inferred edges absent from the declaration are
    warnings.
    """
    region_check = check_regions(model, regions)
    if not region_check.ok:
        raise RegionCheckFailed(region_check)
    if mode not in ("overlap", "strict"):
        raise ValueError(f"unknown interval mode '{mode}'")

    report = ValidationReport()
    region_ids = {region.id for region in regions}
    event_region: dict[str, str] = {}
    for event in declared.events:
        if event.region not in region_ids:
            report.diagnostics.append(
                error("UNKNOWN_REGION",
                      f"event '{event.id}' names unknown region '{event.region}'")
            )
        else:
            event_region[event.id] = event.region

    for event_id in declared.initial:
        if declared.event_by_id(event_id) is None:
            report.diagnostics.append(
                error("UNKNOWN_REGION",
                      f"initial event '{event_id}' is not declared")
            )

    supported = set(_boundary_edges(model, regions))
    declared_pairs = set()
    for src, dst in declared.edges:
        if src not in event_region or dst not in event_region:
            missing = src if src not in event_region else dst
            report.diagnostics.append(
                error("UNKNOWN_REGION",
                      f"edge {src} -> {dst} references undeclared event '{missing}'")
            )
            continue
        pair = (event_region[src], event_region[dst])
        declared_pairs.add(pair)
        if pair not in supported:
            report.diagnostics.append(
                error("UNSUPPORTED_EDGE",
                      f"edge {src} -> {dst} has no supporting boundary arc")
            )
        ei = declared.event_by_id(src)
        ej = declared.event_by_id(dst)
        if ei.interval is not None and ej.interval is not None:
            required = ei.interval.start
            if mode == "strict":
                required += ei.interval.duration
            if ej.interval.start < required:
                report.diagnostics.append(
                    error(
                        "INTERVAL_ORDER",
                        f"edge {src} -> {dst}: start {ej.interval.start} is "
                        f"before required step {required} ({mode} mode)",
                    )
                )

    for pair in sorted(supported - declared_pairs):
        report.diagnostics.append(
            warning("MISSING_EDGE",
                    f"inferred edge {pair[0]} -> {pair[1]} is not declared")
        )
    return report


def chronologies(graph: BehaviorGraph, max_len: int) -> list[list[str]]:
    """All maximal walks from initial vertices, up to ``max_len`` events.

    A walk ends when its last vertex has no outgoing edges or the length
    bound is reached; cycles repeat up to the bound.  Deterministic:
    initial vertices and successors are visited in declaration order.
    """
    if graph.events and not graph.initial:
        raise NoInitialEvents("behavior graph declares no initial events")
    successors: dict[str, list[str]] = {}
    for src, dst in graph.edges:
        successors.setdefault(src, [])
        if dst not in successors[src]:
            successors[src].append(dst)

    walks: list[list[str]] = []

    def extend(walk: list[str]):
        nexts = successors.get(walk[-1], [])
        if len(walk) >= max_len or not nexts:
            walks.append(list(walk))
            return
        for nxt in nexts:
            walk.append(nxt)
            extend(walk)
            walk.pop()

    for start in graph.initial:
        if max_len >= 1:
            extend([start])
    return walks


def enumerate_subdiagrams(
    model: TMModel, max_elements: int, cap: int = 10**6
) -> list[Subdiagram]:
    """All weakly connected subdiagrams with |stages| + |arcs| <= bound.

    Connectivity follows the same adjacency as regions: through an arc,
    or through shared membership in one machine.  Deterministic order:
    by size, then stage refs, then arc ids.  Raises BoundTooLarge once
    more than ``cap`` subdiagrams accumulate.
    """
    stages = model.stage_instances()
    arcs = {
        arc.id: (normalize_ref(model, arc.source), normalize_ref(model, arc.target))
        for arc in model.arcs()
    }
    incident: dict[StageRef, list[str]] = {ref: [] for ref in stages}
    for arc_id, (src, tgt) in arcs.items():
        incident[src].append(arc_id)
        if tgt != src:
            incident[tgt].append(arc_id)
    machine_mates: dict[tuple[str, ...], list[StageRef]] = {}
    for ref in stages:
        machine_mates.setdefault(ref.machine, []).append(ref)

    seen: set[Subdiagram] = set()
    frontier: list[Subdiagram] = []

    def admit(sub: Subdiagram):
        if sub.size <= max_elements and sub not in seen:
            if len(seen) >= cap:
                raise BoundTooLarge(
                    f"subdiagram enumeration exceeded cap of {cap}"
                )
            seen.add(sub)
            frontier.append(sub)

    if max_elements >= 1:
        for ref in stages:
            admit(Subdiagram(frozenset([ref]), frozenset()))

    while frontier:
        current = frontier.pop()
        if current.size >= max_elements:
            continue
        arc_candidates: set[str] = set()
        stage_candidates: set[StageRef] = set()
        for ref in current.stages:
            arc_candidates.update(incident[ref])
            stage_candidates.update(machine_mates[ref.machine])
        for arc_id in arc_candidates - current.arcs:
            src, tgt = arcs[arc_id]
            admit(Subdiagram(current.stages | {src, tgt},
                             current.arcs | {arc_id}))
        for ref in stage_candidates - current.stages:
            admit(Subdiagram(current.stages | {ref}, current.arcs))

    return sorted(seen, key=Subdiagram.sort_key)
