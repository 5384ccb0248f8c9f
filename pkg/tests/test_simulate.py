import pytest

from tmflow import (
    BehaviorGraph,
    Event,
    Interval,
    Occurrence,
    Scenario,
    StageKind,
    StageRef,
    TokenSeed,
    UnseededCreateError,
    conformance,
    desugar,
    infer_behavior,
    parse_model,
    parse_scenario,
    segment,
    simulate,
)
from tmflow.jsonio import trace_to_jsonl

from conftest import corpus_doc, corpus_scenario, corpus_text


def run(model_name, scenario_name):
    doc = corpus_doc(model_name)
    scenario = corpus_scenario(scenario_name)
    trace = simulate(desugar(doc.model), scenario)
    return doc, scenario, trace


def occurrence_regions(doc, trace):
    return [o.region for o in segment(trace, doc.regions).occurrences]


class TestFrozenTraces:
    def test_mousetrap_record_sequence(self):
        _, _, trace = run("mousetrap.tm", "mousetrap.tms")
        assert [(r.step, r.arc) for r in trace.records] == [
            (1, "f1"), (2, "f2"), (3, "f3"), (4, "f4"), (5, "f5"),
            (6, "t1"), (7, "f6"), (8, "t2"), (9, "f7"),
        ]
        assert trace.meta.created == 3
        assert not trace.meta.step_limit_hit

    def test_formula_accumulates_to_six(self):
        _, _, trace = run("formula.tm", "formula.tms")
        [token] = trace.final_tokens
        assert token.attrs == {"sum": 6, "i": 4, "n": 3}
        assert token.at == StageRef(("out",), StageKind.PROCESS)
        # Three passes through the adder before the emit branch wins.
        assert [r.arc for r in trace.records].count("g5") == 2
        assert [r.arc for r in trace.records].count("g2") == 3
        assert [r.arc for r in trace.records] == [
            "g1", "g2", "g3", "g4", "g5", "g2", "g3", "g4", "g5",
            "g2", "g3", "g6", "g7", "g8",
        ]

    def test_paint_dry_trace(self):
        _, _, trace = run("paint_dry.tm", "paint_dry.tms")
        assert [(r.step, r.arc) for r in trace.records] == [
            (1, "p1"), (3, "p2"), (4, "p3"), (5, "p4"), (6, "d1"), (7, "d2")
        ]

    def test_paint_control_two_coats_then_dry(self):
        doc, _, trace = run("paint_control.tm", "paint_control.tms")
        [token] = trace.final_tokens
        assert token.attrs["quality"] == 7
        last_paint = max(
            r.step for r in trace.records if r.arc.startswith(("pc", "x1"))
        )
        first_dry = min(r.step for r in trace.records if r.arc.startswith("d"))
        assert last_paint < first_dry
        assert occurrence_regions(doc, trace) == [
            "R_paint", "R_check", "R_paint", "R_check", "R_dry"
        ]

    def test_stack_push_occurrences(self):
        doc, _, trace = run("stack.tm", "stack_push.tms")
        assert occurrence_regions(doc, trace) == ["E0", "E6", "E7", "E8", "E9"]

    def test_stack_pop_empty_returns_to_user(self):
        doc, _, trace = run("stack.tm", "stack_pop_empty.tms")
        assert occurrence_regions(doc, trace) == ["E0", "E1", "E2", "E3", "E0"]

    def test_stack_pop_success(self):
        doc, _, trace = run("stack.tm", "stack_pop.tms")
        assert occurrence_regions(doc, trace) == ["E0", "E1", "E2", "E4", "E5"]
        retrieved = next(
            t for t in trace.final_tokens if t.at and t.at.machine == ("retr",)
        )
        assert retrieved.attrs["top"] == 1


class TestStepSemantics:
    def test_transfer_without_outgoing_flow_consumes_token(self):
        model = parse_model(
            "thing t\n"
            "machine a { stages Create, Release, Transfer }\n"
            "flow a.Create -> a.Release on t\n"
            "flow a.Release -> a.Transfer on t\n"
        )
        scenario = Scenario(
            tokens=(TokenSeed("x", "t", StageRef(("a",), StageKind.CREATE)),)
        )
        trace = simulate(model, scenario)
        assert trace.final_tokens == ()
        assert trace.meta.created == 1
        assert trace.meta.consumed == 1

    def test_non_transfer_dead_end_keeps_token(self):
        model = parse_model(
            "thing t\nmachine a { stages Create, Process }\n"
            "flow a.Create -> a.Process on t\n"
        )
        scenario = Scenario(
            tokens=(TokenSeed("x", "t", StageRef(("a",), StageKind.CREATE)),)
        )
        trace = simulate(model, scenario)
        assert len(trace.final_tokens) == 1
        assert trace.meta.consumed == 0

    GATED = (
        "thing t\nthing go\n"
        "machine g { stages Create, Process, Release, Transfer }\n"
        "machine h { stages Create, Process }\n"
        "flow gc: g.Create -> g.Process on t\n"
        "flow gp: g.Process -> g.Release on t\n"
        "flow gr: g.Release -> g.Transfer on t\n"
        "flow hc: h.Create -> h.Process on go\n"
        "trigger tg: h.Process -> g.Release\n"
    )

    def test_trigger_gated_stage_waits_without_enablement(self):
        model = parse_model(self.GATED)
        scenario = Scenario(
            tokens=(TokenSeed("x", "t", StageRef(("g",), StageKind.CREATE)),),
            max_steps=20,
        )
        trace = simulate(model, scenario)
        [token] = trace.final_tokens
        assert token.at == StageRef(("g",), StageKind.RELEASE)
        assert "gr" not in [r.arc for r in trace.records]

    def test_trigger_enables_gated_stage_for_next_step(self):
        model = parse_model(self.GATED)
        scenario = Scenario(
            tokens=(TokenSeed("x", "t", StageRef(("g",), StageKind.CREATE)),),
            injections=(
                (3, TokenSeed("y", "go", StageRef(("h",), StageKind.CREATE))),
            ),
            max_steps=20,
        )
        trace = simulate(model, scenario)
        by_arc = {r.arc: r.step for r in trace.records}
        assert by_arc["tg"] == 5
        assert by_arc["gr"] == 6
        assert trace.final_tokens[0].at == StageRef(("g",), StageKind.TRANSFER) or (
            trace.meta.consumed == 1
        )

    def test_process_stage_holds_one_extra_step(self):
        model = parse_model(
            "thing t\nmachine a { stages Create, Process, Release }\n"
            "flow p1: a.Create -> a.Process on t\n"
            "flow p2: a.Process -> a.Release on t\n"
        )
        scenario = Scenario(
            tokens=(TokenSeed("x", "t", StageRef(("a",), StageKind.CREATE)),)
        )
        trace = simulate(model, scenario)
        assert [(r.step, r.arc) for r in trace.records] == [(1, "p1"), (3, "p2")]

    def test_unseeded_create_trigger_raises(self):
        doc = corpus_doc("multiple_behaviors.tm")
        scenario = parse_scenario(
            "scenario bare {\n"
            '  token t of task at prep.Create { choice = "paint" }\n'
            "}\n"
        )
        with pytest.raises(UnseededCreateError):
            simulate(doc.model, scenario)

    def test_step_limit_flagged(self):
        doc = corpus_doc("formula.tm")
        scenario = corpus_scenario("formula.tms")
        from dataclasses import replace

        trace = simulate(doc.model, replace(scenario, max_steps=5))
        assert trace.meta.step_limit_hit
        assert trace.meta.steps_used == 5

    def test_stop_condition_halts_early(self):
        doc = corpus_doc("formula.tm")
        scenario = parse_scenario(
            "scenario early {\n"
            "  max_steps 50\n"
            "  token a0 of acc at F.Create { sum = 0, i = 1, n = 3 }\n"
            "  action F.Process { sum := sum + i }\n"
            "  action F.Release { i := i + 1 }\n"
            "  stop when sum >= 3\n"
            "}\n"
        )
        trace = simulate(doc.model, scenario)
        [token] = trace.final_tokens
        assert token.attrs["sum"] == 3
        assert trace.meta.steps_used < 17

    def test_deterministic_policy_picks_first_declared_flow(self):
        model = parse_model(
            "thing t { n: int }\n"
            "machine a { stages Create, Release, Transfer }\n"
            "machine b { stages Transfer }\n"
            "machine c { stages Transfer }\n"
            "flow a.Create -> a.Release on t\n"
            "flow a.Release -> a.Transfer on t\n"
            "flow left: a.Transfer -> b.Transfer on t\n"
            "flow right: a.Transfer -> c.Transfer on t\n"
        )
        scenario = Scenario(
            tokens=(TokenSeed("x", "t", StageRef(("a",), StageKind.CREATE)),)
        )
        trace = simulate(model, scenario)
        arcs = [r.arc for r in trace.records]
        assert "left" in arcs and "right" not in arcs


class TestDeterminism:
    @pytest.mark.parametrize(
        "model_name,scenario_name",
        [
            ("mousetrap.tm", "mousetrap.tms"),
            ("formula.tm", "formula.tms"),
            ("stack.tm", "stack_push.tms"),
            ("stack.tm", "stack_pop_empty.tms"),
            ("paint_control.tm", "paint_control.tms"),
        ],
    )
    def test_repeated_runs_are_byte_identical(self, model_name, scenario_name):
        first = trace_to_jsonl(run(model_name, scenario_name)[2])
        second = trace_to_jsonl(run(model_name, scenario_name)[2])
        assert first == second

    def test_seeded_random_policy_is_reproducible(self):
        model = parse_model(
            "thing t\n"
            "machine a { stages Create, Release, Transfer }\n"
            "machine b { stages Transfer }\n"
            "machine c { stages Transfer }\n"
            "flow a.Create -> a.Release on t\n"
            "flow a.Release -> a.Transfer on t\n"
            "flow left: a.Transfer -> b.Transfer on t\n"
            "flow right: a.Transfer -> c.Transfer on t\n"
        )

        def once(seed):
            scenario = Scenario(
                policy="seeded-random",
                seed=seed,
                tokens=(TokenSeed("x", "t", StageRef(("a",), StageKind.CREATE)),),
            )
            return trace_to_jsonl(simulate(model, scenario))

        assert once(3) == once(3)
        chosen = {
            arc
            for seed in range(20)
            for arc in (
                r.arc
                for r in simulate(
                    model,
                    Scenario(
                        policy="seeded-random",
                        seed=seed,
                        tokens=(
                            TokenSeed("x", "t",
                                      StageRef(("a",), StageKind.CREATE)),
                        ),
                    ),
                ).records
            )
        }
        assert {"left", "right"} <= chosen

    @pytest.mark.parametrize(
        "model_name,scenario_name",
        [
            ("mousetrap.tm", "mousetrap.tms"),
            ("formula.tm", "formula.tms"),
            ("stack.tm", "stack_push.tms"),
            ("stack.tm", "stack_pop.tms"),
            ("stack.tm", "stack_pop_empty.tms"),
            ("paint_dry.tm", "paint_dry.tms"),
            ("paint_control.tm", "paint_control.tms"),
            ("multiple_behaviors.tm", "multiple_behaviors.tms"),
        ],
    )
    def test_tokens_are_conserved(self, model_name, scenario_name):
        trace = run(model_name, scenario_name)[2]
        assert trace.meta.created == trace.meta.consumed + len(trace.final_tokens)


class TestSegmentation:
    def test_boundary_records_become_notes(self):
        doc, _, trace = run("mousetrap.tm", "mousetrap.tms")
        seg = segment(trace, doc.regions)
        # f2, t1 and t2 cross region boundaries and belong to no region.
        assert len(seg.notes) == 3
        assert all("unattributed" in note for note in seg.notes)

    def test_intervals_cover_maximal_runs(self):
        doc, _, trace = run("formula.tm", "formula.tms")
        seg = segment(trace, doc.regions)
        assert [(o.region, o.interval.start, o.interval.duration)
                for o in seg.occurrences] == [
            ("add", 1, 1), ("bump", 4, 1), ("add", 6, 1), ("bump", 9, 1),
            ("add", 11, 1), ("bump", 14, 1), ("emit", 16, 2),
        ]

    def test_empty_trace_has_no_occurrences(self, mousetrap):
        from tmflow import Trace

        seg = segment(Trace(), mousetrap.regions)
        assert seg.occurrences == ()


class TestConformance:
    def graph(self):
        return BehaviorGraph(
            events=(Event("A", "ra"), Event("B", "rb"), Event("C", "rc")),
            edges=(("A", "B"), ("A", "C")),
            initial=("A",),
        )

    def occ(self, *regions):
        return [
            Occurrence(region, Interval(i + 1, 1))
            for i, region in enumerate(regions)
        ]

    def test_conformant_walk(self):
        assert conformance(self.occ("ra", "rb"), self.graph()).ok

    def test_fork_allows_edges_from_any_earlier_event(self):
        # B and C both follow A; there is no B -> C edge, yet the serial
        # observation A, B, C is a valid interleaving of the fork.
        assert conformance(self.occ("ra", "rb", "rc"), self.graph()).ok

    def test_not_initial(self):
        report = conformance(self.occ("rb"), self.graph())
        assert [d.code for d in report.errors] == ["NOT_INITIAL"]

    def test_missing_edge_is_nonconformant(self):
        report = conformance(self.occ("ra", "rc", "ra"), self.graph())
        assert [d.code for d in report.errors] == ["NONCONFORMANT"]

    def test_stack_skip_is_nonconformant(self, stack):
        graph = infer_behavior(stack.model, stack.regions)
        bad = self.occ("E0", "E9")
        report = conformance(bad, graph)
        assert [d.code for d in report.errors] == ["NONCONFORMANT"]

    def test_corpus_traces_conform(self):
        for model_name, scenario_name in [
            ("mousetrap.tm", "mousetrap.tms"),
            ("formula.tm", "formula.tms"),
            ("stack.tm", "stack_push.tms"),
            ("stack.tm", "stack_pop.tms"),
            ("stack.tm", "stack_pop_empty.tms"),
            ("paint_control.tm", "paint_control.tms"),
            ("multiple_behaviors.tm", "multiple_behaviors.tms"),
        ]:
            doc, _, trace = run(model_name, scenario_name)
            graph = infer_behavior(doc.model, doc.regions)
            seg = segment(trace, doc.regions)
            assert conformance(seg.occurrences, graph).ok, model_name
