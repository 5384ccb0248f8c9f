import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import tmflow
from tmflow import (
    Document,
    FlowArc,
    Machine,
    StageKind,
    StageRef,
    ThingDecl,
    TMModel,
    TMParseError,
    TriggerArc,
    parse,
    parse_model,
    parse_scenario,
    parse_with_diagnostics,
    serialize,
)

from conftest import MODEL_FILES, SCENARIO_FILES, corpus_text


class TestRoundTrip:
    @pytest.mark.parametrize("path", MODEL_FILES, ids=lambda p: p.name)
    def test_corpus_file_round_trips(self, path):
        doc = parse(path.read_text(encoding="utf-8"))
        again = parse(serialize(doc))
        assert again == doc

    @pytest.mark.parametrize("path", MODEL_FILES, ids=lambda p: p.name)
    def test_serialization_is_a_fixed_point(self, path):
        doc = parse(path.read_text(encoding="utf-8"))
        once = serialize(doc)
        assert serialize(parse(once)) == once

    def test_golden_canonical_form(self):
        doc = parse(corpus_text("sugar_pipeline.tm"))
        assert serialize(doc) == (
            "thing parcel\n"
            "\n"
            "machine sender {\n"
            "  stages Create, Release\n"
            "}\n"
            "\n"
            "machine receiver {\n"
            "  stages Process\n"
            "}\n"
            "\n"
            "flow s1: sender.Create -> sender.Release on parcel\n"
            "flow route: sender => receiver on parcel label \"shipment\"\n"
            "flow r1: receiver.Receive -> receiver.Process on parcel\n"
        )

    def test_empty_document(self):
        assert serialize(parse("")) == "\n"
        assert parse(serialize(Document())) == Document()


class TestGrammar:
    def test_machine_display_name(self):
        model = parse_model('machine m "Main Loop" { stages Create }')
        assert model.machines[0].name == "Main Loop"

    def test_nested_machines(self):
        model = parse_model(
            "machine outer {\n  stages Create\n  machine inner { stages Process }\n}"
        )
        assert model.machines[0].submachines[0].id == "inner"

    def test_auto_arc_ids_are_positional(self):
        model = parse_model(
            "machine a { stages Create, Process }\n"
            "flow a.Create -> a.Process\n"
            "trigger a.Process -> a.Create\n"
        )
        assert model.flows[0].id == "_f1" and model.flows[0].auto_id
        assert model.triggers[0].id == "_t1" and model.triggers[0].auto_id

    def test_guard_text_is_kept_verbatim(self):
        model = parse_model(
            "machine a { stages Create, Process }\n"
            'flow a.Create -> a.Process when n  <=  3 label "go"\n'
        )
        assert model.flows[0].guard == "n  <=  3"
        assert model.flows[0].label == "go"

    def test_sugared_arc_keeps_machine_refs(self):
        model = parse_model(
            "machine a { stages Create }\nmachine b { stages Process }\n"
            "flow x: a => b on t"
        )
        arc = model.flows[0]
        assert arc.sugared
        assert arc.source == StageRef(("a",), None)
        assert arc.target == StageRef(("b",), None)

    def test_comments_and_blank_lines_ignored(self):
        model = parse_model("# heading\n\nmachine a { stages Create } # tail\n")
        assert model.machines[0].id == "a"

    def test_crlf_input(self):
        model = parse_model("machine a {\r\n  stages Create\r\n}\r\n")
        assert model.machines[0].stages == (StageKind.CREATE,)

    def test_regions_and_behavior_sections(self):
        doc = parse(corpus_text("one_lane_street.tm"))
        assert [r.id for r in doc.regions] == ["am", "pm"]
        assert doc.behavior is not None
        assert doc.behavior.initial == ("morning",)
        assert doc.behavior.events[0].interval == tmflow.Interval(0, 12)

    def test_scenario_parsing(self):
        scenario = parse_scenario(
            "scenario demo {\n"
            "  policy seeded-random\n"
            "  seed 7\n"
            "  max_steps 12\n"
            '  token a of t at m.Create { n = 3, s = "x" }\n'
            "  inject 4 token b of t at m.Create\n"
            "  mint m.Create of t { n = 0 }\n"
            "  action m.Process { n := n + 1 }\n"
            "  stop when n > 5\n"
            "}\n"
        )
        assert scenario.policy == "seeded-random"
        assert scenario.seed == 7
        assert scenario.max_steps == 12
        assert scenario.tokens[0].attrs == {"n": 3, "s": "x"}
        assert scenario.injections[0][0] == 4
        assert scenario.mints[0][1] == "t"
        assert scenario.stop == "n > 5"


class TestDiagnostics:
    def diags(self, text):
        _, diagnostics = parse_with_diagnostics(text)
        return diagnostics

    def test_duplicate_machine_id(self):
        diags = self.diags("machine a { stages Create }\nmachine a { stages Create }")
        assert any(d.code == "DUP_ID" for d in diags)

    def test_duplicate_arc_id(self):
        diags = self.diags(
            "machine a { stages Create, Process }\n"
            "flow f: a.Create -> a.Process\nflow f: a.Create -> a.Process\n"
        )
        assert any(d.code == "DUP_ID" for d in diags)

    def test_self_loop_arc(self):
        diags = self.diags(
            "machine a { stages Process }\nflow a.Process -> a.Process\n"
        )
        assert any(d.code == "SELF_LOOP" for d in diags)

    def test_unknown_stage_keyword(self):
        diags = self.diags("machine a { stages Creat }")
        assert any(d.code == "UNKNOWN_STAGE" for d in diags)

    def test_guard_syntax_error(self):
        diags = self.diags(
            "machine a { stages Create, Process }\n"
            "flow a.Create -> a.Process when n +\n"
        )
        assert any(d.code == "GUARD_SYNTAX" for d in diags)

    def test_span_points_at_offending_token(self):
        diags = self.diags("machine a { stages Create }\nmachine a { stages Create }")
        dup = next(d for d in diags if d.code == "DUP_ID")
        assert dup.span.line == 2
        assert dup.span.column == 9

    def test_recovery_reports_multiple_errors(self):
        diags = self.diags(
            "machine a { stages Creat }\n"
            "machine b { stages Processs }\n"
        )
        assert len([d for d in diags if d.severity == "error"]) >= 2

    def test_parse_raises_with_diagnostics(self):
        with pytest.raises(TMParseError) as exc:
            parse("machine {")
        assert exc.value.diagnostics

    def test_unterminated_string(self):
        diags = self.diags('machine a "oops { stages Create }')
        assert any(d.code == "SYNTAX" for d in diags)

    def test_reserved_stage_name_as_id(self):
        diags = self.diags("machine Create { stages Process }")
        assert any(d.severity == "error" for d in diags)


class TestFuzzing:
    def test_ten_thousand_inputs_never_crash(self):
        rng = random.Random(20260823)
        seeds = [p.read_text(encoding="utf-8") for p in MODEL_FILES]
        seeds += [p.read_text(encoding="utf-8") for p in SCENARIO_FILES]
        alphabet = (
            "abcdefghijklmnopqrstuvwxyz0123456789 \n\t"
            '{}()[]<>.,;:=+-*/#"\'\\!@$%^&_~'
        )
        for i in range(10_000):
            kind = i % 4
            if kind == 0:
                text = "".join(
                    rng.choice(alphabet) for _ in range(rng.randrange(0, 120))
                )
            elif kind == 1:
                base = rng.choice(seeds)
                cut = rng.randrange(0, len(base))
                text = base[:cut]
            elif kind == 2:
                base = list(rng.choice(seeds))
                for _ in range(rng.randrange(1, 8)):
                    pos = rng.randrange(0, len(base))
                    base[pos] = rng.choice(alphabet)
                text = "".join(base)
            else:
                words = rng.choice(seeds).split()
                rng.shuffle(words)
                text = " ".join(words[: rng.randrange(0, 40)])
            # Must never raise; bad input surfaces as diagnostics instead.
            doc, diagnostics = parse_with_diagnostics(text)
            assert doc is not None
            assert all(d.severity in ("error", "warning") for d in diagnostics)


_IDENTS = st.from_regex(r"[a-z][a-z0-9_]{0,6}", fullmatch=True).filter(
    lambda s: StageKind.from_name(s) is None
    and s not in ("machine", "thing", "flow", "trigger", "regions", "behavior",
                  "stages", "on", "when", "label", "int", "text")
)
_STAGES = st.lists(
    st.sampled_from(list(StageKind)), min_size=1, max_size=5, unique=True
).map(tuple)


@st.composite
def models(draw) -> TMModel:
    machine_ids = draw(
        st.lists(_IDENTS, min_size=1, max_size=4, unique=True)
    )
    machines = tuple(
        Machine(mid, stages=draw(_STAGES)) for mid in machine_ids
    )
    things = tuple(
        ThingDecl(name, tuple((attr, draw(st.sampled_from(["int", "text"])))
                              for attr in attrs))
        for name, attrs in draw(
            st.dictionaries(_IDENTS, st.lists(_IDENTS, max_size=2, unique=True),
                            max_size=2)
        ).items()
        if name not in machine_ids
    )

    def ref():
        machine = draw(st.sampled_from(machines))
        kind = draw(st.sampled_from(list(machine.stages)))
        return StageRef((machine.id,), kind)

    flows = []
    for n in range(draw(st.integers(0, 3))):
        src = ref()
        tgt = ref()
        if src == tgt:
            continue
        flows.append(
            FlowArc(
                f"f{n}", src, tgt,
                thing=draw(st.one_of(st.none(), _IDENTS)),
                label=draw(st.one_of(st.none(), st.text(
                    alphabet="abc xyz\"\\", max_size=8))),
            )
        )
    triggers = []
    for n in range(draw(st.integers(0, 2))):
        src = ref()
        tgt = ref()
        if src == tgt:
            continue
        triggers.append(TriggerArc(f"t{n}", src, tgt))
    return TMModel(
        machines=machines,
        flows=tuple(flows),
        triggers=tuple(triggers),
        things=things,
    )


class TestProperties:
    @settings(max_examples=150, deadline=None)
    @given(models())
    def test_generated_models_round_trip(self, model):
        assert parse_model(serialize(model)) == model

    @settings(max_examples=150, deadline=None)
    @given(models())
    def test_serializer_is_deterministic(self, model):
        assert serialize(model) == serialize(model)
