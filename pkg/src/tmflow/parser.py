"""Parser and canonical serializer for the textual model language.

File layout is line oriented: one declaration per line, nested blocks in
braces, comments from ``#`` to end of line.  Solid arcs use ``flow``,
dashed arcs use ``trigger``, and a machine-to-machine shorthand
``A => B`` stands for the Release/Transfer/Transfer/Receive chain
(expanded later by :func:`tmflow.model.desugar`, never implicitly).

The same grammar also covers ``regions`` and ``behavior`` sections
(inline in a ``.tm`` file or alone in a ``.tmb`` sidecar) and scenario
files (``.tms``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .behavior import BehaviorGraph, Event, Interval, Region, Subdiagram
from .diagnostics import Diagnostic, SourceSpan, error
from .exprs import ExprSyntaxError, parse_guard, parse_statements
from .model import (
    FlowArc,
    Machine,
    StageKind,
    StageRef,
    ThingDecl,
    TMModel,
    TriggerArc,
)
from .simulate import Scenario, TokenSeed


class TMParseError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


@dataclass
class Document:
    """A parsed model file: the static model plus optional dynamic sections."""

    model: TMModel = field(default_factory=TMModel)
    regions: tuple[Region, ...] = ()
    behavior: BehaviorGraph | None = None


def merge_documents(base: Document, sidecar: Document) -> Document:
    """Overlay a `.tmb` sidecar's regions/behavior onto a model document."""
    return Document(
        model=base.model,
        regions=base.regions + sidecar.regions,
        behavior=sidecar.behavior if sidecar.behavior is not None else base.behavior,
    )


# ---------------------------------------------------------------------------
# Lexer

_SYMBOLS = ("->", "=>", ":=", "<=", ">=", "!=", "{", "}", "(", ")",
            ",", ";", ":", ".", "=", "<", ">", "+", "-")

_ATTR_KINDS = ("int", "text")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT INT STRING SYM NEWLINE EOF
    value: str
    line: int
    column: int
    offset: int

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.line, self.column, max(1, len(self.value)))

    @property
    def end(self) -> int:
        return self.offset + len(self.value)


class LexError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic
        super().__init__(str(diagnostic))


def normalize(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, pos = 1, 1, 0
    n = len(text)

    def emit(kind: str, value: str, ln: int, cl: int, off: int):
        tokens.append(Token(kind, value, ln, cl, off))

    while pos < n:
        ch = text[pos]
        if ch == "\n":
            if tokens and tokens[-1].kind != "NEWLINE":
                emit("NEWLINE", "\n", line, col, pos)
            pos += 1
            line += 1
            col = 1
            continue
        if ch in " \t":
            pos += 1
            col += 1
            continue
        if ch == "#":
            while pos < n and text[pos] != "\n":
                pos += 1
                col += 1
            continue
        if ch == '"':
            start, sl, sc = pos, line, col
            pos += 1
            col += 1
            while pos < n and text[pos] != '"':
                if text[pos] == "\n":
                    raise LexError(
                        error("SYNTAX", "unterminated string literal",
                              SourceSpan(sl, sc, pos - start))
                    )
                if text[pos] == "\\" and pos + 1 < n:
                    pos += 2
                    col += 2
                else:
                    pos += 1
                    col += 1
            if pos >= n:
                raise LexError(
                    error("SYNTAX", "unterminated string literal",
                          SourceSpan(sl, sc, pos - start))
                )
            pos += 1
            col += 1
            emit("STRING", text[start:pos], sl, sc, start)
            continue
        if ch.isdigit():
            start, sc = pos, col
            while pos < n and text[pos].isdigit():
                pos += 1
                col += 1
            emit("INT", text[start:pos], line, sc, start)
            continue
        if ch.isalpha() or ch == "_":
            start, sc = pos, col
            while pos < n and (text[pos].isalnum() or text[pos] == "_"):
                pos += 1
                col += 1
            emit("IDENT", text[start:pos], line, sc, start)
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, pos):
                emit("SYM", sym, line, col, pos)
                pos += len(sym)
                col += len(sym)
                break
        else:
            raise LexError(
                error("SYNTAX", f"unexpected character {ch!r}",
                      SourceSpan(line, col, 1))
            )
    emit("EOF", "", line, col, pos)
    return tokens


# ---------------------------------------------------------------------------
# Parser

class _Fail(Exception):
    """Internal: abort the current statement after recording a diagnostic."""


class _Parser:
    def __init__(self, text: str):
        self.text = normalize(text)
        self.diagnostics: list[Diagnostic] = []
        try:
            self.tokens = tokenize(self.text)
        except LexError as exc:
            self.diagnostics.append(exc.diagnostic)
            self.tokens = [Token("EOF", "", 1, 1, 0)]
        self.pos = 0
        self.machine_ids: dict[str, SourceSpan] = {}
        self.thing_names: dict[str, SourceSpan] = {}
        self.arc_ids: dict[str, SourceSpan] = {}
        self.auto_flow = 0
        self.auto_trigger = 0

    # -- token helpers ---------------------------------------------------
    def peek(self) -> Token:
        return self.tokens[self.pos]

    def take(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, kind: str, value: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    def at_ident(self, word: str) -> bool:
        return self.at("IDENT", word)

    def fail(self, message: str, tok: Token | None = None, code: str = "SYNTAX"):
        tok = tok or self.peek()
        self.diagnostics.append(error(code, message, tok.span))
        raise _Fail()

    def expect_sym(self, sym: str) -> Token:
        if not self.at("SYM", sym):
            self.fail(f"expected '{sym}'")
        return self.take()

    def expect_ident(self, what: str = "identifier") -> Token:
        if not self.at("IDENT"):
            self.fail(f"expected {what}")
        tok = self.take()
        if StageKind.from_name(tok.value) is not None:
            self.fail(f"'{tok.value}' is a reserved stage name", tok)
        return tok

    def skip_newlines(self):
        while self.at("NEWLINE"):
            self.take()

    def end_statement(self):
        if self.at("NEWLINE"):
            self.take()
        elif not (self.at("EOF") or self.at("SYM", "}")):
            self.fail(f"unexpected trailing input '{self.peek().value}'")

    def recover(self):
        """Skip to the next line (or closing brace) after an error."""
        while not (self.at("NEWLINE") or self.at("EOF") or self.at("SYM", "}")):
            self.take()
        if self.at("NEWLINE"):
            self.take()

    # -- shared pieces ---------------------------------------------------
    def dotted_path(self) -> tuple[list[str], list[Token]]:
        toks = [self.peek()]
        if not self.at("IDENT"):
            self.fail("expected machine or stage path")
        parts = [self.take().value]
        while self.at("SYM", "."):
            self.take()
            if not self.at("IDENT"):
                self.fail("expected path segment after '.'")
            toks.append(self.peek())
            parts.append(self.take().value)
        return parts, toks

    def stage_ref(self) -> StageRef:
        parts, toks = self.dotted_path()
        kind = StageKind.from_name(parts[-1])
        if kind is None:
            self.fail(
                f"'{parts[-1]}' is not a stage "
                f"(one of {', '.join(k.value for k in StageKind)})",
                toks[-1],
                code="UNKNOWN_STAGE",
            )
        if len(parts) == 1:
            self.fail("stage reference needs a machine path", toks[0])
        for part, tok in zip(parts[:-1], toks[:-1]):
            if StageKind.from_name(part) is not None:
                self.fail(f"'{part}' is a reserved stage name", tok)
        return StageRef(tuple(parts[:-1]), kind)

    def machine_ref(self) -> StageRef:
        parts, toks = self.dotted_path()
        for part, tok in zip(parts, toks):
            if StageKind.from_name(part) is not None:
                self.fail(f"'{part}' is a reserved stage name", tok)
        return StageRef(tuple(parts), None)

    def expression_text(self, stop_words: set[str]) -> tuple[str, Token]:
        """Consume expression tokens, returning their source text verbatim."""
        start_tok = self.peek()
        last = None
        while True:
            tok = self.peek()
            if tok.kind in ("NEWLINE", "EOF"):
                break
            if tok.kind == "IDENT" and tok.value in stop_words:
                break
            if tok.kind == "SYM" and tok.value in ("{", "}"):
                break
            last = self.take()
        if last is None:
            self.fail("expected an expression", start_tok)
        return self.text[start_tok.offset:last.end], start_tok

    def guard_clause(self, stop_words: set[str]) -> str | None:
        if not self.at_ident("when"):
            return None
        self.take()
        text, tok = self.expression_text(stop_words)
        try:
            parse_guard(text)
        except ExprSyntaxError as exc:
            self.fail(f"bad guard: {exc}", tok, code="GUARD_SYNTAX")
        return text

    def string_value(self) -> str:
        tok = self.take()
        body = tok.value[1:-1]
        return body.replace('\\"', '"').replace("\\\\", "\\")

    def label_clause(self) -> str | None:
        if not self.at_ident("label"):
            return None
        self.take()
        if self.at("STRING"):
            return self.string_value()
        if self.at("INT"):
            return self.take().value
        self.fail("expected a string or number after 'label'")

    def literal_value(self):
        if self.at("STRING"):
            return self.string_value()
        neg = False
        if self.at("SYM", "-"):
            self.take()
            neg = True
        if self.at("INT"):
            value = int(self.take().value)
            return -value if neg else value
        self.fail("expected an integer or string value")

    def attrs_block(self) -> dict[str, int | str]:
        """`{ name = value, ... }`, newlines allowed after separators."""
        attrs: dict[str, int | str] = {}
        self.expect_sym("{")
        self.skip_newlines()
        while not self.at("SYM", "}"):
            name = self.expect_ident("attribute name").value
            self.expect_sym("=")
            attrs[name] = self.literal_value()
            if self.at("SYM", ","):
                self.take()
            self.skip_newlines()
        self.expect_sym("}")
        return attrs

    def declare(self, table: dict[str, SourceSpan], tok: Token, what: str):
        if tok.value in table:
            self.fail(f"duplicate {what} '{tok.value}'", tok, code="DUP_ID")
        table[tok.value] = tok.span

    # -- model items -----------------------------------------------------
    def parse_document(self) -> Document:
        things: list[ThingDecl] = []
        machines: list[Machine] = []
        flows: list[FlowArc] = []
        triggers: list[TriggerArc] = []
        regions: list[Region] = []
        behavior: BehaviorGraph | None = None

        self.skip_newlines()
        while not self.at("EOF"):
            try:
                if self.at_ident("thing"):
                    things.append(self.thing_decl())
                elif self.at_ident("machine"):
                    machines.append(self.machine_decl())
                elif self.at_ident("flow"):
                    flows.append(self.flow_stmt())
                elif self.at_ident("trigger"):
                    triggers.append(self.trigger_stmt())
                elif self.at_ident("regions"):
                    regions.extend(self.regions_block())
                elif self.at_ident("behavior"):
                    behavior = self.behavior_block(behavior)
                else:
                    self.fail(f"unexpected '{self.peek().value}'")
            except _Fail:
                before = self.pos
                self.recover()
                if self.pos == before and not self.at("EOF"):
                    self.take()  # e.g. a stray '}': force progress
            self.skip_newlines()

        model = TMModel(
            machines=tuple(machines),
            flows=tuple(flows),
            triggers=tuple(triggers),
            things=tuple(things),
        )
        return Document(model=model, regions=tuple(regions), behavior=behavior)

    def thing_decl(self) -> ThingDecl:
        self.take()  # thing
        name_tok = self.expect_ident("thing name")
        self.declare(self.thing_names, name_tok, "thing")
        attributes: list[tuple[str, str]] = []
        if self.at("SYM", "{"):
            self.expect_sym("{")
            self.skip_newlines()
            seen: set[str] = set()
            while not self.at("SYM", "}"):
                attr_tok = self.expect_ident("attribute name")
                if attr_tok.value in seen:
                    self.fail(f"duplicate attribute '{attr_tok.value}'",
                              attr_tok, code="DUP_ID")
                seen.add(attr_tok.value)
                self.expect_sym(":")
                kind_tok = self.take()
                if kind_tok.kind != "IDENT" or kind_tok.value not in _ATTR_KINDS:
                    self.fail("attribute kind must be 'int' or 'text'", kind_tok)
                attributes.append((attr_tok.value, kind_tok.value))
                if self.at("SYM", ","):
                    self.take()
                self.skip_newlines()
            self.expect_sym("}")
        self.end_statement()
        return ThingDecl(name_tok.value, tuple(attributes), span=name_tok.span)

    def machine_decl(self) -> Machine:
        self.take()  # machine
        id_tok = self.expect_ident("machine id")
        self.declare(self.machine_ids, id_tok, "machine id")
        name = self.string_value() if self.at("STRING") else None
        stages: list[StageKind] = []
        submachines: list[Machine] = []
        self.expect_sym("{")
        self.skip_newlines()
        while not self.at("SYM", "}"):
            if self.at_ident("stages"):
                self.take()
                while True:
                    tok = self.take()
                    kind = StageKind.from_name(tok.value) if tok.kind == "IDENT" else None
                    if kind is None:
                        self.fail(f"unknown stage '{tok.value}'", tok,
                                  code="UNKNOWN_STAGE")
                    stages.append(kind)
                    if self.at("SYM", ","):
                        self.take()
                    else:
                        break
                self.end_statement()
            elif self.at_ident("machine"):
                submachines.append(self.machine_decl())
            else:
                self.fail(f"unexpected '{self.peek().value}' in machine body")
            self.skip_newlines()
        self.expect_sym("}")
        self.end_statement()
        return Machine(
            id=id_tok.value,
            name=name,
            stages=tuple(stages),
            submachines=tuple(submachines),
            span=id_tok.span,
        )

    def arc_id(self, prefix: str) -> tuple[str, bool, Token]:
        """Optional `name:` prefix; otherwise a positional auto id."""
        first = self.peek()
        if (first.kind == "IDENT"
                and self.tokens[self.pos + 1].kind == "SYM"
                and self.tokens[self.pos + 1].value == ":"):
            tok = self.expect_ident("arc id")
            self.declare(self.arc_ids, tok, "arc id")
            self.expect_sym(":")
            return tok.value, False, tok
        if prefix == "f":
            self.auto_flow += 1
            return f"_f{self.auto_flow}", True, first
        self.auto_trigger += 1
        return f"_t{self.auto_trigger}", True, first

    def flow_stmt(self) -> FlowArc:
        kw = self.take()  # flow
        arc_id, auto, id_tok = self.arc_id("f")
        first = self.peek()
        # Look ahead past the dotted path for '=>' (sugared) vs '->'.
        save = self.pos
        self.dotted_path()
        sugared = self.at("SYM", "=>")
        self.pos = save
        if sugared:
            source = self.machine_ref()
            self.expect_sym("=>")
            target = self.machine_ref()
        else:
            source = self.stage_ref()
            self.expect_sym("->")
            target = self.stage_ref()
        if source == target:
            self.fail("flow source and target are the same stage", first,
                      code="SELF_LOOP")
        thing = None
        if self.at_ident("on"):
            self.take()
            thing = self.expect_ident("thing name").value
        guard = self.guard_clause({"label"})
        label = self.label_clause()
        self.end_statement()
        return FlowArc(arc_id, source, target, thing=thing, guard=guard,
                       label=label, auto_id=auto, span=kw.span)

    def trigger_stmt(self) -> TriggerArc:
        kw = self.take()  # trigger
        arc_id, auto, _ = self.arc_id("t")
        first = self.peek()
        source = self.stage_ref()
        self.expect_sym("->")
        target = self.stage_ref()
        if source == target:
            self.fail("trigger source and target are the same stage", first,
                      code="SELF_LOOP")
        guard = self.guard_clause({"label"})
        label = self.label_clause()
        self.end_statement()
        return TriggerArc(arc_id, source, target, guard=guard, label=label,
                          auto_id=auto, span=kw.span)

    # -- regions / behavior ----------------------------------------------
    def regions_block(self) -> list[Region]:
        self.take()  # regions
        self.expect_sym("{")
        self.skip_newlines()
        regions: list[Region] = []
        seen: dict[str, SourceSpan] = {}
        while not self.at("SYM", "}"):
            if not self.at_ident("region"):
                self.fail("expected 'region'")
            self.take()
            id_tok = self.expect_ident("region id")
            self.declare(seen, id_tok, "region id")
            label = self.string_value() if self.at("STRING") else ""
            stages: list[StageRef] = []
            arcs: list[str] = []
            self.expect_sym("{")
            self.skip_newlines()
            while not self.at("SYM", "}"):
                if self.at_ident("stages"):
                    self.take()
                    while True:
                        stages.append(self.stage_ref())
                        if self.at("SYM", ","):
                            self.take()
                        else:
                            break
                    self.end_statement()
                elif self.at_ident("arcs"):
                    self.take()
                    while True:
                        arcs.append(self.expect_ident("arc id").value)
                        if self.at("SYM", ","):
                            self.take()
                        else:
                            break
                    self.end_statement()
                else:
                    self.fail(f"unexpected '{self.peek().value}' in region body")
                self.skip_newlines()
            self.expect_sym("}")
            self.end_statement()
            regions.append(
                Region(
                    id=id_tok.value,
                    body=Subdiagram(frozenset(stages), frozenset(arcs)),
                    label=label,
                )
            )
            self.skip_newlines()
        self.expect_sym("}")
        self.end_statement()
        return regions

    def behavior_block(self, existing: BehaviorGraph | None) -> BehaviorGraph:
        kw = self.take()  # behavior
        if existing is not None:
            self.fail("duplicate behavior section", kw, code="DUP_ID")
        self.expect_sym("{")
        self.skip_newlines()
        events: list[Event] = []
        edges: list[tuple[str, str]] = []
        initial: list[str] = []
        seen: dict[str, SourceSpan] = {}
        while not self.at("SYM", "}"):
            if self.at_ident("event"):
                self.take()
                id_tok = self.expect_ident("event id")
                self.declare(seen, id_tok, "event id")
                if not self.at_ident("region"):
                    self.fail("expected 'region' in event declaration")
                self.take()
                region_id = self.expect_ident("region id").value
                interval = None
                if self.at_ident("interval"):
                    self.take()
                    if not self.at("INT"):
                        self.fail("expected interval start")
                    start = int(self.take().value)
                    if not self.at("INT"):
                        self.fail("expected interval duration")
                    dur_tok = self.take()
                    duration = int(dur_tok.value)
                    if duration < 1:
                        self.fail("interval duration must be >= 1", dur_tok)
                    interval = Interval(start, duration)
                events.append(Event(id_tok.value, region_id, interval))
            elif self.at_ident("edge"):
                self.take()
                src = self.expect_ident("event id").value
                self.expect_sym("->")
                dst = self.expect_ident("event id").value
                edges.append((src, dst))
            elif self.at_ident("initial"):
                self.take()
                while True:
                    initial.append(self.expect_ident("event id").value)
                    if self.at("SYM", ","):
                        self.take()
                    else:
                        break
            else:
                self.fail(f"unexpected '{self.peek().value}' in behavior body")
            self.end_statement()
            self.skip_newlines()
        self.expect_sym("}")
        self.end_statement()
        return BehaviorGraph(tuple(events), tuple(edges), tuple(initial))

    # -- scenarios --------------------------------------------------------
    def parse_scenario(self) -> Scenario:
        self.skip_newlines()
        if not self.at_ident("scenario"):
            self.fail("expected 'scenario'")
        self.take()
        name = self.expect_ident("scenario name").value
        policy = "deterministic"
        seed = 0
        max_steps = 100
        tokens: list[TokenSeed] = []
        injections: list[tuple[int, TokenSeed]] = []
        mints: list[tuple[StageRef, str, dict]] = []
        actions: list[tuple[StageRef, str]] = []
        stop: str | None = None
        self.expect_sym("{")
        self.skip_newlines()
        while not self.at("SYM", "}"):
            try:
                if self.at_ident("policy"):
                    self.take()
                    tok = self.take()
                    if tok.value not in ("deterministic", "seeded"):
                        self.fail("policy is 'deterministic' or 'seeded-random'", tok)
                    if tok.value == "seeded":
                        self.expect_sym("-")
                        if not self.at_ident("random"):
                            self.fail("policy is 'deterministic' or 'seeded-random'")
                        self.take()
                        policy = "seeded-random"
                    else:
                        policy = "deterministic"
                elif self.at_ident("seed"):
                    self.take()
                    if not self.at("INT"):
                        self.fail("expected seed value")
                    seed = int(self.take().value)
                elif self.at_ident("max_steps"):
                    self.take()
                    if not self.at("INT"):
                        self.fail("expected step count")
                    tok = self.take()
                    max_steps = int(tok.value)
                    if max_steps < 1:
                        self.fail("max_steps must be >= 1", tok)
                elif self.at_ident("token") or self.at_ident("inject"):
                    injected = self.at_ident("inject")
                    self.take()
                    step = None
                    if injected:
                        if not self.at("INT"):
                            self.fail("expected injection step")
                        step = int(self.take().value)
                        if not self.at_ident("token"):
                            self.fail("expected 'token'")
                        self.take()
                    tok_id = self.expect_ident("token id").value
                    if not self.at_ident("of"):
                        self.fail("expected 'of'")
                    self.take()
                    thing = self.expect_ident("thing name").value
                    if not self.at_ident("at"):
                        self.fail("expected 'at'")
                    self.take()
                    at = self.stage_ref()
                    attrs = self.attrs_block() if self.at("SYM", "{") else {}
                    seed_tok = TokenSeed(tok_id, thing, at, attrs)
                    if injected:
                        injections.append((step, seed_tok))
                    else:
                        tokens.append(seed_tok)
                elif self.at_ident("mint"):
                    self.take()
                    at = self.stage_ref()
                    if not self.at_ident("of"):
                        self.fail("expected 'of'")
                    self.take()
                    thing = self.expect_ident("thing name").value
                    attrs = self.attrs_block() if self.at("SYM", "{") else {}
                    mints.append((at, thing, attrs))
                elif self.at_ident("action"):
                    self.take()
                    at = self.stage_ref()
                    self.expect_sym("{")
                    text, tok = self.expression_text(set())
                    try:
                        parse_statements(text)
                    except ExprSyntaxError as exc:
                        self.fail(f"bad action: {exc}", tok, code="GUARD_SYNTAX")
                    self.expect_sym("}")
                    actions.append((at, text))
                elif self.at_ident("stop"):
                    self.take()
                    if not self.at_ident("when"):
                        self.fail("expected 'when'")
                    self.take()
                    stop, tok = self.expression_text(set())
                    try:
                        parse_guard(stop)
                    except ExprSyntaxError as exc:
                        self.fail(f"bad stop condition: {exc}", tok,
                                  code="GUARD_SYNTAX")
                else:
                    self.fail(f"unexpected '{self.peek().value}' in scenario")
                self.end_statement()
            except _Fail:
                before = self.pos
                self.recover()
                if self.pos == before:
                    if self.at("EOF"):
                        break
                    self.take()
            self.skip_newlines()
        self.expect_sym("}")
        self.skip_newlines()
        return Scenario(
            name=name,
            policy=policy,
            seed=seed,
            max_steps=max_steps,
            tokens=tuple(tokens),
            injections=tuple(injections),
            mints=tuple(mints),
            actions=tuple(actions),
            stop=stop,
        )


# ---------------------------------------------------------------------------
# Public entry points

def parse_with_diagnostics(text: str) -> tuple[Document, list[Diagnostic]]:
    parser = _Parser(text)
    try:
        doc = parser.parse_document()
    except _Fail:
        doc = Document()
    return doc, parser.diagnostics


def parse(text: str) -> Document:
    """Parse model text; raise TMParseError carrying diagnostics on failure."""
    doc, diagnostics = parse_with_diagnostics(text)
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors:
        raise TMParseError(errors)
    return doc


def parse_model(text: str) -> TMModel:
    return parse(text).model


def parse_scenario(text: str) -> Scenario:
    parser = _Parser(text)
    try:
        scenario = parser.parse_scenario()
    except _Fail:
        scenario = None
    errors = [d for d in parser.diagnostics if d.severity == "error"]
    if errors or scenario is None:
        raise TMParseError(errors or [error("SYNTAX", "empty scenario")])
    return scenario


# ---------------------------------------------------------------------------
# Canonical serializer

def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _attr_value(value) -> str:
    return str(value) if isinstance(value, int) else _quote(value)


def _thing_lines(thing: ThingDecl) -> str:
    if not thing.attributes:
        return f"thing {thing.name}"
    attrs = ", ".join(f"{name}: {kind}" for name, kind in thing.attributes)
    return f"thing {thing.name} {{ {attrs} }}"


def _machine_lines(machine: Machine, indent: int, out: list[str]):
    pad = "  " * indent
    head = f"{pad}machine {machine.id}"
    if machine.name is not None:
        head += f" {_quote(machine.name)}"
    out.append(head + " {")
    if machine.stages:
        stages = ", ".join(kind.value for kind in machine.stages)
        out.append(f"{pad}  stages {stages}")
    for sub in machine.submachines:
        _machine_lines(sub, indent + 1, out)
    out.append(pad + "}")


def _arc_line(keyword: str, arc: FlowArc | TriggerArc) -> str:
    head = keyword
    if not arc.auto_id:
        head += f" {arc.id}:"
    sep = "=>" if isinstance(arc, FlowArc) and arc.sugared else "->"
    line = f"{head} {arc.source} {sep} {arc.target}"
    if isinstance(arc, FlowArc) and arc.thing is not None:
        line += f" on {arc.thing}"
    if arc.guard is not None:
        line += f" when {arc.guard}"
    if arc.label is not None:
        line += f" label {_quote(arc.label)}"
    return line


def _region_lines(region: Region, out: list[str]):
    head = f"  region {region.id}"
    if region.label:
        head += f" {_quote(region.label)}"
    out.append(head + " {")
    if region.body.stages:
        refs = sorted(region.body.stages, key=StageRef.sort_key)
        out.append("    stages " + ", ".join(str(r) for r in refs))
    if region.body.arcs:
        out.append("    arcs " + ", ".join(sorted(region.body.arcs)))
    out.append("  }")


def serialize(doc: Document | TMModel) -> str:
    """Render a document in canonical form; parse(serialize(d)) == d."""
    if isinstance(doc, TMModel):
        doc = Document(model=doc)
    model = doc.model
    sections: list[list[str]] = []
    if model.things:
        sections.append([_thing_lines(t) for t in model.things])
    if model.machines:
        for machine in model.machines:
            lines: list[str] = []
            _machine_lines(machine, 0, lines)
            sections.append(lines)
    if model.flows:
        sections.append([_arc_line("flow", a) for a in model.flows])
    if model.triggers:
        sections.append([_arc_line("trigger", a) for a in model.triggers])
    if doc.regions:
        lines = ["regions {"]
        for region in doc.regions:
            _region_lines(region, lines)
        lines.append("}")
        sections.append(lines)
    if doc.behavior is not None:
        graph = doc.behavior
        lines = ["behavior {"]
        for event in graph.events:
            line = f"  event {event.id} region {event.region}"
            if event.interval is not None:
                line += f" interval {event.interval.start} {event.interval.duration}"
            lines.append(line)
        if graph.initial:
            lines.append("  initial " + ", ".join(graph.initial))
        for src, dst in graph.edges:
            lines.append(f"  edge {src} -> {dst}")
        lines.append("}")
        sections.append(lines)
    if not sections:
        return "\n"
    return "\n\n".join("\n".join(lines) for lines in sections) + "\n"
