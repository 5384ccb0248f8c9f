from pathlib import Path

import pytest

import tmflow

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

MODEL_FILES = sorted(CORPUS.glob("*.tm"))
SCENARIO_FILES = sorted(CORPUS.glob("*.tms"))


def corpus_text(name: str) -> str:
    return (CORPUS / name).read_text(encoding="utf-8")


def corpus_doc(name: str) -> tmflow.Document:
    return tmflow.parse(corpus_text(name))


def corpus_scenario(name: str) -> tmflow.Scenario:
    return tmflow.parse_scenario(corpus_text(name))


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture
def mousetrap() -> tmflow.Document:
    return corpus_doc("mousetrap.tm")


@pytest.fixture
def formula() -> tmflow.Document:
    return corpus_doc("formula.tm")


@pytest.fixture
def stack() -> tmflow.Document:
    return corpus_doc("stack.tm")


@pytest.fixture
def one_lane() -> tmflow.Document:
    return corpus_doc("one_lane_street.tm")


@pytest.fixture
def paint_dry() -> tmflow.Document:
    return corpus_doc("paint_dry.tm")


@pytest.fixture
def paint_control() -> tmflow.Document:
    return corpus_doc("paint_control.tm")


@pytest.fixture
def multiple_behaviors() -> tmflow.Document:
    return corpus_doc("multiple_behaviors.tm")


@pytest.fixture
def sugar_pipeline() -> tmflow.Document:
    return corpus_doc("sugar_pipeline.tm")
