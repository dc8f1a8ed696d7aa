"""Shared fixtures: one corpus, one detector, one planner per test session."""

import pytest

from exeplan.cli import run_command
from exeplan.corpus import build_detection_split, generate_corpus, plan_examples_from_corpus
from exeplan.detector import self_train
from exeplan.frontend import default_lexicon
from exeplan.mes import default_kb, default_world
from exeplan.planner import calibrate_model
from exeplan.ssvm import train_ssvm


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()


@pytest.fixture(scope="session")
def kb():
    return default_kb()


@pytest.fixture()
def world():
    # fresh per test; plans mutate it through state progression
    return default_world()


@pytest.fixture(scope="session")
def corpus_docs():
    return generate_corpus()


@pytest.fixture(scope="session")
def detection_split(corpus_docs, lexicon):
    return build_detection_split(corpus_docs, lexicon)


@pytest.fixture(scope="session")
def detector_result(detection_split, lexicon):
    seed, unlabeled, test = detection_split
    return self_train(seed, unlabeled, test, lexicon=lexicon)


@pytest.fixture(scope="session")
def detector(detector_result):
    return detector_result[0]


@pytest.fixture(scope="session")
def plan_examples(corpus_docs):
    return plan_examples_from_corpus(corpus_docs)


@pytest.fixture(scope="session")
def planner_training(plan_examples):
    return train_ssvm(plan_examples)


@pytest.fixture(scope="session")
def planner_model(planner_training):
    return calibrate_model(planner_training[0])


@pytest.fixture(scope="session")
def cli_assets(tmp_path_factory):
    """Corpus, detector model, and planner weights built once through the CLI."""
    root = tmp_path_factory.mktemp("assets")
    paths = {
        "corpus": root / "corpus.jsonl",
        "model": root / "model.json",
        "planner": root / "planner.json",
    }
    assert run_command(["gen-corpus", "--out", str(paths["corpus"])]) == 0
    assert run_command(["train-detector", "--corpus", str(paths["corpus"]), "--out", str(paths["model"])]) == 0
    assert run_command(["train-planner", "--corpus", str(paths["corpus"]), "--out", str(paths["planner"])]) == 0
    return paths
