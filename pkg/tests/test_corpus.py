"""Synthetic instruction corpus: generation, gold alignment, metrics."""

import pytest

from exeplan.corpus import (
    BASIC_FORMULAS,
    SLOT_KEYS,
    TASK_TYPES,
    CorpusConfig,
    MetricReport,
    MetricRow,
    build_detection_split,
    doc_from_dict,
    doc_to_dict,
    eval_disambiguation,
    eval_plans,
    generate_corpus,
    load_corpus,
    plan_examples_from_corpus,
    save_corpus,
    site_labels,
)
from exeplan.detector import CLASS_ORDER, OTHER_LABEL
from exeplan.frontend import parse_text
from exeplan.planner import transition_between


def test_default_config_values():
    cfg = CorpusConfig()
    assert (cfg.n_docs, cfg.seed, cfg.distractor_rate, cfg.omission_rate) == (600, 7, 0.25, 0.25)


def test_generation_is_deterministic(corpus_docs, tmp_path):
    again = generate_corpus()
    assert again == corpus_docs
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_corpus(corpus_docs, p1)
    save_corpus(again, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_overrides_change_the_stream():
    docs = generate_corpus(n_docs=25, seed=9)
    assert len(docs) == 25
    assert generate_corpus(n_docs=25, seed=10) != docs


def test_docs_are_internally_consistent(corpus_docs, lexicon):
    for doc in corpus_docs[:60]:
        assert doc.task_type in TASK_TYPES
        labels = [label for _, _, label in doc.mentions]
        assert labels and all(label in BASIC_FORMULAS for label in labels)
        assert len(labels) == len(set(labels))
        assert len(doc.mes) == len(labels)
        assert len(doc.omitted) == len(labels)
        assert doc.transitions == [
            transition_between(a, b) for a, b in zip(labels, labels[1:])
        ]
        for entry, dropped in zip(doc.mes, doc.omitted):
            assert set(entry) <= set(SLOT_KEYS)
            assert set(dropped) <= set(SLOT_KEYS)
            assert not set(dropped) & set(entry)
        parsed = parse_text(doc.text, lexicon)
        gold = dict(site_labels(doc, parsed, lexicon))
        for si, ti, label in doc.mentions:
            assert gold[(si, ti)] == label
        assert all(
            lab == OTHER_LABEL
            for site, lab in gold.items()
            if site not in {(si, ti) for si, ti, _ in doc.mentions}
        )


def test_omission_rate_zero_keeps_all_slots():
    docs = generate_corpus(n_docs=30, seed=13, omission_rate=0.0)
    assert all(not any(dropped) for doc in docs for dropped in doc.omitted)


def test_distractor_rate_zero_mentions_every_sentence(lexicon):
    docs = generate_corpus(n_docs=30, seed=13, distractor_rate=0.0)
    for doc in docs:
        parsed = parse_text(doc.text, lexicon)
        assert {si for si, _, _ in doc.mentions} == set(range(len(parsed.sentences)))


def test_distractors_add_unlabeled_sentences(lexicon):
    docs = generate_corpus(n_docs=80, seed=13, distractor_rate=0.9)
    spare = 0
    for doc in docs:
        parsed = parse_text(doc.text, lexicon)
        spare += len(parsed.sentences) - len({si for si, _, _ in doc.mentions})
    assert spare > 0


def test_jsonl_round_trip(corpus_docs, tmp_path):
    p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_corpus(corpus_docs, p1)
    loaded = load_corpus(p1)
    assert loaded == corpus_docs
    save_corpus(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_doc_dict_round_trip(corpus_docs):
    for doc in corpus_docs[:20]:
        obj = doc_to_dict(doc)
        assert doc_to_dict(doc_from_dict(obj)) == obj


def test_detection_split_shape(detection_split):
    seed, unlabeled, test = detection_split
    assert len(seed.samples) == 50
    assert len(test) == 50
    assert len(unlabeled) > 900
    assert all(s.provenance == "seed" for s in seed.samples)
    assert all(s.label in CLASS_ORDER for s in seed.samples)
    assert all(s.label in CLASS_ORDER for s in test)
    # seeds cover every class
    assert {s.label for s in seed.samples} == set(CLASS_ORDER)


def test_plan_examples_match_docs(corpus_docs, plan_examples):
    assert len(plan_examples) == len(corpus_docs)
    for doc, ex in zip(corpus_docs, plan_examples):
        assert ex.task == doc.task_type
        labels = {label for _, _, label in doc.mentions}
        assert ex.satisfied == labels | set(doc.transitions)


def test_metric_row_identities():
    row = MetricRow(tp=3, fp=1, fn=2)
    assert row.precision == pytest.approx(0.75)
    assert row.recall == pytest.approx(0.6)
    assert row.precision_defined and row.recall_defined
    empty = MetricRow()
    assert not empty.precision_defined and not empty.recall_defined
    assert empty.precision == 0.0 and empty.recall == 0.0


def test_report_average_skips_undefined_rows():
    report = MetricReport(
        per_formula={
            "CleanSpot": MetricRow(tp=9, fp=1, fn=0),
            "DrillHole": MetricRow(tp=0, fp=0, fn=0),
        }
    )
    assert report.average_precision == pytest.approx(0.9)
    assert report.average_recall == pytest.approx(1.0)
    assert MetricReport().average_precision == 0.0


def test_detection_metrics_recount(detector, lexicon, corpus_docs):
    docs = corpus_docs[:80]
    report = eval_disambiguation(detector, docs, lexicon)
    assert report.n_docs == len(docs)
    gold_total = sum(len(doc.mentions) + len(doc.transitions) for doc in docs)
    counted = sum(r.tp + r.fn for r in report.per_formula.values())
    assert counted == gold_total


def test_mode_dominance_on_subset(detector, planner_model, kb, world, corpus_docs, lexicon):
    docs = corpus_docs[:150]
    exe = eval_plans(detector, planner_model, kb, world, docs, mode="exeplan", lexicon=lexicon)
    lit = eval_plans(detector, planner_model, kb, world, docs, mode="literal", lexicon=lexicon)
    assert exe.executable_proportion >= lit.executable_proportion
    assert exe.average_precision >= lit.average_precision
    assert exe.average_recall >= lit.average_recall
    assert exe.mes_mapping is not None and exe.mes_mapping.precision_defined
    assert set(exe.per_task) == set(TASK_TYPES)
