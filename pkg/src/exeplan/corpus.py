"""Synthetic instruction corpus generation and metric evaluation.

The generator produces seeded template-based instruction documents with gold
mention sites, transitions, task types, and instructed slot values, standing
in for collected human data. The evaluation half computes per-formula and
per-task precision/recall, slot-mapping precision/recall, and the proportion
of executable plans.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .detector import OTHER_LABEL, Classifier, Sample, SubGoalMention, TrainingSet, detect
from .features import candidate_sites, extract_features, vectorize
from .frontend import Lexicon, ParsedDocument, default_lexicon, parse_text
from .jsonio import canonical_dumps
from .mes import MesKB, WorldState, default_kb, extract_mes
from .pipeline import CompileFailure, compile_instruction
from .planner import BASIC_FORMULAS, TASK_TYPES, TRANSITION_FORMULAS, MlnModel, transition_between
from .ssvm import PlanExample

CORPUS_VERSION = 1

SLOT_KEYS = ("precon", "loc", "tool", "req")


@dataclass
class CorpusDoc:
    """One generated instruction with its gold annotations."""

    text: str
    mentions: list[tuple[int, int, str]]
    transitions: list[str]
    task_type: str
    mes: list[dict]
    omitted: list[list[str]]
    version: int = CORPUS_VERSION


@dataclass
class CorpusConfig:
    n_docs: int = 600
    seed: int = 7
    distractor_rate: float = 0.25
    omission_rate: float = 0.25


# Task shapes: gold task, ordered sub-goals, and the work spot that makes the
# whole sequence executable on the default world.
SHAPES = (
    ("clean", ("CleanSpot",), "upper-right"),
    ("drill", ("DrillHole",), "center"),
    ("drill", ("DrillHole", "CleanSpot"), "center"),
    ("install", ("InstallScrew",), "bottom-right"),
    ("install", ("DrillHole", "InstallScrew"), "center"),
    ("install", ("DrillHole", "InstallScrew", "CleanSpot"), "center"),
)
SHAPE_WEIGHTS = (28, 16, 10, 16, 16, 14)

VERBS = {
    "CleanSpot": ("clean", "sweep", "wipe", "remove"),
    "DrillHole": ("drill", "bore"),
    "InstallScrew": ("install", "mount"),
}
OBJECTS = {
    "CleanSpot": ("the dust", "the debris"),
    "DrillHole": ("a hole",),
    "InstallScrew": ("a screw",),
}
LOC_PHRASES = {
    "upper-right": ("at the upper right corner", "on the upper right", "at the top right"),
    "center": ("at the center", "in the middle", "at the centre"),
    "bottom-right": ("at the bottom right corner", "on the bottom right", "at the lower right"),
}
TOOL_PHRASES = {
    "CleanSpot": ("with a brush", "with the cloth", "with a rag", "with a broom"),
    "DrillHole": ("with the driller", "with a driller"),
    "InstallScrew": ("with a screwdriver", "with the driver"),
}
REQ_PHRASES = {
    "CleanSpot": ("and do it slowly", "and do it precisely", "and keep the unneeded tools away"),
    "DrillHole": ("and do it slowly", "and do it precisely"),
    "InstallScrew": ("and do it firmly", "and finish neatly"),
}
PRECON_PHRASES = {
    "CleanSpot": ("because it is dirty", "since the spot is dirty"),
}
FIRST_OPENERS = ("Please ", "Now ", "", "First ")
LATER_OPENERS = ("Then ", "Next ", "After that ", "Now ")
DISTRACTORS = (
    "Wait, I need to remove the tools on the surface.",
    "Wait, I need to remove the tools on the table.",
    "Eh, the drill is missing.",
    "Oh, the drill is missing.",
    "First I will install a drill on your arm.",
    "Now I will install a drill on the arm.",
)


def _step_clause(formula: str, rng: random.Random, loc: str | None, with_tool: bool, with_req: bool, with_precon: bool, later: bool) -> str:
    verb = rng.choice(VERBS[formula])
    bare = not (with_tool or with_req or with_precon)
    parts: list[str]
    if formula == "CleanSpot" and later and loc is None and bare and rng.random() < 0.3:
        return f"keep the {rng.choice(('surface', 'spot'))} clean"
    if formula == "InstallScrew" and later and loc is None and rng.random() < 0.3:
        parts = [f"{verb} a screw at the created hole"]
    else:
        parts = [f"{verb} {rng.choice(OBJECTS[formula])}"]
        if loc is not None:
            parts.append(rng.choice(LOC_PHRASES[loc]))
    if with_tool:
        parts.append(rng.choice(TOOL_PHRASES[formula]))
    if with_precon:
        parts.append(rng.choice(PRECON_PHRASES[formula]))
    if with_req:
        parts.append(rng.choice(REQ_PHRASES[formula]))
    return " ".join(parts)


def _assemble(groups: list[list[str]], rng: random.Random) -> list[str]:
    sentences = []
    for gi, clauses in enumerate(groups):
        opener = rng.choice(FIRST_OPENERS if gi == 0 else LATER_OPENERS)
        body = opener + ", ".join(clauses) + "."
        sentences.append(body[0].upper() + body[1:])
    return sentences


def _mention_sites(doc, formulas: list[str], skip_sentences: set[int], lexicon: Lexicon) -> list[tuple[int, int]]:
    """Locate the k-th trigger token for the k-th instructed sub-goal."""
    sites = [s for s in candidate_sites(doc, lexicon) if s[0] not in skip_sentences]
    if len(sites) != len(formulas):
        raise RuntimeError(f"expected {len(formulas)} trigger sites, found {len(sites)}")
    return sites


def generate_doc(rng: random.Random, config: CorpusConfig, kb: MesKB, lexicon: Lexicon) -> CorpusDoc:
    task, formulas, spot = rng.choices(SHAPES, weights=SHAPE_WEIGHTS, k=1)[0]

    clauses = []
    planned_omits: list[list[str]] = []
    for i, formula in enumerate(formulas):
        loc = spot if i == 0 else None
        with_tool = rng.random() < 0.8
        with_req = rng.random() < 0.25
        with_precon = formula == "CleanSpot" and rng.random() < 0.2
        omitted = []
        # deliberate omissions: strike planned optional mentions from the text
        if with_tool and rng.random() < config.omission_rate:
            with_tool, omitted = False, omitted + ["tool"]
        if with_req and rng.random() < config.omission_rate:
            with_req, omitted = False, omitted + ["req"]
        if with_precon and rng.random() < config.omission_rate:
            with_precon, omitted = False, omitted + ["precon"]
        planned_omits.append(sorted(omitted))
        clauses.append(_step_clause(formula, rng, loc, with_tool, with_req, with_precon, later=i > 0))

    # group consecutive clauses into sentences; sometimes two share one
    groups: list[list[str]] = []
    i = 0
    while i < len(clauses):
        if i + 1 < len(clauses) and rng.random() < 0.3:
            groups.append([clauses[i], clauses[i + 1]])
            i += 2
        else:
            groups.append([clauses[i]])
            i += 1
    sentences = _assemble(groups, rng)

    skip: set[int] = set()
    if rng.random() < config.distractor_rate:
        pos = rng.choice((0, len(sentences)))
        sentences.insert(pos, rng.choice(DISTRACTORS))
        skip = {pos}

    text = " ".join(sentences)
    parsed = parse_text(text, lexicon)
    sites = _mention_sites(parsed, list(formulas), skip, lexicon)
    mentions = [(si, ti, f) for (si, ti), f in zip(sites, formulas)]
    transitions = [
        transition_between(a, b) for (_, _, a), (_, _, b) in zip(mentions, mentions[1:])
    ]
    gold_mes = []
    for (si, ti, f) in mentions:
        extracted = extract_mes(parsed, SubGoalMention(site=(si, ti), label=f, score=0.0), kb)
        entry = {}
        for slot in SLOT_KEYS:
            value = getattr(extracted, slot)
            if value is not None:
                entry[slot] = value
        gold_mes.append(entry)
    return CorpusDoc(
        text=text,
        mentions=mentions,
        transitions=transitions,
        task_type=task,
        mes=gold_mes,
        omitted=planned_omits,
    )


def generate_corpus(config: CorpusConfig | None = None, **overrides) -> list[CorpusDoc]:
    """Deterministic template corpus; same config gives identical output."""
    if config is None:
        config = CorpusConfig(**overrides)
    elif overrides:
        raise ValueError("pass either a config or keyword overrides, not both")
    rng = random.Random(config.seed)
    kb = default_kb()
    lexicon = default_lexicon()
    return [generate_doc(rng, config, kb, lexicon) for _ in range(config.n_docs)]


def doc_to_dict(doc: CorpusDoc) -> dict:
    return {
        "version": doc.version,
        "text": doc.text,
        "mentions": [[si, ti, f] for si, ti, f in doc.mentions],
        "transitions": list(doc.transitions),
        "task_type": doc.task_type,
        "mes": doc.mes,
        "omitted": doc.omitted,
    }


def doc_from_dict(obj: dict) -> CorpusDoc:
    if obj.get("version") != CORPUS_VERSION:
        raise ValueError(f"unsupported corpus version {obj.get('version')!r}")
    return CorpusDoc(
        text=obj["text"],
        mentions=[(int(si), int(ti), f) for si, ti, f in obj["mentions"]],
        transitions=list(obj["transitions"]),
        task_type=obj["task_type"],
        mes=[dict(m) for m in obj["mes"]],
        omitted=[list(o) for o in obj["omitted"]],
    )


def save_corpus(docs: list[CorpusDoc], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(canonical_dumps(doc_to_dict(doc)))
            fh.write("\n")


def load_corpus(path) -> list[CorpusDoc]:
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                docs.append(doc_from_dict(json.loads(line)))
    return docs


def site_labels(doc: CorpusDoc, parsed, lexicon: Lexicon) -> list[tuple[tuple[int, int], str]]:
    """Gold label for every candidate site; non-mention sites are Other."""
    gold = {(si, ti): f for si, ti, f in doc.mentions}
    return [(site, gold.get(site, OTHER_LABEL)) for site in candidate_sites(parsed, lexicon)]


def build_detection_split(
    docs: list[CorpusDoc],
    lexicon: Lexicon | None = None,
    n_seed: int = 50,
    n_test: int = 50,
):
    """Split corpus sites into a labeled seed set, unlabeled pool, held-out test.

    Test sites come from whole documents at the tail of the corpus so they
    never overlap the training pool. The seed set is stratified over the
    label classes in rotation.
    """
    lexicon = lexicon if lexicon is not None else default_lexicon()
    parsed = {}

    def labeled_sites(doc: CorpusDoc):
        if id(doc) not in parsed:
            parsed[id(doc)] = parse_text(doc.text, lexicon)
        return parsed[id(doc)], site_labels(doc, parsed[id(doc)], lexicon)

    test: list[Sample] = []
    cut = len(docs)
    while cut > 0 and len(test) < n_test:
        cut -= 1
        p, pairs = labeled_sites(docs[cut])
        for site, label in pairs:
            if len(test) < n_test:
                test.append(Sample(label=label, raw=(p, site)))

    pool: list[tuple] = []
    for doc in docs[:cut]:
        p, pairs = labeled_sites(doc)
        for site, label in pairs:
            pool.append((p, site, label))

    def syntax_form(p: ParsedDocument, site) -> tuple:
        si, ti = site
        sent = p.sentences[si]
        rels = tuple(sorted({e.relation for e in sent.edges if e.head == ti or e.dependent == ti}))
        return (sent.tokens[ti].lemma, rels)

    # Stratify over label x (keyword, syntactic configuration) so every observed
    # construction of a mention gets a labeled exemplar; otherwise self-training
    # can lock a rare form into the wrong class.
    by_label: dict[str, dict[tuple, list]] = {}
    for item in pool:
        forms = by_label.setdefault(item[2], {})
        forms.setdefault(syntax_form(item[0], item[1]), []).append(item)
    seed_items: list[tuple] = []
    order = [lab for lab in ("CleanSpot", "DrillHole", "InstallScrew", OTHER_LABEL) if lab in by_label]
    order += sorted(set(by_label) - set(order))
    form_lists = {lab: sorted(by_label[lab]) for lab in order}
    cursor = {lab: 0 for lab in order}
    while len(seed_items) < n_seed and any(any(b.values()) for b in by_label.values()):
        for lab in order:
            if len(seed_items) >= n_seed:
                break
            buckets, forms = by_label[lab], form_lists[lab]
            for _ in range(len(forms)):
                form = forms[cursor[lab] % len(forms)]
                cursor[lab] += 1
                if buckets[form]:
                    seed_items.append(buckets[form].pop(0))
                    break
    seed_set = TrainingSet()
    chosen = {id(item) for item in seed_items}
    for p, site, label in seed_items:
        fv = extract_features(p, site, lexicon, sites=candidate_sites(p, lexicon))
        vec = vectorize(fv, seed_set.index, grow=True)
        seed_set.samples.append(Sample(label=label, vec=vec, provenance="seed"))
    unlabeled = [(item[0], item[1]) for item in pool if id(item) not in chosen]
    return seed_set, unlabeled, test


def plan_examples_from_corpus(docs: list[CorpusDoc]) -> list[PlanExample]:
    examples = []
    for doc in docs:
        satisfied = frozenset(f for _, _, f in doc.mentions) | frozenset(doc.transitions)
        examples.append(PlanExample(satisfied=satisfied, task=doc.task_type))
    return examples


@dataclass
class MetricRow:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision_defined(self) -> bool:
        return self.tp + self.fp > 0

    @property
    def recall_defined(self) -> bool:
        return self.tp + self.fn > 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.precision_defined else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.recall_defined else 0.0


@dataclass
class MetricReport:
    per_formula: dict[str, MetricRow] = field(default_factory=dict)
    per_task: dict[str, MetricRow] = field(default_factory=dict)
    mes_mapping: MetricRow | None = None
    executable_proportion: float | None = None
    n_docs: int = 0

    def _rows(self) -> dict[str, MetricRow]:
        return self.per_formula if self.per_formula else self.per_task

    @property
    def average_precision(self) -> float:
        vals = [r.precision for r in self._rows().values() if r.precision_defined]
        return sum(vals) / len(vals) if vals else 0.0

    @property
    def average_recall(self) -> float:
        vals = [r.recall for r in self._rows().values() if r.recall_defined]
        return sum(vals) / len(vals) if vals else 0.0


def eval_disambiguation(h: Classifier, docs: list[CorpusDoc], lexicon: Lexicon | None = None) -> MetricReport:
    """Per-formula mention and transition precision/recall."""
    lexicon = lexicon if lexicon is not None else default_lexicon()
    rows = {f: MetricRow() for f in BASIC_FORMULAS + TRANSITION_FORMULAS}
    for doc in docs:
        parsed = parse_text(doc.text, lexicon)
        mentions, transitions = detect(parsed, h, lexicon)
        gold = {(si, ti): f for si, ti, f in doc.mentions}
        seen = set()
        for m in mentions:
            gold_label = gold.get(m.site)
            if gold_label == m.label:
                rows[m.label].tp += 1
                seen.add(m.site)
            else:
                rows[m.label].fp += 1
        for site, f in gold.items():
            if site not in seen:
                rows[f].fn += 1
        for f in TRANSITION_FORMULAS:
            g = doc.transitions.count(f)
            p = transitions.count(f)
            rows[f].tp += min(g, p)
            rows[f].fp += p - min(g, p)
            rows[f].fn += g - min(g, p)
    report = MetricReport(per_formula=rows, n_docs=len(docs))
    return report


def _gold_pairs(entry: dict) -> set[tuple[str, str]]:
    pairs = set()
    for slot, value in entry.items():
        if isinstance(value, list):
            pairs.update((slot, v) for v in value)
        else:
            pairs.add((slot, value))
    return pairs


def eval_plans(
    h: Classifier,
    model: MlnModel,
    kb: MesKB,
    world: WorldState,
    docs: list[CorpusDoc],
    mode: str = "exeplan",
    threshold: float = 0.5,
    lexicon: Lexicon | None = None,
) -> MetricReport:
    """Task identification P/R, slot-mapping P/R, executable proportion."""
    lexicon = lexicon if lexicon is not None else default_lexicon()
    task_rows = {t: MetricRow() for t in TASK_TYPES}
    mes_row = MetricRow()
    executable = 0
    for doc in docs:
        result = compile_instruction(
            doc.text, h, model, kb, world, lexicon=lexicon, threshold=threshold, mode=mode
        )
        if isinstance(result, CompileFailure):
            predicted_task = result.partial.task_type if result.partial is not None else None
        else:
            predicted_task = result.task_type
            executable += 1
        if predicted_task == doc.task_type:
            task_rows[doc.task_type].tp += 1
        else:
            task_rows[doc.task_type].fn += 1
            if predicted_task in task_rows:
                task_rows[predicted_task].fp += 1

        # slot mapping measured on the extraction output, identical in both modes
        parsed = parse_text(doc.text, lexicon)
        mentions, _ = detect(parsed, h, lexicon)
        gold = {(si, ti): (f, entry) for (si, ti, f), entry in zip(doc.mentions, doc.mes)}
        matched = set()
        for m in mentions:
            hit = gold.get(m.site)
            extracted = extract_mes(parsed, m, kb)
            machine = _gold_pairs(
                {s: v for s in SLOT_KEYS if (v := getattr(extracted, s)) is not None}
            )
            if hit is not None and hit[0] == m.label:
                matched.add(m.site)
                truth = _gold_pairs(hit[1])
                mes_row.tp += len(machine & truth)
                mes_row.fp += len(machine - truth)
                mes_row.fn += len(truth - machine)
            else:
                mes_row.fp += len(machine)
        for site, (f, entry) in gold.items():
            if site not in matched:
                mes_row.fn += len(_gold_pairs(entry))
    return MetricReport(
        per_task=task_rows,
        mes_mapping=mes_row,
        executable_proportion=executable / len(docs) if docs else 0.0,
        n_docs=len(docs),
    )
