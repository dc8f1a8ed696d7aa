"""Rule-based language frontend: sentence split, tagging, dependency rules.

The frontend is intentionally small. A domain lexicon supplies lemmas and
part-of-speech tags for the closed task vocabulary, everything else falls
back to suffix rules, and a handful of deterministic attachment rules
produce the dependency edges the feature extractor needs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

POS_TAGS = {"VB", "NN", "DT", "JJ", "IN", "RB", "PRP", "CD", "OTHER"}

_SENT_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")
_WORD_RE = re.compile(r"[A-Za-z][A-Za-z']*|[0-9]+")


class NoVerbError(ValueError):
    """Raised when a sentence contains no verb and cannot anchor a parse."""


@dataclass(frozen=True)
class Token:
    index: int
    surface: str
    lemma: str
    pos: str


@dataclass(frozen=True)
class DependencyEdge:
    """One labeled edge. head is a token index, or None for the virtual root."""

    relation: str
    head: int | None
    dependent: int


@dataclass
class Sentence:
    raw: str
    tokens: list[Token]
    edges: list[DependencyEdge]


@dataclass
class ParsedDocument:
    sentences: list[Sentence]


@dataclass
class Lexicon:
    """Surface-variant table mapping word forms to (head lemma, pos).

    Heads tagged VB form the trigger class: tokens with those lemmas become
    candidate sub-goal sites. Heads tagged VB or NN form the task-related
    vocabulary used by context features.
    """

    entries: list[tuple[str, str, tuple[str, ...]]] = field(default_factory=list)
    variant_map: dict[str, tuple[str, str]] = field(default_factory=dict)

    @property
    def trigger_lemmas(self) -> frozenset[str]:
        return frozenset(h for h, p, _ in self.entries if p == "VB")

    @property
    def content_lemmas(self) -> frozenset[str]:
        return frozenset(h for h, p, _ in self.entries if p in ("VB", "NN"))

    def lookup(self, surface: str) -> tuple[str, str] | None:
        return self.variant_map.get(surface.lower())


def load_lexicon(path_or_lines) -> Lexicon:
    """Load a tab-separated lexicon file: head<TAB>pos<TAB>v1,v2,...

    Lines starting with '#' and blank lines are skipped. Each surface
    variant may map to exactly one head form.
    """
    if isinstance(path_or_lines, (str, bytes)) or hasattr(path_or_lines, "__fspath__"):
        with open(path_or_lines, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    else:
        lines = [str(ln) for ln in path_or_lines]

    lex = Lexicon()
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"lexicon line {lineno}: expected 3 tab-separated fields")
        head, pos, variants_col = (p.strip() for p in parts)
        if pos not in POS_TAGS:
            raise ValueError(f"lexicon line {lineno}: unknown pos tag {pos!r}")
        variants = tuple(v.strip().lower() for v in variants_col.split(",") if v.strip())
        head = head.lower()
        if head not in variants:
            variants = (head,) + variants
        for v in variants:
            prior = lex.variant_map.get(v)
            if prior is not None and prior != (head, pos):
                raise ValueError(f"lexicon line {lineno}: variant {v!r} already mapped to {prior}")
            lex.variant_map[v] = (head, pos)
        lex.entries.append((head, pos, variants))
    return lex


def default_lexicon() -> Lexicon:
    """Lexicon shipped with the package."""
    text = resources.files("exeplan.data").joinpath("lexicon.tsv").read_text(encoding="utf-8")
    return load_lexicon(text.splitlines())


def split_sentences(text: str) -> list[str]:
    """Split on sentence-final punctuation followed by whitespace."""
    text = text.strip()
    if not text:
        return []
    return [part for part in _SENT_SPLIT_RE.split(text) if part]


def tokenize_and_tag(raw: str, lexicon: Lexicon) -> list[Token]:
    """Tokenize one sentence and assign (lemma, pos) per token.

    Punctuation is dropped. Unknown words keep their lowercased surface as
    lemma; -ing/-s forms of known verb stems are tagged VB, the rest NN.
    """
    vb_heads = {h for h, p, _ in lexicon.entries if p == "VB"}
    tokens: list[Token] = []
    for i, surface in enumerate(_WORD_RE.findall(raw)):
        low = surface.lower()
        hit = lexicon.lookup(low)
        if hit is not None:
            lemma, pos = hit
        elif low.endswith("ing") and low[:-3] in vb_heads:
            lemma, pos = low[:-3], "VB"
        elif low.endswith("s") and low[:-1] in vb_heads:
            lemma, pos = low[:-1], "VB"
        else:
            lemma, pos = low, "NN"
        tokens.append(Token(index=i, surface=surface, lemma=lemma, pos=pos))
    return tokens


def parse_dependencies(tokens: list[Token]) -> list[DependencyEdge]:
    """Attach tokens with the fixed rule set; raises NoVerbError without a VB.

    Rules, applied in order: the first VB is the root; each IN marks the
    nearest following noun (case); each VB takes the first following
    unclaimed non-case noun as dobj; DT/JJ attach to the nearest following
    noun (det/amod); each case-marked noun hangs off the nearest noun left
    of its preposition, or the root verb (nmod).
    """
    verb_idx = [t.index for t in tokens if t.pos == "VB"]
    if not verb_idx:
        raise NoVerbError("sentence has no verb")
    root = verb_idx[0]
    edges = [DependencyEdge("root", None, root)]

    nouns = [t.index for t in tokens if t.pos == "NN"]
    case_pairs: list[tuple[int, int]] = []  # (preposition index, marked noun index)
    case_marked: set[int] = set()
    for t in tokens:
        if t.pos != "IN":
            continue
        nxt = next((n for n in nouns if n > t.index and n not in case_marked), None)
        if nxt is not None:
            case_pairs.append((t.index, nxt))
            case_marked.add(nxt)
    for prep, noun in case_pairs:
        edges.append(DependencyEdge("case", noun, prep))

    claimed: set[int] = set()
    for v in verb_idx:
        obj = next((n for n in nouns if n > v and n not in case_marked and n not in claimed), None)
        if obj is not None:
            claimed.add(obj)
            edges.append(DependencyEdge("dobj", v, obj))

    for t in tokens:
        if t.pos not in ("DT", "JJ"):
            continue
        nxt = next((n for n in nouns if n > t.index), None)
        if nxt is not None:
            rel = "det" if t.pos == "DT" else "amod"
            edges.append(DependencyEdge(rel, nxt, t.index))

    for prep, noun in case_pairs:
        prev = next((n for n in reversed(nouns) if n < prep), None)
        head = prev if prev is not None else root
        edges.append(DependencyEdge("nmod", head, noun))

    return edges


def parse_text(text: str, lexicon: Lexicon) -> ParsedDocument:
    """Full frontend: split, tag, and parse each sentence of a document.

    Sentences without a verb are kept with an empty edge list so they can
    still contribute context words.
    """
    sentences = []
    for raw in split_sentences(text):
        tokens = tokenize_and_tag(raw, lexicon)
        try:
            edges = parse_dependencies(tokens)
        except NoVerbError:
            edges = []
        sentences.append(Sentence(raw=raw, tokens=tokens, edges=edges))
    return ParsedDocument(sentences=sentences)
