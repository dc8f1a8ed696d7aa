"""Task-centered feature space around candidate sub-goal keywords."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from .frontend import Lexicon, ParsedDocument

Site = tuple[int, int]  # (sentence index, token index)

# Fields holding a single value; the rest hold bags of values.
ATOMIC_FIELDS = ("w", "pos", "KW", "preSubg", "nextSubg", "preN", "nextN", "preW", "nextW")
BAG_FIELDS = ("wd", "posd", "KWD", "posD", "NND", "context")

NONE_VALUE = "NONE"


@dataclass
class FeatureVector:
    """Features of one keyword site.

    w/pos: keyword lemma and tag. wd: relations touching the keyword.
    posd: tag-typed relation patterns of the whole sentence. KW: the
    trigger keyword itself. preSubg/nextSubg: neighboring candidate
    keywords in the document. preN/nextN and preW/nextW: nearby nouns and
    adjacent words. KWD/posD: keyword-and-dependent pairs with their tag
    patterns. NND: noun-noun dependency pairs. context: task vocabulary
    in the same sentence.
    """

    w: str | None = None
    pos: str | None = None
    wd: list[str] = field(default_factory=list)
    posd: list[str] = field(default_factory=list)
    KW: str | None = None
    preSubg: str | None = None
    nextSubg: str | None = None
    preN: str | None = None
    nextN: str | None = None
    preW: str | None = None
    nextW: str | None = None
    KWD: list[str] = field(default_factory=list)
    posD: list[str] = field(default_factory=list)
    NND: list[str] = field(default_factory=list)
    context: list[str] = field(default_factory=list)


FEATURE_FIELD_NAMES = tuple(f.name for f in fields(FeatureVector))


class FeatureIndex:
    """Append-only mapping from feature keys to column ids."""

    def __init__(self, keys: list[str] | None = None):
        self.keys: list[str] = list(keys or [])
        self._pos: dict[str, int] = {k: i for i, k in enumerate(self.keys)}
        if len(self._pos) != len(self.keys):
            raise ValueError("duplicate feature keys")

    @property
    def dim(self) -> int:
        return len(self.keys)

    def column(self, key: str, grow: bool) -> int | None:
        col = self._pos.get(key)
        if col is None and grow:
            col = len(self.keys)
            self.keys.append(key)
            self._pos[key] = col
        return col

    def to_list(self) -> list[str]:
        return list(self.keys)

    @classmethod
    def from_list(cls, keys: list[str]) -> "FeatureIndex":
        return cls(keys)


def candidate_sites(doc: ParsedDocument, lexicon: Lexicon) -> list[Site]:
    """All tokens whose lemma is a trigger keyword, in document order."""
    triggers = lexicon.trigger_lemmas
    sites: list[Site] = []
    for si, sent in enumerate(doc.sentences):
        for tok in sent.tokens:
            if tok.lemma in triggers:
                sites.append((si, tok.index))
    return sites


def extract_features(
    doc: ParsedDocument,
    site: Site,
    lexicon: Lexicon,
    sites: list[Site] | None = None,
) -> FeatureVector:
    """Build the feature vector for one candidate site."""
    si, ti = site
    sent = doc.sentences[si]
    tok = sent.tokens[ti]
    if sites is None:
        sites = candidate_sites(doc, lexicon)

    def site_lemma(s: Site) -> str:
        return doc.sentences[s[0]].tokens[s[1]].lemma

    pos_in_sites = sites.index(site) if site in sites else None
    pre_subg = next_subg = NONE_VALUE
    if pos_in_sites is not None:
        if pos_in_sites > 0:
            pre_subg = site_lemma(sites[pos_in_sites - 1])
        if pos_in_sites + 1 < len(sites):
            next_subg = site_lemma(sites[pos_in_sites + 1])

    nouns = [t.index for t in sent.tokens if t.pos == "NN"]
    pre_n = next((sent.tokens[n].lemma for n in reversed(nouns) if n < ti), NONE_VALUE)
    next_n = next((sent.tokens[n].lemma for n in nouns if n > ti), NONE_VALUE)
    pre_w = sent.tokens[ti - 1].lemma if ti > 0 else NONE_VALUE
    next_w = sent.tokens[ti + 1].lemma if ti + 1 < len(sent.tokens) else NONE_VALUE

    def tag_of(idx: int | None) -> str:
        return "ROOT" if idx is None else sent.tokens[idx].pos

    wd = [e.relation for e in sent.edges if e.head == ti or e.dependent == ti]
    posd = [f"{e.relation}({tag_of(e.head)}+{tag_of(e.dependent)})" for e in sent.edges]
    kwd, pos_d = [], []
    for e in sent.edges:
        if e.head == ti:
            dep = sent.tokens[e.dependent]
            kwd.append(f"{tok.lemma}+{dep.lemma}")
            pos_d.append(f"{e.relation}({tok.pos}+{dep.pos})")

    content = lexicon.content_lemmas
    nnd = []
    for e in sent.edges:
        if e.head is None:
            continue
        h, d = sent.tokens[e.head], sent.tokens[e.dependent]
        if h.pos == "NN" and d.pos == "NN" and h.lemma in content and d.lemma in content:
            nnd.append(f"{h.lemma}+{d.lemma}")

    context = sorted({t.lemma for t in sent.tokens if t.index != ti and t.lemma in content})

    return FeatureVector(
        w=tok.lemma,
        pos=tok.pos,
        wd=wd,
        posd=posd,
        KW=tok.lemma,
        preSubg=pre_subg,
        nextSubg=next_subg,
        preN=pre_n,
        nextN=next_n,
        preW=pre_w,
        nextW=next_w,
        KWD=kwd,
        posD=pos_d,
        NND=nnd,
        context=context,
    )


def vectorize(fv: FeatureVector, index: FeatureIndex, grow: bool) -> dict[int, float]:
    """One-hot encode a feature vector against the index.

    With grow=True unseen values get new columns; with grow=False they are
    dropped. Unset atomic fields (None) contribute nothing; explicit NONE
    sentinels do.
    """
    vec: dict[int, float] = {}
    for name in ATOMIC_FIELDS:
        value = getattr(fv, name)
        if value is None:
            continue
        col = index.column(f"{name}={value}", grow)
        if col is not None:
            vec[col] = 1.0
    for name in BAG_FIELDS:
        for value in getattr(fv, name):
            col = index.column(f"{name}={value}", grow)
            if col is not None:
                vec[col] = 1.0
    return vec
