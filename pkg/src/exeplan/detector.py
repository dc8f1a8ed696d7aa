"""Sub-goal mention detection: one-vs-rest linear SVMs plus self-training."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from .features import FeatureIndex, Site, candidate_sites, extract_features, vectorize
from .frontend import Lexicon, ParsedDocument, default_lexicon
from .jsonio import canonical_dumps
from .svm import SmoState, kkt_residual, solve_binary

OTHER_LABEL = "Other"
CLASS_ORDER = ("CleanSpot", "DrillHole", "InstallScrew", OTHER_LABEL)

KKT_TOL = 1e-4
MODEL_VERSION = 1


class DegenerateClassWarning(UserWarning):
    pass


@dataclass
class Sample:
    """One labeled candidate site; vec may be deferred for raw sites."""

    label: str
    vec: dict[int, float] | None = None
    raw: tuple[ParsedDocument, Site] | None = None
    provenance: str = "seed"


@dataclass
class TrainingSet:
    samples: list[Sample] = dc_field(default_factory=list)
    index: FeatureIndex = dc_field(default_factory=FeatureIndex)

    def labels(self) -> list[str]:
        return [s.label for s in self.samples]


@dataclass
class SubGoalMention:
    site: Site
    label: str
    score: float


@dataclass
class Classifier:
    classes: tuple[str, ...]
    weights: dict[str, np.ndarray]
    bias: dict[str, float]
    C: float
    index: FeatureIndex

    def scores(self, x: dict[int, float]) -> dict[str, float]:
        out = {}
        for c in self.classes:
            w = self.weights[c]
            dim = w.shape[0]
            out[c] = sum(v * w[col] for col, v in x.items() if col < dim) + self.bias[c]
        return out

    def classify(self, x: dict[int, float]) -> tuple[str, dict[str, float]]:
        scores = self.scores(x)
        label = max(self.classes, key=lambda c: (scores[c], -self.classes.index(c)))
        return label, scores


def _canonical_classes(labels) -> tuple[str, ...]:
    present = set(labels)
    ordered = [c for c in CLASS_ORDER if c in present]
    ordered += sorted(present - set(CLASS_ORDER))
    return tuple(ordered)


def _dense_matrix(samples: list[Sample], dim: int) -> np.ndarray:
    X = np.zeros((len(samples), dim))
    for row, s in enumerate(samples):
        for col, v in s.vec.items():
            X[row, col] = v
    return X


def _fit_class(G: np.ndarray, X: np.ndarray, labels: list[str], cls: str, C: float):
    y = np.array([1.0 if lab == cls else -1.0 for lab in labels])
    pos_rows = [i for i, lab in enumerate(labels) if lab == cls]
    if pos_rows and all(not X[i].any() for i in pos_rows):
        warnings.warn(f"class {cls} has only zero vectors", DegenerateClassWarning)
        return np.zeros(X.shape[1]), 0.0
    if len(set(y.tolist())) < 2:
        # nothing to separate against
        return np.zeros(X.shape[1]), 1.0
    state = solve_binary(G, y, C)
    b = state.bias()
    resid = kkt_residual(state, b)
    if resid > KKT_TOL:
        raise RuntimeError(f"svm for {cls} stopped with kkt residual {resid:.2e}")
    w = X.T @ (state.alpha * state.y)
    return w, b


def train_svm(data: TrainingSet, C: float = 1.0) -> Classifier:
    """Train one-vs-rest classifiers on an already-vectorized training set."""
    if not data.samples:
        raise ValueError("empty training set")
    classes = _canonical_classes(data.labels())
    labels = data.labels()
    X = _dense_matrix(data.samples, data.index.dim)
    G = X @ X.T
    weights, bias = {}, {}
    for cls in classes:
        w, b = _fit_class(G, X, labels, cls, C)
        weights[cls], bias[cls] = w, b
    return Classifier(classes=classes, weights=weights, bias=bias, C=C, index=data.index)


def _resolve_vec(item, index: FeatureIndex, lexicon: Lexicon | None, grow: bool) -> dict[int, float]:
    if isinstance(item, dict):
        return item
    doc, site = item
    if lexicon is None:
        raise ValueError("raw (doc, site) inputs need a lexicon")
    fv = extract_features(doc, site, lexicon)
    return vectorize(fv, index, grow=grow)


def self_train(
    seed: TrainingSet,
    unlabeled: list,
    test: list[Sample],
    C: float = 1.0,
    lexicon: Lexicon | None = None,
    confidence_sort: bool = False,
) -> tuple[Classifier, TrainingSet, float]:
    """Grow the training set by labeling unlabeled sites one at a time.

    Each unlabeled item (vector dict or raw (doc, site) pair) is labeled by
    the current model, appended, and the model is re-optimized before the
    next item. Seed samples keep their labels. Returns the final model, the
    grown training set, and accuracy on the held-out test samples.
    """
    if not seed.samples:
        raise ValueError("empty seed set")
    lexicon = lexicon if lexicon is not None else default_lexicon()
    grown = TrainingSet(samples=list(seed.samples), index=seed.index)
    classes = _canonical_classes(seed.labels())
    labels = list(seed.labels())

    total = len(seed.samples) + len(unlabeled)
    dim_cap = max(seed.index.dim, 64)
    X = np.zeros((total, dim_cap))
    for row, s in enumerate(seed.samples):
        for col, v in s.vec.items():
            X[row, col] = v
    n = len(seed.samples)
    G = np.zeros((total, total))
    G[:n, :n] = X[:n, : seed.index.dim] @ X[:n, : seed.index.dim].T

    states: dict[str, SmoState] = {}
    for cls in classes:
        y = np.array([1.0 if lab == cls else -1.0 for lab in labels])
        st = SmoState(C)
        st.alpha, st.y, st.F = np.zeros(n), y, -y.copy()
        st.optimize(G[:n, :n])
        states[cls] = st

    pending = list(unlabeled)
    vec_cache: list[dict[int, float] | None] = [None] * len(pending)

    def ensure_capacity(dim: int):
        nonlocal X, dim_cap
        if dim > dim_cap:
            new_cap = max(dim, dim_cap * 2)
            wider = np.zeros((total, new_cap))
            wider[:, :dim_cap] = X
            X, dim_cap = wider, new_cap

    def predict_from_gram(g: np.ndarray) -> str:
        best, best_score = None, None
        for cls in classes:
            st = states[cls]
            score = float(g[: st.n] @ (st.alpha * st.y)) + st.bias()
            if best_score is None or score > best_score:
                best, best_score = cls, score
        return best

    order = list(range(len(pending)))
    while order:
        if confidence_sort:
            # score every remaining item with the current model, take the surest
            best_k, best_conf = None, None
            for k in order:
                if vec_cache[k] is None:
                    vec_cache[k] = _resolve_vec(pending[k], grown.index, lexicon, grow=True)
                vec = vec_cache[k]
                ensure_capacity(grown.index.dim)
                g = np.zeros(total)
                for col, v in vec.items():
                    g[:n] += v * X[:n, col]
                conf = max(
                    float(g[: states[c].n] @ (states[c].alpha * states[c].y)) + states[c].bias()
                    for c in classes
                )
                if best_conf is None or conf > best_conf:
                    best_k, best_conf = k, conf
            k = best_k
        else:
            k = order[0]
        order.remove(k)

        if vec_cache[k] is None:
            vec_cache[k] = _resolve_vec(pending[k], grown.index, lexicon, grow=True)
        vec = vec_cache[k]
        ensure_capacity(grown.index.dim)
        g = np.zeros(total)
        cols = np.fromiter(vec.keys(), dtype=int, count=len(vec))
        vals = np.fromiter(vec.values(), dtype=float, count=len(vec))
        if len(cols):
            g[:n] = X[:n, cols] @ vals
        g[n] = float(vals @ vals)

        label = predict_from_gram(g)
        grown.samples.append(Sample(label=label, vec=vec, provenance="self"))
        labels.append(label)
        X[n, cols] = vals
        G[n, :n] = g[:n]
        G[:n, n] = g[:n]
        G[n, n] = g[n]
        n += 1
        for cls in classes:
            states[cls].add_sample(G[n - 1, : n - 1], 1.0 if label == cls else -1.0)
            states[cls].optimize(G[:n, :n])

    weights, bias = {}, {}
    dim = grown.index.dim
    for cls in classes:
        st = states[cls]
        b = st.bias()
        resid = kkt_residual(st, b)
        if resid > KKT_TOL:
            raise RuntimeError(f"svm for {cls} stopped with kkt residual {resid:.2e}")
        weights[cls] = X[:n, :dim].T @ (st.alpha * st.y)
        bias[cls] = b
    h = Classifier(classes=classes, weights=weights, bias=bias, C=C, index=grown.index)

    correct = total_test = 0
    for s in test:
        vec = s.vec if s.vec is not None else _resolve_vec(s.raw, grown.index, lexicon, grow=False)
        total_test += 1
        if h.classify(vec)[0] == s.label:
            correct += 1
    precision = correct / total_test if total_test else 0.0
    return h, grown, precision


def detect(doc: ParsedDocument, h: Classifier, lexicon: Lexicon) -> tuple[list[SubGoalMention], list[str]]:
    """Classify every candidate site; keep non-Other mentions plus transitions."""
    from .planner import transition_between

    sites = candidate_sites(doc, lexicon)
    mentions: list[SubGoalMention] = []
    for site in sites:
        fv = extract_features(doc, site, lexicon, sites=sites)
        x = vectorize(fv, h.index, grow=False)
        label, scores = h.classify(x)
        if label != OTHER_LABEL:
            mentions.append(SubGoalMention(site=site, label=label, score=scores[label]))
    transitions = []
    for prev, cur in zip(mentions, mentions[1:]):
        if prev.label != cur.label:
            transitions.append(transition_between(prev.label, cur.label))
    return mentions, transitions


def model_to_dict(h: Classifier) -> dict:
    models = {}
    for cls in h.classes:
        w = h.weights[cls]
        models[cls] = {
            "bias": float(h.bias[cls]),
            "weights": {str(col): float(w[col]) for col in np.nonzero(w)[0]},
        }
    return {
        "version": MODEL_VERSION,
        "classes": list(h.classes),
        "C": h.C,
        "feature_index": h.index.to_list(),
        "models": models,
    }


def model_from_dict(obj: dict) -> Classifier:
    if obj.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {obj.get('version')!r}")
    index = FeatureIndex.from_list(obj["feature_index"])
    classes = tuple(obj["classes"])
    weights, bias = {}, {}
    for cls in classes:
        entry = obj["models"][cls]
        w = np.zeros(index.dim)
        for col, v in entry["weights"].items():
            w[int(col)] = v
        weights[cls] = w
        bias[cls] = float(entry["bias"])
    return Classifier(classes=classes, weights=weights, bias=bias, C=float(obj["C"]), index=index)


def save_model(h: Classifier, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_dumps(model_to_dict(h)))
        fh.write("\n")


def load_model(path) -> Classifier:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
