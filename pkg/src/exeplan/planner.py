"""Weighted-formula plan model: grounding, scoring, task and order selection.

Nine propositional formulas describe a plan: three sub-goals plus the six
ordered transitions between distinct sub-goals. Each task type owns a
non-negative weight per formula; a plan's score is the sum of weights of
the formulas it satisfies. The usual exponential normalization shared by
all candidates is dropped since it never changes an argmax.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .jsonio import canonical_dumps
from .mes import Mes

BASIC_FORMULAS = ("CleanSpot", "DrillHole", "InstallScrew")
TRANSITION_FORMULAS = ("tranCD", "tranDC", "tranCI", "tranIC", "tranDI", "tranID")
FORMULAS = BASIC_FORMULAS + TRANSITION_FORMULAS
TASK_TYPES = ("clean", "drill", "install")

TASK_OF_FORMULA = {"CleanSpot": "clean", "DrillHole": "drill", "InstallScrew": "install"}
BASIC_OF_TASK = {task: f for f, task in TASK_OF_FORMULA.items()}
_LETTER = {"CleanSpot": "C", "DrillHole": "D", "InstallScrew": "I"}

MODEL_VERSION = 1


class DuplicateSubGoalError(ValueError):
    pass


class NoCandidatesError(ValueError):
    pass


def transition_between(a: str, b: str) -> str:
    if a not in _LETTER or b not in _LETTER:
        raise ValueError(f"no transition between {a!r} and {b!r}")
    if a == b:
        raise ValueError("self-transitions are not modeled")
    return f"tran{_LETTER[a]}{_LETTER[b]}"


@dataclass
class GroundedPlan:
    steps: list[tuple[str, Mes]]
    transitions: list[str]
    satisfied: frozenset[str]


@dataclass
class MlnModel:
    task_types: tuple[str, ...]
    weights: dict[str, np.ndarray]  # task -> weight per formula, FORMULAS order

    def weight(self, task: str, formula: str) -> float:
        return float(self.weights[task][FORMULAS.index(formula)])


def make_model(weights_by_task: dict[str, dict[str, float]]) -> MlnModel:
    """Build a model from sparse {task: {formula: weight}} input."""
    weights = {}
    for task in TASK_TYPES:
        row = np.zeros(len(FORMULAS))
        for formula, w in weights_by_task.get(task, {}).items():
            row[FORMULAS.index(formula)] = w
        weights[task] = row
    return MlnModel(task_types=TASK_TYPES, weights=weights)


def ground(steps: list[tuple[str, Mes]], transitions: list[str]) -> GroundedPlan:
    """Assemble a grounded plan; each basic sub-goal may appear only once."""
    formulas = [f for f, _ in steps]
    seen = set()
    for f in formulas:
        if f in seen:
            raise DuplicateSubGoalError(f"sub-goal {f} appears more than once")
        seen.add(f)
    satisfied = frozenset(formulas) | frozenset(transitions)
    unknown = satisfied - set(FORMULAS)
    if unknown:
        raise ValueError(f"unknown formulas: {sorted(unknown)}")
    return GroundedPlan(steps=list(steps), transitions=list(transitions), satisfied=satisfied)


def score_plan(model: MlnModel, task: str, plan: GroundedPlan) -> float:
    row = model.weights[task]
    return float(sum(row[FORMULAS.index(f)] for f in plan.satisfied))


def classify_task(model: MlnModel, plan: GroundedPlan) -> tuple[str, dict[str, float]]:
    """Pick the task type whose weights best cover the satisfied formulas."""
    scores = {task: score_plan(model, task, plan) for task in model.task_types}
    best = max(model.task_types, key=lambda t: (scores[t], -model.task_types.index(t)))
    return best, scores


def _derived_transitions(order: tuple[tuple[str, Mes], ...]) -> list[str]:
    return [transition_between(a[0], b[0]) for a, b in zip(order, order[1:])]


def select_plan(model: MlnModel, task: str, candidates: list[tuple[str, Mes]]) -> GroundedPlan:
    """Choose the highest-scoring ordering of all instructed sub-goals.

    Every candidate appears exactly once in the result. Ties fall to the
    ordering that comes first by canonical formula order.
    """
    if not candidates:
        raise NoCandidatesError("no sub-goal candidates to order")
    formulas = [f for f, _ in candidates]
    if len(set(formulas)) != len(formulas):
        raise DuplicateSubGoalError("candidate sub-goals must be unique")
    best = None
    for order in permutations(candidates):
        transitions = _derived_transitions(order)
        plan = ground(list(order), transitions)
        score = score_plan(model, task, plan)
        rank = tuple(FORMULAS.index(f) for f, _ in order)
        key = (-score, rank)
        if best is None or key < best[0]:
            best = (key, plan)
    return best[1]


def calibrate_model(model: MlnModel, target: float = 0.9) -> MlnModel:
    """Rescale all weights by one shared factor.

    The factor makes the smallest own-sub-goal weight across task types
    equal the target, so a minimal single-step plan of any task clears a
    moderate executability threshold. A shared factor never changes any
    argmax over tasks or orderings.
    """
    anchors = []
    for task in model.task_types:
        basic = BASIC_OF_TASK.get(task)
        if basic is not None:
            w = model.weight(task, basic)
            if w > 1e-12:
                anchors.append(w)
    if not anchors:
        return MlnModel(task_types=model.task_types, weights={t: w.copy() for t, w in model.weights.items()})
    scale = target / min(anchors)
    return MlnModel(
        task_types=model.task_types,
        weights={t: w * scale for t, w in model.weights.items()},
    )


def model_to_dict(model: MlnModel) -> dict:
    return {
        "version": MODEL_VERSION,
        "task_types": list(model.task_types),
        "formulas": list(FORMULAS),
        "weights": {task: [float(v) for v in model.weights[task]] for task in model.task_types},
    }


def model_from_dict(obj: dict) -> MlnModel:
    if obj.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported planner model version {obj.get('version')!r}")
    if tuple(obj["formulas"]) != FORMULAS:
        raise ValueError("formula order mismatch")
    weights = {task: np.array(obj["weights"][task], dtype=float) for task in obj["task_types"]}
    for task, row in weights.items():
        if row.shape != (len(FORMULAS),) or (row < 0).any():
            raise ValueError(f"invalid weights for task {task}")
    return MlnModel(task_types=tuple(obj["task_types"]), weights=weights)


def save_planner(model: MlnModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_dumps(model_to_dict(model)))
        fh.write("\n")


def load_planner(path) -> MlnModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
