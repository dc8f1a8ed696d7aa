"""End-to-end compilation of instruction text into an executable plan.

The pipeline parses the text, detects sub-goal mentions, extracts instructed
execution settings, classifies the task, orders the sub-goals, fills missing
settings from the knowledge base, and finally simulates the plan against the
world. A plan is executable only when every step passes its checks under the
simulated state and the plan score clears the threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .detector import Classifier, detect
from .frontend import Lexicon, default_lexicon, parse_text
from .jsonio import canonical_dumps
from .mes import Mes, MesKB, NoFeasibleValueError, WorldState, check_subgoal_executable, complete_mes, extract_mes
from .planner import (
    FORMULAS,
    TASK_OF_FORMULA,
    GroundedPlan,
    MlnModel,
    classify_task,
    ground,
    score_plan,
    select_plan,
)

EXECUTABLE = "EXECUTABLE"
NON_EXECUTABLE = "NON_EXECUTABLE"

STAGE_NO_SUBGOALS = "NO_SUBGOALS"
STAGE_DUPLICATE = "DUPLICATE"
STAGE_MES_INCOMPLETE = "MES_INCOMPLETE"
STAGE_BELOW_THRESHOLD = "BELOW_THRESHOLD"

PLAN_VERSION = 1
DEFAULT_THRESHOLD = 0.5


class RefuseNonExecutableError(RuntimeError):
    pass


@dataclass
class PlanStep:
    formula: str
    mes: Mes


@dataclass
class ExecutablePlan:
    task_type: str
    steps: list[PlanStep]
    transitions: list[str]
    executability: float
    threshold: float
    status: str = NON_EXECUTABLE


@dataclass
class CompileFailure:
    stage: str
    details: list[str]
    message: str = ""
    partial: ExecutablePlan | None = None


@dataclass
class Assessment:
    executable: bool
    executability: float
    failing: list[str]


def assess(plan: ExecutablePlan, world: WorldState, kb: MesKB, threshold: float) -> Assessment:
    """Simulate the plan step by step and gate on the score.

    Steps are checked in order against a progressing copy of the world, so
    a later step may rely on the state an earlier step produced.
    """
    sim = world.copy()
    failing: list[str] = []
    for step in plan.steps:
        ok, items = check_subgoal_executable(step.mes, step.formula, sim)
        failing.extend(f"{step.formula}.{item}" for item in items)
        if step.mes.loc is not None:
            sim.apply(step.formula, step.mes.loc)
    if not plan.executability > threshold:
        failing.append(STAGE_BELOW_THRESHOLD)
    return Assessment(executable=not failing, executability=plan.executability, failing=failing)


def _propagate_locations(extracted: list[Mes]) -> list[Mes]:
    """Give location-less steps the nearest instructed location.

    The instruction names the work spot at least once; steps that do not
    repeat it inherit it rather than inventing one.
    """
    locs = [m.loc for m in extracted]
    if not any(locs):
        return extracted
    out = []
    for i, mes in enumerate(extracted):
        if mes.loc is not None:
            out.append(mes)
            continue
        inherited = next((locs[j] for j in range(i - 1, -1, -1) if locs[j]), None)
        if inherited is None:
            inherited = next((locs[j] for j in range(i + 1, len(locs)) if locs[j]), None)
        out.append(replace(mes, loc=inherited))
    return out


def _refill(steps: list[PlanStep], failing: list[str], kb: MesKB, world: WorldState) -> tuple[list[PlanStep], bool]:
    """Second interpretation pass: swap out failing tools, fill gaps."""
    changed = False
    repaired: list[PlanStep] = []
    for step in steps:
        mes = step.mes
        items = [it for it in failing if it.startswith(step.formula + ".")]
        if any(it.startswith(f"{step.formula}.tool:") for it in items):
            mes = replace(mes, tool=None)
        if not mes.is_complete():
            mes = complete_mes(mes, step.formula, kb, world)
        if mes != step.mes:
            changed = True
        repaired.append(PlanStep(step.formula, mes))
    return repaired, changed


def compile_instruction(
    text: str,
    h: Classifier,
    model: MlnModel,
    kb: MesKB,
    world: WorldState,
    lexicon: Lexicon | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    mode: str = "exeplan",
) -> ExecutablePlan | CompileFailure:
    """Compile one instruction; mode 'literal' skips interpretation entirely.

    Literal mode keeps the instructed order and only the explicitly
    instructed settings; the default mode classifies the task, reorders the
    sub-goals, and fills missing settings, retrying once after a failed
    assessment.
    """
    if mode not in ("literal", "exeplan"):
        raise ValueError(f"unknown mode {mode!r}")
    lexicon = lexicon if lexicon is not None else default_lexicon()
    doc = parse_text(text, lexicon)
    mentions, transitions = detect(doc, h, lexicon)
    if not mentions:
        return CompileFailure(STAGE_NO_SUBGOALS, details=[], message="no sub-goal mentions found")
    formulas = [m.label for m in mentions]
    dupes = sorted({f for f in formulas if formulas.count(f) > 1})
    if dupes:
        return CompileFailure(STAGE_DUPLICATE, details=dupes, message="repeated sub-goal in instruction")
    extracted = [extract_mes(doc, m, kb) for m in mentions]
    observed = ground(list(zip(formulas, extracted)), transitions)

    if mode == "literal":
        task = TASK_OF_FORMULA[formulas[-1]]
        plan = observed
    else:
        task, _ = classify_task(model, observed)
        extracted = _propagate_locations(extracted)
        try:
            completed = [complete_mes(mes, f, kb, world) for f, mes in zip(formulas, extracted)]
        except NoFeasibleValueError as err:
            return CompileFailure(
                STAGE_MES_INCOMPLETE,
                details=[f"{err.formula}.{err.slot}"],
                message="knowledge base offers no feasible value",
            )
        plan = select_plan(model, task, list(zip(formulas, completed)))

    draft = ExecutablePlan(
        task_type=task,
        steps=[PlanStep(f, m) for f, m in plan.steps],
        transitions=list(plan.transitions),
        executability=score_plan(model, task, plan),
        threshold=threshold,
    )
    result = assess(draft, world, kb, threshold)
    if not result.executable and mode == "exeplan":
        try:
            repaired, changed = _refill(draft.steps, result.failing, kb, world)
        except NoFeasibleValueError as err:
            return CompileFailure(
                STAGE_MES_INCOMPLETE,
                details=[f"{err.formula}.{err.slot}"],
                message="knowledge base offers no feasible value",
                partial=draft,
            )
        if changed:
            draft.steps = repaired
            result = assess(draft, world, kb, threshold)

    if result.executable:
        draft.status = EXECUTABLE
        return draft
    draft.status = NON_EXECUTABLE
    if result.failing == [STAGE_BELOW_THRESHOLD]:
        stage = STAGE_BELOW_THRESHOLD
    else:
        stage = STAGE_MES_INCOMPLETE
    return CompileFailure(stage, details=result.failing, message="plan failed assessment", partial=draft)


def plan_to_dict(plan: ExecutablePlan) -> dict:
    return {
        "version": PLAN_VERSION,
        "task_type": plan.task_type,
        "executability": plan.executability,
        "threshold": plan.threshold,
        "steps": [
            {
                "formula": s.formula,
                "location": s.mes.loc,
                "actions": list(s.mes.act or []),
                "tool": s.mes.tool,
                "preconditions": list(s.mes.precon or []),
                "human_requirements": list(s.mes.req or []),
            }
            for s in plan.steps
        ],
        "transitions": list(plan.transitions),
    }


def export_plan(plan: ExecutablePlan) -> str:
    """Serialize an executable plan; refuses anything not executable."""
    if plan.status != EXECUTABLE:
        raise RefuseNonExecutableError("only executable plans may be exported")
    return canonical_dumps(plan_to_dict(plan))


def parse_plan(text: str) -> ExecutablePlan:
    obj = json.loads(text)
    if obj.get("version") != PLAN_VERSION:
        raise ValueError(f"unsupported plan version {obj.get('version')!r}")
    steps = []
    for entry in obj["steps"]:
        if entry["formula"] not in FORMULAS:
            raise ValueError(f"unknown formula {entry['formula']!r}")
        steps.append(
            PlanStep(
                formula=entry["formula"],
                mes=Mes(
                    precon=list(entry["preconditions"]),
                    loc=entry["location"],
                    act=list(entry["actions"]),
                    tool=entry["tool"],
                    req=list(entry["human_requirements"]),
                ),
            )
        )
    return ExecutablePlan(
        task_type=obj["task_type"],
        steps=steps,
        transitions=list(obj["transitions"]),
        executability=float(obj["executability"]),
        threshold=float(obj["threshold"]),
        status=EXECUTABLE,
    )
