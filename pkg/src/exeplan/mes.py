"""Minimal execution settings: per-sub-goal slots, knowledge base, world checks.

Each sub-goal carries five slots: preconditions, location, action sequence,
tool, and human requirements. The knowledge base lists admissible values per
sub-goal plus keyword variants for spotting instructed values in text. A
sub-goal is executable only when every slot is set, every precondition holds
at its location, and its tool is available.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources

from .jsonio import canonical_dumps

SLOTS = ("precon", "loc", "act", "tool", "req")
SPOTS = ("upper-right", "center", "bottom-right")


class SchemaError(ValueError):
    pass


class NoFeasibleValueError(ValueError):
    def __init__(self, slot: str, formula: str = ""):
        self.slot = slot
        self.formula = formula
        super().__init__(f"no feasible value for slot {slot!r}" + (f" of {formula}" if formula else ""))


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")


def _spot_flag(name: str):
    return lambda spot: getattr(spot, name)


def _spot_not(name: str):
    return lambda spot: not getattr(spot, name)


# Precondition semantics over one spot. Dust marks a spot dirty, so a
# "clean after drilling" requirement reduces to the dirt the drill left.
CONDITIONS = {
    "spot dirty": _spot_flag("dirty"),
    "after drilling": _spot_flag("dirty"),
    "point is clean": _spot_not("dirty"),
    "no hole exists": _spot_not("has_hole"),
    "when human gives an order": lambda spot: True,
    "a hole exists": _spot_flag("has_hole"),
    "no screw in hole": _spot_not("has_screw"),
    "no unnecessary tool": _spot_flag("clear_of_tools"),
    "hole size appropriate": _spot_flag("hole_size_ok"),
}


@dataclass
class Mes:
    """Slot values for one sub-goal; None marks an unset slot."""

    precon: list[str] | None = None
    loc: str | None = None
    act: list[str] | None = None
    tool: str | None = None
    req: list[str] | None = None

    def is_complete(self) -> bool:
        return all(getattr(self, s) is not None for s in SLOTS)

    def unset_slots(self) -> list[str]:
        return [s for s in SLOTS if getattr(self, s) is None]


@dataclass
class KbRow:
    precon: list[str]
    loc: list[str]
    act: list[list[str]]
    tool: list[str]
    req: list[str]
    keywords: dict[str, list[str]]


@dataclass
class MesKB:
    rows: dict[str, KbRow]

    def row(self, formula: str) -> KbRow:
        if formula not in self.rows:
            raise KeyError(f"no knowledge-base row for {formula!r}")
        return self.rows[formula]


@dataclass
class SpotState:
    dirty: bool = False
    has_hole: bool = False
    has_screw: bool = False
    clear_of_tools: bool = True
    hole_size_ok: bool = True


@dataclass
class WorldState:
    spots: dict[str, SpotState] = field(default_factory=dict)
    available_tools: list[str] = field(default_factory=list)

    def copy(self) -> "WorldState":
        return WorldState(
            spots={name: replace(spot) for name, spot in self.spots.items()},
            available_tools=list(self.available_tools),
        )

    def apply(self, formula: str, loc: str) -> None:
        """Advance the world by one executed sub-goal."""
        spot = self.spots.get(loc)
        if spot is None:
            return
        if formula == "DrillHole":
            spot.has_hole = True
            spot.dirty = True
        elif formula == "CleanSpot":
            spot.dirty = False
        elif formula == "InstallScrew":
            spot.has_screw = True


def _validate_row(formula: str, row: dict, problems: list[str]) -> None:
    for key in ("precon", "loc", "act", "tool", "req", "keywords"):
        if key not in row:
            problems.append(f"{formula}: missing {key}")
    if problems:
        return
    for slot in ("precon", "loc", "tool", "req"):
        if not isinstance(row[slot], list) or not row[slot]:
            problems.append(f"{formula}: {slot} must be a non-empty list")
    if not isinstance(row["act"], list) or not row["act"] or not all(
        isinstance(step, list) and step for step in row["act"]
    ):
        problems.append(f"{formula}: act must be a non-empty list of non-empty steps")
    for cond in row.get("precon", []):
        if cond not in CONDITIONS:
            problems.append(f"{formula}: unknown precondition {cond!r}")
    for loc in row.get("loc", []):
        if loc not in SPOTS:
            problems.append(f"{formula}: unknown location {loc!r}")
    listed = set(row.get("precon", [])) | set(row.get("loc", [])) | set(row.get("tool", []))
    listed |= set(row.get("req", []))
    for step in row.get("act", []):
        listed |= set(step)
    for value in row.get("keywords", {}):
        if value not in listed:
            problems.append(f"{formula}: keyword entry {value!r} is not a listed value")


def kb_from_dict(obj: dict) -> MesKB:
    problems: list[str] = []
    rows: dict[str, KbRow] = {}
    for formula, row in obj.items():
        row_problems: list[str] = []
        _validate_row(formula, row, row_problems)
        problems.extend(row_problems)
        if row_problems:
            continue
        rows[formula] = KbRow(
            precon=list(row["precon"]),
            loc=list(row["loc"]),
            act=[list(step) for step in row["act"]],
            tool=list(row["tool"]),
            req=list(row["req"]),
            keywords={k: list(v) for k, v in row["keywords"].items()},
        )
    if not rows and not problems:
        problems.append("no formulas")
    if problems:
        raise SchemaError("; ".join(problems))
    return MesKB(rows=rows)


def kb_to_dict(kb: MesKB) -> dict:
    return {
        formula: {
            "precon": list(row.precon),
            "loc": list(row.loc),
            "act": [list(step) for step in row.act],
            "tool": list(row.tool),
            "req": list(row.req),
            "keywords": {k: list(v) for k, v in row.keywords.items()},
        }
        for formula, row in kb.rows.items()
    }


def load_kb(path) -> MesKB:
    with open(path, "r", encoding="utf-8") as fh:
        return kb_from_dict(json.load(fh))


def default_kb() -> MesKB:
    text = resources.files("exeplan.data").joinpath("mes_kb.json").read_text(encoding="utf-8")
    return kb_from_dict(json.loads(text))


def world_from_dict(obj: dict) -> WorldState:
    spots = {}
    for name, flags in obj.get("spots", {}).items():
        if name not in SPOTS:
            raise SchemaError(f"unknown spot {name!r}")
        spots[name] = SpotState(**flags)
    return WorldState(spots=spots, available_tools=list(obj.get("available_tools", [])))


def world_to_dict(world: WorldState) -> dict:
    return {
        "spots": {
            name: {
                "dirty": spot.dirty,
                "has_hole": spot.has_hole,
                "has_screw": spot.has_screw,
                "clear_of_tools": spot.clear_of_tools,
                "hole_size_ok": spot.hole_size_ok,
            }
            for name, spot in world.spots.items()
        },
        "available_tools": list(world.available_tools),
    }


def load_world(path) -> WorldState:
    with open(path, "r", encoding="utf-8") as fh:
        return world_from_dict(json.load(fh))


def default_world() -> WorldState:
    text = resources.files("exeplan.data").joinpath("world.json").read_text(encoding="utf-8")
    return world_from_dict(json.loads(text))


def dumps_kb(kb: MesKB) -> str:
    return canonical_dumps(kb_to_dict(kb))


def _variant_tokens(variant: str) -> list[str]:
    return variant.lower().split()


def extract_mes(doc, mention, kb: MesKB) -> Mes:
    """Scan the mention's sentence for instructed slot values.

    Matching runs over lemma and lowercased surface n-grams, skipping the
    trigger token itself. The first listed value wins for single-valued
    slots; precondition and requirement matches accumulate.
    """
    si, ti = mention.site
    sent = doc.sentences[si]
    row = kb.row(mention.label)
    tokens = [t for t in sent.tokens if t.index != ti]
    lemmas = [t.lemma for t in tokens]
    surfaces = [t.surface.lower() for t in tokens]

    def matches(variant: str) -> bool:
        want = _variant_tokens(variant)
        k = len(want)
        if k == 0 or k > len(tokens):
            return False
        for start in range(len(tokens) - k + 1):
            # n-gram must be contiguous in the original sentence
            idxs = [tokens[start + off].index for off in range(k)]
            if idxs != list(range(idxs[0], idxs[0] + k)):
                continue
            if lemmas[start : start + k] == want or surfaces[start : start + k] == want:
                return True
        return False

    def value_instructed(value: str) -> bool:
        return any(matches(v) for v in row.keywords.get(value, []))

    mes = Mes()
    for value in row.loc:
        if value_instructed(value):
            mes.loc = value
            break
    for value in row.tool:
        if value_instructed(value):
            mes.tool = value
            break
    matched_precon = [value for value in row.precon if value_instructed(value)]
    if matched_precon:
        mes.precon = matched_precon
    matched_req = [value for value in row.req if value_instructed(value)]
    if matched_req:
        mes.req = matched_req
    for step_idx, step in enumerate(row.act):
        hit = next((syn for syn in step if value_instructed(syn)), None)
        if hit is not None:
            mes.act = [
                (hit if k == step_idx else other_step[0]) for k, other_step in enumerate(row.act)
            ]
            break
    return mes


def complete_mes(partial: Mes, formula: str, kb: MesKB, world: WorldState) -> Mes:
    """Fill unset slots from the knowledge base; locations are never invented.

    Preconditions take the first listed condition, the action sequence takes
    the first synonym of each step, the tool takes the first available value,
    and requirements take the full listed set.
    """
    row = kb.row(formula)
    filled = replace(partial)
    if filled.precon is None:
        filled.precon = [row.precon[0]]
    if filled.act is None:
        filled.act = [step[0] for step in row.act]
    if filled.tool is None:
        tool = next((t for t in row.tool if t in world.available_tools), None)
        if tool is None:
            raise NoFeasibleValueError("tool", formula)
        filled.tool = tool
    if filled.req is None:
        filled.req = list(row.req)
    return filled


def check_subgoal_executable(mes: Mes, formula: str, world: WorldState) -> tuple[int, list[str]]:
    """Conjunctive executability test for one sub-goal.

    Returns (1, []) when the settings are complete, every precondition holds
    at the location, and the tool is available; otherwise (0, failed items).
    """
    failed = list(mes.unset_slots())
    if failed:
        return 0, failed
    spot = world.spots.get(mes.loc)
    if spot is None:
        return 0, ["loc"]
    for cond in mes.precon:
        holds = CONDITIONS.get(cond)
        if holds is None or not holds(spot):
            failed.append(f"precon:{_slug(cond)}")
    if mes.tool not in world.available_tools:
        failed.append(f"tool:{_slug(mes.tool)}")
    return (1, []) if not failed else (0, failed)
