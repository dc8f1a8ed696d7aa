"""Execution-specification slots: knowledge base, extraction, completion, checks."""

import json

import pytest

from exeplan.detector import detect
from exeplan.frontend import parse_text
from exeplan.jsonio import read_json
from exeplan.mes import (
    SLOTS,
    SPOTS,
    Mes,
    NoFeasibleValueError,
    SchemaError,
    WorldState,
    check_subgoal_executable,
    complete_mes,
    default_kb,
    default_world,
    dumps_kb,
    extract_mes,
    kb_from_dict,
    kb_to_dict,
    load_kb,
    world_from_dict,
    world_to_dict,
)

GOLDEN_ROWS = {
    "CleanSpot": {
        "precon": ["spot dirty", "after drilling"],
        "loc": ["upper-right", "center", "bottom-right"],
        "act": [["place"], ["sweep", "clean", "rub"], ["left"]],
        "tool": ["brush", "air hose", "cloth", "rag", "broom", "sweeper"],
        "req": ["sweep slowly", "keep the unneeded tools away", "sweep precisely"],
    },
    "DrillHole": {
        "precon": ["point is clean", "no hole exists", "when human gives an order"],
        "loc": ["upper-right", "center", "bottom-right"],
        "act": [["place"], ["drill"], ["left"]],
        "tool": ["driller", "drilling arm", "drilling machine"],
        "req": ["slowly", "keep away from unneeded tools", "precisely"],
    },
    "InstallScrew": {
        "precon": ["a hole exists", "no screw in hole", "no unnecessary tool", "hole size appropriate"],
        "loc": ["upper-right", "center", "bottom-right"],
        "act": [["take screw"], ["place"], ["install"], ["left"]],
        "tool": ["screwdriver", "screw", "install machine"],
        "req": ["firmly", "slowly", "make surface clean"],
    },
}


def mention_for(doc, label, detector, lexicon):
    mentions, _ = detect(doc, detector, lexicon)
    picked = [m for m in mentions if m.label == label]
    assert len(picked) == 1
    return picked[0]


def test_default_kb_golden_values(kb):
    assert set(kb.rows) == set(GOLDEN_ROWS)
    for formula, expected in GOLDEN_ROWS.items():
        row = kb.rows[formula]
        assert row.precon == expected["precon"], formula
        assert row.loc == expected["loc"], formula
        assert row.act == expected["act"], formula
        assert row.tool == expected["tool"], formula
        assert row.req == expected["req"], formula


def test_every_golden_value_appears_in_packaged_file():
    from importlib import resources

    raw = resources.files("exeplan.data").joinpath("mes_kb.json").read_text(encoding="utf-8")
    for expected in GOLDEN_ROWS.values():
        strings = expected["precon"] + expected["loc"] + expected["tool"] + expected["req"]
        strings += [step for group in expected["act"] for step in group]
        for value in strings:
            assert json.dumps(value) in raw or value in raw, value


def test_default_world_spots_and_tools():
    world = default_world()
    assert set(world.spots) == set(SPOTS)
    assert world.spots["upper-right"].dirty
    assert world.spots["bottom-right"].has_hole
    fresh = world.spots["center"]
    assert not (fresh.dirty or fresh.has_hole or fresh.has_screw)
    for tool in ("brush", "driller", "screwdriver"):
        assert tool in world.available_tools


def test_extract_tool_only(detector, lexicon, kb):
    doc = parse_text("Then clean the dust with the brush.", lexicon)
    mes = extract_mes(doc, mention_for(doc, "CleanSpot", detector, lexicon), kb)
    assert mes == Mes(precon=None, loc=None, act=None, tool="brush", req=None)


def test_extract_location_only(detector, lexicon, kb):
    doc = parse_text("At the bottom-right corner drill a hole.", lexicon)
    mes = extract_mes(doc, mention_for(doc, "DrillHole", detector, lexicon), kb)
    assert mes == Mes(precon=None, loc="bottom-right", act=None, tool=None, req=None)


def test_extract_bare_mention_sets_nothing(detector, lexicon, kb):
    doc = parse_text("Please install a screw.", lexicon)
    mes = extract_mes(doc, mention_for(doc, "InstallScrew", detector, lexicon), kb)
    assert mes == Mes()
    assert mes.unset_slots() == [s for s in SLOTS]


def test_extract_multiword_and_precon_variants(detector, lexicon, kb):
    doc = parse_text("Clean the dust because it is dirty and keep the unneeded tools away.", lexicon)
    mes = extract_mes(doc, mention_for(doc, "CleanSpot", detector, lexicon), kb)
    assert mes.precon == ["spot dirty"]
    assert mes.req == ["keep the unneeded tools away"]


def test_complete_fills_from_first_listed(kb, world):
    full = complete_mes(Mes(loc="center"), "CleanSpot", kb, world)
    assert full == Mes(
        precon=["spot dirty"],
        loc="center",
        act=["place", "sweep", "left"],
        tool="brush",
        req=["sweep slowly", "keep the unneeded tools away", "sweep precisely"],
    )


def test_complete_keeps_instructed_values(kb, world):
    partial = Mes(loc="upper-right", tool="cloth", precon=["after drilling"])
    full = complete_mes(partial, "CleanSpot", kb, world)
    assert full.tool == "cloth"
    assert full.precon == ["after drilling"]
    assert full.loc == "upper-right"
    assert full.act == ["place", "sweep", "left"]


def test_complete_skips_unavailable_tools(kb, world):
    world.available_tools = ["drilling machine", "brush"]
    full = complete_mes(Mes(loc="center"), "DrillHole", kb, world)
    assert full.tool == "drilling machine"


def test_complete_raises_when_no_tool_feasible(kb, world):
    world.available_tools = ["brush"]
    with pytest.raises(NoFeasibleValueError) as err:
        complete_mes(Mes(loc="center"), "InstallScrew", kb, world)
    assert err.value.slot == "tool"
    assert err.value.formula == "InstallScrew"


def test_complete_never_invents_a_location(kb, world):
    full = complete_mes(Mes(), "DrillHole", kb, world)
    assert full.loc is None
    assert full.unset_slots() == ["loc"]


def test_complete_is_idempotent(kb, world):
    once = complete_mes(Mes(loc="center"), "InstallScrew", kb, world)
    assert complete_mes(once, "InstallScrew", kb, world) == once


def test_check_passes_on_fresh_spot(kb, world):
    mes = Mes(
        precon=["point is clean", "no hole exists"],
        loc="center",
        act=["place", "drill", "left"],
        tool="driller",
        req=["slowly"],
    )
    assert check_subgoal_executable(mes, "DrillHole", world) == (1, [])


def test_check_reports_failed_precondition(kb, world):
    world.spots["center"].has_hole = True
    mes = Mes(
        precon=["point is clean", "no hole exists"],
        loc="center",
        act=["place", "drill", "left"],
        tool="driller",
        req=["slowly"],
    )
    ok, failed = check_subgoal_executable(mes, "DrillHole", world)
    assert (ok, failed) == (0, ["precon:no-hole-exists"])


def test_check_reports_unset_slots_by_name(kb, world):
    full = complete_mes(Mes(), "CleanSpot", kb, world)
    ok, failed = check_subgoal_executable(full, "CleanSpot", world)
    assert (ok, failed) == (0, ["loc"])


def test_check_reports_missing_tool(kb, world):
    world.available_tools = []
    mes = complete_mes(Mes(loc="upper-right"), "CleanSpot", kb, default_world())
    ok, failed = check_subgoal_executable(mes, "CleanSpot", world)
    assert (ok, failed) == (0, ["tool:brush"])


def test_world_progression():
    world = default_world()
    world.apply("DrillHole", "center")
    assert world.spots["center"].has_hole
    assert world.spots["center"].dirty
    world.apply("CleanSpot", "center")
    assert not world.spots["center"].dirty
    world.apply("InstallScrew", "center")
    assert world.spots["center"].has_screw


def test_world_copy_is_independent():
    world = default_world()
    twin = world.copy()
    twin.apply("DrillHole", "center")
    assert not world.spots["center"].has_hole


def test_kb_schema_rejects_bad_input(kb):
    with pytest.raises(SchemaError):
        kb_from_dict({})
    good = kb_to_dict(kb)
    broken = json.loads(json.dumps(good))
    del broken["CleanSpot"]["act"]
    with pytest.raises(SchemaError):
        kb_from_dict(broken)
    broken = json.loads(json.dumps(good))
    broken["DrillHole"]["tool"] = []
    with pytest.raises(SchemaError):
        kb_from_dict(broken)
    broken = json.loads(json.dumps(good))
    broken["DrillHole"]["keywords"]["laser"] = ["laser"]
    with pytest.raises(SchemaError):
        kb_from_dict(broken)


def test_kb_file_round_trip(kb, tmp_path):
    from importlib import resources

    packaged = resources.files("exeplan.data").joinpath("mes_kb.json").read_text(encoding="utf-8")
    assert dumps_kb(kb) == packaged
    p = tmp_path / "kb.json"
    p.write_text(packaged, encoding="utf-8")
    assert dumps_kb(load_kb(p)) == packaged


def test_world_dict_round_trip():
    world = default_world()
    obj = world_to_dict(world)
    assert world_to_dict(world_from_dict(obj)) == obj
