"""Command-line surface: train models, compile instructions, evaluate, REPL."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field

from .corpus import (
    CorpusConfig,
    build_detection_split,
    eval_disambiguation,
    eval_plans,
    generate_corpus,
    load_corpus,
    plan_examples_from_corpus,
    save_corpus,
)
from .detector import Classifier, load_model, save_model, self_train
from .frontend import default_lexicon
from .jsonio import canonical_dumps
from .mes import MesKB, WorldState, default_kb, default_world, load_kb, load_world
from .pipeline import (
    EXECUTABLE,
    CompileFailure,
    ExecutablePlan,
    compile_instruction,
    export_plan,
    plan_to_dict,
)
from .planner import MlnModel, calibrate_model, load_planner, save_planner
from .ssvm import train_ssvm

PROG = "exeplan"


def _data_dir() -> str:
    return os.environ.get("EXEPLAN_DATA_DIR", ".")


def _default_path(name: str) -> str:
    return os.path.join(_data_dir(), name)


def _load_assets(args) -> tuple[Classifier, MlnModel, MesKB, WorldState]:
    h = load_model(args.model)
    model = load_planner(args.planner)
    kb = load_kb(args.kb) if args.kb else default_kb()
    world = load_world(args.world) if args.world else default_world()
    return h, model, kb, world


def _add_asset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default=_default_path("model.json"), help="detector model file")
    p.add_argument("--planner", default=_default_path("planner.json"), help="planner weights file")
    p.add_argument("--kb", default=None, help="knowledge base file (default: packaged)")
    p.add_argument("--world", default=None, help="world state file (default: packaged)")
    p.add_argument("--threshold", type=float, default=0.5, help="executability threshold")
    p.add_argument("--mode", choices=("literal", "exeplan"), default="exeplan")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="instruction-to-plan compiler")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate a synthetic instruction corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n-docs", type=int, default=600)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--distractor-rate", type=float, default=0.25)
    p.add_argument("--omission-rate", type=float, default=0.25)

    p = sub.add_parser("train-detector", help="train the sub-goal detector by self-training")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed-size", type=int, default=50)
    p.add_argument("--test-size", type=int, default=50)
    p.add_argument("--c", type=float, default=1.0)

    p = sub.add_parser("train-planner", help="learn task weights from gold plans")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=1e-3)

    p = sub.add_parser("compile", help="compile one instruction into a plan")
    p.add_argument("--text", required=True)
    _add_asset_flags(p)

    p = sub.add_parser("eval", help="evaluate detection and planning on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--json", action="store_true")
    _add_asset_flags(p)

    p = sub.add_parser("repl", help="interactive instructing session")
    p.add_argument("--json", action="store_true")
    _add_asset_flags(p)
    return parser


def _render_plan(plan: ExecutablePlan) -> str:
    lines = [
        f"task: {plan.task_type}  executability: {plan.executability:.3f}"
        f"  threshold: {plan.threshold:.2f}  status: {plan.status}"
    ]
    for i, step in enumerate(plan.steps, start=1):
        mes = step.mes
        acts = ",".join(mes.act or [])
        reqs = ",".join(mes.req or [])
        pres = ",".join(mes.precon or [])
        lines.append(
            f"  {i}. {step.formula}  loc={mes.loc}  tool={mes.tool}"
            f"  act=[{acts}]  precon=[{pres}]  req=[{reqs}]"
        )
    if plan.transitions:
        lines.append("  transitions: " + ", ".join(plan.transitions))
    return "\n".join(lines)


def _render_failure(failure: CompileFailure) -> str:
    detail = ", ".join(failure.details) if failure.details else "none"
    return f"FAILED {failure.stage}: {failure.message} (items: {detail})"


@dataclass
class SessionState:
    h: Classifier
    model: MlnModel
    kb: MesKB
    world: WorldState
    threshold: float = 0.5
    mode: str = "exeplan"
    as_json: bool = False
    transcript: list[tuple[str, str]] = field(default_factory=list)
    lexicon: object = None

    def __post_init__(self):
        if self.lexicon is None:
            self.lexicon = default_lexicon()


def repl_turn(state: SessionState, line: str) -> tuple[SessionState, str]:
    """Compile one instruction against the live world; apply it if executable."""
    line = line.strip()
    if not line:
        return state, ""
    result = compile_instruction(
        line,
        state.h,
        state.model,
        state.kb,
        state.world,
        lexicon=state.lexicon,
        threshold=state.threshold,
        mode=state.mode,
    )
    if isinstance(result, CompileFailure):
        rendered = _render_failure(result)
    else:
        for step in result.steps:
            if step.mes.loc is not None:
                state.world.apply(step.formula, step.mes.loc)
        rendered = canonical_dumps(plan_to_dict(result)) if state.as_json else _render_plan(result)
    state.transcript.append((line, rendered))
    return state, rendered


def _cmd_gen_corpus(args) -> int:
    config = CorpusConfig(
        n_docs=args.n_docs,
        seed=args.seed,
        distractor_rate=args.distractor_rate,
        omission_rate=args.omission_rate,
    )
    docs = generate_corpus(config)
    save_corpus(docs, args.out)
    print(f"wrote {len(docs)} docs to {args.out}")
    return 0


def _cmd_train_detector(args) -> int:
    docs = load_corpus(args.corpus)
    lexicon = default_lexicon()
    seed_set, unlabeled, test = build_detection_split(
        docs, lexicon, n_seed=args.seed_size, n_test=args.test_size
    )
    h, grown, precision = self_train(seed_set, unlabeled, test, C=args.c, lexicon=lexicon)
    save_model(h, args.out)
    print(
        f"trained on {len(seed_set.samples)} seed + {len(unlabeled)} unlabeled sites; "
        f"test precision {precision:.3f}; wrote {args.out}"
    )
    return 0


def _cmd_train_planner(args) -> int:
    docs = load_corpus(args.corpus)
    examples = plan_examples_from_corpus(docs)
    model, state = train_ssvm(examples, C=args.c, eps=args.eps)
    model = calibrate_model(model)
    save_planner(model, args.out)
    print(
        f"trained on {len(examples)} plan examples in {state.iterations} iterations; "
        f"wrote {args.out}"
    )
    return 0


def _cmd_compile(args) -> int:
    h, model, kb, world = _load_assets(args)
    result = compile_instruction(
        args.text, h, model, kb, world, threshold=args.threshold, mode=args.mode
    )
    if isinstance(result, CompileFailure):
        print(_render_failure(result))
        return 1
    print(export_plan(result))
    return 0


def _cmd_eval(args) -> int:
    h, model, kb, world = _load_assets(args)
    docs = load_corpus(args.corpus)
    detection = eval_disambiguation(h, docs)
    plans = eval_plans(h, model, kb, world, docs, mode=args.mode, threshold=args.threshold)
    if args.json:
        payload = {
            "detection": {
                "per_formula": {
                    f: {"tp": r.tp, "fp": r.fp, "fn": r.fn, "precision": r.precision, "recall": r.recall}
                    for f, r in detection.per_formula.items()
                },
                "average_precision": detection.average_precision,
                "average_recall": detection.average_recall,
            },
            "plans": {
                "per_task": {
                    t: {"tp": r.tp, "fp": r.fp, "fn": r.fn, "precision": r.precision, "recall": r.recall}
                    for t, r in plans.per_task.items()
                },
                "average_precision": plans.average_precision,
                "average_recall": plans.average_recall,
                "mes_mapping": {
                    "tp": plans.mes_mapping.tp,
                    "fp": plans.mes_mapping.fp,
                    "fn": plans.mes_mapping.fn,
                    "precision": plans.mes_mapping.precision,
                    "recall": plans.mes_mapping.recall,
                },
                "executable_proportion": plans.executable_proportion,
            },
        }
        print(canonical_dumps(payload))
        return 0
    for f, row in detection.per_formula.items():
        note = "" if row.precision_defined and row.recall_defined else "  [no gold/predicted items]"
        print(
            f"formula {f:<13} precision {row.precision:.3f} recall {row.recall:.3f}"
            f" (tp {row.tp} fp {row.fp} fn {row.fn}){note}"
        )
    print(
        f"detection average precision {detection.average_precision:.3f}"
        f" recall {detection.average_recall:.3f}"
    )
    for t, row in plans.per_task.items():
        print(
            f"task {t:<8} precision {row.precision:.3f} recall {row.recall:.3f}"
            f" (tp {row.tp} fp {row.fp} fn {row.fn})"
        )
    print(
        f"plan average precision {plans.average_precision:.3f}"
        f" recall {plans.average_recall:.3f}"
    )
    row = plans.mes_mapping
    print(f"mes mapping precision {row.precision:.3f} recall {row.recall:.3f}")
    print(f"executable proportion {plans.executable_proportion:.3f}")
    return 0


def _cmd_repl(args) -> int:
    h, model, kb, world = _load_assets(args)
    state = SessionState(
        h=h,
        model=model,
        kb=kb,
        world=world,
        threshold=args.threshold,
        mode=args.mode,
        as_json=args.json,
    )
    print("instructing session; empty line is a no-op, 'quit' ends it")
    for line in sys.stdin:
        line = line.strip()
        if line in ("quit", "exit"):
            break
        state, rendered = repl_turn(state, line)
        if rendered:
            print(rendered)
    print(f"session closed after {len(state.transcript)} turns")
    return 0


def run_command(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)
    handlers = {
        "gen-corpus": _cmd_gen_corpus,
        "train-detector": _cmd_train_detector,
        "train-planner": _cmd_train_planner,
        "compile": _cmd_compile,
        "eval": _cmd_eval,
        "repl": _cmd_repl,
    }
    return handlers[args.command](args)


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
