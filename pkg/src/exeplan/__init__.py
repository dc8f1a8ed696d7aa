"""Instruction-to-plan compiler for small bench-work tasks.

The package turns short natural-language task instructions into
machine-executable plan documents: a rule-based frontend parses the
text, a semi-supervised classifier detects sub-goal mentions, a
knowledge base fills in execution parameters, and a weighted-formula
model scores and orders candidate plans before an executability check.
"""

__version__ = "0.1.0"

from .frontend import (
    Lexicon,
    ParsedDocument,
    Sentence,
    Token,
    DependencyEdge,
    NoVerbError,
    default_lexicon,
    load_lexicon,
    parse_text,
)
from .features import FeatureIndex, FeatureVector, candidate_sites, extract_features, vectorize
from .detector import Classifier, Sample, SubGoalMention, TrainingSet, detect, self_train, train_svm
from .mes import (
    Mes,
    MesKB,
    WorldState,
    NoFeasibleValueError,
    SchemaError,
    check_subgoal_executable,
    complete_mes,
    default_kb,
    default_world,
    extract_mes,
    load_kb,
    load_world,
)
from .planner import (
    BASIC_FORMULAS,
    FORMULAS,
    TASK_TYPES,
    DuplicateSubGoalError,
    GroundedPlan,
    MlnModel,
    NoCandidatesError,
    classify_task,
    ground,
    score_plan,
    select_plan,
)
from .ssvm import NonConvergenceError, PlanExample, loss, loss_augmented_infer, psi, train_ssvm
from .pipeline import (
    Assessment,
    CompileFailure,
    ExecutablePlan,
    PlanStep,
    RefuseNonExecutableError,
    assess,
    compile_instruction,
    export_plan,
    parse_plan,
)
from .corpus import (
    CorpusDoc,
    MetricReport,
    eval_disambiguation,
    eval_plans,
    generate_corpus,
    load_corpus,
    save_corpus,
)
