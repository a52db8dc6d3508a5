"""Toolkit for BCSL rule-based models.

Parses model files, grounds them into multiset rewriting systems,
explores their (optionally regulated) transition systems, samples runs
and machine-checks that the direct and the grounded semantics coincide.
"""

from .conformance import (
    ConformanceReport,
    Counterexample,
    LemmaReport,
    check_equivalence,
    check_lemmas,
)
from .lts import (
    LabelSequences,
    Lts,
    RuleMatcher,
    RunTree,
    bcsl_successors,
    build_lts,
    explore,
    extend_epsilon,
    lts_to_dot,
    lts_to_json_obj,
    map_states,
    maximal_label_sequences,
    tree_to_dot,
    tree_to_json_obj,
    unroll,
)
from .mrs import (
    EPSILON_LABEL,
    Mrs,
    MrsRule,
    Run,
    apply_rule,
    build_mrs,
    enabled,
    sample_run,
    successors,
)
from .patterns import (
    DEFAULT_GROUNDING_CAP,
    GroundingCapError,
    GroundingError,
    Instantiation,
    Reaction,
    consistent,
    deatomise,
    enumerate_instantiations,
    expand_agent,
    expand_pattern,
    ground_pattern,
    ground_rule,
    instantiation_count,
    pattern_multiset,
)
from .regulation import (
    ConcurrentFreeRegulation,
    ConditionalRegulation,
    Dfa,
    OrderedRegulation,
    ProgrammedRegulation,
    Regulation,
    RegulationError,
    RegulationGuard,
    RegulationWarning,
    RegularRegulation,
    compile_label_regex,
    compile_regulation,
    concurrency_relation,
    make_guard,
    regulated_explore,
    regulated_tree,
)
from .syntax import (
    BcslModel,
    BcslRule,
    ParseError,
    SignatureError,
    infer_signatures,
    model_to_text,
    parse_agent,
    parse_model,
    parse_multiset,
    parse_pattern,
    parse_rule,
    serialize,
)
from .terms import (
    EPSILON,
    Agent,
    Atomic,
    Multiset,
    Pattern,
    Structure,
    canonicalize,
    congruent,
)

__version__ = "0.1.0"
