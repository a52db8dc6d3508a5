import pytest

from bcsl import (
    EPSILON_LABEL,
    Mrs,
    MrsRule,
    Multiset,
    apply_rule,
    build_mrs,
    enabled,
    parse_agent,
    parse_model,
    parse_multiset,
    sample_run,
    successors,
)
from conftest import UNREGULATED_SEQUENCES

# The grounding of the two-site model, frozen as (label, pre, post) texts.
EXPECTED_ELEMENTS = {
    "P(S{i},T{i})::cell",
    "P(S{a},T{i})::cell",
    "P(S{i},T{a})::cell",
    "P(S{a},T{a})::cell",
    "P(S{i},T{i})::out",
    "P(S{a},T{i})::out",
    "P(S{i},T{a})::out",
    "P(S{a},T{a})::out",
}

EXPECTED_RULES = {
    ("r1_S", "1 P(S{i},T{i})::cell", "1 P(S{a},T{i})::cell"),
    ("r1_S", "1 P(S{i},T{a})::cell", "1 P(S{a},T{a})::cell"),
    ("r1_T", "1 P(S{i},T{i})::cell", "1 P(S{i},T{a})::cell"),
    ("r1_T", "1 P(S{a},T{i})::cell", "1 P(S{a},T{a})::cell"),
    ("r2", "1 P(S{i},T{i})::cell", "1 P(S{i},T{i})::out"),
    ("r2", "1 P(S{a},T{i})::cell", "1 P(S{a},T{i})::out"),
    ("r2", "1 P(S{i},T{a})::cell", "1 P(S{i},T{a})::out"),
    ("r2", "1 P(S{a},T{a})::cell", "1 P(S{a},T{a})::out"),
}


def rule(label: str, pre: str, post: str) -> MrsRule:
    return MrsRule(label, parse_multiset(pre), parse_multiset(post))


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def test_build_mrs_two_site(two_site_model):
    mrs = build_mrs(two_site_model)
    assert {str(a) for a in mrs.elements} == EXPECTED_ELEMENTS
    assert {(r.label, str(r.pre), str(r.post)) for r in mrs.rules} == EXPECTED_RULES
    assert mrs.init == two_site_model.init


def test_build_mrs_no_rules():
    mrs = build_mrs(parse_model("#! rules\n#! inits\n1 A{x}::c\n"))
    assert {str(a) for a in mrs.elements} == {"A{x}::c"}
    assert mrs.rules == ()
    assert str(mrs.init) == "1 A{x}::c"


def test_build_mrs_single_grounded_rule():
    mrs = build_mrs(parse_model("#! rules\nr ~ A{x}::c => B{y}::c\n#! inits\n1 A{x}::c\n"))
    assert {str(a) for a in mrs.elements} == {"A{x}::c", "B{y}::c"}
    assert [(r.label, str(r.pre), str(r.post)) for r in mrs.rules] == [
        ("r", "1 A{x}::c", "1 B{y}::c")
    ]


def test_rule_agents_within_elements(two_site_model):
    mrs = build_mrs(two_site_model)
    for r in mrs.rules:
        for agent in (*r.pre.agents(), *r.post.agents()):
            assert agent in mrs.elements


def test_duplicate_groundings_collapse():
    # both ε choices resolve to the same grounded rule when only one feature exists
    mrs = build_mrs(parse_model("#! rules\nr ~ X()::c => X()::d\n#! inits\n1 X(A{u})::c\n"))
    assert len(mrs.rules) == 1


# ---------------------------------------------------------------------------
# Enabledness and application
# ---------------------------------------------------------------------------

M0 = parse_multiset("1 P(S{i},T{i})::cell")


def test_enabled_at_initial_state():
    mu = rule("r1_S", "1 P(S{i},T{i})::cell", "1 P(S{a},T{i})::cell")
    assert enabled(mu, M0)


def test_enabled_reflexive_on_own_pre():
    mu = rule("r2", "1 P(S{a},T{a})::cell", "1 P(S{a},T{a})::out")
    assert enabled(mu, mu.pre)


def test_not_enabled_when_pre_missing():
    mu = rule("r2", "1 P(S{a},T{a})::cell", "1 P(S{a},T{a})::out")
    assert not enabled(mu, M0)


def test_apply_rewrites_state():
    mu = rule("r1_S", "1 P(S{i},T{i})::cell", "1 P(S{a},T{i})::cell")
    assert apply_rule(mu, M0) == parse_multiset("1 P(S{a},T{i})::cell")


def test_apply_epsilon_is_identity():
    eps = MrsRule(EPSILON_LABEL, Multiset.empty(), Multiset.empty())
    assert apply_rule(eps, M0) == M0


def test_apply_respects_multiplicities():
    mu = rule("r2", "1 P(S{i},T{i})::cell", "1 P(S{i},T{i})::out")
    doubled = parse_multiset("2 P(S{i},T{i})::cell")
    assert apply_rule(mu, doubled) == parse_multiset(
        "1 P(S{i},T{i})::cell + 1 P(S{i},T{i})::out"
    )


def test_apply_requires_enabled():
    mu = rule("r2", "1 P(S{a},T{a})::cell", "1 P(S{a},T{a})::out")
    with pytest.raises(ValueError, match="not enabled"):
        apply_rule(mu, M0)


def test_apply_never_goes_negative(two_site_model):
    mrs = build_mrs(two_site_model)
    for mu in mrs.rules:
        if enabled(mu, M0):
            result = apply_rule(mu, M0)
            for agent in mrs.elements:
                expected = M0.count(agent) - mu.pre.count(agent) + mu.post.count(agent)
                assert expected >= 0
                assert result.count(agent) == expected


# ---------------------------------------------------------------------------
# Successors
# ---------------------------------------------------------------------------

def test_three_successors_at_initial_state(two_site_model):
    mrs = build_mrs(two_site_model)
    succ = successors(mrs, M0)
    assert {label for label, _ in succ} == {"r1_S", "r1_T", "r2"}
    assert len(succ) == 3


def test_epsilon_when_deadlocked(two_site_model):
    mrs = build_mrs(two_site_model)
    out_state = parse_multiset("1 P(S{a},T{a})::out")
    assert successors(mrs, out_state) == frozenset({(EPSILON_LABEL, out_state)})


def test_empty_pre_rule_beats_epsilon():
    mrs = build_mrs(parse_model("#! rules\nmk ~ => A{u}::c\n#! inits\n1 A{u}::c\n"))
    succ = successors(mrs, Multiset.empty())
    assert {label for label, _ in succ} == {"mk"}


def test_epsilon_exclusive_on_reachable_states(two_site_model):
    mrs = build_mrs(two_site_model)
    frontier = [mrs.init]
    seen = {mrs.init}
    while frontier:
        state = frontier.pop()
        succ = successors(mrs, state)
        any_enabled = any(enabled(mu, state) for mu in mrs.rules)
        assert (EPSILON_LABEL in {l for l, _ in succ}) == (not any_enabled)
        for _, target in succ:
            if target not in seen:
                seen.add(target)
                frontier.append(target)


def test_epsilon_label_reserved():
    model = parse_model("#! rules\nr ~ A{x}::c => A{y}::c\n#! inits\n1 A{x}::c\n")
    hacked = model.rules[0].__class__("ε", model.rules[0].lhs, model.rules[0].rhs)
    model.rules = (hacked,)
    with pytest.raises(ValueError, match="reserved"):
        build_mrs(model)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def test_zero_steps(two_site_model):
    mrs = build_mrs(two_site_model)
    run = sample_run(mrs, 0, seed=5)
    assert run.states == (mrs.init,)
    assert run.labels == ()


def test_sample_run_reproducible(two_site_model):
    mrs = build_mrs(two_site_model)
    assert sample_run(mrs, 10, seed=42) == sample_run(mrs, 10, seed=42)


def test_sampled_labels_are_maximal_sequences(two_site_model):
    mrs = build_mrs(two_site_model)
    for seed in range(20):
        run = sample_run(mrs, 3, seed=seed)
        stripped = tuple(l for l in run.labels if l != EPSILON_LABEL)
        assert stripped in UNREGULATED_SEQUENCES
        # ε only ever trails
        if EPSILON_LABEL in run.labels:
            first = run.labels.index(EPSILON_LABEL)
            assert all(l == EPSILON_LABEL for l in run.labels[first:])


def test_run_states_follow_applications(two_site_model):
    mrs = build_mrs(two_site_model)
    by_key = {(r.label, r.pre): r for r in mrs.rules}
    run = sample_run(mrs, 4, seed=3)
    for i, label in enumerate(run.labels):
        if label == EPSILON_LABEL:
            assert run.states[i + 1] == run.states[i]
        else:
            candidates = [r for r in mrs.rules if r.label == label and enabled(r, run.states[i])]
            assert any(apply_rule(r, run.states[i]) == run.states[i + 1] for r in candidates)


def test_negative_steps_rejected(two_site_model):
    mrs = build_mrs(two_site_model)
    with pytest.raises(ValueError):
        sample_run(mrs, -1)
