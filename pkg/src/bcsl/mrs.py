"""Multiset rewriting systems: representation, construction, run semantics.

A system is a finite element universe, a set of rewrite rules (pairs of
multisets tagged with the label of the originating model rule) and an
initial multiset.  The reserved rule ``ε = (∅, ∅)`` is implicit and fires
exactly when nothing else is enabled, so every run can be extended
forever; finite run prefixes therefore end in ε-stuttering.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Hashable, Protocol

from .patterns import DEFAULT_GROUNDING_CAP, ground_pattern, ground_rule, pattern_multiset
from .syntax import BcslModel
from .terms import Agent, Multiset, Pattern

#: Reserved label of the implicit empty rule; model rules may not use it.
EPSILON_LABEL = "ε"


@dataclass(frozen=True)
class MrsRule:
    """One rewrite rule: consume ``pre``, produce ``post``."""

    label: str
    pre: Multiset
    post: Multiset

    def __str__(self) -> str:
        return f"{self.label}: {self.pre} => {self.post}"


@dataclass(frozen=True)
class Mrs:
    """A multiset rewriting system over a finite element universe.

    ``rules`` excludes the implicit ε rule and is stored sorted for
    reproducible output.
    """

    elements: frozenset[Agent]
    rules: tuple[MrsRule, ...]
    init: Multiset


@dataclass(frozen=True)
class Run:
    """A finite run prefix: ``labels[i]`` produced ``states[i+1]`` from ``states[i]``."""

    states: tuple[Multiset, ...]
    labels: tuple[str, ...]


def build_mrs(model: BcslModel, cap: int | None = DEFAULT_GROUNDING_CAP) -> Mrs:
    """Ground a model into a multiset rewriting system.

    The element universe is the set of init agents plus every grounding of
    every agent occurring in any rule; the rules are the reactions of
    every model rule read as multiset pairs (duplicates collapse).
    """
    elements: set[Agent] = {agent for agent, _ in model.init.items()}
    for rule in model.rules:
        for pattern in (rule.lhs, rule.rhs):
            for agent in pattern.agents:
                for ms in ground_pattern(
                    Pattern((agent,)), model.structure_signature, model.atomic_signature, cap
                ):
                    elements.update(ms.agents())

    seen: dict[MrsRule, None] = {}
    for rule in model.rules:
        if rule.label == EPSILON_LABEL:
            raise ValueError(f"rule label {EPSILON_LABEL!r} is reserved")
        for reaction in ground_rule(
            rule, model.structure_signature, model.atomic_signature, cap
        ):
            mu = MrsRule(
                rule.label,
                pattern_multiset(reaction.lhs_inst.result),
                pattern_multiset(reaction.rhs_inst.result),
            )
            seen[mu] = None

    ordered = tuple(sorted(seen, key=lambda r: (r.label, str(r.pre), str(r.post))))
    return Mrs(frozenset(elements), ordered, model.init)


def enabled(rule: MrsRule, state: Multiset) -> bool:
    """True when the rule's pre-multiset is contained in the state."""
    return rule.pre.issubset(state)


def apply_rule(rule: MrsRule, state: Multiset) -> Multiset:
    """Apply an enabled rule: remove ``pre``, then add ``post``."""
    if not enabled(rule, state):
        raise ValueError(f"rule {rule.label!r} is not enabled at {state}")
    return state.difference(rule.pre).union(rule.post)


def successors(mrs: Mrs, state: Multiset) -> frozenset[tuple[str, Multiset]]:
    """All labelled next states; exactly ``{(ε, state)}`` when nothing is enabled."""
    out = {
        (rule.label, apply_rule(rule, state)) for rule in mrs.rules if enabled(rule, state)
    }
    if not out:
        return frozenset({(EPSILON_LABEL, state)})
    return frozenset(out)


class RunFilter(Protocol):
    """Run-filtering strategy with explicit memory (see the regulation module)."""

    def initial_memory(self) -> Hashable: ...

    def permits(
        self, memory: Hashable, state: Multiset, candidate: str, enabled_labels: frozenset[str]
    ) -> bool: ...

    def advance(self, memory: Hashable, applied: str) -> Hashable: ...


def sample_run(
    mrs: Mrs,
    steps: int,
    seed: int = 0,
    regulation: RunFilter | None = None,
) -> Run:
    """Sample a run prefix of ``steps`` steps, uniformly among successors.

    Reproducible for a fixed seed.  When a regulation is given, only
    permitted successors are sampled and the regulation memory advances
    with each applied rule; with no (permitted) successor the run
    stutters on ε.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    rng = random.Random(seed)
    state = mrs.init
    states = [state]
    labels: list[str] = []
    memory = regulation.initial_memory() if regulation is not None else None
    for _ in range(steps):
        base = sorted(
            ((label, target) for label, target in successors(mrs, state) if label != EPSILON_LABEL),
            key=lambda lt: (lt[0], str(lt[1])),
        )
        if regulation is not None:
            enabled_labels = frozenset(label for label, _ in base)
            base = [
                (label, target)
                for label, target in base
                if regulation.permits(memory, state, label, enabled_labels)
            ]
        if base:
            label, target = rng.choice(base)
            if regulation is not None:
                memory = regulation.advance(memory, label)
        else:
            label, target = EPSILON_LABEL, state
        labels.append(label)
        states.append(target)
        state = target
    return Run(tuple(states), tuple(labels))
