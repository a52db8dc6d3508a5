"""Pattern expansion, instantiation enumeration, consistency and grounding.

A pattern abstracts a family of concrete states: structures may omit
atomics (added by expansion with the ε feature) and atomics may carry ε
(resolved by instantiation to every feature the signature allows).
Grounding turns a pattern into its set of concrete multisets and a rule
into its set of reactions, i.e. consistent pairs of instantiated sides.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import prod
from typing import Mapping

from .syntax import BcslRule
from .terms import EPSILON, Agent, Atomic, Multiset, Pattern, Structure

#: Abort grounding when one rule would produce more candidate pairs than this.
DEFAULT_GROUNDING_CAP = 1_000_000


class GroundingError(Exception):
    """A pattern cannot be grounded with the given signatures."""


class GroundingCapError(GroundingError):
    """Grounding aborted because the enumeration would be too large."""


@dataclass(frozen=True)
class Instantiation:
    """One resolution of a pattern's ε features.

    ``assignment`` lists the chosen feature for each ε atomic of
    ``source`` in deatomisation order; ``result`` is the ε-free pattern.
    """

    source: Pattern
    assignment: tuple[str, ...]
    result: Pattern


@dataclass(frozen=True)
class Reaction:
    """A grounded rule: consistent instantiations of both sides."""

    label: str
    lhs_inst: Instantiation
    rhs_inst: Instantiation


def expand_agent(agent: Agent, structure_signature: Mapping[str, frozenset[str]]) -> Agent:
    """Complete every composition with ε atomics for missing signature names."""
    chain: list[Atomic | Structure] = []
    for component in agent.chain:
        if isinstance(component, Structure):
            if component.name not in structure_signature:
                raise GroundingError(f"structure {component.name!r} has no signature entry")
            present = {a.name for a in component.composition}
            missing = structure_signature[component.name] - present
            if missing:
                merged = sorted(
                    component.composition + tuple(Atomic(n, EPSILON) for n in missing),
                    key=lambda a: a.name,
                )
                component = Structure(component.name, tuple(merged))
        chain.append(component)
    return Agent(tuple(chain), agent.compartment)


def expand_pattern(pattern: Pattern, structure_signature: Mapping[str, frozenset[str]]) -> Pattern:
    """Expand every agent of the pattern; idempotent."""
    return Pattern(tuple(expand_agent(a, structure_signature) for a in pattern.agents))


def deatomise(pattern: Pattern) -> tuple[Atomic, ...]:
    """All atomics of the pattern in written (left-to-right) order.

    Covers both standalone atomics in chains and atomics inside
    compositions.
    """
    atoms: list[Atomic] = []
    for agent in pattern.agents:
        for component in agent.chain:
            if isinstance(component, Structure):
                atoms.extend(component.composition)
            else:
                atoms.append(component)
    return tuple(atoms)


def instantiation_count(pattern: Pattern, atomic_signature: Mapping[str, frozenset[str]]) -> int:
    """Number of instantiations: the product of signature sizes over ε atomics."""
    total = 1
    for atom in deatomise(pattern):
        if atom.feature == EPSILON:
            total *= len(_feature_options(atom.name, atomic_signature))
    return total


def _feature_options(name: str, atomic_signature: Mapping[str, frozenset[str]]) -> list[str]:
    options = atomic_signature.get(name)
    if not options:
        raise GroundingError(f"no features known for atomic {name!r}")
    return sorted(options)


def assign_features(pattern: Pattern, by_position: Mapping[int, str]) -> Pattern:
    """Rebuild the pattern with features substituted at deatomisation positions."""
    position = 0

    def fix(atom: Atomic) -> Atomic:
        nonlocal position
        feature = by_position.get(position, atom.feature)
        position += 1
        return atom if feature == atom.feature else Atomic(atom.name, feature)

    agents = []
    for agent in pattern.agents:
        chain: list[Atomic | Structure] = []
        for component in agent.chain:
            if isinstance(component, Structure):
                chain.append(Structure(component.name, tuple(fix(a) for a in component.composition)))
            else:
                chain.append(fix(component))
        agents.append(Agent(tuple(chain), agent.compartment))
    return Pattern(tuple(agents))


def enumerate_instantiations(
    pattern: Pattern,
    atomic_signature: Mapping[str, frozenset[str]],
    cap: int | None = DEFAULT_GROUNDING_CAP,
) -> tuple[Instantiation, ...]:
    """All resolutions of the pattern's ε atomics, in deterministic order.

    Every ε position independently ranges over the (sorted) features of
    its atomic's signature; an ε-free pattern yields exactly itself.
    """
    atoms = deatomise(pattern)
    slots = [i for i, a in enumerate(atoms) if a.feature == EPSILON]
    option_sets = [_feature_options(atoms[i].name, atomic_signature) for i in slots]
    total = prod(len(o) for o in option_sets)
    if cap is not None and total > cap:
        raise GroundingCapError(
            f"pattern '{pattern}' has {total} instantiations, exceeding the cap of {cap}"
        )
    out = []
    for combo in itertools.product(*option_sets):
        out.append(Instantiation(pattern, combo, assign_features(pattern, dict(zip(slots, combo)))))
    return tuple(out)


def consistent(first: Instantiation, second: Instantiation) -> bool:
    """Positional consistency of two instantiations.

    At every shared deatomisation position, equal source atomics (name and
    feature; ε equals only ε) must have received equal resolved atomics.
    """
    s1, s2 = deatomise(first.source), deatomise(second.source)
    r1, r2 = deatomise(first.result), deatomise(second.result)
    n = min(len(s1), len(s2))
    return all(s1[k] != s2[k] or r1[k] == r2[k] for k in range(n))


def pattern_multiset(pattern: Pattern) -> Multiset:
    """Read an ε-free pattern as a multiset of its agents."""
    return Multiset.from_agents(pattern.agents)


def ground_pattern(
    pattern: Pattern,
    structure_signature: Mapping[str, frozenset[str]],
    atomic_signature: Mapping[str, frozenset[str]],
    cap: int | None = DEFAULT_GROUNDING_CAP,
) -> frozenset[Multiset]:
    """All concrete multisets the pattern can stand for."""
    expanded = expand_pattern(pattern, structure_signature)
    return frozenset(
        pattern_multiset(inst.result)
        for inst in enumerate_instantiations(expanded, atomic_signature, cap)
    )


def ground_rule(
    rule: BcslRule,
    structure_signature: Mapping[str, frozenset[str]],
    atomic_signature: Mapping[str, frozenset[str]],
    cap: int | None = DEFAULT_GROUNDING_CAP,
) -> tuple[Reaction, ...]:
    """All reactions of a rule: consistent pairs from both sides' instantiations."""
    lhs = expand_pattern(rule.lhs, structure_signature)
    rhs = expand_pattern(rule.rhs, structure_signature)
    if cap is not None:
        candidates = instantiation_count(lhs, atomic_signature) * instantiation_count(
            rhs, atomic_signature
        )
        if candidates > cap:
            raise GroundingCapError(
                f"rule {rule.label!r} has {candidates} candidate instantiation pairs, "
                f"exceeding the cap of {cap}"
            )
    lhs_insts = enumerate_instantiations(lhs, atomic_signature, cap)
    rhs_insts = enumerate_instantiations(rhs, atomic_signature, cap)
    return tuple(
        Reaction(rule.label, il, ir)
        for il in lhs_insts
        for ir in rhs_insts
        if consistent(il, ir)
    )
