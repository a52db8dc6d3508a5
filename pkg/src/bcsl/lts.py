"""Direct rewriting semantics and reachable transition systems.

``RuleMatcher`` applies model rules to a state straight from the rule
patterns (expand, match instantiated agents against the state, resolve
the right-hand side consistently) without pre-grounding the whole system.
``explore`` computes the bounded breadth-first closure of any successor
function; ``unroll`` produces the depth-bounded tree used for run-set
pictures.  Exports (DOT / JSON) are canonically sorted so repeated runs
are byte-identical.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping

from .mrs import EPSILON_LABEL
from .patterns import (
    GroundingError,
    assign_features,
    deatomise,
    enumerate_instantiations,
    expand_pattern,
)
from .syntax import BcslModel
from .terms import EPSILON, Agent, Multiset, Pattern, canonicalize

Transition = tuple[Hashable, str, Hashable]
SuccessorFn = Callable[[Hashable], Iterable[tuple[str, Hashable]]]


@dataclass(frozen=True)
class Lts:
    """Reachable labelled transition graph.

    ``unsettled`` holds states whose outgoing transitions are not fully
    represented because a bound was hit (never expanded, or successors
    dropped by the state cap); ``truncated`` is set in that case.
    """

    initial: Hashable
    states: frozenset
    transitions: frozenset[Transition]
    truncated: bool = False
    unsettled: frozenset = frozenset()

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_transitions(self) -> int:
        return len(self.transitions)


@dataclass(frozen=True)
class RunTree:
    """Depth-bounded unrolling: fresh node per step, ε edges omitted.

    ``states[i]`` is the state at node ``i``; node 0 is the root.
    """

    states: tuple
    edges: tuple[tuple[int, str, int], ...]
    truncated: bool = False

    @property
    def n_nodes(self) -> int:
        return len(self.states)

    @property
    def n_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class LabelSequences:
    """Maximal non-ε label sequences up to a depth.

    A sequence lands in ``incomplete`` when the depth bound cut it off
    while further non-ε steps were possible.
    """

    complete: frozenset[tuple[str, ...]]
    incomplete: frozenset[tuple[str, ...]]


# ---------------------------------------------------------------------------
# Direct rule application
# ---------------------------------------------------------------------------

class _PreparedRule:
    """One model rule preprocessed for repeated application.

    Left-hand agents are pre-instantiated per agent so matching can walk
    the state with backtracking; right-hand ε slots are classified as
    either forced (same source atomic at the same position on the left,
    so the resolved feature must match) or free over the signature.
    """

    def __init__(self, rule, structure_signature, atomic_signature):
        self.label = rule.label
        self.lhs = expand_pattern(rule.lhs, structure_signature)
        self.rhs = expand_pattern(rule.rhs, structure_signature)
        lhs_atoms = deatomise(self.lhs)
        rhs_atoms = deatomise(self.rhs)

        # Per-agent options: (canonical instantiated agent, {global slot: feature}).
        self.agent_options: list[list[tuple[Agent, dict[int, str]]]] = []
        offset = 0
        for agent in self.lhs.agents:
            single = Pattern((agent,))
            n_atoms = len(deatomise(single))
            slots = [offset + k for k in range(n_atoms) if lhs_atoms[offset + k].feature == EPSILON]
            options = []
            for inst in enumerate_instantiations(single, atomic_signature, cap=None):
                assignment = dict(zip(slots, inst.assignment))
                options.append((canonicalize(inst.result.agents[0]), assignment))
            self.agent_options.append(options)
            offset += n_atoms

        # Right-hand ε slots: ("forced", lhs position) or ("free", features).
        self.rhs_slots: list[tuple[int, str, object]] = []
        for j, atom in enumerate(rhs_atoms):
            if atom.feature != EPSILON:
                continue
            if j < len(lhs_atoms) and lhs_atoms[j] == atom:
                self.rhs_slots.append((j, "forced", j))
            else:
                options = atomic_signature.get(atom.name)
                if not options:
                    raise GroundingError(f"no features known for atomic {atom.name!r}")
                self.rhs_slots.append((j, "free", sorted(options)))

    def apply_to(self, state: Multiset) -> set[tuple[str, Multiset]]:
        results: set[tuple[str, Multiset]] = set()
        for assignment, consumed in self._match_lhs(state):
            left = state.difference(consumed)
            for produced in self._rhs_multisets(assignment):
                results.add((self.label, left.union(produced)))
        return results

    def _match_lhs(self, state: Multiset) -> list[tuple[dict[int, str], Multiset]]:
        """Instantiations of the left pattern contained in the state.

        Backtracks agent by agent, decrementing the remaining multiset, so
        instantiations absent from the state are pruned early.
        """
        remaining = {agent: n for agent, n in state.items()}
        matches: list[tuple[dict[int, str], Multiset]] = []
        assignment: dict[int, str] = {}
        picked: list[Agent] = []

        def descend(i: int) -> None:
            if i == len(self.agent_options):
                matches.append((dict(assignment), Multiset.from_agents(picked)))
                return
            for agent, slot_features in self.agent_options[i]:
                if remaining.get(agent, 0) > 0:
                    remaining[agent] -= 1
                    assignment.update(slot_features)
                    picked.append(agent)
                    descend(i + 1)
                    picked.pop()
                    for slot in slot_features:
                        del assignment[slot]
                    remaining[agent] += 1

        descend(0)
        return matches

    def _rhs_multisets(self, lhs_assignment: Mapping[int, str]) -> list[Multiset]:
        option_sets = []
        for _, mode, payload in self.rhs_slots:
            if mode == "forced":
                option_sets.append([lhs_assignment[payload]])
            else:
                option_sets.append(payload)
        out = []
        positions = [pos for pos, _, _ in self.rhs_slots]
        for combo in itertools.product(*option_sets):
            resolved = assign_features(self.rhs, dict(zip(positions, combo)))
            out.append(Multiset.from_agents(resolved.agents))
        return out


class RuleMatcher:
    """Applies every rule of a model to states via the rewriting relation."""

    def __init__(self, model: BcslModel):
        self._rules = [
            _PreparedRule(rule, model.structure_signature, model.atomic_signature)
            for rule in model.rules
        ]

    def successors(self, state: Multiset) -> frozenset[tuple[str, Multiset]]:
        out: set[tuple[str, Multiset]] = set()
        for prepared in self._rules:
            out |= prepared.apply_to(state)
        return frozenset(out)


def bcsl_successors(model: BcslModel, state: Multiset) -> frozenset[tuple[str, Multiset]]:
    """Labelled successor states of ``state`` under the model's rules.

    Empty when no rule applies (no implicit ε here; see
    ``extend_epsilon``).
    """
    return RuleMatcher(model).successors(state)


# ---------------------------------------------------------------------------
# Bounded exploration
# ---------------------------------------------------------------------------

def _state_key(state: Hashable) -> str:
    return str(state) if isinstance(state, Multiset) else repr(state)


def explore(
    initial: Hashable,
    successor_fn: SuccessorFn,
    max_states: int = 100_000,
    max_depth: int = 1_000,
) -> Lts:
    """Breadth-first closure of ``successor_fn`` from ``initial``.

    Deterministic for any hash seed: frontiers and successor sets are
    processed in sorted order.  Edges leading to states beyond the state
    cap are dropped (endpoints of kept edges are always explored states).
    """
    states = {initial}
    transitions: set[Transition] = set()
    truncated = False
    cut: set[Hashable] = set()
    frontier = [initial]
    depth = 0
    while frontier and depth < max_depth:
        frontier.sort(key=_state_key)
        next_frontier = []
        for state in frontier:
            for label, target in sorted(
                successor_fn(state), key=lambda lt: (lt[0], _state_key(lt[1]))
            ):
                if target not in states:
                    if len(states) >= max_states:
                        truncated = True
                        cut.add(state)
                        continue
                    states.add(target)
                    next_frontier.append(target)
                transitions.add((state, label, target))
        frontier = next_frontier
        depth += 1
    if frontier:
        truncated = True
    return Lts(
        initial,
        frozenset(states),
        frozenset(transitions),
        truncated,
        frozenset(frontier) | frozenset(cut),
    )


def build_lts(model: BcslModel, max_states: int = 100_000, max_depth: int = 1_000) -> Lts:
    """Reachable transition system of a model (states deduplicated, no ε)."""
    matcher = RuleMatcher(model)
    return explore(model.init, matcher.successors, max_states, max_depth)


def extend_epsilon(lts: Lts) -> Lts:
    """Add an ε self-loop to every expanded state with no outgoing transition."""
    outgoing = {src for src, _, _ in lts.transitions}
    loops = {
        (state, EPSILON_LABEL, state)
        for state in lts.states
        if state not in outgoing and state not in lts.unsettled
    }
    return Lts(
        lts.initial,
        lts.states,
        lts.transitions | loops,
        lts.truncated,
        lts.unsettled,
    )


def map_states(lts: Lts, project: Callable[[Hashable], Hashable]) -> Lts:
    """Quotient an LTS by projecting its states (e.g. dropping memory)."""
    return Lts(
        project(lts.initial),
        frozenset(project(s) for s in lts.states),
        frozenset((project(a), label, project(b)) for a, label, b in lts.transitions),
        lts.truncated,
        frozenset(project(s) for s in lts.unsettled),
    )


def maximal_label_sequences(lts: Lts, depth: int) -> LabelSequences:
    """Label sequences of runs from the initial state up to their first ε.

    A sequence is complete when the run can only stutter afterwards, and
    incomplete when the depth bound stopped it first.
    """
    adjacency: dict[Hashable, list[tuple[str, Hashable]]] = {}
    for src, label, tgt in lts.transitions:
        if label != EPSILON_LABEL:
            adjacency.setdefault(src, []).append((label, tgt))
    for out in adjacency.values():
        out.sort(key=lambda lt: (lt[0], _state_key(lt[1])))

    complete: set[tuple[str, ...]] = set()
    incomplete: set[tuple[str, ...]] = set()

    def walk(state: Hashable, prefix: tuple[str, ...], budget: int) -> None:
        out = adjacency.get(state)
        if not out:
            complete.add(prefix)
            return
        if budget == 0:
            incomplete.add(prefix)
            return
        for label, target in out:
            walk(target, prefix + (label,), budget - 1)

    walk(lts.initial, (), depth)
    return LabelSequences(frozenset(complete), frozenset(incomplete))


def unroll(
    initial: Hashable,
    successor_fn: SuccessorFn,
    depth: int,
    max_nodes: int = 100_000,
) -> RunTree:
    """Depth-bounded tree of runs; every successor becomes a fresh node.

    The node cap guards against exponential blow-up on cyclic systems.
    """
    states: list = [initial]
    edges: list[tuple[int, str, int]] = []
    frontier = [(0, initial)]
    for _ in range(depth):
        if not frontier:
            break
        next_frontier = []
        for node, state in frontier:
            for label, target in sorted(
                successor_fn(state), key=lambda lt: (lt[0], _state_key(lt[1]))
            ):
                if len(states) >= max_nodes:
                    return RunTree(tuple(states), tuple(edges), True)
                child = len(states)
                states.append(target)
                edges.append((node, label, child))
                next_frontier.append((child, target))
        frontier = next_frontier
    truncated = any(
        next(iter(successor_fn(state)), None) is not None for _, state in frontier
    )
    return RunTree(tuple(states), tuple(edges), truncated)


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def lts_to_dot(lts: Lts, label_fn: Callable[[Hashable], str] = _state_key) -> str:
    """DOT digraph: one node per state, edges labelled with rule labels.

    The initial state is drawn with a doubled periphery.  Output is
    sorted, hence byte-stable.
    """
    ordered = sorted(lts.states, key=lambda s: (label_fn(s), _state_key(s)))
    ids = {state: f"s{i}" for i, state in enumerate(ordered)}
    lines = ["digraph lts {"]
    for state in ordered:
        attrs = f"label={_dot_quote(label_fn(state))}"
        if state == lts.initial:
            attrs += ", peripheries=2"
        lines.append(f"  {ids[state]} [{attrs}];")
    for src, label, tgt in sorted(
        lts.transitions, key=lambda t: (label_fn(t[0]), _state_key(t[0]), t[1], label_fn(t[2]))
    ):
        lines.append(f"  {ids[src]} -> {ids[tgt]} [label={_dot_quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def tree_to_dot(tree: RunTree, label_fn: Callable[[Hashable], str] = _state_key) -> str:
    """DOT digraph of an unrolled run tree (root doubled)."""
    lines = ["digraph runs {"]
    for i, state in enumerate(tree.states):
        attrs = f"label={_dot_quote(label_fn(state))}"
        if i == 0:
            attrs += ", peripheries=2"
        lines.append(f"  n{i} [{attrs}];")
    for parent, label, child in tree.edges:
        lines.append(f"  n{parent} -> n{child} [label={_dot_quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def lts_to_json_obj(lts: Lts, label_fn: Callable[[Hashable], str] = _state_key) -> dict:
    """JSON-ready mirror of the LTS fields with sorted arrays."""
    return {
        "initial": label_fn(lts.initial),
        "states": sorted(label_fn(s) for s in lts.states),
        "transitions": sorted(
            [label_fn(src), label, label_fn(tgt)] for src, label, tgt in lts.transitions
        ),
        "truncated": lts.truncated,
    }


def tree_to_json_obj(tree: RunTree, label_fn: Callable[[Hashable], str] = _state_key) -> dict:
    """JSON-ready mirror of an unrolled run tree."""
    return {
        "nodes": [{"id": i, "state": label_fn(s)} for i, s in enumerate(tree.states)],
        "edges": [[parent, label, child] for parent, label, child in tree.edges],
        "truncated": tree.truncated,
    }
