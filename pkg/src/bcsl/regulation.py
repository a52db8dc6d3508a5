"""Run regulation: five strategies restricting which rules may fire.

All strategies filter candidate rule applications during exploration or
simulation, carrying at most a small explicit memory between steps:

* regular — a language of label sequences, given as a regular expression
  over rule labels with ``.`` (sequence), ``|`` (choice), ``*``
  (repetition) and parentheses, compiled to a minimal DFA.  A candidate
  is permitted while the consumed label prefix can still grow into a word
  of the language; once a complete word has been consumed only ε may
  follow.  Memory: the DFA state.
* ordered — strict pairs ``a < b``; ``b`` may not fire immediately after
  ``a`` (transitively closed).  Memory: the last applied label.
* programmed — a successor set per label; after ``a`` only members of its
  successor set may fire.  Memory: the last applied label.
* conditional — prohibited contexts per label: a candidate is blocked
  when any of its prohibited multisets is contained in the current state.
  Memoryless.
* concurrent-free — priority pairs ``(high, low)``: ``low`` is blocked
  whenever ``high`` is enabled too and the two labels are concurrent,
  i.e. some groundings of theirs consume a common agent.  Memoryless.

ε never counts as a regulated rule: it fires exactly when the permitted
set is empty and leaves the memory unchanged.
"""

from __future__ import annotations

import itertools
import re
import warnings
from dataclasses import dataclass
from typing import Any, Collection, Hashable, Mapping

from .lts import Lts, RuleMatcher, RunTree, explore, unroll
from .mrs import EPSILON_LABEL, Mrs, build_mrs
from .syntax import BcslModel, parse_multiset
from .terms import Multiset


class RegulationError(Exception):
    """Invalid regulation configuration."""


class RegulationWarning(UserWarning):
    """Non-fatal regulation configuration repair (e.g. filled-in defaults)."""


# ---------------------------------------------------------------------------
# Regular expressions over rule labels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dfa:
    """Deterministic automaton over rule labels.

    Transitions are partial: a missing key is the dead state.  ``live``
    holds the states from which some word can still be completed.
    """

    start: int
    accepting: frozenset[int]
    transitions: Mapping[tuple[int, str], int]
    live: frozenset[int]

    def step(self, state: int, label: str) -> int | None:
        return self.transitions.get((state, label))

    def accepts(self, word: Collection[str]) -> bool:
        state: int | None = self.start
        for label in word:
            state = self.step(state, label)
            if state is None:
                return False
        return state in self.accepting


_REGEX_TOKEN = re.compile(r"\s*(?:(?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)|(?P<OP>[.|*()]))")


def _regex_tokens(expression: str) -> list[str]:
    tokens: list[str] = []
    pos = 0
    while pos < len(expression):
        match = _REGEX_TOKEN.match(expression, pos)
        if match is None or match.end() == pos:
            rest = expression[pos:].lstrip()
            if not rest:
                break
            raise RegulationError(f"unexpected character {rest[0]!r} in expression")
        tokens.append(match.group("IDENT") or match.group("OP"))
        pos = match.end()
    return tokens


def _parse_regex(expression: str):
    """Parse into a tuple AST: ("sym", l) | ("cat", parts) | ("alt", parts) | ("star", p)."""
    tokens = _regex_tokens(expression)
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take() -> str:
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        return tok

    def parse_alt():
        parts = [parse_cat()]
        while peek() == "|":
            take()
            parts.append(parse_cat())
        return parts[0] if len(parts) == 1 else ("alt", tuple(parts))

    def parse_cat():
        parts = [parse_rep()]
        while peek() == ".":
            take()
            parts.append(parse_rep())
        return parts[0] if len(parts) == 1 else ("cat", tuple(parts))

    def parse_rep():
        node = parse_atom()
        while peek() == "*":
            take()
            node = ("star", node)
        return node

    def parse_atom():
        tok = peek()
        if tok == "(":
            take()
            node = parse_alt()
            if peek() != ")":
                raise RegulationError("missing ')' in expression")
            take()
            return node
        if tok is None or tok in ".|*)":
            raise RegulationError(f"expected a rule label in expression, found {tok!r}")
        return ("sym", take())

    if not tokens:
        raise RegulationError("empty expression")
    ast = parse_alt()
    if pos != len(tokens):
        raise RegulationError(f"unexpected {tokens[pos]!r} in expression")
    return ast


class _Nfa:
    def __init__(self):
        self.eps: dict[int, set[int]] = {}
        self.sym: dict[tuple[int, str], set[int]] = {}
        self.n = 0

    def new_state(self) -> int:
        self.n += 1
        return self.n - 1

    def add_eps(self, a: int, b: int) -> None:
        self.eps.setdefault(a, set()).add(b)

    def add_sym(self, a: int, label: str, b: int) -> None:
        self.sym.setdefault((a, label), set()).add(b)


def _build_nfa(ast, nfa: _Nfa) -> tuple[int, int]:
    kind = ast[0]
    if kind == "sym":
        a, b = nfa.new_state(), nfa.new_state()
        nfa.add_sym(a, ast[1], b)
        return a, b
    if kind == "cat":
        first, last = _build_nfa(ast[1][0], nfa)
        for part in ast[1][1:]:
            a, b = _build_nfa(part, nfa)
            nfa.add_eps(last, a)
            last = b
        return first, last
    if kind == "alt":
        start, end = nfa.new_state(), nfa.new_state()
        for part in ast[1]:
            a, b = _build_nfa(part, nfa)
            nfa.add_eps(start, a)
            nfa.add_eps(b, end)
        return start, end
    if kind == "star":
        start, end = nfa.new_state(), nfa.new_state()
        a, b = _build_nfa(ast[1], nfa)
        nfa.add_eps(start, a)
        nfa.add_eps(b, end)
        nfa.add_eps(start, end)
        nfa.add_eps(b, a)
        return start, end
    raise AssertionError(f"unknown AST node {kind!r}")


def _closure(nfa: _Nfa, states: frozenset[int]) -> frozenset[int]:
    stack = list(states)
    seen = set(states)
    while stack:
        s = stack.pop()
        for t in nfa.eps.get(s, ()):
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return frozenset(seen)


def _ast_symbols(ast) -> set[str]:
    kind = ast[0]
    if kind == "sym":
        return {ast[1]}
    if kind in ("cat", "alt"):
        out: set[str] = set()
        for part in ast[1]:
            out |= _ast_symbols(part)
        return out
    return _ast_symbols(ast[1])


def compile_label_regex(expression: str, labels: Collection[str]) -> Dfa:
    """Compile an expression over rule labels to a minimal DFA with liveness."""
    ast = _parse_regex(expression)
    symbols = _ast_symbols(ast)
    unknown = sorted(symbols - set(labels))
    if unknown:
        raise RegulationError(f"unknown rule label(s) in expression: {', '.join(unknown)}")
    alphabet = sorted(symbols)

    nfa = _Nfa()
    start, accept = _build_nfa(ast, nfa)

    # Subset construction.
    initial = _closure(nfa, frozenset({start}))
    subset_ids: dict[frozenset[int], int] = {initial: 0}
    worklist = [initial]
    table: dict[tuple[int, str], int] = {}
    while worklist:
        current = worklist.pop()
        cid = subset_ids[current]
        for label in alphabet:
            targets: set[int] = set()
            for s in current:
                targets |= nfa.sym.get((s, label), set())
            if not targets:
                continue
            closed = _closure(nfa, frozenset(targets))
            if closed not in subset_ids:
                subset_ids[closed] = len(subset_ids)
                worklist.append(closed)
            table[(cid, label)] = subset_ids[closed]
    accepting = {cid for subset, cid in subset_ids.items() if accept in subset}
    n = len(subset_ids)

    # Totalize with a dead state, then minimize by partition refinement.
    dead = n
    total = dict(table)
    for state in range(n + 1):
        for label in alphabet:
            total.setdefault((state, label), dead)

    block_of = {s: (1 if s in accepting else 0) for s in range(n + 1)}
    while True:
        signatures = {
            s: (block_of[s], tuple(block_of[total[(s, a)]] for a in alphabet))
            for s in range(n + 1)
        }
        renumber: dict[tuple, int] = {}
        new_block_of = {}
        for s in sorted(signatures):
            sig = signatures[s]
            if sig not in renumber:
                renumber[sig] = len(renumber)
            new_block_of[s] = renumber[sig]
        if new_block_of == block_of:
            break
        block_of = new_block_of

    min_trans = {
        (block_of[s], a): block_of[total[(s, a)]] for s in range(n + 1) for a in alphabet
    }
    min_start = block_of[0]
    min_accepting = frozenset(block_of[s] for s in accepting)

    # Live states: those from which an accepting state is reachable.
    reverse: dict[int, set[int]] = {}
    for (src, _), tgt in min_trans.items():
        reverse.setdefault(tgt, set()).add(src)
    live = set(min_accepting)
    stack = list(live)
    while stack:
        s = stack.pop()
        for p in reverse.get(s, ()):
            if p not in live:
                live.add(p)
                stack.append(p)

    transitions = {
        key: tgt for key, tgt in min_trans.items() if key[0] in live and tgt in live
    }
    return Dfa(min_start, min_accepting, transitions, frozenset(live))


# ---------------------------------------------------------------------------
# The five regulation variants
# ---------------------------------------------------------------------------

LabelRelation = frozenset[tuple[str, str]]


@dataclass(frozen=True)
class RegularRegulation:
    """Admit only runs whose label sequence spells a word of a language."""

    expression: str
    dfa: Dfa

    variant = "regular"

    def initial_memory(self) -> int:
        return self.dfa.start

    def permits(self, memory, state, candidate, enabled_labels, concurrency) -> bool:
        if memory in self.dfa.accepting:
            return False
        target = self.dfa.step(memory, candidate)
        return target is not None and target in self.dfa.live

    def advance(self, memory, applied):
        if applied == EPSILON_LABEL:
            return memory
        target = self.dfa.step(memory, applied)
        if target is None:
            raise ValueError(f"label {applied!r} was not permitted from this memory")
        return target

    def describe_memory(self, memory) -> str:
        return f"q{memory}"


@dataclass(frozen=True)
class OrderedRegulation:
    """Block a rule right after any rule below it in a strict partial order."""

    pairs: LabelRelation  # (lower, higher) meaning lower < higher
    order: LabelRelation  # transitive closure of pairs

    variant = "ordered"

    def initial_memory(self) -> None:
        return None

    def permits(self, memory, state, candidate, enabled_labels, concurrency) -> bool:
        return memory is None or (memory, candidate) not in self.order

    def advance(self, memory, applied):
        return memory if applied == EPSILON_LABEL else applied

    def describe_memory(self, memory) -> str:
        return "start" if memory is None else f"after {memory}"


@dataclass(frozen=True)
class ProgrammedRegulation:
    """After each rule, allow only its declared successor rules."""

    successors: Mapping[str, frozenset[str]]

    variant = "programmed"

    def initial_memory(self) -> None:
        return None

    def permits(self, memory, state, candidate, enabled_labels, concurrency) -> bool:
        return memory is None or candidate in self.successors[memory]

    def advance(self, memory, applied):
        return memory if applied == EPSILON_LABEL else applied

    def describe_memory(self, memory) -> str:
        return "start" if memory is None else f"after {memory}"


@dataclass(frozen=True)
class ConditionalRegulation:
    """Block a rule while one of its prohibited contexts sits in the state."""

    prohibited: Mapping[str, tuple[Multiset, ...]]

    variant = "conditional"

    def initial_memory(self) -> None:
        return None

    def permits(self, memory, state, candidate, enabled_labels, concurrency) -> bool:
        return all(not context.issubset(state) for context in self.prohibited.get(candidate, ()))

    def advance(self, memory, applied):
        return memory

    def describe_memory(self, memory) -> str:
        return ""


@dataclass(frozen=True)
class ConcurrentFreeRegulation:
    """Among enabled concurrent rules, admit only the prioritised one."""

    priority: LabelRelation  # (high, low)

    variant = "concurrent-free"

    def initial_memory(self) -> None:
        return None

    def permits(self, memory, state, candidate, enabled_labels, concurrency) -> bool:
        return not any(
            low == candidate and high in enabled_labels and (high, candidate) in concurrency
            for high, low in self.priority
        )

    def advance(self, memory, applied):
        return memory

    def describe_memory(self, memory) -> str:
        return ""


Regulation = (
    RegularRegulation
    | OrderedRegulation
    | ProgrammedRegulation
    | ConditionalRegulation
    | ConcurrentFreeRegulation
)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def _known_label(label: Any, known: frozenset[str], where: str) -> str:
    if not isinstance(label, str) or label == EPSILON_LABEL or label not in known:
        raise RegulationError(f"unknown rule label {label!r} in {where}")
    return label


def _label_pairs(raw: Any, known: frozenset[str], where: str) -> frozenset[tuple[str, str]]:
    if not isinstance(raw, (list, tuple)):
        raise RegulationError(f"{where} must be a list of label pairs")
    pairs = set()
    for entry in raw:
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise RegulationError(f"{where} entries must be pairs, got {entry!r}")
        pairs.add((_known_label(entry[0], known, where), _known_label(entry[1], known, where)))
    return frozenset(pairs)


def _transitive_closure(pairs: frozenset[tuple[str, str]]) -> frozenset[tuple[str, str]]:
    closure = set(pairs)
    changed = True
    while changed:
        changed = False
        for (a, b), (c, d) in itertools.product(tuple(closure), repeat=2):
            if b == c and (a, d) not in closure:
                closure.add((a, d))
                changed = True
    return frozenset(closure)


def compile_regulation(config: Mapping[str, Any], labels: Collection[str]) -> Regulation:
    """Validate and compile a JSON-shaped regulation description.

    ``labels`` is the rule-label universe of the model the regulation will
    run against; any other label in the payload is rejected.
    """
    if not isinstance(config, Mapping) or "type" not in config:
        raise RegulationError("regulation config must be an object with a 'type' field")
    known = frozenset(labels)
    kind = config["type"]

    if kind == "regular":
        expression = config.get("expression")
        if not isinstance(expression, str):
            raise RegulationError("regular regulation needs an 'expression' string")
        return RegularRegulation(expression, compile_label_regex(expression, known))

    if kind == "ordered":
        pairs = _label_pairs(config.get("pairs"), known, "'pairs'")
        order = _transitive_closure(pairs)
        reflexive = sorted({a for a, b in order if a == b})
        if reflexive:
            raise RegulationError(
                "'pairs' is not a strict partial order (cycle through "
                + ", ".join(reflexive)
                + ")"
            )
        return OrderedRegulation(pairs, order)

    if kind == "programmed":
        raw = config.get("successors")
        if not isinstance(raw, Mapping):
            raise RegulationError("programmed regulation needs a 'successors' mapping")
        successors: dict[str, frozenset[str]] = {}
        for label, next_labels in raw.items():
            _known_label(label, known, "'successors'")
            if not isinstance(next_labels, (list, tuple)):
                raise RegulationError(f"successor set of {label!r} must be a list")
            successors[label] = frozenset(
                _known_label(nl, known, f"successors of {label!r}") for nl in next_labels
            )
        missing = sorted(known - set(successors))
        if missing:
            warnings.warn(
                "programmed regulation lists no successors for "
                + ", ".join(missing)
                + "; defaulting to all rules",
                RegulationWarning,
                stacklevel=2,
            )
            for label in missing:
                successors[label] = known
        return ProgrammedRegulation(successors)

    if kind == "conditional":
        raw = config.get("prohibited")
        if not isinstance(raw, Mapping):
            raise RegulationError("conditional regulation needs a 'prohibited' mapping")
        prohibited: dict[str, tuple[Multiset, ...]] = {}
        for label, contexts in raw.items():
            _known_label(label, known, "'prohibited'")
            if not isinstance(contexts, (list, tuple)):
                raise RegulationError(f"prohibited contexts of {label!r} must be a list")
            parsed = []
            for text in contexts:
                try:
                    parsed.append(parse_multiset(text))
                except Exception as exc:
                    raise RegulationError(
                        f"invalid prohibited context {text!r} for {label!r}: {exc}"
                    ) from exc
            prohibited[label] = tuple(parsed)
        return ConditionalRegulation(prohibited)

    if kind == "concurrent-free":
        priority = _label_pairs(config.get("priority"), known, "'priority'")
        selfish = sorted({high for high, low in priority if high == low})
        if selfish:
            raise RegulationError(
                "priority pairs must relate distinct rules: " + ", ".join(selfish)
            )
        return ConcurrentFreeRegulation(priority)

    raise RegulationError(f"unknown regulation type {kind!r}")


# ---------------------------------------------------------------------------
# Binding to a model and regulated exploration
# ---------------------------------------------------------------------------

def concurrency_relation(mrs: Mrs) -> LabelRelation:
    """Label pairs whose groundings consume at least one common agent."""
    pres: dict[str, list[Multiset]] = {}
    for rule in mrs.rules:
        pres.setdefault(rule.label, []).append(rule.pre)
    related: set[tuple[str, str]] = set()
    labels = sorted(pres)
    for a, b in itertools.combinations_with_replacement(labels, 2):
        if any(bool(pa.intersection(pb)) for pa in pres[a] for pb in pres[b]):
            related.add((a, b))
            related.add((b, a))
    return frozenset(related)


class RegulationGuard:
    """A regulation bound to a concrete rule universe.

    With ``regulation=None`` the guard is neutral: everything is
    permitted and the memory stays ``None``.
    """

    def __init__(self, regulation: Regulation | None, concurrency: LabelRelation = frozenset()):
        self.regulation = regulation
        self.concurrency = concurrency

    def initial_memory(self) -> Hashable:
        return None if self.regulation is None else self.regulation.initial_memory()

    def permits(
        self, memory: Hashable, state: Multiset, candidate: str, enabled_labels: frozenset[str]
    ) -> bool:
        if self.regulation is None:
            return True
        return self.regulation.permits(memory, state, candidate, enabled_labels, self.concurrency)

    def advance(self, memory: Hashable, applied: str) -> Hashable:
        return memory if self.regulation is None else self.regulation.advance(memory, applied)

    def describe_memory(self, memory: Hashable) -> str:
        return "" if self.regulation is None else self.regulation.describe_memory(memory)


def make_guard(regulation: Regulation | None, model: BcslModel) -> RegulationGuard:
    """Bind a regulation to a model (grounding it when concurrency is needed)."""
    if isinstance(regulation, ConcurrentFreeRegulation):
        return RegulationGuard(regulation, concurrency_relation(build_mrs(model)))
    return RegulationGuard(regulation)


def _as_guard(regulation: Regulation | RegulationGuard | None, model: BcslModel) -> RegulationGuard:
    if isinstance(regulation, RegulationGuard):
        return regulation
    return make_guard(regulation, model)


def _product_successors(matcher: RuleMatcher, guard: RegulationGuard, stutter: bool):
    def successor_fn(node):
        state, memory = node
        base = matcher.successors(state)
        enabled_labels = frozenset(label for label, _ in base)
        out = [
            (label, (target, guard.advance(memory, label)))
            for label, target in base
            if guard.permits(memory, state, label, enabled_labels)
        ]
        if not out and stutter:
            return [(EPSILON_LABEL, node)]
        return out

    return successor_fn


def regulated_explore(
    model: BcslModel,
    regulation: Regulation | RegulationGuard | None,
    max_states: int = 100_000,
    max_depth: int = 1_000,
) -> Lts:
    """Product graph over (state, regulation memory) pairs.

    Successors are filtered by the regulation and the memory advances with
    every applied rule; nodes with no permitted successor get an ε
    self-loop.
    """
    matcher = RuleMatcher(model)
    guard = _as_guard(regulation, model)
    root = (model.init, guard.initial_memory())
    return explore(
        root, _product_successors(matcher, guard, stutter=True), max_states, max_depth
    )


def regulated_tree(
    model: BcslModel,
    regulation: Regulation | RegulationGuard | None,
    depth: int,
    max_nodes: int = 100_000,
) -> RunTree:
    """Depth-bounded unrolled tree of the regulated runs (ε edges omitted)."""
    matcher = RuleMatcher(model)
    guard = _as_guard(regulation, model)
    root = (model.init, guard.initial_memory())
    return unroll(root, _product_successors(matcher, guard, stutter=False), depth, max_nodes)


def product_state_text(node, guard: RegulationGuard) -> str:
    """Readable product-node text: the state plus the memory, when any."""
    state, memory = node
    described = guard.describe_memory(memory)
    return f"{state} | {described}" if described else str(state)
