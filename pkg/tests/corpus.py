"""Seeded generator of small random models for the conformance corpus.

Name classes are fixed and disjoint so generated text always parses:
atomics A, B, C (at most two features each), structures X, Y,
compartments c, d.  Patterns use partial compositions, so expansion and
instantiation get exercised heavily; grounding stays far below 10^4
reactions per rule.
"""

from __future__ import annotations

import random

FEATURES = {"A": ["u", "v"], "B": ["u", "v"], "C": ["v", "w"]}
STRUCTURE_POOLS = {"X": ["A", "B"], "Y": ["B", "C"]}
COMPARTMENTS = ["c", "d"]


def _atomic(rng: random.Random, name: str) -> str:
    return f"{name}{{{rng.choice(FEATURES[name])}}}"


def _structure(rng: random.Random, name: str, full: bool) -> str:
    pool = STRUCTURE_POOLS[name]
    if full:
        members = pool
    else:
        members = [n for n in pool if rng.random() < 0.6]
    return f"{name}({','.join(_atomic(rng, n) for n in members)})"


def _component(rng: random.Random, full: bool) -> str:
    if rng.random() < 0.4:
        return _atomic(rng, rng.choice(sorted(FEATURES)))
    return _structure(rng, rng.choice(sorted(STRUCTURE_POOLS)), full)


def _agent(rng: random.Random, full: bool) -> str:
    n_components = 1 if rng.random() < 0.7 else 2
    chain = ".".join(_component(rng, full) for _ in range(n_components))
    return f"{chain}::{rng.choice(COMPARTMENTS)}"


def _pattern(rng: random.Random) -> str:
    n_agents = rng.choice([0, 1, 1, 1, 2])
    return " + ".join(_agent(rng, full=False) for _ in range(n_agents))


def random_model_text(seed: int) -> str:
    """One random model; deterministic for a given seed."""
    rng = random.Random(seed)
    lines = ["#! rules"]
    for i in range(rng.randint(1, 4)):
        lhs = _pattern(rng)
        rhs = _pattern(rng)
        lines.append(f"r{i} ~ {lhs} => {rhs}".replace("  ", " "))
    lines.append("#! inits")
    for _ in range(rng.randint(1, 3)):
        lines.append(f"{rng.randint(1, 2)} {_agent(rng, full=True)}")
    return "\n".join(lines) + "\n"
