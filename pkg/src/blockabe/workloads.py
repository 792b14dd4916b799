"""Access-tree generators for benchmarks, demos and randomized tests."""

from __future__ import annotations

import random
import string

from .policy import AccessTree, tree_from_spec


def attribute_names(count: int, prefix: str = "attr") -> list[str]:
    width = max(3, len(str(count - 1)))
    return [f"{prefix}{j:0{width}d}" for j in range(count)]


def layered_tree(gates: int, leaves: int, prefix: str = "attr") -> AccessTree:
    """A chain of ``gates`` gates with ``leaves`` leaves spread evenly over them.

    Each gate requires all of its own leaves; the next gate in the chain is
    its last child and is not needed to satisfy it. A key holding every
    attribute can therefore open every block without waiting for any other.
    """
    if gates < 1 or leaves < gates:
        raise ValueError("need at least one gate and one leaf per gate")
    names = attribute_names(leaves, prefix)
    counts = [leaves // gates + (1 if g < leaves % gates else 0) for g in range(gates)]
    starts = [sum(counts[:g]) for g in range(gates)]
    spec = None
    for g in reversed(range(gates)):
        kids: list = names[starts[g] : starts[g] + counts[g]]
        if spec is not None:
            kids.append(spec)
        spec = (counts[g], kids)
    return tree_from_spec(spec)


def ten_level_tree() -> AccessTree:
    """Ten gates, a hundred leaves: the experimental configuration used in the demos."""
    return layered_tree(10, 100)


def random_tree(
    rng: random.Random,
    max_leaves: int = 10,
    max_gates: int = 5,
    *,
    min_gates: int = 1,
    attributes: list[str] | None = None,
    distinct: bool = True,
) -> AccessTree:
    """Random threshold tree.

    With ``distinct`` every leaf carries its own attribute; otherwise leaves
    draw from ``attributes`` with repetition.
    """
    gates = rng.randint(min_gates, max_gates)
    parents = [None] + [rng.randrange(g) for g in range(1, gates)]
    child_gates = {g: [c for c in range(gates) if parents[c] == g] for g in range(gates)}
    childless = [g for g in range(gates) if not child_gates[g]]
    leaf_count = rng.randint(max(len(childless), 1), max(max_leaves, len(childless), 1))
    owner = list(childless) + [rng.randrange(gates) for _ in range(leaf_count - len(childless))]
    pool = attributes or list(string.ascii_uppercase)
    if distinct:
        if len(pool) < leaf_count:
            pool = attribute_names(leaf_count, "a")
        labels = rng.sample(pool, leaf_count)
    else:
        labels = [rng.choice(pool) for _ in range(leaf_count)]
    leaves_of = {g: [labels[n] for n, o in enumerate(owner) if o == g] for g in range(gates)}

    def build(g: int):
        kids: list = list(leaves_of[g]) + [build(c) for c in child_gates[g]]
        rng.shuffle(kids)
        return (rng.randint(1, len(kids)), kids)

    return tree_from_spec(build(0))
