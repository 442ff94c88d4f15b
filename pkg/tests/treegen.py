"""Deterministic random constituency-tree fixtures shared across tests."""

import random

LABELS = ["S", "NP", "VP", "PP", "ADJP", "X"]
TAGS = ["NN", "VB", "DT", "IN", "JJ"]
WORDS = ["a", "the", "cat", "dog", "ran", "saw", "big", "to", "home", "uh"]


def gen_tree_text(rng: random.Random, max_tokens: int = 12, max_depth: int = 6) -> str:
    """One bracketed sentence with 1..max_tokens leaves, depth <= max_depth."""
    budget = [rng.randint(1, max_tokens)]

    def leaf() -> str:
        budget[0] -= 1
        return f"({rng.choice(TAGS)} {rng.choice(WORDS)})"

    def build(depth: int) -> str:
        if budget[0] <= 0:
            return ""
        if depth >= max_depth - 1 or budget[0] == 1 or rng.random() < 0.35:
            return leaf()
        n_children = rng.randint(1, min(3, budget[0]))
        kids = []
        for _ in range(n_children):
            sub = build(depth + 1)
            if sub:
                kids.append(sub)
        if not kids:
            return leaf()
        return f"({rng.choice(LABELS)} {' '.join(kids)})"

    body = build(1)
    return f"(S {body})" if not body.startswith("(S") else body


def leftmost_derivation_productions(tree, k: int) -> list[str]:
    """Oracle: productions applied by a leftmost top-down derivation of
    the tree, stopped once word k has been generated.  Independent of the
    incomplete-subtree construction under test."""
    out = []
    emitted = [0]

    def rec(node) -> bool:
        # returns True once word k has been emitted
        if node.is_leaf:
            emitted[0] += 1
            return emitted[0] > k
        parts = [c.word if c.is_leaf else c.label for c in node.children]
        out.append(f"{node.label} -> {' '.join(parts)}")
        for c in node.children:
            if rec(c):
                return True
        return False

    rec(tree.root)
    return out
