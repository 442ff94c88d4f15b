"""Word-level feature spaces built from parse structures.

Covers the punctuation (PU), complexity-metric (CM), and POS+dependency
one-hot (PD) spaces, the complete/incomplete constituency-subtree
embeddings (CC, CI), and PCA reduction for ingested contextual
embeddings (SEM).
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .treebank import (
    ConstituencyTree,
    StimulusCorpus,
    TreeNode,
    node_depth_map,
)

log = logging.getLogger(__name__)

SPACE_NAMES = ("PU", "CM", "PD", "CC", "CI", "INC", "DEP", "SEM")

# fixed 12-symbol punctuation alphabet; everything else maps to "other"
PUNCT_ALPHABET = (".", ",", ";", ":", "!", "?", '"', "'", "—", "(", ")", "other")

_PUNCT_CLASS = {
    ".": ".", "…": ".",
    ",": ",",
    ";": ";",
    ":": ":",
    "!": "!",
    "?": "?",
    '"': '"', "“": '"', "”": '"', "`": '"',
    "'": "'", "‘": "'", "’": "'",
    "-": "—", "–": "—", "—": "—",
    "(": "(", "[": "(", "{": "(",
    ")": ")", "]": ")", "}": ")",
}


class FeatureError(ValueError):
    pass


class DegenerateInput(FeatureError):
    pass


def config_hash(payload: dict) -> str:
    """Stable short hash of a feature-construction config."""
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class FeatureMatrix:
    space: str
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise FeatureError(f"{self.space}: values must be 2-D")
        if self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise FeatureError(f"{self.space}: empty matrix {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise FeatureError(f"{self.space}: non-finite values")
        if self.space not in SPACE_NAMES:
            raise FeatureError(f"unknown space {self.space!r}")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SubtreeEncodingConfig:
    dim: int = 250
    mode: str = "hashed_production_counts"  # or "seeded_random_projection"
    seed: int = 0
    max_depth: int | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise FeatureError("dim must be >= 1")
        if self.mode not in ("hashed_production_counts", "seeded_random_projection"):
            raise FeatureError(f"unknown mode {self.mode!r}")

    def payload(self) -> dict:
        return {
            "dim": self.dim,
            "mode": self.mode,
            "seed": self.seed,
            "max_depth": self.max_depth,
        }


class FrequencyTable:
    """Case-folded word -> occurrences per billion; missing words fall
    back to 1 per billion (log10 = 0) with a logged warning."""

    def __init__(self, entries: dict[str, float]):
        self._table: dict[str, float] = {}
        for word, per_billion in entries.items():
            if per_billion <= 0:
                raise FeatureError(f"non-positive frequency for {word!r}")
            self._table[word.casefold()] = float(per_billion)
        self._warned: set[str] = set()

    @classmethod
    def from_tsv(cls, text: str) -> "FrequencyTable":
        entries = {}
        for line in text.splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            word, value = line.rstrip("\n").split("\t")[:2]
            entries[word] = float(value)
        return cls(entries)

    def per_billion(self, word: str) -> float:
        key = word.casefold()
        hit = self._table.get(key)
        if hit is None:
            if key not in self._warned:
                log.warning("no frequency for %r; using 1 per billion", word)
                self._warned.add(key)
            return 1.0
        return hit

    def log_frequency(self, word: str) -> float:
        return math.log10(self.per_billion(word))


# ---------------------------------------------------------------------------
# complete / incomplete subtrees


def complete_subtree(tree: ConstituencyTree, k: int) -> TreeNode:
    """Largest-height node whose leaves all lie in the seen prefix [0, k]
    and that contains word k.  Height ties go to the node nearest the
    root.  A preterminal always qualifies, so this is total."""
    n = len(tree.tokens)
    if not 0 <= k < n:
        raise FeatureError(f"token index {k} out of range [0, {n})")
    depths = node_depth_map(tree.root)
    best: TreeNode | None = None
    best_key: tuple[int, int] | None = None
    for node in tree.root.walk():
        if node.is_leaf:
            continue
        i, j = node.span
        if i <= k < j and j <= k + 1:  # span inside [0, k], contains k
            from .treebank import tree_height

            key = (tree_height(node), -depths[id(node)])
            if best_key is None or key > best_key:
                best, best_key = node, key
    assert best is not None
    return best


@dataclass
class PartialNode:
    """Node of a prefix-incomplete tree.  Open nodes are constituents
    whose expansion lies entirely beyond the seen prefix."""

    label: str
    children: list["PartialNode"] = field(default_factory=list)
    word: str | None = None
    is_open: bool = False

    @property
    def is_leaf(self) -> bool:
        return self.word is not None

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


def incomplete_subtree(tree: ConstituencyTree, k: int) -> PartialNode:
    """Minimal top-down closure deriving words 0..k from the root.

    A node is expanded iff its leftmost leaf index is <= k; unexpanded
    right siblings stay as open nonterminals.
    """
    n = len(tree.tokens)
    if not 0 <= k < n:
        raise FeatureError(f"token index {k} out of range [0, {n})")

    def rec(node: TreeNode) -> PartialNode:
        if node.is_leaf:
            return PartialNode(label="", word=node.word)
        if node.span[0] > k:
            return PartialNode(label=node.label, is_open=True)
        return PartialNode(
            label=node.label, children=[rec(c) for c in node.children]
        )

    return rec(tree.root)


def productions(node: TreeNode | PartialNode, mask_open: bool = False) -> list[str]:
    """Production strings of every expanded node, pre-order.

    Lexical rules render as "TAG -> word".  With mask_open, children that
    are open nonterminals render as "?"; otherwise their true labels are
    kept (that form is monotone over growing prefixes).
    """
    out: list[str] = []
    for nd in node.walk():
        if nd.is_leaf or getattr(nd, "is_open", False):
            continue
        if not nd.children:
            continue
        parts = []
        for c in nd.children:
            if c.is_leaf:
                parts.append(c.word)
            elif mask_open and getattr(c, "is_open", False):
                parts.append("?")
            else:
                parts.append(c.label)
        out.append(f"{nd.label} -> {' '.join(parts)}")
    return out


def count_internal_nodes(tree: ConstituencyTree) -> int:
    return sum(1 for n in tree.root.walk() if not n.is_leaf)


# ---------------------------------------------------------------------------
# subtree encoding


def _hash_bucket(item: str, seed: int, dim: int) -> int:
    digest = hashlib.blake2b(
        item.encode(), digest_size=8, key=seed.to_bytes(8, "little")
    ).digest()
    return int.from_bytes(digest, "little") % dim


def hashed_counts(items: list[str], cfg: SubtreeEncodingConfig) -> np.ndarray:
    vec = np.zeros(cfg.dim, dtype=np.float64)
    for item in items:
        vec[_hash_bucket(item, cfg.seed, cfg.dim)] += 1.0
    return vec


def _projection_vector(item: str, cfg: SubtreeEncodingConfig) -> np.ndarray:
    digest = hashlib.blake2b(
        item.encode(), digest_size=8, key=(cfg.seed ^ 0x9E3779B9).to_bytes(8, "little")
    ).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    return rng.standard_normal(cfg.dim) / math.sqrt(cfg.dim)


def encode_subtree(
    sub: TreeNode | PartialNode | None, cfg: SubtreeEncodingConfig
) -> np.ndarray:
    """Deterministic vectorization of a (partial) subtree's productions."""
    if sub is None:
        return np.zeros(cfg.dim, dtype=np.float64)
    prods = productions(sub, mask_open=True)
    if cfg.max_depth is not None:
        prods = prods[: max(0, cfg.max_depth)]
    if cfg.mode == "hashed_production_counts":
        return hashed_counts(prods, cfg)
    vec = np.zeros(cfg.dim, dtype=np.float64)
    for p in prods:
        vec += _projection_vector(p, cfg)
    return vec


# ---------------------------------------------------------------------------
# corpus-level feature builders


def classify_punct(surface: str) -> str:
    return _PUNCT_CLASS.get(surface[0], "other") if surface else "other"


def punctuation_features(
    corpus: StimulusCorpus, mark: str = "previous"
) -> FeatureMatrix:
    """PU space: one-hot of the punctuation type adjacent to each token.

    mark="previous" (default) marks the word a punctuation token follows;
    mark="self" marks the punctuation-bearing token itself.
    """
    if mark not in ("previous", "self"):
        raise FeatureError(f"unknown mark mode {mark!r}")
    idx = {sym: i for i, sym in enumerate(PUNCT_ALPHABET)}
    rows = np.zeros((corpus.n_tokens, len(PUNCT_ALPHABET)), dtype=np.float64)
    r = 0
    for sent in corpus.sentences:
        for i, tok in enumerate(sent.tokens):
            if mark == "self":
                if tok.is_punct:
                    rows[r, idx[classify_punct(tok.surface)]] = 1.0
            else:
                nxt = sent.tokens[i + 1] if i + 1 < len(sent.tokens) else None
                if nxt is not None and nxt.is_punct:
                    rows[r, idx[classify_punct(nxt.surface)]] = 1.0
            r += 1
    meta = {
        "alphabet": list(PUNCT_ALPHABET),
        "mark": mark,
        "config_hash": config_hash({"space": "PU", "mark": mark}),
    }
    return FeatureMatrix(space="PU", values=rows, meta=meta)


def complexity_metrics(
    corpus: StimulusCorpus, freq: FrequencyTable
) -> FeatureMatrix:
    """CM space: node count, word length, log10 word frequency."""
    rows = np.zeros((corpus.n_tokens, 3), dtype=np.float64)
    r = 0
    for sent, tree in zip(corpus.sentences, corpus.trees):
        closes = np.zeros(len(sent), dtype=np.int64)
        for node in tree.root.walk():
            if not node.is_leaf:
                closes[node.span[1] - 1] += 1
        for i, tok in enumerate(sent.tokens):
            rows[r, 0] = closes[i]
            rows[r, 1] = len(tok.surface)
            rows[r, 2] = freq.log_frequency(tok.surface)
            r += 1
    meta = {
        "columns": ["node_count", "word_length", "log10_word_frequency"],
        "config_hash": config_hash({"space": "CM"}),
    }
    return FeatureMatrix(space="CM", values=rows, meta=meta)


def pos_dep_features(corpus: StimulusCorpus) -> FeatureMatrix:
    """PD space: one-hot POS tag concatenated with one-hot incoming
    dependency relation; alphabets collected from the corpus."""
    pos_tags = sorted({t.pos for s in corpus.sentences for t in s.tokens})
    relations = sorted({e.relation for g in corpus.graphs for e in g.edges})
    pos_idx = {p: i for i, p in enumerate(pos_tags)}
    rel_idx = {rel: i for i, rel in enumerate(relations)}
    dim = len(pos_tags) + len(relations)
    rows = np.zeros((corpus.n_tokens, dim), dtype=np.float64)
    r = 0
    for sent, graph in zip(corpus.sentences, corpus.graphs):
        for tok in sent.tokens:
            rows[r, pos_idx[tok.pos]] = 1.0
            rel = graph.incoming_relation(tok.index)
            rows[r, len(pos_tags) + rel_idx[rel]] = 1.0
            r += 1
    meta = {
        "pos_alphabet": pos_tags,
        "relation_alphabet": relations,
        "config_hash": config_hash(
            {"space": "PD", "pos": pos_tags, "rel": relations}
        ),
    }
    return FeatureMatrix(space="PD", values=rows, meta=meta)


def cc_features(corpus: StimulusCorpus, cfg: SubtreeEncodingConfig) -> FeatureMatrix:
    """CC space: encoding of the largest subtree completed by each word."""
    rows = np.zeros((corpus.n_tokens, cfg.dim), dtype=np.float64)
    r = 0
    for tree in corpus.trees:
        for k in range(len(tree.tokens)):
            rows[r] = encode_subtree(complete_subtree(tree, k), cfg)
            r += 1
    meta = {"config_hash": config_hash({"space": "CC", **cfg.payload()})}
    return FeatureMatrix(space="CC", values=rows, meta=meta)


def ci_features(corpus: StimulusCorpus, cfg: SubtreeEncodingConfig) -> FeatureMatrix:
    """CI space: encoding of the prefix-incomplete tree after each word."""
    rows = np.zeros((corpus.n_tokens, cfg.dim), dtype=np.float64)
    r = 0
    for tree in corpus.trees:
        for k in range(len(tree.tokens)):
            rows[r] = encode_subtree(incomplete_subtree(tree, k), cfg)
            r += 1
    meta = {"config_hash": config_hash({"space": "CI", **cfg.payload()})}
    return FeatureMatrix(space="CI", values=rows, meta=meta)


# ---------------------------------------------------------------------------
# PCA


def pca_fit(values: np.ndarray, dim: int):
    """Mean-center and project onto the top principal components.

    Returns (scores, components, mean, explained_variance).  The kept
    dimension is min(dim, rows - 1, numerical rank).
    """
    X = np.asarray(values, dtype=np.float64)
    n = X.shape[0]
    mean = X.mean(axis=0)
    Xc = X - mean
    if not np.any(np.abs(Xc) > 1e-12):
        raise DegenerateInput("input has zero variance")
    u, s, vt = np.linalg.svd(Xc, full_matrices=False)
    rank = int(np.sum(s > max(1e-10 * s[0], 1e-12)))
    keep = min(dim, max(1, n - 1), rank)
    scores = u[:, :keep] * s[:keep]
    components = vt[:keep].T  # columns are components
    explained = (s[:keep] ** 2) / max(1, n - 1)
    return scores, components, mean, explained


def pca_reduce(X: FeatureMatrix, dim: int = 250) -> FeatureMatrix:
    scores, components, mean, explained = pca_fit(X.values, dim)
    if scores.shape[1] < dim:
        log.info(
            "%s: PCA kept %d of %d requested dims", X.space, scores.shape[1], dim
        )
    meta = dict(X.meta)
    meta.update(
        {
            "pca_requested_dim": dim,
            "pca_dim": scores.shape[1],
            "pca_components": components,
            "pca_mean": mean,
            "pca_explained_variance": explained,
            "config_hash": config_hash(
                {"space": X.space, "pca_dim": dim, "parent": X.meta.get("config_hash")}
            ),
        }
    )
    return FeatureMatrix(space=X.space, values=scores, meta=meta)
