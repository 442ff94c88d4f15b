"""Constituency trees, dependency graphs, and word timing for a story corpus.

Everything here is an immutable, validated parse structure: bracketed
(Penn-style) trees, CoNLL-U dependency graphs, and the per-token timing
that later drives TR alignment.  All ingest operations are pure
functions of their input text.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field, replace

# POS tags that mark punctuation in PTB / UD tagsets.
PUNCT_POS_TAGS = frozenset(
    {".", ",", ":", "``", "''", "-LRB-", "-RRB-", "HYPH", "NFP", "SYM", "PUNCT"}
)

TIMING_JITTER_SEC = 0.001  # transcript aligners emit sub-ms jitter; normalize it


class TreebankError(ValueError):
    """Base class for ingest/validation failures."""


class UnbalancedParens(TreebankError):
    def __init__(self, offset: int):
        super().__init__(f"unbalanced parentheses at byte offset {offset}")
        self.offset = offset


class EmptyNode(TreebankError):
    def __init__(self, offset: int):
        super().__init__(f"empty node at byte offset {offset}")
        self.offset = offset


class NoTokens(TreebankError):
    def __init__(self, offset: int):
        super().__init__(f"tree has no terminal tokens (byte offset {offset})")
        self.offset = offset


class MultipleRoots(TreebankError):
    pass


class DanglingHead(TreebankError):
    pass


class CycleDetected(TreebankError):
    pass


class CountMismatch(TreebankError):
    pass


class NonMonotonicTiming(TreebankError):
    pass


class SurfaceMismatch(TreebankError):
    pass


def surface_is_punct(surface: str) -> bool:
    """True when every character is Unicode punctuation (or a symbol dash)."""
    return bool(surface) and all(
        unicodedata.category(c).startswith("P") for c in surface
    )


@dataclass(frozen=True)
class Token:
    index: int
    surface: str
    pos: str = ""
    onset_sec: float = 0.0
    offset_sec: float = 0.0

    def __post_init__(self):
        if self.onset_sec < 0 or self.offset_sec < 0:
            raise TreebankError(f"negative timing on token {self.surface!r}")
        if self.onset_sec > self.offset_sec:
            raise TreebankError(
                f"onset {self.onset_sec} > offset {self.offset_sec} for {self.surface!r}"
            )

    @property
    def punct_by_surface(self) -> bool:
        return surface_is_punct(self.surface)

    @property
    def punct_by_pos(self) -> bool:
        return self.pos in PUNCT_POS_TAGS

    @property
    def is_punct(self) -> bool:
        return self.punct_by_surface or self.punct_by_pos


@dataclass(frozen=True)
class Sentence:
    id: int
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise TreebankError(f"sentence {self.id} is empty")
        for want, tok in enumerate(self.tokens):
            if tok.index != want:
                raise TreebankError(
                    f"sentence {self.id}: token indices not contiguous at {tok.index}"
                )
        onsets = [t.onset_sec for t in self.tokens]
        if any(b < a for a, b in zip(onsets, onsets[1:])):
            raise NonMonotonicTiming(f"sentence {self.id}: onsets decrease")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class TreeNode:
    """One constituency node.  Leaves carry the terminal word; internal
    nodes (including preterminals) carry a label and a token span [i, j)."""

    label: str
    children: list["TreeNode"] = field(default_factory=list)
    span: tuple[int, int] = (0, 0)
    word: str | None = None  # set on terminal leaves only

    @property
    def is_leaf(self) -> bool:
        return self.word is not None

    @property
    def is_preterminal(self) -> bool:
        return len(self.children) == 1 and self.children[0].is_leaf

    def leaves(self) -> list["TreeNode"]:
        if self.is_leaf:
            return [self]
        out: list[TreeNode] = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def walk(self):
        """Yield every node, pre-order."""
        yield self
        for c in self.children:
            yield from c.walk()


def tree_height(node: TreeNode) -> int:
    """0 for terminal leaves, 1 + max child height otherwise."""
    if node.is_leaf:
        return 0
    return 1 + max(tree_height(c) for c in node.children)


def node_depth_map(root: TreeNode) -> dict[int, int]:
    """id(node) -> distance from the root."""
    depths: dict[int, int] = {}

    def rec(n: TreeNode, d: int):
        depths[id(n)] = d
        for c in n.children:
            rec(c, d + 1)

    rec(root, 0)
    return depths


def normalize_label(raw: str) -> str:
    """Strip PTB functional annotations: "NP-SBJ" -> "NP", "S=2" -> "S".

    Labels that *start* with "-" (-LRB-, -NONE-) are kept verbatim.
    """
    if raw.startswith("-"):
        return raw
    return re.split(r"[-=]", raw, maxsplit=1)[0] or raw


@dataclass
class ConstituencyTree:
    root: TreeNode
    tokens: tuple[Token, ...]

    def __post_init__(self):
        leaves = self.root.leaves()
        if len(leaves) != len(self.tokens):
            raise TreebankError(
                f"{len(leaves)} leaves vs {len(self.tokens)} tokens"
            )
        for leaf, tok in zip(leaves, self.tokens):
            if leaf.word != tok.surface:
                raise SurfaceMismatch(
                    f"leaf {leaf.word!r} != token {tok.surface!r}"
                )
        _check_spans(self.root)

    def __len__(self) -> int:
        return len(self.tokens)


def _check_spans(node: TreeNode) -> tuple[int, int]:
    if node.is_leaf:
        return node.span
    lo, hi = node.children[0].span[0], node.children[-1].span[1]
    cursor = lo
    for c in node.children:
        ci, cj = _check_spans(c)
        if ci != cursor:
            raise TreebankError(f"child spans of {node.label} not contiguous")
        cursor = cj
    if node.span != (lo, hi):
        raise TreebankError(f"span of {node.label} is not the union of children")
    return node.span


_TOKEN_RE = re.compile(r"[^\s()]+")


def parse_bracketed(text: str) -> ConstituencyTree:
    """Parse one Penn-Treebank-style S-expression into a validated tree.

    Preterminal POS tags become the Token.pos of each leaf.  Functional
    annotations on labels are stripped (see normalize_label).
    """
    pos = 0
    n = len(text)
    counter = [0]

    def skip_ws():
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def parse_node() -> TreeNode:
        nonlocal pos
        skip_ws()
        if pos >= n or text[pos] != "(":
            raise UnbalancedParens(pos)
        open_at = pos
        pos += 1
        skip_ws()
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise EmptyNode(open_at)
        label = normalize_label(m.group(0))
        pos = m.end()
        children: list[TreeNode] = []
        word: str | None = None
        while True:
            skip_ws()
            if pos >= n:
                raise UnbalancedParens(pos)
            if text[pos] == ")":
                pos += 1
                break
            if text[pos] == "(":
                children.append(parse_node())
            else:
                m = _TOKEN_RE.match(text, pos)
                assert m is not None
                if word is not None or children:
                    raise EmptyNode(pos)  # mixed terminal/child content
                word = m.group(0)
                pos = m.end()
        if word is not None:
            k = counter[0]
            counter[0] += 1
            leaf = TreeNode(label="", span=(k, k + 1), word=word)
            return TreeNode(label=label, children=[leaf], span=(k, k + 1))
        if not children:
            raise EmptyNode(open_at)
        span = (children[0].span[0], children[-1].span[1])
        return TreeNode(label=label, children=children, span=span)

    skip_ws()
    root = parse_node()
    skip_ws()
    if pos != n:
        raise UnbalancedParens(pos)
    leaves = root.leaves()
    if not leaves:
        raise NoTokens(0)
    tokens = tuple(
        Token(index=i, surface=leaf.word, pos=_leaf_pos(root, i))
        for i, leaf in enumerate(leaves)
    )
    return ConstituencyTree(root=root, tokens=tokens)


def _leaf_pos(root: TreeNode, index: int) -> str:
    for node in root.walk():
        if node.is_preterminal and node.span == (index, index + 1):
            return node.label
    return ""


def serialize_tree(tree: ConstituencyTree) -> str:
    def rec(n: TreeNode) -> str:
        if n.is_leaf:
            return n.word or ""
        inner = " ".join(rec(c) for c in n.children)
        return f"({n.label} {inner})"

    return rec(tree.root)


@dataclass(frozen=True)
class DependencyEdge:
    head: int  # -1 for the synthetic ROOT
    dependent: int
    relation: str


@dataclass
class DependencyGraph:
    tokens: tuple[Token, ...]
    edges: tuple[DependencyEdge, ...]

    def __post_init__(self):
        n = len(self.tokens)
        if len(self.edges) != n:
            raise TreebankError(f"{len(self.edges)} edges for {n} tokens")
        heads: dict[int, int] = {}
        roots = []
        for e in self.edges:
            if e.dependent in heads:
                raise TreebankError(f"token {e.dependent} has two heads")
            if e.dependent == e.head:
                raise CycleDetected(f"self-loop at token {e.dependent}")
            if not (0 <= e.dependent < n):
                raise DanglingHead(f"dependent {e.dependent} out of range")
            if e.head != -1 and not (0 <= e.head < n):
                raise DanglingHead(f"head {e.head} out of range (n={n})")
            heads[e.dependent] = e.head
            if e.head == -1:
                roots.append(e.dependent)
        if len(roots) != 1:
            raise MultipleRoots(f"found {len(roots)} root tokens")
        # walking up from every token must reach ROOT without revisits
        for start in range(n):
            seen = set()
            cur = start
            while cur != -1:
                if cur in seen:
                    raise CycleDetected(f"cycle through token {cur}")
                seen.add(cur)
                cur = heads[cur]

    @property
    def root(self) -> int:
        return next(e.dependent for e in self.edges if e.head == -1)

    def incoming_relation(self, index: int) -> str:
        return next(e.relation for e in self.edges if e.dependent == index)


def parse_conllu(text: str) -> list[DependencyGraph]:
    """Parse CoNLL-U text into one validated DependencyGraph per block.

    Only ID, FORM, UPOS, HEAD, DEPREL are consumed; comment lines and
    multi-word / empty-node IDs are skipped.
    """
    graphs: list[DependencyGraph] = []
    block: list[list[str]] = []

    def flush():
        if not block:
            return
        toks = []
        edges = []
        for cols in block:
            idx = int(cols[0]) - 1
            head = int(cols[6]) - 1  # CoNLL-U HEAD=0 means root -> -1
            if head >= len(block):
                raise DanglingHead(
                    f"HEAD={head + 1} in a {len(block)}-token sentence"
                )
            toks.append(Token(index=idx, surface=cols[1], pos=cols[3]))
            edges.append(
                DependencyEdge(head=head, dependent=idx, relation=cols[7])
            )
        graphs.append(DependencyGraph(tokens=tuple(toks), edges=tuple(edges)))
        block.clear()

    for line in text.splitlines():
        line = line.strip("\n")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) == 1:
            cols = line.split()
        if len(cols) < 8:
            raise TreebankError(f"CoNLL-U line with {len(cols)} columns: {line!r}")
        if "-" in cols[0] or "." in cols[0]:
            continue  # multiword ranges / empty nodes carry no HEAD
        block.append(cols)
    flush()
    return graphs


@dataclass
class StimulusCorpus:
    sentences: tuple[Sentence, ...]
    trees: tuple[ConstituencyTree, ...]
    graphs: tuple[DependencyGraph, ...]
    run_duration_sec: float = 0.0

    def __post_init__(self):
        if not (len(self.trees) == len(self.graphs) == len(self.sentences)):
            raise TreebankError("sentences/trees/graphs counts differ")
        for sent, tree, graph in zip(self.sentences, self.trees, self.graphs):
            if len(tree) != len(sent) or len(graph.tokens) != len(sent):
                raise CountMismatch(
                    f"sentence {sent.id}: token counts differ across structures"
                )
        if self.run_duration_sec:
            for sent in self.sentences:
                for tok in sent.tokens:
                    if tok.offset_sec > self.run_duration_sec + TIMING_JITTER_SEC:
                        raise TreebankError(
                            f"token {tok.surface!r} ends after run end"
                        )

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def all_tokens(self) -> list[Token]:
        return [t for s in self.sentences for t in s.tokens]

    def token_onsets(self) -> list[float]:
        return [t.onset_sec for t in self.all_tokens()]


def corpus_from_parses(
    trees: list[ConstituencyTree],
    graphs: list[DependencyGraph],
    run_duration_sec: float = 0.0,
) -> StimulusCorpus:
    """Assemble a corpus from parallel tree / graph lists (no timing yet)."""
    if len(trees) != len(graphs):
        raise CountMismatch(f"{len(trees)} trees vs {len(graphs)} graphs")
    sentences = []
    for sid, tree in enumerate(trees):
        sentences.append(Sentence(id=sid, tokens=tree.tokens))
    return StimulusCorpus(
        sentences=tuple(sentences),
        trees=tuple(trees),
        graphs=tuple(graphs),
        run_duration_sec=run_duration_sec,
    )


def load_timing(tsv_text: str, corpus: StimulusCorpus) -> StimulusCorpus:
    """Attach per-token onsets/offsets from a timing TSV.

    Columns: word, onset_sec, offset_sec, sentence_id, token_id.  Row
    order must follow corpus order; jitter below 1 ms between adjacent
    onsets is clamped to monotone, larger regressions are errors.
    """
    rows = []
    for lineno, line in enumerate(tsv_text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.rstrip("\n").split("\t")
        if cols[0] == "word":  # header
            continue
        if len(cols) < 5:
            raise TreebankError(f"timing line {lineno}: expected 5 columns")
        rows.append(
            (cols[0], float(cols[1]), float(cols[2]), int(cols[3]), int(cols[4]))
        )
    flat = corpus.all_tokens()
    if len(rows) != len(flat):
        raise CountMismatch(
            f"{len(rows)} timing rows for {len(flat)} corpus tokens"
        )
    new_sentences = []
    cursor = 0
    prev_onset = 0.0
    for sent in corpus.sentences:
        toks = []
        for tok in sent.tokens:
            word, onset, offset, sid, tid = rows[cursor]
            cursor += 1
            if word != tok.surface:
                raise SurfaceMismatch(
                    f"timing word {word!r} vs corpus token {tok.surface!r} "
                    f"(sentence {sent.id}, token {tok.index})"
                )
            if sid != sent.id or tid != tok.index:
                raise CountMismatch(
                    f"timing row ids ({sid},{tid}) vs corpus ({sent.id},{tok.index})"
                )
            if onset < prev_onset:
                if prev_onset - onset <= TIMING_JITTER_SEC:
                    onset = prev_onset
                else:
                    raise NonMonotonicTiming(
                        f"onset {onset} before previous {prev_onset} "
                        f"(sentence {sent.id}, token {tok.index})"
                    )
            if offset < onset:
                if onset - offset <= TIMING_JITTER_SEC:
                    offset = onset
                else:
                    raise NonMonotonicTiming(
                        f"offset {offset} before onset {onset}"
                    )
            prev_onset = onset
            toks.append(replace(tok, onset_sec=onset, offset_sec=offset))
        new_sentences.append(Sentence(id=sent.id, tokens=tuple(toks)))
    new_trees = [
        ConstituencyTree(root=t.root, tokens=s.tokens)
        for t, s in zip(corpus.trees, new_sentences)
    ]
    new_graphs = [
        DependencyGraph(tokens=s.tokens, edges=g.edges)
        for g, s in zip(corpus.graphs, new_sentences)
    ]
    duration = corpus.run_duration_sec or (
        max(t.offset_sec for t in new_sentences[-1].tokens) if new_sentences else 0.0
    )
    return StimulusCorpus(
        sentences=tuple(new_sentences),
        trees=tuple(new_trees),
        graphs=tuple(new_graphs),
        run_duration_sec=duration,
    )


def load_corpus(
    trees_path,
    conllu_path,
    timing_path=None,
    run_duration_sec: float = 0.0,
) -> StimulusCorpus:
    """Read bracketed-tree + CoNLL-U files (one story) and merge timing."""
    with open(trees_path, encoding="utf-8") as fh:
        tree_lines = [ln for ln in fh if ln.strip()]
    trees = [parse_bracketed(ln.strip()) for ln in tree_lines]
    with open(conllu_path, encoding="utf-8") as fh:
        graphs = parse_conllu(fh.read())
    corpus = corpus_from_parses(trees, graphs, run_duration_sec)
    if timing_path is not None:
        with open(timing_path, encoding="utf-8") as fh:
            corpus = load_timing(fh.read(), corpus)
    return corpus
