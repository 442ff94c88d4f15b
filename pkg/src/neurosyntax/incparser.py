"""Incremental top-down PCFG parsing with beam search.

The grammar is induced from the stimulus treebank.  Parsing proceeds
left to right: each derivation keeps a stack of pending symbols
(leftmost on top) and expands top-down until it can scan the next word.
Beam states after each word feed the INC feature space.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .features import FeatureMatrix, SubtreeEncodingConfig, config_hash, hashed_counts
from .treebank import ConstituencyTree, StimulusCorpus

log = logging.getLogger(__name__)

UNK = "<UNK>"
DEFAULT_BEAM_WIDTH = 10
# top-down expansion diverges on left recursion; bound work per scanned word
MAX_EXPANSIONS_PER_WORD = 25


class ParserError(ValueError):
    pass


class EmptyTreebank(ParserError):
    pass


class BeamExhausted(ParserError):
    pass


@dataclass(frozen=True)
class Rule:
    lhs: str
    rhs: tuple[str, ...]
    prob: float

    def __str__(self) -> str:
        return f"{self.lhs} -> {' '.join(self.rhs)}"


class Pcfg:
    """Probabilistic context-free grammar.

    A rule whose right side is a single terminal is lexical (used for
    scanning); all other rules are expansions.  Terminals are exactly the
    right-side symbols that never occur as a left side.
    """

    def __init__(self, rules: list[Rule], start: str = "S"):
        if not rules:
            raise EmptyTreebank("grammar has no rules")
        self.start = start
        self.rules_by_lhs: dict[str, list[Rule]] = {}
        for rule in rules:
            if not 0.0 < rule.prob <= 1.0 + 1e-12:
                raise ParserError(f"probability {rule.prob} out of (0, 1] for {rule}")
            self.rules_by_lhs.setdefault(rule.lhs, []).append(rule)
        lhs_set = set(self.rules_by_lhs)
        self.nonterminals = lhs_set
        self.terminals = {
            sym
            for rule in rules
            for sym in rule.rhs
            if sym not in lhs_set
        }
        for lhs, lhs_rules in self.rules_by_lhs.items():
            total = sum(r.prob for r in lhs_rules)
            if abs(total - 1.0) > 1e-9:
                raise ParserError(f"{lhs} rules sum to {total}, not 1")
        self.lexical: dict[str, list[Rule]] = {}
        self.expansions: dict[str, list[Rule]] = {}
        for lhs, lhs_rules in self.rules_by_lhs.items():
            for rule in lhs_rules:
                is_lex = len(rule.rhs) == 1 and rule.rhs[0] in self.terminals
                bucket = self.lexical if is_lex else self.expansions
                bucket.setdefault(lhs, []).append(rule)
        self.preterminals = set(self.lexical)

    @property
    def rules(self) -> list[Rule]:
        return [r for lhs_rules in self.rules_by_lhs.values() for r in lhs_rules]

    def map_word(self, word: str) -> str:
        if word in self.terminals:
            return word
        if UNK in self.terminals:
            return UNK
        raise BeamExhausted(f"word {word!r} not in vocabulary and no {UNK} rule")

    def dumps(self) -> str:
        lines = []
        for lhs in sorted(self.rules_by_lhs):
            for rule in sorted(self.rules_by_lhs[lhs], key=lambda r: r.rhs):
                lines.append("\t".join([rule.lhs, *rule.rhs, repr(rule.prob)]))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, start: str = "S") -> "Pcfg":
        rules = []
        for line in text.splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 3:
                raise ParserError(f"bad grammar line: {line!r}")
            rules.append(
                Rule(lhs=fields[0], rhs=tuple(fields[1:-1]), prob=float(fields[-1]))
            )
        return cls(rules, start=start)


def induce_pcfg(
    trees: list[ConstituencyTree],
    smoothing_k: float = 0.0,
    start: str = "S",
    add_unk: bool = True,
) -> Pcfg:
    """Estimate rule probabilities from a treebank with add-k smoothing:
    p = (count + k) / (lhs_total + k * n_alternatives).

    With add_unk, each preterminal gains an UNK lexical rule whose count
    is the number of hapax tokens it dominates (uniform 1 if the corpus
    has no hapax words).
    """
    if not trees:
        raise EmptyTreebank("no trees to induce from")
    counts: dict[str, dict[tuple[str, ...], float]] = {}
    word_freq: dict[str, int] = {}

    def bump(lhs: str, rhs: tuple[str, ...], by: float = 1.0):
        counts.setdefault(lhs, {})[rhs] = counts.setdefault(lhs, {}).get(rhs, 0.0) + by

    for tree in trees:
        for node in tree.root.walk():
            if node.is_leaf:
                continue
            rhs = tuple(
                c.word if c.is_leaf else c.label for c in node.children
            )
            bump(node.label, rhs)
        for tok in tree.tokens:
            word_freq[tok.surface] = word_freq.get(tok.surface, 0) + 1

    if add_unk:
        hapax = {w for w, c in word_freq.items() if c == 1}
        unk_added = False
        for tree in trees:
            for node in tree.root.walk():
                if node.is_preterminal and node.children[0].word in hapax:
                    bump(node.label, (UNK,))
                    unk_added = True
        if not unk_added:
            preterms = {
                n.label
                for tree in trees
                for n in tree.root.walk()
                if n.is_preterminal
            }
            for label in sorted(preterms):
                bump(label, (UNK,))

    rules = []
    for lhs, alts in counts.items():
        total = sum(alts.values())
        n_alt = len(alts)
        for rhs, count in alts.items():
            prob = (count + smoothing_k) / (total + smoothing_k * n_alt)
            rules.append(Rule(lhs=lhs, rhs=rhs, prob=prob))
    return Pcfg(rules, start=start)


@dataclass(frozen=True)
class Derivation:
    """Partial top-down derivation: pending symbols (leftmost last, so
    the next symbol to rewrite is stack[-1]) plus applied rules."""

    stack: tuple[str, ...]
    applied: tuple[Rule, ...]
    logp: float

    def sort_key(self):
        return (-self.logp, tuple(str(r) for r in self.applied), self.stack)


@dataclass
class Beam:
    derivations: list[Derivation]
    width: float = DEFAULT_BEAM_WIDTH  # math.inf for exhaustive mode

    def __post_init__(self):
        if self.width != math.inf and len(self.derivations) > self.width:
            raise ParserError("beam over width")
        logps = [d.logp for d in self.derivations]
        if any(b > a for a, b in zip(logps, logps[1:])):
            raise ParserError("beam not sorted by descending log-probability")

    def __len__(self) -> int:
        return len(self.derivations)


def initial_beam(g: Pcfg, width: float = DEFAULT_BEAM_WIDTH) -> Beam:
    return Beam(
        derivations=[Derivation(stack=(g.start,), applied=(), logp=0.0)],
        width=width,
    )


def beam_advance(
    beam: Beam,
    word: str,
    g: Pcfg,
    max_expansions: int = MAX_EXPANSIONS_PER_WORD,
) -> Beam:
    """Expand each derivation's leftmost pending symbol until `word` is
    scanned, then keep the `width` most probable successors.

    Derivations needing more than max_expansions rewrites to reach the
    scan are dropped (left-recursion guard).
    """
    terminal = g.map_word(word)
    scanned: list[Derivation] = []
    for deriv in beam.derivations:
        frontier = [(deriv, 0)]
        while frontier:
            state, steps = frontier.pop()
            if not state.stack:
                continue  # finished derivations cannot scan further
            top = state.stack[-1]
            rest = state.stack[:-1]
            if top == terminal:
                scanned.append(
                    Derivation(stack=rest, applied=state.applied, logp=state.logp)
                )
                continue
            for rule in g.lexical.get(top, ()):
                if rule.rhs[0] == terminal:
                    scanned.append(
                        Derivation(
                            stack=rest,
                            applied=state.applied + (rule,),
                            logp=state.logp + math.log(rule.prob),
                        )
                    )
            if steps >= max_expansions:
                continue
            for rule in g.expansions.get(top, ()):
                frontier.append(
                    (
                        Derivation(
                            stack=rest + tuple(reversed(rule.rhs)),
                            applied=state.applied + (rule,),
                            logp=state.logp + math.log(rule.prob),
                        ),
                        steps + 1,
                    )
                )
    if not scanned:
        raise BeamExhausted(f"no derivation scans {word!r}")
    scanned.sort(key=Derivation.sort_key)
    if beam.width != math.inf:
        scanned = scanned[: int(beam.width)]
    return Beam(derivations=scanned, width=beam.width)


def prefix_logprob(beam: Beam) -> float:
    """log of the summed probability mass of the surviving derivations."""
    if not beam.derivations:
        raise ParserError("empty beam")
    logps = np.array([d.logp for d in beam.derivations])
    peak = logps.max()
    return float(peak + np.log(np.exp(logps - peak).sum()))


def derivation_items(deriv: Derivation) -> list[str]:
    """Hashable identity items: applied productions plus pending symbols."""
    return [str(r) for r in deriv.applied] + list(deriv.stack)


def inc_features(beam: Beam, cfg: SubtreeEncodingConfig) -> np.ndarray:
    """Probability-weighted (softmax over log-probs) hashed counts of
    each derivation's applied productions and pending stack symbols."""
    if not beam.derivations:
        raise ParserError("empty beam")
    logps = np.array([d.logp for d in beam.derivations])
    weights = np.exp(logps - logps.max())
    weights /= weights.sum()
    vec = np.zeros(cfg.dim, dtype=np.float64)
    for w, deriv in zip(weights, beam.derivations):
        vec += w * hashed_counts(derivation_items(deriv), cfg)
    return vec


def inc_corpus_features(
    corpus: StimulusCorpus,
    g: Pcfg,
    cfg: SubtreeEncodingConfig,
    beam_width: float = DEFAULT_BEAM_WIDTH,
) -> FeatureMatrix:
    """One INC row per token: the beam state right after scanning it.

    A word no derivation can scan restarts the beam at a fresh start
    symbol and contributes a zero row, keeping rows aligned with tokens.
    """
    rows = np.zeros((corpus.n_tokens, cfg.dim), dtype=np.float64)
    r = 0
    for sent in corpus.sentences:
        beam = initial_beam(g, width=beam_width)
        for tok in sent.tokens:
            try:
                beam = beam_advance(beam, tok.surface, g)
                rows[r] = inc_features(beam, cfg)
            except BeamExhausted:
                log.warning(
                    "beam exhausted at sentence %d token %r; restarting",
                    sent.id,
                    tok.surface,
                )
                beam = initial_beam(g, width=beam_width)
            r += 1
    meta = {
        "config_hash": config_hash(
            {"space": "INC", "beam_width": beam_width, **cfg.payload()}
        ),
        "beam_width": beam_width,
    }
    return FeatureMatrix(space="INC", values=rows, meta=meta)
