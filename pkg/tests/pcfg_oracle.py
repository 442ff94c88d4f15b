"""Exhaustive leftmost-rewriting oracle for the incremental parser tests.

Enumerates prefixes of leftmost derivations as sentential forms (plain
string rewriting), then reads off the parser-equivalent states per
scanned word.  Structurally independent of the stack-machine parser.
"""

import math


def _leading_terminals(form, g):
    n = 0
    for sym in form:
        if sym in g.nonterminals:
            break
        n += 1
    return n


def enumerate_rewrite_states(g, prefix, max_rules=60):
    """All reachable (applied, form, logp, prev_lead) leftmost-rewriting
    prefixes whose first len(prefix) terminals are consistent with it.

    Terminals predicted beyond the prefix are unconstrained: the parser
    has not seen those words yet.
    """
    mapped = [g.map_word(w) for w in prefix]
    init = ((), (g.start,), 0.0, 0)
    out = [init]
    frontier = [init]
    while frontier:
        applied, form, logp, _ = frontier.pop()
        if len(applied) >= max_rules:
            continue
        lead = _leading_terminals(form, g)
        if lead >= len(mapped):
            continue  # all words derived; later rewrites are unreachable
        pos = lead
        if pos >= len(form):
            continue  # fully terminal form shorter than the prefix
        lhs = form[pos]
        for rule in g.rules_by_lhs[lhs]:
            new_form = form[:pos] + rule.rhs + form[pos + 1 :]
            ok = True
            for i, sym in enumerate(new_form):
                if sym in g.nonterminals:
                    break
                if i < len(mapped) and sym != mapped[i]:
                    ok = False
                    break
            if not ok:
                continue
            state = (
                applied + (rule,),
                new_form,
                logp + math.log(rule.prob),
                lead,
            )
            out.append(state)
            frontier.append(state)
    return out


def oracle_beam_states(g, words, k, max_rules=60):
    """Expected beam contents after scanning words[:k] (k >= 1): a set of
    (applied-rule strings, pending stack, logp rounded)."""
    states = set()
    for applied, form, logp, prev_lead in enumerate_rewrite_states(
        g, words[:k], max_rules
    ):
        lead = _leading_terminals(form, g)
        if lead >= k and prev_lead < k and applied:
            stack = tuple(reversed(form[k:]))
            states.add(
                (tuple(str(r) for r in applied), stack, round(logp, 12))
            )
    return states


def oracle_prefix_prob(g, words, k, max_rules=60):
    """Total probability of all derivations of the k-word prefix."""
    return sum(
        math.exp(logp) for _, _, logp in oracle_beam_states(g, words, k, max_rules)
    )
