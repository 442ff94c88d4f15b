import pytest
from hypothesis import given, strategies as st

from neurosyntax import treebank as tb

TWO_WORD = "(S (NP (PRP I)) (VP (VBD began)))"


def test_parse_two_word_tree():
    tree = tb.parse_bracketed(TWO_WORD)
    assert [t.surface for t in tree.tokens] == ["I", "began"]
    assert tree.root.span == (0, 2)
    assert tb.tree_height(tree.root) == 3
    assert [t.pos for t in tree.tokens] == ["PRP", "VBD"]


def test_parse_single_leaf():
    tree = tb.parse_bracketed("(X (A a))")
    assert len(tree.tokens) == 1
    assert tb.tree_height(tree.root) == 2


def test_unbalanced_reports_offset():
    with pytest.raises(tb.UnbalancedParens) as exc:
        tb.parse_bracketed("(S (NP")
    assert exc.value.offset == len("(S (NP")


def test_empty_node():
    with pytest.raises(tb.EmptyNode):
        tb.parse_bracketed("(S ())")


def test_tree_height_levels():
    tree = tb.parse_bracketed(TWO_WORD)
    leaf = tree.root.leaves()[0]
    assert tb.tree_height(leaf) == 0
    np_node = tree.root.children[0]
    assert np_node.label == "NP"
    assert tb.tree_height(np_node) == 2


def test_label_normalization():
    tree = tb.parse_bracketed("(S (NP-SBJ (PRP I)) (VP (VBD ran) (-LRB- -LRB-)))")
    labels = [n.label for n in tree.root.walk() if not n.is_leaf]
    assert "NP" in labels and "NP-SBJ" not in labels
    assert "-LRB-" in labels


def test_roundtrip_small():
    for text in [TWO_WORD, "(X (A a))", "(S (A a) (B (C c) (D d)))"]:
        tree = tb.parse_bracketed(text)
        again = tb.parse_bracketed(tb.serialize_tree(tree))
        assert tb.serialize_tree(again) == tb.serialize_tree(tree)


# random tree generator shared with the feature-space oracle tests
@st.composite
def random_tree_text(draw, max_tokens=12, max_depth=6):
    labels = ["S", "NP", "VP", "PP", "X", "Y"]
    tags = ["NN", "VB", "DT", "IN"]
    words = ["a", "b", "cat", "ran", "to", "the"]
    counter = [0]

    def build(depth):
        n_tok = counter[0]
        if n_tok >= max_tokens:
            return None
        make_leaf = depth >= max_depth or draw(st.booleans())
        if make_leaf:
            counter[0] += 1
            tag = draw(st.sampled_from(tags))
            word = draw(st.sampled_from(words))
            return f"({tag} {word})"
        n_children = draw(st.integers(1, 3))
        kids = []
        for _ in range(n_children):
            sub = build(depth + 1)
            if sub is not None:
                kids.append(sub)
        if not kids:
            counter[0] += 1
            return f"({draw(st.sampled_from(tags))} {draw(st.sampled_from(words))})"
        return f"({draw(st.sampled_from(labels))} {' '.join(kids)})"

    return build(0)


@given(random_tree_text())
def test_roundtrip_random(text):
    tree = tb.parse_bracketed(text)
    again = tb.parse_bracketed(tb.serialize_tree(tree))
    assert tb.serialize_tree(again) == tb.serialize_tree(tree)


@given(random_tree_text())
def test_leaf_spans_partition_tokens(text):
    tree = tb.parse_bracketed(text)
    preterms = [n for n in tree.root.walk() if n.is_preterminal]
    assert len(preterms) == len(tree.tokens)
    covered = sorted(n.span[0] for n in preterms)
    assert covered == list(range(len(tree.tokens)))


def test_parse_conllu_basic():
    text = (
        "# sent_id = 1\n"
        "1\tI\t_\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
        "2\tbegan\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
    )
    graphs = tb.parse_conllu(text)
    assert len(graphs) == 1
    g = graphs[0]
    assert g.root == 1
    assert g.incoming_relation(0) == "nsubj"
    assert g.tokens[1].surface == "began"


def test_parse_conllu_dangling_head():
    text = "1\tI\t_\tPRON\t_\t_\t5\tnsubj\t_\t_\n2\tran\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
    with pytest.raises(tb.DanglingHead):
        tb.parse_conllu(text)


def test_parse_conllu_cycle():
    text = "1\ta\t_\tX\t_\t_\t2\tdep\t_\t_\n2\tb\t_\tX\t_\t_\t1\tdep\t_\t_\n"
    with pytest.raises((tb.CycleDetected, tb.MultipleRoots)):
        tb.parse_conllu(text)


def test_parse_conllu_multiple_roots():
    text = "1\ta\t_\tX\t_\t_\t0\troot\t_\t_\n2\tb\t_\tX\t_\t_\t0\troot\t_\t_\n"
    with pytest.raises(tb.MultipleRoots):
        tb.parse_conllu(text)


def test_dependency_edge_count_and_treeness():
    text = (
        "1\tthe\t_\tDET\t_\t_\t2\tdet\t_\t_\n"
        "2\tcat\t_\tNOUN\t_\t_\t3\tnsubj\t_\t_\n"
        "3\tran\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
        "4\thome\t_\tNOUN\t_\t_\t3\tobl\t_\t_\n"
    )
    g = tb.parse_conllu(text)[0]
    n = len(g.tokens)
    assert len(g.edges) == n
    # union-find connectivity over non-root edges
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in g.edges:
        if e.head == -1:
            continue
        ra, rb = find(e.head), find(e.dependent)
        assert ra != rb, "cycle"
        parent[ra] = rb
    assert len({find(i) for i in range(n)}) == 1


def _two_sentence_corpus():
    trees = [tb.parse_bracketed(TWO_WORD), tb.parse_bracketed("(S (VP (VB go)))")]
    conllu = (
        "1\tI\t_\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
        "2\tbegan\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
        "\n"
        "1\tgo\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
    )
    graphs = tb.parse_conllu(conllu)
    return tb.corpus_from_parses(trees, graphs)


def test_load_timing_round():
    corpus = _two_sentence_corpus()
    tsv = (
        "word\tonset_sec\toffset_sec\tsentence_id\ttoken_id\n"
        "I\t0.1\t0.2\t0\t0\n"
        "began\t0.25\t0.6\t0\t1\n"
        "go\t0.9\t1.2\t1\t0\n"
    )
    timed = tb.load_timing(tsv, corpus)
    assert timed.all_tokens()[1].onset_sec == 0.25
    assert timed.run_duration_sec == pytest.approx(1.2)


def test_load_timing_count_mismatch():
    corpus = _two_sentence_corpus()
    tsv = "I\t0.1\t0.2\t0\t0\nbegan\t0.25\t0.6\t0\t1\n"
    with pytest.raises(tb.CountMismatch):
        tb.load_timing(tsv, corpus)


def test_load_timing_surface_mismatch():
    corpus = _two_sentence_corpus()
    tsv = "I\t0.1\t0.2\t0\t0\nran\t0.25\t0.6\t0\t1\n: go\t0.9\t1.2\t1\t0\n".replace(": ", "")
    with pytest.raises(tb.SurfaceMismatch) as exc:
        tb.load_timing(tsv, corpus)
    assert "ran" in str(exc.value) and "began" in str(exc.value)


def test_load_timing_jitter_normalized():
    corpus = _two_sentence_corpus()
    tsv = "I\t0.1\t0.2\t0\t0\nbegan\t0.0995\t0.6\t0\t1\ngo\t0.9\t1.2\t1\t0\n"
    timed = tb.load_timing(tsv, corpus)
    toks = timed.all_tokens()
    assert toks[1].onset_sec >= toks[0].onset_sec


def test_load_timing_regression_rejected():
    corpus = _two_sentence_corpus()
    tsv = "I\t0.5\t0.6\t0\t0\nbegan\t0.1\t0.7\t0\t1\ngo\t0.9\t1.2\t1\t0\n"
    with pytest.raises(tb.NonMonotonicTiming):
        tb.load_timing(tsv, corpus)


def test_punctuation_detection():
    assert tb.Token(0, ",", pos="X").is_punct  # surface rule
    assert tb.Token(0, "word", pos=",").is_punct  # POS rule
    assert not tb.Token(0, "word", pos="NN").is_punct
    assert tb.Token(0, "...", pos="NFP").punct_by_surface
