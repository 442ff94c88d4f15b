"""Gated graph convolutional network over dependency graphs.

Message passing per layer: h'(v) = ReLU( sum over incident edges e of
gate(e) * (W_dir(e) h(u) + b_dir(e)) ), with a scalar sigmoid gate per
edge, gate(e) = sigmoid(gw_dir . h(u) + gb_dir).  Each dependency edge
sends an "in" message to the head and an "out" message to the
dependent; every token also has a "self" loop.  Trained with
masked-word prediction and negative sampling to produce the DEP word
embeddings.  All math is plain float64 numpy with a hand-derived
backward pass (checked against finite differences).
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from .features import FeatureMatrix, config_hash
from .treebank import DependencyGraph, StimulusCorpus

log = logging.getLogger(__name__)

DIRECTIONS = ("in", "out", "self")
UNK_WORD = "<unk>"
MASK_WORD = "<mask>"


class GcnError(ValueError):
    pass


class ShapeMismatch(GcnError):
    pass


class DivergenceDetected(GcnError):
    def __init__(self, epoch: int):
        super().__init__(f"loss became non-finite at epoch {epoch}")
        self.epoch = epoch


@dataclass
class GcnConfig:
    layers: int = 2
    hidden: int = 250
    input_dim: int | None = None  # defaults to hidden
    vocab: dict[str, int] = field(default_factory=dict)
    relations: tuple[str, ...] = ()

    def __post_init__(self):
        if self.layers < 1 or self.hidden < 1:
            raise GcnError("layers and hidden must be >= 1")
        if self.input_dim is None:
            self.input_dim = self.hidden

    @classmethod
    def from_corpus(cls, corpus: StimulusCorpus, layers=2, hidden=250, input_dim=None):
        words = sorted({t.surface.casefold() for s in corpus.sentences for t in s.tokens})
        vocab = {w: i for i, w in enumerate(words)}
        vocab[UNK_WORD] = len(vocab)
        vocab[MASK_WORD] = len(vocab)
        rels = tuple(sorted({e.relation for g in corpus.graphs for e in g.edges}))
        return cls(layers=layers, hidden=hidden, input_dim=input_dim,
                   vocab=vocab, relations=rels)

    def word_index(self, surface: str) -> int:
        return self.vocab.get(surface.casefold(), self.vocab[UNK_WORD])


@dataclass
class TrainConfig:
    epochs: int = 50
    learning_rate: float = 0.05
    negative_samples: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise GcnError("learning rate must be > 0 (0 allowed for no-op runs)")


@dataclass
class GcnModel:
    config: GcnConfig
    embeddings: np.ndarray  # |vocab| x input_dim (includes unk + mask rows)
    out_embeddings: np.ndarray  # |vocab| x hidden
    weights: list[dict[str, np.ndarray]]  # per layer, per dir: hidden x prev
    biases: list[dict[str, np.ndarray]]  # per layer, per dir: hidden
    gate_w: list[dict[str, np.ndarray]]  # per layer, per dir: prev
    gate_b: list[dict[str, float]]  # per layer, per dir: scalar
    loss_history: list[float] = field(default_factory=list)

    def __post_init__(self):
        cfg = self.config
        dims = [cfg.input_dim] + [cfg.hidden] * cfg.layers
        if self.embeddings.shape != (len(cfg.vocab), cfg.input_dim):
            raise ShapeMismatch("embedding table shape")
        if self.out_embeddings.shape != (len(cfg.vocab), cfg.hidden):
            raise ShapeMismatch("output embedding table shape")
        for layer in range(cfg.layers):
            prev = dims[layer]
            for d in DIRECTIONS:
                if self.weights[layer][d].shape != (cfg.hidden, prev):
                    raise ShapeMismatch(f"W[{layer}][{d}]")
                if self.biases[layer][d].shape != (cfg.hidden,):
                    raise ShapeMismatch(f"b[{layer}][{d}]")
                if self.gate_w[layer][d].shape != (prev,):
                    raise ShapeMismatch(f"gw[{layer}][{d}]")
        for name, arr in self.named_parameters():
            if not np.all(np.isfinite(arr)):
                raise GcnError(f"non-finite parameter {name}")

    def named_parameters(self):
        yield "embeddings", self.embeddings
        yield "out_embeddings", self.out_embeddings
        for layer in range(self.config.layers):
            for d in DIRECTIONS:
                yield f"W{layer}.{d}", self.weights[layer][d]
                yield f"b{layer}.{d}", self.biases[layer][d]
                yield f"gw{layer}.{d}", self.gate_w[layer][d]


def init_model(cfg: GcnConfig, seed: int = 0, scale: float = 0.1) -> GcnModel:
    rng = np.random.default_rng(seed)
    dims = [cfg.input_dim] + [cfg.hidden] * cfg.layers
    weights, biases, gate_w, gate_b = [], [], [], []
    for layer in range(cfg.layers):
        prev = dims[layer]
        weights.append(
            {d: rng.normal(0.0, scale, (cfg.hidden, prev)) for d in DIRECTIONS}
        )
        biases.append({d: np.zeros(cfg.hidden) for d in DIRECTIONS})
        gate_w.append({d: rng.normal(0.0, scale, prev) for d in DIRECTIONS})
        gate_b.append({d: 0.0 for d in DIRECTIONS})
    return GcnModel(
        config=cfg,
        embeddings=rng.normal(0.0, scale, (len(cfg.vocab), cfg.input_dim)),
        out_embeddings=rng.normal(0.0, scale, (len(cfg.vocab), cfg.hidden)),
        weights=weights,
        biases=biases,
        gate_w=gate_w,
        gate_b=gate_b,
    )


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def graph_messages(graph: DependencyGraph) -> list[tuple[int, int, str]]:
    """(target, source, direction) triples; the synthetic ROOT edge is
    dropped since ROOT has no embedding."""
    n = len(graph.tokens)
    msgs = [(v, v, "self") for v in range(n)]
    for e in graph.edges:
        if e.head == -1:
            continue
        msgs.append((e.head, e.dependent, "in"))
        msgs.append((e.dependent, e.head, "out"))
    return msgs


def gcn_forward(
    graph: DependencyGraph,
    model: GcnModel,
    mask_index: int | None = None,
    collect: bool = False,
):
    """Top-layer hidden states (n x hidden); with collect=True also
    returns the per-layer caches the backward pass needs."""
    cfg = model.config
    n = len(graph.tokens)
    h = model.embeddings[
        [cfg.word_index(t.surface) for t in graph.tokens]
    ].copy()
    if mask_index is not None:
        h[mask_index] = model.embeddings[cfg.vocab[MASK_WORD]]
    msgs = graph_messages(graph)
    by_dir = {
        d: (
            np.array([m[0] for m in msgs if m[2] == d], dtype=np.intp),
            np.array([m[1] for m in msgs if m[2] == d], dtype=np.intp),
        )
        for d in DIRECTIONS
    }
    caches = []
    for layer in range(cfg.layers):
        pre = np.zeros((n, cfg.hidden))
        cache = {"h_in": h, "dirs": {}}
        for d in DIRECTIONS:
            tgt, src = by_dir[d]
            if len(tgt) == 0:
                continue
            h_src = h[src]
            lin = h_src @ model.weights[layer][d].T + model.biases[layer][d]
            gate = _sigmoid(h_src @ model.gate_w[layer][d] + model.gate_b[layer][d])
            np.add.at(pre, tgt, gate[:, None] * lin)
            cache["dirs"][d] = (tgt, src, h_src, lin, gate)
        h = np.maximum(pre, 0.0)
        cache["pre"] = pre
        caches.append(cache)
    if collect:
        return h, caches
    return h


def zero_gradients(model: GcnModel) -> dict[str, np.ndarray | float]:
    grads: dict[str, np.ndarray | float] = {
        "embeddings": np.zeros_like(model.embeddings),
        "out_embeddings": np.zeros_like(model.out_embeddings),
    }
    for layer in range(model.config.layers):
        for d in DIRECTIONS:
            grads[f"W{layer}.{d}"] = np.zeros_like(model.weights[layer][d])
            grads[f"b{layer}.{d}"] = np.zeros_like(model.biases[layer][d])
            grads[f"gw{layer}.{d}"] = np.zeros_like(model.gate_w[layer][d])
            grads[f"gb{layer}.{d}"] = 0.0
    return grads


def gcn_backward(
    graph: DependencyGraph,
    model: GcnModel,
    caches,
    d_top: np.ndarray,
    grads,
    mask_index: int | None = None,
):
    """Accumulate parameter gradients for d(loss)/d(top states) = d_top."""
    cfg = model.config
    dh = d_top
    for layer in reversed(range(cfg.layers)):
        cache = caches[layer]
        dpre = dh * (cache["pre"] > 0)
        dh_prev = np.zeros_like(cache["h_in"])
        for d, (tgt, src, h_src, lin, gate) in cache["dirs"].items():
            dcontrib = dpre[tgt]
            dgate = np.sum(dcontrib * lin, axis=1)
            dlin = gate[:, None] * dcontrib
            grads[f"W{layer}.{d}"] += dlin.T @ h_src
            grads[f"b{layer}.{d}"] += dlin.sum(axis=0)
            da = dgate * gate * (1.0 - gate)
            grads[f"gw{layer}.{d}"] += h_src.T @ da
            grads[f"gb{layer}.{d}"] += da.sum()
            dsrc = dlin @ model.weights[layer][d] + da[:, None] * model.gate_w[layer][d]
            np.add.at(dh_prev, src, dsrc)
        dh = dh_prev
    # dh is now the gradient w.r.t. the input embedding rows
    for i, tok in enumerate(graph.tokens):
        if mask_index is not None and i == mask_index:
            grads["embeddings"][cfg.vocab[MASK_WORD]] += dh[i]
        else:
            grads["embeddings"][cfg.word_index(tok.surface)] += dh[i]


def _log_sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    return -np.logaddexp(0.0, -x)


def masked_loss_and_grads(
    graph: DependencyGraph,
    model: GcnModel,
    position: int,
    negatives: np.ndarray,
    grads=None,
):
    """Negative-sampling loss for predicting the masked token at
    `position` from its gated-GCN context; optionally accumulates
    gradients into `grads`."""
    cfg = model.config
    top, caches = gcn_forward(graph, model, mask_index=position, collect=True)
    c = top[position]
    pos_idx = cfg.word_index(graph.tokens[position].surface)
    s_pos = float(c @ model.out_embeddings[pos_idx])
    s_neg = model.out_embeddings[negatives] @ c
    loss = -float(_log_sigmoid(s_pos)) - float(np.sum(_log_sigmoid(-s_neg)))
    if grads is None:
        return loss
    d_pos = _sigmoid(s_pos) - 1.0
    d_neg = _sigmoid(s_neg)
    dc = d_pos * model.out_embeddings[pos_idx] + d_neg @ model.out_embeddings[negatives]
    grads["out_embeddings"][pos_idx] += d_pos * c
    np.add.at(grads["out_embeddings"], negatives, d_neg[:, None] * c)
    d_top = np.zeros_like(top)
    d_top[position] = dc
    gcn_backward(graph, model, caches, d_top, grads, mask_index=position)
    return loss


def _sample_negatives(rng, cfg: GcnConfig, exclude: int, k: int) -> np.ndarray:
    # uniform over real words; resample collisions with the target
    n_words = len(cfg.vocab) - 2  # unk/mask rows are appended last
    pool = max(1, n_words)
    out = rng.integers(0, pool, size=k)
    for i in range(k):
        tries = 0
        while out[i] == exclude and pool > 1 and tries < 8:
            out[i] = rng.integers(0, pool)
            tries += 1
    return out


def _apply_grads(model: GcnModel, grads, lr: float):
    model.embeddings -= lr * grads["embeddings"]
    model.out_embeddings -= lr * grads["out_embeddings"]
    for layer in range(model.config.layers):
        for d in DIRECTIONS:
            model.weights[layer][d] -= lr * grads[f"W{layer}.{d}"]
            model.biases[layer][d] -= lr * grads[f"b{layer}.{d}"]
            model.gate_w[layer][d] -= lr * grads[f"gw{layer}.{d}"]
            model.gate_b[layer][d] -= lr * grads[f"gb{layer}.{d}"]


def gcn_train(
    corpus: StimulusCorpus, cfg: GcnConfig, tc: TrainConfig
) -> GcnModel:
    """Plain SGD over masked-word prediction; deterministic given seed.

    Records the mean per-position loss of each epoch in
    model.loss_history.
    """
    model = init_model(cfg, seed=tc.seed)
    rng = np.random.default_rng(tc.seed + 1)
    for epoch in range(tc.epochs):
        total, count = 0.0, 0
        for graph in corpus.graphs:
            for position in range(len(graph.tokens)):
                negatives = _sample_negatives(
                    rng, cfg, cfg.word_index(graph.tokens[position].surface),
                    tc.negative_samples,
                )
                grads = zero_gradients(model)
                loss = masked_loss_and_grads(
                    graph, model, position, negatives, grads
                )
                if not np.isfinite(loss):
                    raise DivergenceDetected(epoch)
                _apply_grads(model, grads, tc.learning_rate)
                total += loss
                count += 1
        model.loss_history.append(total / max(1, count))
    return model


def gradient_check(
    model: GcnModel, graph: DependencyGraph, epsilon: float = 1e-4
) -> float:
    """Max relative disagreement between the hand-derived gradients and
    central finite differences, over every parameter."""
    cfg = model.config
    rng = np.random.default_rng(1234)
    fixtures = []
    for position in range(len(graph.tokens)):
        fixtures.append(
            (position, _sample_negatives(rng, cfg, cfg.word_index(
                graph.tokens[position].surface), 3))
        )

    def total_loss():
        return sum(
            masked_loss_and_grads(graph, model, pos, negs)
            for pos, negs in fixtures
        )

    grads = zero_gradients(model)
    for pos, negs in fixtures:
        masked_loss_and_grads(graph, model, pos, negs, grads)

    worst = 0.0
    for name, arr in model.named_parameters():
        flat = arr.reshape(-1)
        gflat = np.asarray(grads[name]).reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + epsilon
            up = total_loss()
            flat[i] = keep - epsilon
            down = total_loss()
            flat[i] = keep
            numeric = (up - down) / (2 * epsilon)
            denom = max(abs(gflat[i]) + abs(numeric), 1e-6)
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    # scalar gate biases
    for layer in range(cfg.layers):
        for d in DIRECTIONS:
            keep = model.gate_b[layer][d]
            model.gate_b[layer][d] = keep + epsilon
            up = total_loss()
            model.gate_b[layer][d] = keep - epsilon
            down = total_loss()
            model.gate_b[layer][d] = keep
            numeric = (up - down) / (2 * epsilon)
            analytic = grads[f"gb{layer}.{d}"]
            denom = max(abs(analytic) + abs(numeric), 1e-6)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst


def extract_dep_features(corpus: StimulusCorpus, model: GcnModel) -> FeatureMatrix:
    """DEP space: top-layer GCN state of every token, corpus order."""
    rows = np.zeros((corpus.n_tokens, model.config.hidden))
    r = 0
    for graph in corpus.graphs:
        top = gcn_forward(graph, model)
        rows[r : r + len(graph.tokens)] = top
        r += len(graph.tokens)
    meta = {
        "config_hash": config_hash(
            {
                "space": "DEP",
                "layers": model.config.layers,
                "hidden": model.config.hidden,
                "vocab_size": len(model.config.vocab),
            }
        )
    }
    return FeatureMatrix(space="DEP", values=rows, meta=meta)


# ---------------------------------------------------------------------------
# checkpoint format: magic "GCN1", u32 json-config length, config json,
# then each parameter as u64 count + little-endian f32 payload, in
# named_parameters() order with gate biases appended per layer/direction.

MAGIC = b"GCN1"


def save_model(model: GcnModel, path) -> None:
    cfg = model.config
    header = json.dumps(
        {
            "layers": cfg.layers,
            "hidden": cfg.hidden,
            "input_dim": cfg.input_dim,
            "vocab": sorted(cfg.vocab, key=cfg.vocab.get),
            "relations": list(cfg.relations),
        },
        sort_keys=True,
    ).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for _, arr in model.named_parameters():
            flat = np.ascontiguousarray(arr, dtype="<f4").reshape(-1)
            fh.write(struct.pack("<Q", flat.size))
            fh.write(flat.tobytes())
        for layer in range(cfg.layers):
            for d in DIRECTIONS:
                fh.write(struct.pack("<d", model.gate_b[layer][d]))


def load_model(path) -> GcnModel:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise GcnError(f"{path}: not a GCN1 checkpoint")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen))
        cfg = GcnConfig(
            layers=header["layers"],
            hidden=header["hidden"],
            input_dim=header["input_dim"],
            vocab={w: i for i, w in enumerate(header["vocab"])},
            relations=tuple(header["relations"]),
        )
        model = init_model(cfg, seed=0)
        for name, arr in model.named_parameters():
            (count,) = struct.unpack("<Q", fh.read(8))
            if count != arr.size:
                raise ShapeMismatch(f"{name}: {count} values for {arr.size} slots")
            data = np.frombuffer(fh.read(4 * count), dtype="<f4")
            arr[...] = data.reshape(arr.shape)
        for layer in range(cfg.layers):
            for d in DIRECTIONS:
                (val,) = struct.unpack("<d", fh.read(8))
                model.gate_b[layer][d] = val
    return model
