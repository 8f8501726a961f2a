"""Graph neural network for winning-region prediction.

A game is encoded as a 3-attributed graph (color, owns0, owns1), passed
through a stack of GCN or GAT message-passing layers (each followed by ReLU)
and a per-vertex head: linear, ReLU, dropout, linear, softmax.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .games import ParityGame, WinningRegions
from .nn import autodiff as ad
from .nn.autodiff import Tape, Var
from .nn.layers import glorot, linear_forward

INPUT_WIDTH = 3


@dataclass(frozen=True)
class ModelConfig:
    variant: str = "gcn"
    message_layers: int = 10
    hidden_width: int = 256
    head_width: int = 256
    dropout: float = 0.5
    heads: int = 1
    leaky_slope: float = 0.2
    normalize_colors: bool = False

    def __post_init__(self):
        if self.variant not in ("gcn", "gat"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if min(self.message_layers, self.hidden_width, self.head_width, self.heads) < 1:
            raise ValueError("layer count, widths and heads must be at least 1")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout rate must lie in [0, 1)")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class AttributedGraph:
    """Directed graph with one attribute row per vertex.

    `rows`/`cols` list the aggregation pairs (v, v') for v' in {v} | N(v),
    grouped by v in ascending order; `degree[v]` is |N(v)|.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    x: np.ndarray
    degree: np.ndarray = field(init=False)
    rows: np.ndarray = field(init=False)
    cols: np.ndarray = field(init=False)

    def __post_init__(self):
        self.src = np.asarray(self.src, dtype=np.intp)
        self.dst = np.asarray(self.dst, dtype=np.intp)
        self.x = np.asarray(self.x, dtype=np.float64)
        if self.x.shape[0] != self.n:
            raise ValueError(f"{self.x.shape[0]} attribute rows for {self.n} vertices")
        if len(self.src) and (min(self.src.min(), self.dst.min()) < 0 or max(self.src.max(), self.dst.max()) >= self.n):
            raise ValueError("edge endpoint out of range")
        pairs = np.unique(np.stack([self.src, self.dst], axis=1), axis=0)
        self.degree = np.bincount(pairs[:, 0], minlength=self.n)
        loops = np.stack([np.arange(self.n), np.arange(self.n)], axis=1)
        agg = np.unique(np.concatenate([pairs, loops]), axis=0)
        self.rows, self.cols = agg[:, 0].copy(), agg[:, 1].copy()

    def with_attributes(self, x) -> "AttributedGraph":
        return AttributedGraph(self.n, self.src, self.dst, x)

    def neighborhood(self, v: int) -> tuple[frozenset[int], int]:
        succ = frozenset(int(w) for w in self.dst[self.src == v])
        return succ, int(self.degree[v])

    def aggregation_set(self, v: int) -> frozenset[int]:
        return frozenset(int(w) for w in self.cols[self.rows == v])


def encode_game(game: ParityGame, normalize_colors: bool = False) -> AttributedGraph:
    """Row v = (color(v), [v owned by 0], [v owned by 1])."""
    n = game.vertex_count
    owner = np.array(game.owner)
    color = np.array(game.color, dtype=np.float64)
    if normalize_colors:
        color = color / n
    x = np.stack([color, owner == 0, owner == 1], axis=1).astype(np.float64)
    src = np.repeat(np.arange(n), [len(s) for s in game.successors])
    dst = np.fromiter((w for s in game.successors for w in s), dtype=np.intp, count=len(src))
    return AttributedGraph(n, src, dst, x)


def neighborhood(graph: AttributedGraph, v: int) -> tuple[frozenset[int], int]:
    return graph.neighborhood(v)


def gcn_weights(graph: AttributedGraph) -> np.ndarray:
    deg = graph.degree.astype(np.float64)
    if np.any(deg[graph.rows] == 0) or np.any(deg[graph.cols] == 0):
        raise ValueError("GCN normalization needs every vertex to have a successor")
    return 1.0 / np.sqrt(deg[graph.rows] * deg[graph.cols])


def gcn_layer(graph: AttributedGraph, x, w) -> Var:
    """out(v) = W sum_{v' in {v} | N(v)} x(v') / sqrt(deg v * deg v')."""
    summed = ad.sparse_aggregate(gcn_weights(graph), x, graph.rows, graph.cols, graph.n)
    return ad.matmul_t(summed, w)


def gat_attention(graph: AttributedGraph, x, w, a, slope: float = 0.2) -> tuple[Var, Var]:
    """Attention weights over the aggregation pairs (graph.rows, graph.cols).

    e(v, v') = leaky_relu(a_self . W x(v) + a_nbr . W x(v')), softmax-normalized
    over {v} | N(v); `a` has shape (2, l) holding a_self and a_nbr.
    Returns (alpha, W x).
    """
    h = ad.matmul_t(x, w)
    scores = ad.matmul_t(h, a)
    e = ad.add(ad.take(scores, (graph.rows, 0)), ad.take(scores, (graph.cols, 1)))
    alpha = ad.segment_softmax(ad.leaky_relu(e, slope), graph.rows, graph.n)
    return alpha, h


def gat_layer(graph: AttributedGraph, x, w, a, slope: float = 0.2, alpha=None) -> Var:
    """out(v) = W sum_{v'} alpha(v, v') x(v').  Passing `alpha` overrides the
    learned attention (used to cross-check against the GCN aggregator)."""
    if alpha is None:
        alpha, h = gat_attention(graph, x, w, a, slope)
    else:
        h = ad.matmul_t(x, w)
    return ad.sparse_aggregate(alpha, h, graph.rows, graph.cols, graph.n)


# ---- parameters ----------------------------------------------------------------


def _head_suffix(h: int) -> str:
    return "" if h == 0 else f"@{h}"


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    shapes = {}
    width_in = INPUT_WIDTH
    for i in range(config.message_layers):
        for h in range(config.heads if config.variant == "gat" else 1):
            shapes[f"layer{i}.W{_head_suffix(h)}"] = (config.hidden_width, width_in)
            if config.variant == "gat":
                shapes[f"layer{i}.a{_head_suffix(h)}"] = (2, config.hidden_width)
        width_in = config.hidden_width
    shapes["head1.A"] = (config.head_width, config.hidden_width)
    shapes["head1.b"] = (1, config.head_width)
    shapes["head2.A"] = (2, config.head_width)
    shapes["head2.b"] = (1, 2)
    return shapes


def init_params(config: ModelConfig, seed: int = 0) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in param_shapes(config).items():
        if name.endswith(".b"):
            params[name] = np.zeros(shape)
        elif ".a" in name:
            params[name] = glorot(rng, 1, shape[0] * shape[1]).reshape(shape)
        else:
            params[name] = glorot(rng, *shape)
    return params


def check_params(params: dict[str, np.ndarray], config: ModelConfig) -> None:
    expected = param_shapes(config)
    if set(params) != set(expected):
        raise ValueError(
            f"parameter names do not match config: missing {sorted(set(expected) - set(params))}, "
            f"unexpected {sorted(set(params) - set(expected))}"
        )
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise ValueError(f"shape mismatch for {name}: {params[name].shape} vs {shape}")


# ---- forward / backward --------------------------------------------------------


@dataclass
class PredictionOutput:
    probs: np.ndarray

    @property
    def regions(self) -> WinningRegions:
        return decode_prediction(self)


def decode_prediction(output) -> WinningRegions:
    """v goes to W0 iff x0 > x1; ties go to W1."""
    probs = output.probs if isinstance(output, PredictionOutput) else np.asarray(output)
    return WinningRegions.from_winners([0 if p0 > p1 else 1 for p0, p1 in probs])


def forward_graph(
    graph: AttributedGraph,
    params: dict,
    config: ModelConfig,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> Var:
    """Per-vertex probabilities as a Var; `params` may hold arrays or tape Vars."""
    x = ad.as_var(graph.x)
    for i in range(config.message_layers):
        if config.variant == "gcn":
            x = gcn_layer(graph, x, params[f"layer{i}.W"])
        else:
            outs = [
                gat_layer(
                    graph,
                    x,
                    params[f"layer{i}.W{_head_suffix(h)}"],
                    params[f"layer{i}.a{_head_suffix(h)}"],
                    config.leaky_slope,
                )
                for h in range(config.heads)
            ]
            x = outs[0]
            for extra in outs[1:]:
                x = ad.add(x, extra)
            if config.heads > 1:
                x = ad.scale(x, 1.0 / config.heads)
        x = ad.relu(x)
    x = ad.relu(linear_forward(x, params["head1.A"], params["head1.b"]))
    x = ad.dropout(x, config.dropout, train, rng)
    x = linear_forward(x, params["head2.A"], params["head2.b"])
    return ad.softmax_rows(x)


def _as_graph(game, config: ModelConfig) -> AttributedGraph:
    if isinstance(game, AttributedGraph):
        return game
    return encode_game(game, config.normalize_colors)


def model_forward(
    game,
    params: dict[str, np.ndarray],
    config: ModelConfig,
    mode: str = "infer",
    rng: np.random.Generator | None = None,
) -> PredictionOutput:
    """Predict (x0, x1) per vertex for a ParityGame or an AttributedGraph."""
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    check_params(params, config)
    probs = forward_graph(_as_graph(game, config), params, config, mode == "train", rng)
    return PredictionOutput(probs.value)


def one_hot(regions: WinningRegions, n: int) -> np.ndarray:
    target = np.zeros((n, 2))
    target[np.arange(n), regions.winners(n)] = 1.0
    return target


def model_backward(
    game,
    params: dict[str, np.ndarray],
    config: ModelConfig,
    targets,
    mode: str = "train",
    rng: np.random.Generator | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Cross-entropy loss over all vertices and its gradient for every parameter."""
    check_params(params, config)
    graph = _as_graph(game, config)
    if isinstance(targets, WinningRegions):
        targets = one_hot(targets, graph.n)
    tape = Tape()
    pvars = {name: tape.param(name, value) for name, value in params.items()}
    probs = forward_graph(graph, pvars, config, mode == "train", rng)
    loss = ad.cross_entropy(probs, targets)
    grads = tape.backward(loss)
    return float(loss.value), dict(grads)
