"""Training, evaluation and results-table reporting."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .games import ParityGame, WinningRegions
from .model import ModelConfig, check_params, encode_game, init_params, model_backward, model_forward, one_hot
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.optim import AdamState, adam_step

MODEL_FIELDS = tuple(ModelConfig.__dataclass_fields__)


@dataclass
class ExperimentConfig:
    dataset: str = ""
    variant: str = "gcn"
    message_layers: int = 10
    hidden_width: int = 256
    head_width: int = 256
    dropout: float = 0.5
    heads: int = 1
    leaky_slope: float = 0.2
    normalize_colors: bool = False
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 1
    seed: int = 0
    games_per_step: int = 1

    def model_config(self) -> ModelConfig:
        return ModelConfig(**{k: getattr(self, k) for k in MODEL_FIELDS})

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    config: ExperimentConfig
    losses: list[float]
    seconds: float = 0.0

    def meta(self) -> dict:
        return {
            "format": "paritygnn-model",
            "model_config": self.config.model_config().as_dict(),
            "experiment": self.config.as_dict(),
            "loss_curve": self.losses,
        }

    def save(self, path) -> None:
        save_checkpoint(path, self.params, self.meta())


def load_model(path) -> tuple[dict[str, np.ndarray], ModelConfig, dict]:
    params, meta = load_checkpoint(path)
    config = ModelConfig(**meta["model_config"])
    check_params(params, config)
    return params, config, meta


def train(
    pairs: Sequence[tuple[ParityGame, WinningRegions]],
    config: ExperimentConfig,
    params: dict[str, np.ndarray] | None = None,
    progress=None,
) -> TrainResult:
    """Adam over the given (game, solution) pairs, `games_per_step` games per update.

    Games are visited in a seeded random order each epoch.  The recorded loss
    of a game is the training-mode loss before the update it contributes to.
    """
    model_config = config.model_config()
    if params is None:
        params = init_params(model_config, config.seed)
    state = AdamState(config.lr, config.beta1, config.beta2, config.eps)
    dropout_rng = np.random.default_rng([config.seed, 1])
    order_rng = np.random.default_rng([config.seed, 2])
    encoded = [
        (encode_game(g, model_config.normalize_colors), one_hot(r, g.vertex_count))
        for g, r in pairs
    ]
    losses: list[float] = []
    start = time.perf_counter()
    for _ in range(config.epochs):
        order = order_rng.permutation(len(encoded))
        for lo in range(0, len(order), config.games_per_step):
            batch = order[lo : lo + config.games_per_step]
            acc = None
            for idx in batch:
                graph, target = encoded[idx]
                loss, grads = model_backward(graph, params, model_config, target, "train", dropout_rng)
                losses.append(loss)
                if acc is None:
                    acc = grads
                else:
                    for k in acc:
                        acc[k] += grads[k]
            if len(batch) > 1:
                acc = {k: g / len(batch) for k, g in acc.items()}
            adam_step(params, acc, state)
            if progress is not None:
                progress(len(losses), losses[-1])
    return TrainResult(params, config, losses, time.perf_counter() - start)


@dataclass
class Metrics:
    vertex_accuracy: float
    games_err0: int
    games_err1: int
    games_err2plus: int
    total_vertices: int
    majority_baseline: float
    per_game: list[tuple[int, int]] = field(default_factory=list)

    @property
    def games(self) -> int:
        return len(self.per_game)

    def as_dict(self) -> dict:
        data = asdict(self)
        data["per_game"] = [list(p) for p in self.per_game]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Metrics":
        data = dict(data)
        data["per_game"] = [tuple(p) for p in data["per_game"]]
        return cls(**data)


def compute_metrics(
    predictions: Sequence[WinningRegions], truths: Sequence[WinningRegions]
) -> Metrics:
    if len(predictions) != len(truths):
        raise ValueError(f"{len(predictions)} predictions for {len(truths)} games")
    per_game = []
    correct = total = w0 = 0
    for i, (pred, truth) in enumerate(zip(predictions, truths)):
        verts = truth.w0 | truth.w1
        if (pred.w0 | pred.w1) != verts:
            raise ValueError(f"game {i}: predicted and true regions cover different vertices")
        wrong = len(pred.w0 ^ truth.w0)
        per_game.append((len(verts), wrong))
        correct += len(verts) - wrong
        total += len(verts)
        w0 += len(truth.w0)
    errs = [w for _, w in per_game]
    return Metrics(
        vertex_accuracy=correct / total if total else 1.0,
        games_err0=sum(1 for e in errs if e == 0),
        games_err1=sum(1 for e in errs if e == 1),
        games_err2plus=sum(1 for e in errs if e >= 2),
        total_vertices=total,
        majority_baseline=max(w0, total - w0) / total if total else 1.0,
        per_game=per_game,
    )


def predict_regions(pairs, params, model_config: ModelConfig) -> list[WinningRegions]:
    return [model_forward(g, params, model_config).regions for g, _ in pairs]


def evaluate(pairs, params, model_config: ModelConfig) -> Metrics:
    return compute_metrics(predict_regions(pairs, params, model_config), [r for _, r in pairs])


@dataclass
class EvalReport:
    label: str
    config: dict
    train: Metrics | None = None
    test: Metrics | None = None
    timings: dict = field(default_factory=dict)
    loss_curve: list[float] = field(default_factory=list)

    def table_row(self) -> tuple:
        """(label, accuracy on train, err0, err1, err2+ on test)."""
        acc = self.train.vertex_accuracy if self.train else float("nan")
        t = self.test
        errs = (t.games_err0, t.games_err1, t.games_err2plus) if t else (None, None, None)
        return (self.label, acc, *errs)

    def to_json(self) -> str:
        data = {
            "label": self.label,
            "config": self.config,
            "train": self.train.as_dict() if self.train else None,
            "test": self.test.as_dict() if self.test else None,
            "timings": self.timings,
            "loss_curve": self.loss_curve,
        }
        return json.dumps(data, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        data = json.loads(text)
        return cls(
            label=data["label"],
            config=data["config"],
            train=Metrics.from_dict(data["train"]) if data["train"] else None,
            test=Metrics.from_dict(data["test"]) if data["test"] else None,
            timings=data["timings"],
            loss_curve=data["loss_curve"],
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "EvalReport":
        return cls.from_json(Path(path).read_text())


def evaluate_checkpoint(checkpoint, manifest, splits=("train", "test")) -> EvalReport:
    params, model_config, meta = load_model(checkpoint)
    report = EvalReport(
        label=model_config.variant.upper(),
        config={
            "experiment": meta.get("experiment", {}),
            "model_config": model_config.as_dict(),
            "checkpoint": str(checkpoint),
            "dataset": str(manifest.root),
        },
        loss_curve=list(meta.get("loss_curve", [])),
    )
    for split in splits:
        pairs = manifest.load_pairs(split)
        start = time.perf_counter()
        metrics = evaluate(pairs, params, model_config)
        report.timings[f"{split}_seconds"] = time.perf_counter() - start
        setattr(report, split, metrics)
    return report


# ---- rendering -------------------------------------------------------------------

TABLE_HEADER = ("Model", "Acc.", "n_err=0", "n_err=1", "n_err≥2")


def _fmt_row(cells) -> str:
    label, acc, *errs = cells
    acc_text = "-" if acc is None or acc != acc else f"{acc:.2f}"
    err_text = ["-" if e is None else str(e) for e in errs]
    return f"{label:<8}{acc_text:>6}{err_text[0]:>9}{err_text[1]:>9}{err_text[2]:>9}"


def render_table(reports: Sequence[EvalReport]) -> str:
    lines = [
        "Acc. on the training split; n_err buckets on the test split.",
        f"{TABLE_HEADER[0]:<8}{TABLE_HEADER[1]:>6}{TABLE_HEADER[2]:>9}{TABLE_HEADER[3]:>9}{TABLE_HEADER[4]:>9}",
    ]
    lines += [_fmt_row(r.table_row()) for r in reports]
    lines += ["", "Full matrix (every metric on every split):"]
    lines.append(f"{'Model':<8}{'Split':<7}{'Acc.':>6}{'Majority':>10}{'n_err=0':>9}{'n_err=1':>9}{'n_err≥2':>9}{'Games':>7}")
    for r in reports:
        for split in ("train", "test"):
            m = getattr(r, split)
            if m is None:
                continue
            lines.append(
                f"{r.label:<8}{split:<7}{m.vertex_accuracy:>6.2f}{m.majority_baseline:>10.2f}"
                f"{m.games_err0:>9}{m.games_err1:>9}{m.games_err2plus:>9}{m.games:>7}"
            )
    return "\n".join(lines) + "\n"


def misclassification_csv(metrics: Metrics) -> str:
    rows = ["vertex_count,misclassified"] + [f"{n},{e}" for n, e in metrics.per_game]
    return "\n".join(rows) + "\n"


def scatter_plot(metrics: Metrics, path, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    sizes = [n for n, _ in metrics.per_game]
    errors = [e for _, e in metrics.per_game]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.scatter(sizes, errors, s=8, alpha=0.6)
    ax.set_xlabel("vertices")
    ax.set_ylabel("misclassified vertices")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
