"""Multi-label affordance classifier: one ReLU hidden layer, sigmoid outputs, BCE loss."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .semantics import AFFORDANCES

log = logging.getLogger(__name__)

LABEL_ORDER = tuple(sorted(AFFORDANCES))
EPS = 1e-7
DEFAULT_THRESHOLD = 0.5


class TrainingError(RuntimeError):
    pass


@dataclass(eq=False)
class AffordanceModel:
    w1: np.ndarray  # (hidden, input)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (labels, hidden)
    b2: np.ndarray  # (labels,)
    label_order: tuple = LABEL_ORDER

    def __post_init__(self):
        for name in ("w1", "b1", "w2", "b2"):
            setattr(self, name, np.array(getattr(self, name), dtype=np.float64))
        h, d = self.w1.shape
        if self.b1.shape != (h,) or self.w2.shape != (len(self.label_order), h) or self.b2.shape != (len(self.label_order),):
            raise ValueError("inconsistent parameter shapes")
        if not all(np.isfinite(p).all() for p in self.params().values()):
            raise ValueError("model parameters must be finite")

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.w1.shape[0]

    def params(self) -> dict:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def copy(self) -> "AffordanceModel":
        return AffordanceModel(**{k: v.copy() for k, v in self.params().items()}, label_order=self.label_order)

    def to_dict(self) -> dict:
        return {
            "dims": {"input": self.input_dim, "hidden": self.hidden_size, "output": len(self.label_order)},
            "w1": self.w1.tolist(), "b1": self.b1.tolist(), "w2": self.w2.tolist(), "b2": self.b2.tolist(),
            "label_order": list(self.label_order),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AffordanceModel":
        return cls(d["w1"], d["b1"], d["w2"], d["b2"], tuple(d.get("label_order", LABEL_ORDER)))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "AffordanceModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def init_model(input_dim: int, hidden_size: int = 128, seed: int = 0) -> AffordanceModel:
    """He-normal weights, zero biases."""
    rng = np.random.default_rng(seed)
    w1 = rng.normal(0.0, np.sqrt(2.0 / input_dim), (hidden_size, input_dim))
    w2 = rng.normal(0.0, np.sqrt(2.0 / hidden_size), (len(LABEL_ORDER), hidden_size))
    return AffordanceModel(w1, np.zeros(hidden_size), w2, np.zeros(len(LABEL_ORDER)))


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_input(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise ValueError(f"input dimension {x.shape[-1]} != model input {model.input_dim}")
    return x


def forward(model: AffordanceModel, x) -> np.ndarray:
    """Label probabilities for one vector ``(d,)`` or a batch ``(n, d)``."""
    x = _check_input(model, x)
    h = np.maximum(x @ model.w1.T + model.b1, 0.0)
    return _sigmoid(h @ model.w2.T + model.b2)


def bce_loss(probs, target) -> float:
    """Mean binary cross-entropy over every label (and example)."""
    p = np.clip(np.asarray(probs, dtype=np.float64), EPS, 1 - EPS)
    t = np.asarray(target, dtype=np.float64)
    return float(np.mean(-(t * np.log(p) + (1 - t) * np.log(1 - p))))


def loss_and_grads(model: AffordanceModel, x, t):
    """Mean BCE of a batch and its analytic gradient for every parameter."""
    x = np.atleast_2d(_check_input(model, x))
    t = np.atleast_2d(np.asarray(t, dtype=np.float64))
    pre = x @ model.w1.T + model.b1
    h = np.maximum(pre, 0.0)
    p = _sigmoid(h @ model.w2.T + model.b2)
    loss = bce_loss(p, t)
    # the clamp has zero slope where it is active
    inside = (p > EPS) & (p < 1 - EPS)
    dz2 = np.where(inside, p - t, 0.0) / t.size
    dh = dz2 @ model.w2
    dpre = dh * (pre > 0)
    grads = {"w1": dpre.T @ x, "b1": dpre.sum(axis=0), "w2": dz2.T @ h, "b2": dz2.sum(axis=0)}
    return loss, grads


@dataclass
class TrainConfig:
    lr: float = 0.05
    epochs: int = 100
    batch: int = 32
    seed: int = 0
    val_fraction: float = 0.15
    hidden_size: int = 128
    momentum: float = 0.0


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)


def split_train_val(n: int, val_fraction: float, seed: int):
    idx = np.random.default_rng(seed).permutation(n)
    n_val = int(np.floor(n * val_fraction))
    if n - n_val < 1:
        n_val = 0
    return np.sort(idx[n_val:]), np.sort(idx[:n_val])


def train(x, t, config: TrainConfig = TrainConfig(), model: AffordanceModel | None = None):
    """Mini-batch gradient descent on mean BCE; deterministic for a fixed seed.

    Returns ``(model, history)`` where the history holds the full training-set
    loss after every epoch and the validation loss (None when no split).
    """
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if x.ndim != 2 or len(x) == 0:
        raise ValueError("training data must be a non-empty (n, d) array")
    if t.shape != (len(x), len(LABEL_ORDER)):
        raise ValueError(f"targets must have shape ({len(x)}, {len(LABEL_ORDER)})")
    if model is None:
        model = init_model(x.shape[1], config.hidden_size, config.seed)
    else:
        model = model.copy()
    tr, va = split_train_val(len(x), config.val_fraction, config.seed)
    rng = np.random.default_rng(config.seed + 1)
    velocity = {k: np.zeros_like(v) for k, v in model.params().items()}
    history = TrainHistory()
    for epoch in range(config.epochs):
        order = tr[rng.permutation(len(tr))]
        for start in range(0, len(order), config.batch):
            batch = order[start:start + config.batch]
            _, grads = loss_and_grads(model, x[batch], t[batch])
            for name, param in model.params().items():
                velocity[name] = config.momentum * velocity[name] - config.lr * grads[name]
                param += velocity[name]
        train_loss = bce_loss(forward(model, x[tr]), t[tr])
        if not np.isfinite(train_loss) or not all(np.isfinite(p).all() for p in model.params().values()):
            raise TrainingError(f"non-finite loss at epoch {epoch} (lr={config.lr}); lower the learning rate")
        history.train_loss.append(train_loss)
        history.val_loss.append(bce_loss(forward(model, x[va]), t[va]) if len(va) else None)
        log.debug("epoch %d train %.5f val %s", epoch, train_loss, history.val_loss[-1])
    return model, history


def labels_from_probs(probs, threshold: float = DEFAULT_THRESHOLD, label_order=LABEL_ORDER) -> frozenset:
    # inclusive threshold; an empty set is a legitimate answer
    return frozenset(lab for lab, p in zip(label_order, probs) if p >= threshold)


def predict(model: AffordanceModel, x, threshold: float = DEFAULT_THRESHOLD) -> frozenset:
    return labels_from_probs(forward(model, x), threshold, model.label_order)


def encode_targets(label_sets, label_order=LABEL_ORDER) -> np.ndarray:
    out = np.zeros((len(label_sets), len(label_order)))
    for i, labels in enumerate(label_sets):
        for lab in labels:
            if lab not in label_order:
                raise ValueError(f"unknown affordance {lab!r}")
            out[i, label_order.index(lab)] = 1.0
    return out


@dataclass
class LabelMetrics:
    per_label: dict
    micro_f1: float
    macro_f1: float
    micro_precision: float = 0.0
    micro_recall: float = 0.0

    def to_dict(self) -> dict:
        return {"per_label": self.per_label, "micro_f1": self.micro_f1, "macro_f1": self.macro_f1,
                "micro_precision": self.micro_precision, "micro_recall": self.micro_recall}

    def table(self) -> str:
        lines = [f"{'label':<24}{'precision':>10}{'recall':>10}{'f1':>10}{'support':>10}"]
        for lab, m in self.per_label.items():
            lines.append(f"{lab:<24}{m['precision']:>10.2f}{m['recall']:>10.2f}{m['f1']:>10.2f}{m['support']:>10d}")
        lines.append(f"{'micro avg':<24}{self.micro_precision:>10.2f}{self.micro_recall:>10.2f}{self.micro_f1:>10.2f}")
        lines.append(f"{'macro avg':<24}{'':>10}{'':>10}{self.macro_f1:>10.2f}")
        return "\n".join(lines)


def _prf(tp, fp, fn):
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def label_metrics(pred, true, label_order=LABEL_ORDER) -> LabelMetrics:
    """Per-label and pooled metrics from binary ``(n, labels)`` arrays."""
    pred = np.asarray(pred, dtype=bool)
    true = np.asarray(true, dtype=bool)
    per_label = {}
    tps = fps = fns = 0
    for j, lab in enumerate(label_order):
        tp = int(np.sum(pred[:, j] & true[:, j]))
        fp = int(np.sum(pred[:, j] & ~true[:, j]))
        fn = int(np.sum(~pred[:, j] & true[:, j]))
        p, r, f = _prf(tp, fp, fn)
        per_label[lab] = {"precision": p, "recall": r, "f1": f, "support": int(true[:, j].sum())}
        tps, fps, fns = tps + tp, fps + fp, fns + fn
    mp, mr, mf = _prf(tps, fps, fns)
    macro = float(np.mean([m["f1"] for m in per_label.values()])) if per_label else 0.0
    return LabelMetrics(per_label, mf, macro, mp, mr)


def evaluate(model: AffordanceModel, x, t, threshold: float = DEFAULT_THRESHOLD) -> LabelMetrics:
    probs = forward(model, np.atleast_2d(x))
    return label_metrics(probs >= threshold, np.asarray(t) > 0.5, model.label_order)


def load_dataset(path):
    """JSONL rows ``{"vector": [...], "affordances": [...]}`` (an optional ``key`` is kept)."""
    keys, vecs, labels = [], [], []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            row = json.loads(line)
            keys.append(row.get("key", str(n)))
            vecs.append(row["vector"])
            labels.append(row.get("affordances", []))
    if len({len(v) for v in vecs}) > 1:
        raise ValueError(f"{path}: mixed vector dimensions")
    return keys, np.asarray(vecs, dtype=np.float64), encode_targets(labels)
