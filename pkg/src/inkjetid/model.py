"""Tanh multilayer perceptron trained with Adam, written against numpy.

Everything runs in float64 so gradients can be checked against finite
differences at tight tolerances.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .evaluate import group_mean, top_n_f1
from .featurize import LAYOUT_VERSION, Scaler, apply_scaler, feature_subset, fit_scaler

log = logging.getLogger(__name__)

CLASSIFIERS = ("mlp",)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    l2_factor: float = 1e-4
    batch_size: int = 64
    max_epochs: int = 500
    patience: int = 20
    seed: int = 0
    hidden: tuple[int, ...] = (512, 512, 512)
    classifier: str = "mlp"

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.l2_factor < 0:
            raise ValueError("l2_factor must be >= 0")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be >= 1")
        if self.classifier not in CLASSIFIERS:
            raise ValueError(f"classifier {self.classifier!r} is not implemented (only 'mlp')")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class MlpModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    label_map: list[str]
    scaler: Scaler | None = None
    subset: str = "all"
    layout_version: str = LAYOUT_VERSION
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.label_map)) != len(self.label_map):
            raise ValueError("label_map must not contain duplicates")
        if self.weights and self.weights[-1].shape[1] != len(self.label_map):
            raise ValueError("output layer size does not match label_map")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    def params(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def predict_logits(self, raw: np.ndarray) -> np.ndarray:
        """Logits for raw 241-wide feature rows (subset and scaler applied here)."""
        x = feature_subset(np.atleast_2d(raw), self.subset)
        if self.scaler is not None:
            x = apply_scaler(x, self.scaler)
        return forward(self, x)


def init_mlp(n_in: int, hidden, n_out: int, rng: np.random.Generator, label_map=None) -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    sizes = [n_in, *hidden, n_out]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    labels = list(label_map) if label_map is not None else [str(i) for i in range(n_out)]
    return MlpModel(weights, biases, labels)


def _forward_cache(model: MlpModel, x: np.ndarray):
    acts = [x]
    h = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        h = z if i == last else np.tanh(z)
        acts.append(h)
    return acts


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.input_dim:
        raise ValueError(f"input has {x.shape[1]} features, model expects {model.input_dim}")
    out = _forward_cache(model, x)[-1]
    return out[0] if single else out


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def loss_and_grad(model: MlpModel, x: np.ndarray, y: np.ndarray, l2: float = 0.0,
                  groups: np.ndarray | None = None):
    """Mean cross-entropy plus ``l2 * sum(W**2)`` (weights only) and its gradients.

    With ``groups`` (a document index per row), logits are averaged per group
    before the loss and ``y`` holds one label per group.

    Returns ``(loss, grad_weights, grad_biases)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.intp)
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    if y.size and (y.min() < 0 or y.max() >= model.n_classes):
        raise ValueError("label index out of range")
    acts = _forward_cache(model, x)
    logits = acts[-1]
    if groups is not None:
        logits, agg = group_mean(logits, groups, return_matrix=True)
    if logits.shape[0] != y.shape[0]:
        raise ValueError("number of labels does not match the batch")
    n = logits.shape[0]
    logp = log_softmax(logits)
    loss = -logp[np.arange(n), y].mean()
    loss += l2 * sum(float(np.sum(w * w)) for w in model.weights)
    delta = np.exp(logp)
    delta[np.arange(n), y] -= 1.0
    delta /= n
    if groups is not None:
        delta = agg.T @ delta
    gw, gb = [], []
    for i in range(len(model.weights) - 1, -1, -1):
        gw.append(acts[i].T @ delta + 2.0 * l2 * model.weights[i])
        gb.append(delta.sum(axis=0))
        if i:
            delta = (delta @ model.weights[i].T) * (1.0 - acts[i] ** 2)
    return float(loss), gw[::-1], gb[::-1]


class Adam:
    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads) -> None:
        """In-place update of ``params``."""
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class SampleSet:
    """Model inputs (feature subset applied, not yet standardized).

    When ``groups`` is set, rows belonging to the same group are one document
    and ``y`` has one label per group.
    """

    X: np.ndarray
    y: np.ndarray
    groups: np.ndarray | None = None

    @property
    def n_labels(self) -> int:
        return len(self.y)


@dataclass
class TrainLog:
    epochs: list[int] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    val_f1: list[float] = field(default_factory=list)
    best_epoch: int = 0
    best_val_f1: float = float("-inf")
    stopped_early: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def _batches(data: SampleSet, batch_size: int, rng: np.random.Generator):
    if data.groups is None:
        order = rng.permutation(len(data.X))
        for s in range(0, len(order), batch_size):
            rows = order[s : s + batch_size]
            yield data.X[rows], data.y[rows], None
        return
    order = rng.permutation(data.n_labels)
    for s in range(0, len(order), batch_size):
        chosen = order[s : s + batch_size]
        rows = np.flatnonzero(np.isin(data.groups, chosen))
        remap = np.full(data.n_labels, -1)
        remap[chosen] = np.arange(len(chosen))
        yield data.X[rows], data.y[chosen], remap[data.groups[rows]]


def predict_set(model: MlpModel, x: np.ndarray, groups: np.ndarray | None = None) -> np.ndarray:
    logits = forward(model, x)
    return logits if groups is None else group_mean(logits, groups)


def train(train_set: SampleSet, val_set: SampleSet, config: TrainConfig | None = None,
          label_map=None, scaler: Scaler | None = None, subset: str = "all"):
    """Adam training with early stopping on validation Top-1 F1.

    Returns the best-validation model and the :class:`TrainLog`.
    """
    cfg = config or TrainConfig()
    if len(train_set.X) == 0 or len(val_set.X) == 0:
        raise ValueError("training and validation sets must be non-empty")
    n_classes = len(label_map) if label_map is not None else int(max(train_set.y.max(), val_set.y.max())) + 1
    missing = set(np.unique(val_set.y)) - set(np.unique(train_set.y))
    if missing:
        names = [label_map[i] if label_map is not None else i for i in sorted(missing)]
        raise ValueError(f"classes {names} are in the validation set but not in training")
    scaler = scaler or fit_scaler(train_set.X)
    xt = apply_scaler(train_set.X, scaler)
    xv = apply_scaler(val_set.X, scaler)
    scaled_train = SampleSet(xt, train_set.y, train_set.groups)

    rng = np.random.default_rng(cfg.seed)
    model = init_mlp(xt.shape[1], cfg.hidden, n_classes, rng, label_map)
    model.scaler, model.subset, model.config = scaler, subset, cfg.to_dict()
    opt = Adam(model.params(), lr=cfg.learning_rate)
    history = TrainLog()
    best_params = None
    wait = 0
    for epoch in range(1, cfg.max_epochs + 1):
        losses = []
        for xb, yb, gb in _batches(scaled_train, cfg.batch_size, rng):
            loss, gw, gbias = loss_and_grad(model, xb, yb, cfg.l2_factor, gb)
            opt.step(model.params(), [*gw, *gbias])
            losses.append(loss)
        f1 = top_n_f1(predict_set(model, xv, val_set.groups), val_set.y, 1)
        history.epochs.append(epoch)
        history.train_loss.append(float(np.mean(losses)))
        history.val_f1.append(f1)
        if f1 > history.best_val_f1:
            history.best_val_f1, history.best_epoch = f1, epoch
            best_params = [p.copy() for p in model.params()]
            wait = 0
        else:
            wait += 1
            if wait >= cfg.patience:
                history.stopped_early = True
                break
    n_layers = len(model.weights)
    model.weights = best_params[:n_layers]
    model.biases = best_params[n_layers:]
    log.info("trained %d epochs, best val F1 %.4f at epoch %d",
             history.epochs[-1], history.best_val_f1, history.best_epoch)
    return model, history


# ---------------------------------------------------------------------------
# Checkpoints


class CheckpointError(ValueError):
    pass


def _digest(arrays: dict[str, np.ndarray], meta: str) -> str:
    h = hashlib.sha256(meta.encode())
    for k in sorted(arrays):
        a = np.ascontiguousarray(arrays[k])
        h.update(k.encode())
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def save_checkpoint(model: MlpModel, path: str | Path, extra: dict | None = None) -> None:
    arrays = {}
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        arrays[f"W{i}"] = w
        arrays[f"b{i}"] = b
    if model.scaler is not None:
        arrays["scaler_means"] = model.scaler.means
        arrays["scaler_stds"] = model.scaler.stds
    meta = json.dumps({
        "layout_version": model.layout_version,
        "label_map": model.label_map,
        "subset": model.subset,
        "n_layers": len(model.weights),
        "scaler_fitted_on": model.scaler.fitted_on if model.scaler else None,
        "config": model.config,
        "extra": extra or {},
    }, sort_keys=True)
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(meta), sha256=np.array(_digest(arrays, meta)), **arrays)


def load_checkpoint(path: str | Path) -> tuple[MlpModel, dict]:
    """Load a checkpoint written by :func:`save_checkpoint`; returns ``(model, extra)``."""
    with np.load(path, allow_pickle=False) as z:
        meta_s = str(z["meta"])
        stored = str(z["sha256"])
        arrays = {k: z[k] for k in z.files if k not in ("meta", "sha256")}
    if _digest(arrays, meta_s) != stored:
        raise CheckpointError(f"{path}: integrity hash mismatch")
    meta = json.loads(meta_s)
    n = meta["n_layers"]
    scaler = None
    if "scaler_means" in arrays:
        scaler = Scaler(arrays["scaler_means"], arrays["scaler_stds"], meta["scaler_fitted_on"])
    model = MlpModel(
        weights=[arrays[f"W{i}"] for i in range(n)],
        biases=[arrays[f"b{i}"] for i in range(n)],
        label_map=list(meta["label_map"]),
        scaler=scaler,
        subset=meta["subset"],
        layout_version=meta["layout_version"],
        config=meta["config"],
    )
    return model, meta.get("extra", {})


def clone(model: MlpModel) -> MlpModel:
    return copy.deepcopy(model)
