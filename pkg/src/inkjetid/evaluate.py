"""Top-N F1, confusion matrices and crop aggregation regimes."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .featurize import apply_scaler, feature_subset

AGGREGATION_POINTS = ("none", "before_prediction", "after_prediction")
MAX_TOP_N = 5

# (point, train_aggregated, val_aggregated) rows that make sense
VALID_AGGREGATIONS = {
    ("after_prediction", False, True),
    ("after_prediction", True, True),
    ("none", False, False),
    ("before_prediction", True, True),
    ("before_prediction", True, False),
}


@dataclass(frozen=True)
class AggregationConfig:
    point: str = "after_prediction"
    train_aggregated: bool = False
    val_aggregated: bool = True

    def __post_init__(self):
        if self.point not in AGGREGATION_POINTS:
            raise ValueError(f"aggregation point must be one of {AGGREGATION_POINTS}")
        if (self.point, self.train_aggregated, self.val_aggregated) not in VALID_AGGREGATIONS:
            raise ValueError(
                f"invalid aggregation: point={self.point}, train_aggregated={self.train_aggregated}, "
                f"val_aggregated={self.val_aggregated}"
            )

    @property
    def granularity(self) -> str:
        return "per_document" if self.val_aggregated else "per_crop"

    def to_dict(self) -> dict:
        return {"point": self.point, "train_aggregated": self.train_aggregated,
                "val_aggregated": self.val_aggregated}


def aggregate_logits(crop_logits: Sequence[np.ndarray]) -> np.ndarray:
    """Element-wise mean of the crop logits of one document."""
    if len(crop_logits) == 0:
        raise ValueError("no crop logits to aggregate")
    arr = np.asarray(crop_logits, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("crop logits must all have the same length")
    return arr.mean(axis=0)


def aggregate_features(crop_vectors: Sequence[np.ndarray]) -> np.ndarray:
    if len(crop_vectors) == 0:
        raise ValueError("no crop vectors to aggregate")
    values = [getattr(v, "values", v) for v in crop_vectors]
    layouts = {getattr(v, "layout_version", None) for v in crop_vectors}
    if len(layouts) > 1:
        raise ValueError(f"mixed feature layouts: {layouts}")
    if len({np.shape(v) for v in values}) != 1:
        raise ValueError("feature vectors differ in length")
    return np.mean(np.asarray(values, dtype=np.float64), axis=0)


def group_mean(values: np.ndarray, groups: np.ndarray, return_matrix: bool = False):
    """Mean of the rows of ``values`` per group id (ids ``0..G-1``)."""
    groups = np.asarray(groups, dtype=np.intp)
    n_groups = int(groups.max()) + 1
    counts = np.bincount(groups, minlength=n_groups).astype(np.float64)
    if np.any(counts == 0):
        raise ValueError("group ids must be contiguous")
    agg = np.zeros((n_groups, len(groups)))
    agg[groups, np.arange(len(groups))] = 1.0 / counts[groups]
    out = agg @ values
    return (out, agg) if return_matrix else out


def ranking(logits: np.ndarray) -> np.ndarray:
    """Classes by descending logit; ties go to the lower class index."""
    return np.argsort(-np.atleast_2d(logits), axis=1, kind="stable")


def top_n_predictions(logits: np.ndarray, labels: np.ndarray, n: int) -> np.ndarray:
    """Scored prediction: the true class on a top-N hit, otherwise the top-1 class."""
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.intp)
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > logits.shape[1]:
        raise ValueError(f"top-{n} requested but there are only {logits.shape[1]} classes")
    ranks = ranking(logits)
    hit = np.any(ranks[:, :n] == labels[:, None], axis=1)
    return np.where(hit, labels, ranks[:, 0])


def top_n_hit_rate(logits: np.ndarray, labels: np.ndarray, n: int) -> float:
    labels = np.asarray(labels, dtype=np.intp)
    return float(np.mean(top_n_predictions(logits, labels, n) == labels))


def confusion_matrix(predictions, labels, n_classes: int | None = None) -> np.ndarray:
    """Counts with rows = true class and columns = predicted class."""
    pred = np.asarray(predictions, dtype=np.intp)
    true = np.asarray(labels, dtype=np.intp)
    if pred.shape != true.shape:
        raise ValueError("predictions and labels differ in length")
    k = n_classes if n_classes is not None else int(max(pred.max(initial=-1), true.max(initial=-1))) + 1
    if pred.size and (min(pred.min(), true.min()) < 0 or max(pred.max(), true.max()) >= k):
        raise ValueError("label outside the label map")
    cm = np.zeros((k, k), dtype=np.int64)
    np.add.at(cm, (true, pred), 1)
    return cm


def macro_f1(cm: np.ndarray) -> float:
    """Macro F1 over the classes that occur as a label or a prediction."""
    tp = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    present = (support + predicted) > 0
    if not present.any():
        return 0.0
    f1 = 2 * tp[present] / (support[present] + predicted[present])
    return float(f1.mean())


def top_n_f1(predicted_logits, true_labels, n: int = 1) -> float:
    logits = np.atleast_2d(np.asarray(predicted_logits, dtype=np.float64))
    labels = np.asarray(true_labels, dtype=np.intp)
    pred = top_n_predictions(logits, labels, n)
    return macro_f1(confusion_matrix(pred, labels, logits.shape[1]))


@dataclass
class EvalReport:
    labels: list[str]
    granularity: str
    seeds: list[int]
    f1_per_seed: list[dict[int, float]]
    confusions: list[np.ndarray]
    aggregation: dict = field(default_factory=dict)
    config_hash: str = ""
    elapsed_s: float | None = None

    @property
    def f1_top_n(self) -> dict[int, float]:
        return {n: float(np.mean([s[n] for s in self.f1_per_seed])) for n in self.f1_per_seed[0]}

    @property
    def f1_top_n_std(self) -> dict[int, float]:
        return {n: float(np.std([s[n] for s in self.f1_per_seed])) for n in self.f1_per_seed[0]}

    @property
    def confusion(self) -> np.ndarray:
        return self.confusions[0]

    def to_dict(self) -> dict:
        return {
            "granularity": self.granularity,
            "aggregation": self.aggregation,
            "seeds": list(self.seeds),
            "labels": list(self.labels),
            "f1_top_n": {str(k): v for k, v in self.f1_top_n.items()},
            "f1_top_n_std": {str(k): v for k, v in self.f1_top_n_std.items()},
            "f1_per_seed": [{str(k): v for k, v in s.items()} for s in self.f1_per_seed],
            "confusion": self.confusion.tolist(),
            "config_hash": self.config_hash,
            "elapsed_s": self.elapsed_s,
        }

    def to_text(self) -> str:
        mean, std = self.f1_top_n, self.f1_top_n_std
        lines = [f"granularity: {self.granularity}   seeds: {self.seeds}   config: {self.config_hash}"]
        lines.append("  ".join(f"Top{n} F1 {100 * mean[n]:5.1f} +- {100 * std[n]:.1f}" for n in mean))
        cm = self.confusion
        lines.append("")
        lines.append(f"{'class':30s} {'support':>7s} {'correct':>7s} {'F1':>6s}")
        for i, name in enumerate(self.labels):
            sup, tp, pred = cm[i].sum(), cm[i, i], cm[:, i].sum()
            f1 = 2 * tp / (sup + pred) if sup + pred else 0.0
            lines.append(f"{name[:30]:30s} {sup:7d} {tp:7d} {f1:6.3f}")
        lines.append("")
        lines.append("confusion (rows = true, columns = predicted):")
        lines.extend(" ".join(f"{v:3d}" for v in row) for row in cm)
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        path = Path(path)
        if path.suffix == ".json":
            path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        else:
            path.write_text(self.to_text())

    def plot_confusion(self, path: str | Path) -> None:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        k = len(self.labels)
        fig, ax = plt.subplots(figsize=(2 + 0.35 * k, 1.5 + 0.35 * k))
        ax.imshow(self.confusion, cmap="Blues")
        ax.set_xticks(range(k), self.labels, rotation=90, fontsize=7)
        ax.set_yticks(range(k), self.labels, fontsize=7)
        ax.set_xlabel("predicted")
        ax.set_ylabel("true")
        ax.set_title(self.granularity.replace("_", "-"))
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)


# ---------------------------------------------------------------------------
# Building model inputs from a feature table


@dataclass
class Split:
    """Model inputs for one split under an aggregation regime."""

    X: np.ndarray
    y: np.ndarray
    groups: np.ndarray | None
    documents: list[str]


def _document_index(scan_ids: np.ndarray) -> tuple[list[str], np.ndarray]:
    docs, first = np.unique(scan_ids, return_index=True)
    docs = list(docs[np.argsort(first)])
    pos = {d: i for i, d in enumerate(docs)}
    return docs, np.array([pos[s] for s in scan_ids], dtype=np.intp)


def build_split(table, rows_split: str, label_map: list[str], point: str, aggregated: bool,
                subset: str = "all") -> Split:
    t = table.split_rows(rows_split)
    if len(t) == 0:
        raise ValueError(f"feature table has no {rows_split!r} rows")
    index = {c: i for i, c in enumerate(label_map)}
    unknown = sorted(set(t.label) - set(index))
    if unknown:
        raise ValueError(f"classes {unknown} in {rows_split} are absent from training")
    X = feature_subset(t.X, subset)
    y = np.array([index[c] for c in t.label], dtype=np.intp)
    docs, g = _document_index(t.scan_id)
    doc_y = np.zeros(len(docs), dtype=np.intp)
    doc_y[g] = y
    if not aggregated:
        return Split(X, y, None, docs)
    if point == "before_prediction":
        return Split(group_mean(X, g), doc_y, None, docs)
    return Split(X, doc_y, g, docs)


def label_map_of(table) -> list[str]:
    return sorted(set(table.split_rows("train").label))


def evaluate_model(model, table, agg: AggregationConfig, max_n: int = MAX_TOP_N):
    """Top-N F1 and confusion matrix of a trained model on the validation rows."""
    from .model import predict_set

    val = build_split(table, "val", model.label_map, agg.point, agg.val_aggregated, "all")
    x = feature_subset(val.X, model.subset)
    if model.scaler is not None:
        x = apply_scaler(x, model.scaler)
    logits = predict_set(model, x, val.groups)
    k = min(max_n, len(model.label_map))
    f1 = {n: top_n_f1(logits, val.y, n) for n in range(1, k + 1)}
    cm = confusion_matrix(ranking(logits)[:, 0], val.y, len(model.label_map))
    return f1, cm, logits


def evaluate_run(table, agg: AggregationConfig, seeds: Sequence[int], train_config=None,
                 subset: str = "all", return_models: bool = False):
    """Train one model per seed under ``agg`` and report validation Top-N F1."""
    import time

    from .model import SampleSet, TrainConfig, train

    if not np.any(table.split == "val"):
        raise ValueError("dataset has no validation split")
    t0 = time.perf_counter()
    base = train_config or TrainConfig()
    labels = label_map_of(table)
    tr = build_split(table, "train", labels, agg.point, agg.train_aggregated, subset)
    va = build_split(table, "val", labels, agg.point, agg.val_aggregated, subset)
    per_seed, confusions, models = [], [], []
    for seed in seeds:
        cfg_kwargs = base.to_dict() | {"seed": int(seed)}
        cfg = type(base)(**cfg_kwargs)
        model, _ = train(SampleSet(tr.X, tr.y, tr.groups), SampleSet(va.X, va.y, va.groups),
                         cfg, labels, subset=subset)
        model.config["aggregation"] = agg.to_dict()
        f1, cm, _ = evaluate_model(model, table, agg)
        per_seed.append(f1)
        confusions.append(cm)
        models.append(model)
    report = EvalReport(labels, agg.granularity, [int(s) for s in seeds], per_seed, confusions,
                        agg.to_dict(), table.config_hash, time.perf_counter() - t0)
    return (report, models) if return_models else report
