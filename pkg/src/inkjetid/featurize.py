"""Fixed-layout crop descriptor, subset views, standardization and feature files.

Layout (241 values)::

    y_max, y_min, contrast                       general, on the gray plane
    for R, G, B:  pixel_mean, pixel_std,
                  10 droplet stats, 4 bands x 12 band stats
    for gray:     10 droplet stats, 4 bands x 12 band stats

Gray pixel mean/std are left out: they duplicate the general intensity
features, and leaving them out gives 3 + 3*2 + 4*10 + 4*48 = 241.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import Crop
from .droplet import DROPLET_STAT_NAMES, droplet_arrays, stats_from_arrays
from .preprocess import CHANNELS, PreprocessParams, contrast_features, make_ink_mask
from .spectral import BAND_STAT_NAMES, N_BANDS, SpectralParams, band_stats, sub_bands

LAYOUT_VERSION = "inkjetid-241-v1"
COLOR_CHANNELS = CHANNELS[:3]
GENERAL_NAMES = ("y_max", "y_min", "contrast")


def _channel_names(ch: str) -> list[str]:
    names = [f"{ch}.pixel_mean", f"{ch}.pixel_std"] if ch in COLOR_CHANNELS else []
    names += [f"{ch}.droplet.{s}" for s in DROPLET_STAT_NAMES]
    names += [f"{ch}.band{b}.{s}" for b in range(N_BANDS) for s in BAND_STAT_NAMES]
    return names


FEATURE_NAMES: tuple[str, ...] = tuple(
    list(GENERAL_NAMES) + [n for ch in CHANNELS for n in _channel_names(ch)]
)
N_FEATURES = len(FEATURE_NAMES)
assert N_FEATURES == 3 + 3 * 2 + 4 * len(DROPLET_STAT_NAMES) + 4 * N_BANDS * len(BAND_STAT_NAMES) == 241

SUBSET_MODES = ("all", "single_channel", "frequency_only")
_BAND_IDX = np.array([i for i, n in enumerate(FEATURE_NAMES) if ".band" in n])
SUBSET_INDEX: dict[str, np.ndarray] = {
    "all": np.arange(N_FEATURES),
    "single_channel": np.array(
        [i for i, n in enumerate(FEATURE_NAMES) if n in GENERAL_NAMES or n.startswith("gray.")]
    ),
    "frequency_only": _BAND_IDX,
}


@dataclass
class FeatureConfig:
    spectral: SpectralParams = field(default_factory=SpectralParams)
    preprocess: PreprocessParams = field(default_factory=PreprocessParams)


@dataclass
class FeatureVector:
    values: np.ndarray
    layout_version: str = LAYOUT_VERSION

    def __post_init__(self):
        if self.values.shape != (N_FEATURES,):
            raise ValueError(f"feature vector must have {N_FEATURES} values, got {self.values.shape}")


def channel_features(plane: np.ndarray, channel: str, config: FeatureConfig) -> np.ndarray:
    """Pixel, droplet and band statistics of one normalized plane."""
    parts = []
    if channel in COLOR_CHANNELS:
        parts.append([plane.mean(), plane.std()])
    mask = make_ink_mask(plane, config.preprocess, channel)
    area, perimeter, _ = droplet_arrays(mask)
    parts.append(stats_from_arrays(area, perimeter).as_array())
    bands = sub_bands(plane, config.spectral)
    parts.extend(band_stats(b).as_array() for b in bands.bands)
    return np.concatenate([np.asarray(p, dtype=np.float64) for p in parts])


def extract_features(crop: Crop, config: FeatureConfig | None = None) -> FeatureVector:
    config = config or FeatureConfig()
    planes = crop.normalized()
    c = contrast_features(planes[3])
    parts = [np.array([c["y_max"], c["y_min"], c["contrast"]])]
    parts += [channel_features(planes[i], ch, config) for i, ch in enumerate(CHANNELS)]
    return FeatureVector(np.concatenate(parts))


def feature_subset(v: FeatureVector | np.ndarray, mode: str = "all") -> np.ndarray:
    """Select the ablation view of a vector or of the rows of a matrix."""
    if mode not in SUBSET_INDEX:
        raise ValueError(f"unknown subset mode {mode!r}; expected one of {SUBSET_MODES}")
    values = v.values if isinstance(v, FeatureVector) else np.asarray(v)
    if values.shape[-1] != N_FEATURES:
        raise ValueError(f"expected {N_FEATURES} features, got {values.shape[-1]}")
    return values[..., SUBSET_INDEX[mode]]


def subset_names(mode: str) -> list[str]:
    return [FEATURE_NAMES[i] for i in SUBSET_INDEX[mode]]


# ---------------------------------------------------------------------------
# Standardization


@dataclass
class Scaler:
    means: np.ndarray
    stds: np.ndarray
    fitted_on: int

    @property
    def constant(self) -> np.ndarray:
        """Indices of features with zero training variance."""
        return np.flatnonzero(self.stds == 0)

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "stds": self.stds.tolist(), "fitted_on": self.fitted_on}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.asarray(d["means"], float), np.asarray(d["stds"], float), int(d["fitted_on"]))


def _as_matrix(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        return np.atleast_2d(vectors).astype(np.float64)
    return np.stack([v.values if isinstance(v, FeatureVector) else np.asarray(v) for v in vectors]).astype(np.float64)


def fit_scaler(train_vectors) -> Scaler:
    """Per-feature mean and population std over the training rows.

    Features whose spread is at rounding level relative to their mean get std 0
    and are treated as constant.
    """
    X = _as_matrix(train_vectors)
    if X.shape[0] < 2:
        raise ValueError("fit_scaler needs at least 2 vectors")
    means = X.mean(axis=0)
    stds = np.sqrt(np.mean((X - means) ** 2, axis=0))
    stds[stds <= 1e-12 * np.maximum(1.0, np.abs(means))] = 0.0
    return Scaler(means, stds, X.shape[0])


def apply_scaler(v, s: Scaler) -> np.ndarray:
    values = v.values if isinstance(v, FeatureVector) else np.asarray(v, dtype=np.float64)
    if values.shape[-1] != s.means.shape[0]:
        raise ValueError(f"vector length {values.shape[-1]} != scaler length {s.means.shape[0]}")
    safe = np.where(s.stds > 0, s.stds, 1.0)
    return np.where(s.stds > 0, (values - s.means) / safe, 0.0)


# ---------------------------------------------------------------------------
# Feature files


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class FeatureTable:
    """Crop features of a dataset, one row per crop."""

    X: np.ndarray
    scan_id: np.ndarray
    label: np.ndarray
    split: np.ndarray
    origin: np.ndarray  # (n, 2) x, y
    config_hash: str = ""
    layout_version: str = LAYOUT_VERSION
    feature_names: Sequence[str] = FEATURE_NAMES

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64).reshape(-1, len(self.feature_names))
        self.scan_id = np.asarray(self.scan_id, dtype=str)
        self.label = np.asarray(self.label, dtype=str)
        self.split = np.asarray(self.split, dtype=str)
        self.origin = np.asarray(self.origin, dtype=np.int64).reshape(-1, 2)
        n = self.X.shape[0]
        if not (len(self.scan_id) == len(self.label) == len(self.split) == len(self.origin) == n):
            raise ValueError("feature table columns have different lengths")

    def __len__(self) -> int:
        return self.X.shape[0]

    def select(self, rows) -> "FeatureTable":
        return FeatureTable(self.X[rows], self.scan_id[rows], self.label[rows], self.split[rows],
                            self.origin[rows], self.config_hash, self.layout_version, self.feature_names)

    def split_rows(self, name: str) -> "FeatureTable":
        return self.select(self.split == name)

    @classmethod
    def concat(cls, tables: list["FeatureTable"]) -> "FeatureTable":
        if not tables:
            raise ValueError("nothing to concatenate")
        t0 = tables[0]
        return cls(
            np.concatenate([t.X for t in tables]),
            np.concatenate([t.scan_id for t in tables]),
            np.concatenate([t.label for t in tables]),
            np.concatenate([t.split for t in tables]),
            np.concatenate([t.origin for t in tables]),
            t0.config_hash, t0.layout_version, t0.feature_names,
        )

    def save(self, path: str | Path) -> None:
        """``.npz`` writes the binary encoding; anything else writes CSV."""
        path = Path(path)
        meta = {"layout_version": self.layout_version, "config_hash": self.config_hash,
                "feature_names": list(self.feature_names)}
        if path.suffix == ".npz":
            np.savez_compressed(path, X=self.X, scan_id=self.scan_id, label=self.label,
                                split=self.split, origin=self.origin, meta=json.dumps(meta))
            return
        with open(path, "w", newline="") as fh:
            fh.write(f"# layout_version: {self.layout_version}\n")
            fh.write(f"# config_hash: {self.config_hash}\n")
            w = csv.writer(fh)
            w.writerow(["scan_id", "label", "split", "x", "y", *self.feature_names])
            for i in range(len(self)):
                w.writerow([self.scan_id[i], self.label[i], self.split[i], *self.origin[i],
                            *(repr(float(v)) for v in self.X[i])])

    @classmethod
    def load(cls, path: str | Path) -> "FeatureTable":
        path = Path(path)
        if path.suffix == ".npz":
            with np.load(path, allow_pickle=False) as z:
                meta = json.loads(str(z["meta"]))
                return cls(z["X"], z["scan_id"], z["label"], z["split"], z["origin"],
                           meta["config_hash"], meta["layout_version"], tuple(meta["feature_names"]))
        meta = {}
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
        body = []
        for line in lines:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            else:
                body.append(line)
        rows = list(csv.reader(body))
        header, rows = rows[0], rows[1:]
        names = tuple(header[5:])
        X = np.array([[float(v) for v in r[5:]] for r in rows]).reshape(-1, len(names))
        return cls(X, [r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows],
                   [[int(r[3]), int(r[4])] for r in rows], meta.get("config_hash", ""),
                   meta.get("layout_version", ""), names)
