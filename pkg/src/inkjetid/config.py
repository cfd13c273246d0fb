"""Pipeline configuration: one nested structure, YAML/JSON files and shipped presets."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .evaluate import AggregationConfig
from .featurize import SUBSET_MODES, FeatureConfig, config_hash
from .model import TrainConfig
from .preprocess import PreprocessParams
from .spectral import SpectralParams

PRESETS = (
    "wavelets_1d", "wavelets_2d", "fft_1d", "fft_2d", "stft_1d", "stft_2d",
    "agg_after_train_crop_val_doc", "agg_after_train_doc_val_doc", "agg_none",
    "agg_before_train_doc_val_doc", "agg_before_train_doc_val_crop",
)


@dataclass
class CropConfig:
    count: int = 96
    seed: int = 0
    min_droplets: int = 10
    filter_channel: str = "gray"

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("crop count must be >= 0")
        if self.min_droplets < 0:
            raise ValueError("min_droplets must be >= 0")


@dataclass
class SynthConfig:
    profiles: int = 8
    docs: int = 2
    size: int = 1024
    dpi: float = 2400.0
    kind: str = "separable"  # or "clones"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("separable", "clones"):
            raise ValueError("synth kind must be 'separable' or 'clones'")


@dataclass
class PipelineConfig:
    spectral: SpectralParams = field(default_factory=SpectralParams)
    preprocess: PreprocessParams = field(default_factory=PreprocessParams)
    crops: CropConfig = field(default_factory=CropConfig)
    subset: str = "all"
    train: TrainConfig = field(default_factory=TrainConfig)
    aggregation: AggregationConfig = field(default_factory=AggregationConfig)
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2])
    synth: SynthConfig = field(default_factory=SynthConfig)
    workers: int = 1
    paths: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.subset not in SUBSET_MODES:
            raise ValueError(f"subset must be one of {SUBSET_MODES}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not self.seeds:
            raise ValueError("at least one seed is required")

    @property
    def features(self) -> FeatureConfig:
        return FeatureConfig(self.spectral, self.preprocess)

    def feature_dict(self) -> dict:
        """Everything that determines the rows of a feature file."""
        return {"spectral": self.spectral.to_dict(), "preprocess": self.preprocess.to_dict(),
                "crops": vars(self.crops).copy()}

    def feature_hash(self) -> str:
        return config_hash(self.feature_dict())

    def to_dict(self) -> dict:
        return {
            **self.feature_dict(),
            "subset": self.subset,
            "train": self.train.to_dict(),
            "aggregation": self.aggregation.to_dict(),
            "seeds": list(self.seeds),
            "synth": vars(self.synth).copy(),
            "workers": self.workers,
            "paths": dict(self.paths),
        }

    def hash(self) -> str:
        d = self.to_dict()
        d.pop("workers")
        d.pop("paths")
        return config_hash(d)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {"spectral", "preprocess", "crops", "subset", "train", "aggregation",
                 "seeds", "synth", "workers", "paths"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(
            spectral=SpectralParams(**d.get("spectral", {})),
            preprocess=PreprocessParams(**d.get("preprocess", {})),
            crops=CropConfig(**d.get("crops", {})),
            subset=d.get("subset", "all"),
            train=TrainConfig(**d.get("train", {})),
            aggregation=AggregationConfig(**d.get("aggregation", {})),
            seeds=list(d.get("seeds", [0, 1, 2])),
            synth=SynthConfig(**d.get("synth", {})),
            workers=int(d.get("workers", 1)),
            paths=dict(d.get("paths", {})),
        )


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def _read(path: Path) -> dict:
    text = path.read_text()
    data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping")
    return data


def preset_dict(name: str) -> dict:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    text = resources.files("inkjetid.presets").joinpath(f"{name}.yaml").read_text()
    return yaml.safe_load(text) or {}


def load_config(source: str | Path | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Build a config from defaults, a preset name or file, and flag overrides.

    A file may name a preset under ``preset:``; its own keys override the preset.
    """
    data: dict = {}
    if source is not None:
        path = Path(source)
        if path.exists():
            data = _read(path)
            if "preset" in data:
                data = deep_merge(preset_dict(data.pop("preset")), data)
        else:
            data = preset_dict(str(source))
    data = deep_merge(data, overrides or {})
    return PipelineConfig.from_dict(data)
