"""End-to-end glue: manifest -> crops -> feature table -> model -> predictions."""

from __future__ import annotations

import logging
import zlib
from concurrent.futures import ProcessPoolExecutor
from typing import Callable

import numpy as np

from .config import PipelineConfig
from .dataset import Manifest, ManifestEntry, ScanDocument, load_scan, sample_crops
from .droplet import CropFilter
from .evaluate import aggregate_logits, ranking
from .featurize import FeatureConfig, FeatureTable, extract_features
from .model import MlpModel

log = logging.getLogger(__name__)


def document_seed(seed: int, scan_id: str) -> np.random.SeedSequence:
    """Crop-sampling seed of one scan: stable across runs and manifest order."""
    return np.random.SeedSequence([int(seed), zlib.crc32(scan_id.encode())])


def document_features(doc: ScanDocument, config: PipelineConfig) -> FeatureTable:
    filt = CropFilter(config.crops.min_droplets, config.crops.filter_channel)
    crops = sample_crops(doc, config.crops.count, document_seed(config.crops.seed, doc.scan_id),
                         filt, config.preprocess)
    fc = FeatureConfig(config.spectral, config.preprocess)
    X = np.array([extract_features(c, fc).values for c in crops]).reshape(len(crops), -1)
    n = len(crops)
    return FeatureTable(X, [doc.scan_id] * n, [doc.printer_model] * n, [doc.split] * n,
                        [c.origin for c in crops], config.feature_hash())


def _entry_features(args) -> FeatureTable:
    entry, config = args
    return document_features(load_scan(entry), config)


def extract_dataset(manifest: Manifest, config: PipelineConfig, workers: int | None = None,
                    progress: Callable[[int, int, ManifestEntry], None] | None = None) -> FeatureTable:
    """Feature rows for every scan of the manifest, in manifest order."""
    workers = workers or config.workers
    jobs = [(e, config) for e in manifest.entries]
    tables = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, t in enumerate(pool.map(_entry_features, jobs)):
                tables.append(t)
                if progress:
                    progress(i + 1, len(jobs), manifest.entries[i])
    else:
        for i, job in enumerate(jobs):
            tables.append(_entry_features(job))
            if progress:
                progress(i + 1, len(jobs), manifest.entries[i])
    return FeatureTable.concat(tables)


def predict_document(model: MlpModel, doc: ScanDocument, config: PipelineConfig,
                     top: int = 5) -> tuple[list[tuple[str, float]], np.ndarray]:
    """Rank printer models for one scan by its mean crop logits.

    Returns ``[(label, score), ...]`` for the ``top`` classes (scores are the
    softmax of the aggregated logits) and the aggregated logit vector.
    """
    from .dataset import CropSamplingError

    try:
        table = document_features(doc, config)
    except CropSamplingError as exc:
        raise CropSamplingError(f"no valid crops found: {exc}", exc.found) from exc
    if len(table) == 0:
        raise CropSamplingError("no valid crops found", 0)
    logits = aggregate_logits(model.predict_logits(table.X))
    z = np.exp(logits - logits.max())
    prob = z / z.sum()
    order = ranking(logits)[0][: min(top, len(model.label_map))]
    return [(model.label_map[i], float(prob[i])) for i in order], logits
