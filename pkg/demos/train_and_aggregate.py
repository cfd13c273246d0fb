"""
Training on synthetic printers and voting per document
======================================================

Four synthetic printers, two pages each. Crops from the first page train the
network; the second page is held out. Averaging crop logits over a page
usually beats judging each crop on its own.

This takes a minute or two on one core.
"""

import tempfile
from pathlib import Path

from inkjetid.config import load_config
from inkjetid.dataset import load_manifest
from inkjetid.evaluate import AggregationConfig, evaluate_model, evaluate_run
from inkjetid.model import TrainConfig
from inkjetid.pipeline import extract_dataset
from inkjetid.synthgen import make_synthetic_dataset, separable_profiles

out = Path(tempfile.mkdtemp())
make_synthetic_dataset(separable_profiles(4), 2, out, size=768)

# 32 crops per page keeps the run short
config = load_config(overrides={"crops": {"count": 32}})
table = extract_dataset(load_manifest(out / "manifest.jsonl"), config)
print(f"{len(table)} crops x {table.X.shape[1]} features")

# no aggregation: train and score single crops
per_crop, models = evaluate_run(table, AggregationConfig("none", False, False), seeds=[0],
                                train_config=TrainConfig(max_epochs=100), return_models=True)
print("per crop     ", {n: round(v, 3) for n, v in per_crop.f1_top_n.items()})

# the same model, its crop logits averaged per page
f1, cm, _ = evaluate_model(models[0], table, AggregationConfig())
print("per document ", {n: round(v, 3) for n, v in f1.items()})
print(cm)
