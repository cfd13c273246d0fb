"""Command line interface: ``inkjetid synth | extract | fit-scaler | train | eval | predict``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .config import PipelineConfig, deep_merge, load_config
from .dataset import CropSamplingError, ManifestError, ScanDocument, load_manifest, read_image
from .evaluate import EvalReport, build_split, evaluate_model, label_map_of
from .featurize import LAYOUT_VERSION, FeatureTable, Scaler, feature_subset, fit_scaler
from .model import CheckpointError, SampleSet, load_checkpoint, save_checkpoint, train
from .pipeline import extract_dataset, predict_document
from .synthgen import indistinguishable_profiles, make_synthetic_dataset, separable_profiles

log = logging.getLogger("inkjetid")


class CliError(Exception):
    pass


def _overrides(args) -> dict:
    o: dict = {}
    if args.seed is not None:
        o = deep_merge(o, {"crops": {"seed": args.seed}, "train": {"seed": args.seed},
                           "synth": {"seed": args.seed}, "seeds": [args.seed]})
    if args.workers is not None:
        o["workers"] = args.workers
    if args.method is not None:
        o = deep_merge(o, {"spectral": {"method": args.method}})
    if args.mode is not None:
        o = deep_merge(o, {"spectral": {"mode": args.mode}})
    if args.crops is not None:
        o = deep_merge(o, {"crops": {"count": args.crops}})
    return o


def _config(args) -> PipelineConfig:
    return load_config(args.config, _overrides(args))


def cmd_synth(args) -> int:
    cfg = _config(args)
    n = args.profiles if args.profiles is not None else cfg.synth.profiles
    docs = args.docs if args.docs is not None else cfg.synth.docs
    kind = args.kind or cfg.synth.kind
    make = separable_profiles if kind == "separable" else indistinguishable_profiles
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}") from exc
    manifest = make_synthetic_dataset(make(n, cfg.synth.seed), docs, out, size=args.size or cfg.synth.size,
                                      dpi=cfg.synth.dpi)
    print(f"wrote {len(manifest.entries)} scans and {out / 'manifest.jsonl'}")
    return 0


def cmd_extract(args) -> int:
    cfg = _config(args)
    manifest = load_manifest(args.manifest)
    t0 = time.perf_counter()

    def progress(i, n, entry):
        log.info("[%d/%d] %s", i, n, entry.scan_id)

    table = extract_dataset(manifest, cfg, progress=progress)
    table.save(args.out)
    print(f"{len(table)} feature rows from {len(manifest.entries)} scans -> {args.out} "
          f"(config {table.config_hash}, {time.perf_counter() - t0:.1f} s)")
    return 0


def _load_features(path) -> FeatureTable:
    table = FeatureTable.load(path)
    if table.layout_version != LAYOUT_VERSION:
        raise CliError(f"{path}: feature layout {table.layout_version!r}, expected {LAYOUT_VERSION!r}")
    return table


def cmd_fit_scaler(args) -> int:
    cfg = _config(args)
    table = _load_features(args.features)
    scaler = fit_scaler(feature_subset(table.split_rows("train").X, cfg.subset))
    Path(args.out).write_text(json.dumps(scaler.to_dict() | {"subset": cfg.subset,
                                                             "config_hash": table.config_hash}))
    print(f"scaler over {scaler.fitted_on} training rows, {len(scaler.constant)} constant features "
          f"-> {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    table = _load_features(args.features)
    labels = label_map_of(table)
    agg = cfg.aggregation
    tr = build_split(table, "train", labels, agg.point, agg.train_aggregated, cfg.subset)
    va = build_split(table, "val", labels, agg.point, agg.val_aggregated, cfg.subset)
    scaler = None
    if args.scaler:
        data = json.loads(Path(args.scaler).read_text())
        if data.get("subset", "all") != cfg.subset:
            raise CliError("scaler was fitted for a different feature subset")
        scaler = Scaler.from_dict(data)
    model, history = train(SampleSet(tr.X, tr.y, tr.groups), SampleSet(va.X, va.y, va.groups),
                           cfg.train, labels, scaler, cfg.subset)
    model.config["aggregation"] = agg.to_dict()
    save_checkpoint(model, args.out, extra={
        "features": cfg.feature_dict(),
        "feature_hash": table.config_hash,
        "config_hash": cfg.hash(),
        "history": history.to_dict(),
    })
    print(f"trained {history.epochs[-1]} epochs, best val Top-1 F1 {history.best_val_f1:.3f} "
          f"(epoch {history.best_epoch}) -> {args.out}")
    return 0


def _checkpoint(path):
    try:
        return load_checkpoint(path)
    except (OSError, KeyError, CheckpointError) as exc:
        raise CliError(f"cannot load checkpoint {path}: {exc}") from exc


def cmd_eval(args) -> int:
    cfg = _config(args)
    model, extra = _checkpoint(args.checkpoint)
    table = _load_features(args.features)
    if model.layout_version != table.layout_version:
        raise CliError("checkpoint and feature file use different feature layouts")
    if extra.get("feature_hash") and extra["feature_hash"] != table.config_hash:
        raise CliError("features were extracted with a different configuration than the checkpoint's")
    missing = sorted(set(table.label) - set(model.label_map))
    if missing:
        raise CliError(f"classes {missing} are unknown to the checkpoint")
    t0 = time.perf_counter()
    f1, cm, _ = evaluate_model(model, table, cfg.aggregation)
    report = EvalReport(model.label_map, cfg.aggregation.granularity, [model.config.get("seed", 0)],
                        [f1], [cm], cfg.aggregation.to_dict(), extra.get("config_hash", ""),
                        time.perf_counter() - t0)
    text = report.to_text()
    print(text, end="")
    if args.out:
        report.save(args.out)
    if args.confusion:
        report.plot_confusion(args.confusion)
    return 0


def cmd_predict(args) -> int:
    model, extra = _checkpoint(args.checkpoint)
    stored = extra.get("features", {})
    cfg = load_config(None, deep_merge(stored, _overrides(args)))
    image, dpi = read_image(args.image)
    doc = ScanDocument(image, args.dpi or dpi, "?", "?", Path(args.image).stem, "val")
    ranked, _ = predict_document(model, doc, cfg, top=args.top)
    for i, (label, score) in enumerate(ranked, 1):
        print(f"{i}. {label}\t{score:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (YAML/JSON) or preset name")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--method", choices=("fft", "stft", "dwt"))
    common.add_argument("--mode", choices=("rowwise_1d", "full_2d"))
    common.add_argument("--crops", type=int, help="crops per document")
    common.add_argument("--top", type=int, default=5)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="inkjetid", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="render a synthetic dataset")
    s.add_argument("--profiles", type=int)
    s.add_argument("--docs", type=int)
    s.add_argument("--kind", choices=("separable", "clones"))
    s.add_argument("--size", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("extract", parents=[common], help="extract crop features from a manifest")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True, help="feature file (.npz binary, otherwise CSV)")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("fit-scaler", parents=[common], help="fit the standardization on training rows")
    s.add_argument("--features", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fit_scaler)

    s = sub.add_parser("train", parents=[common], help="train the classifier")
    s.add_argument("--features", required=True)
    s.add_argument("--scaler")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint on the validation rows")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--out", help="report file (.json or text)")
    s.add_argument("--confusion", help="write the confusion matrix as an image")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("predict", parents=[common], help="rank printer models for one scan")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--image", required=True)
    s.add_argument("--dpi", type=float)
    s.set_defaults(func=cmd_predict)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, ManifestError, CropSamplingError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
