"""Scan loading, dataset manifests and random crop sampling."""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .droplet import CropFilter, droplet_arrays
from .preprocess import PreprocessParams, make_ink_mask, to_grayscale

log = logging.getLogger(__name__)

CROP_SIZE = 256
EXPECTED_DPI = 2400
RETRIES_PER_CROP = 20
SPLITS = ("train", "val")
MANIFEST_FIELDS = ("path", "printer_model", "manufacturer", "scan_id", "split")


class ManifestError(ValueError):
    pass


class CropSamplingError(RuntimeError):
    def __init__(self, message: str, found: int):
        super().__init__(message)
        self.found = found


@dataclass
class ManifestEntry:
    path: Path
    printer_model: str
    manufacturer: str
    scan_id: str
    split: str
    dpi: float | None = None


@dataclass
class Manifest:
    entries: list[ManifestEntry]
    root: Path = field(default_factory=Path)

    def split(self, name: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    @property
    def classes(self) -> list[str]:
        return sorted({e.printer_model for e in self.entries})

    def to_records(self) -> list[dict]:
        out = []
        for e in self.entries:
            rec = {
                "path": _relpath(e.path, self.root),
                "printer_model": e.printer_model,
                "manufacturer": e.manufacturer,
                "scan_id": e.scan_id,
                "split": e.split,
            }
            if e.dpi is not None:
                rec["dpi"] = e.dpi
            out.append(rec)
        return out

    def save(self, path: str | Path) -> None:
        """Write as JSON lines (``.jsonl``) or a single JSON/YAML document."""
        path = Path(path)
        records = self.to_records()
        if path.suffix == ".jsonl":
            path.write_text("".join(json.dumps(r) + "\n" for r in records))
        elif path.suffix in (".yaml", ".yml"):
            path.write_text(yaml.safe_dump({"entries": records}, sort_keys=False))
        else:
            path.write_text(json.dumps({"entries": records}, indent=2) + "\n")


def _relpath(p: Path, root: Path) -> str:
    try:
        return str(Path(p).relative_to(root))
    except ValueError:
        return str(p)


def _parse_manifest_text(text: str, suffix: str) -> list:
    if not text.strip():
        raise ManifestError("manifest is empty")
    if suffix == ".jsonl":
        records = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if line.strip():
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ManifestError(f"line {lineno}: {exc}") from None
        return records
    try:
        doc = yaml.safe_load(text) if suffix in (".yaml", ".yml") else json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ManifestError(f"cannot parse manifest: {exc}") from None
    if isinstance(doc, dict):
        doc = doc.get("entries")
    if not isinstance(doc, list):
        raise ManifestError("manifest must be a list of records or have an 'entries' list")
    return doc


def validate_entries(entries: list[ManifestEntry]) -> None:
    if not entries:
        raise ManifestError("manifest has no entries")
    seen: set[str] = set()
    for e in entries:
        if e.scan_id in seen:
            raise ManifestError(f"duplicate scan_id {e.scan_id!r}")
        seen.add(e.scan_id)
    train = {e.printer_model for e in entries if e.split == "train"}
    for e in entries:
        if e.split == "val" and e.printer_model not in train:
            raise ManifestError(
                f"class {e.printer_model!r} (scan {e.scan_id!r}) appears in val but not in train"
            )


def load_manifest(path: str | Path, check_files: bool = True) -> Manifest:
    """Read and validate a manifest. Relative image paths resolve against its directory."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    records = _parse_manifest_text(text, path.suffix.lower())
    root = path.parent
    entries = []
    for i, rec in enumerate(records):
        if not isinstance(rec, dict):
            raise ManifestError(f"entry {i} is not a record: {rec!r}")
        missing = [k for k in MANIFEST_FIELDS if k not in rec]
        if missing:
            raise ManifestError(f"entry {i} ({rec.get('scan_id', '?')}) missing {missing}")
        if rec["split"] not in SPLITS:
            raise ManifestError(f"entry {i} ({rec['scan_id']}) has invalid split {rec['split']!r}")
        p = Path(rec["path"])
        p = p if p.is_absolute() else root / p
        if check_files and not p.is_file():
            raise ManifestError(f"entry {i} ({rec['scan_id']}): image {p} not found")
        entries.append(ManifestEntry(
            path=p,
            printer_model=str(rec["printer_model"]),
            manufacturer=str(rec["manufacturer"]),
            scan_id=str(rec["scan_id"]),
            split=rec["split"],
            dpi=float(rec["dpi"]) if rec.get("dpi") is not None else None,
        ))
    validate_entries(entries)
    return Manifest(entries, root)


@dataclass
class ScanDocument:
    image: np.ndarray  # (H, W, 3), uint8 or uint16
    dpi: float | None
    printer_model: str
    manufacturer: str
    scan_id: str
    split: str

    def __post_init__(self):
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise ValueError(f"scan {self.scan_id}: expected an RGB raster, got {self.image.shape}")
        h, w = self.image.shape[:2]
        if h < CROP_SIZE or w < CROP_SIZE:
            raise ValueError(
                f"scan {self.scan_id} is {w}x{h} px, smaller than the {CROP_SIZE} px crop"
            )
        if self.dpi is None:
            warnings.warn(f"scan {self.scan_id}: resolution unknown, assuming {EXPECTED_DPI} dpi")
        elif abs(self.dpi - EXPECTED_DPI) > 0.5:
            warnings.warn(
                f"scan {self.scan_id} is {self.dpi:g} dpi; features assume {EXPECTED_DPI} dpi "
                "and the image is not rescaled"
            )


def read_image(path: str | Path) -> tuple[np.ndarray, float | None]:
    """Load an 8/16-bit PNG or TIFF as an ``(H, W, 3)`` RGB array plus its dpi if recorded."""
    import cv2
    from PIL import Image

    path = Path(path)
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise OSError(f"cannot read image {path}")
    if img.dtype not in (np.uint8, np.uint16):
        raise ValueError(f"{path}: unsupported pixel type {img.dtype}")
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    elif img.shape[2] == 4:
        img = img[:, :, :3]
    img = np.ascontiguousarray(img[:, :, ::-1])
    dpi = None
    try:
        with Image.open(path) as im:
            info = im.info.get("dpi")
        if info:
            dpi = float(round(info[0], 1))
    except Exception:  # metadata is optional
        pass
    return img, dpi


def load_scan(entry: ManifestEntry) -> ScanDocument:
    image, dpi = read_image(entry.path)
    return ScanDocument(
        image=image,
        dpi=entry.dpi if entry.dpi is not None else dpi,
        printer_model=entry.printer_model,
        manufacturer=entry.manufacturer,
        scan_id=entry.scan_id,
        split=entry.split,
    )


@dataclass
class Crop:
    planes: np.ndarray  # (4, 256, 256) R, G, B, gray in the scan's dtype
    origin: tuple[int, int]  # (x, y)
    source_scan: str
    label: str

    @property
    def max_value(self) -> float:
        if np.issubdtype(self.planes.dtype, np.integer):
            return float(np.iinfo(self.planes.dtype).max)
        return 1.0

    def normalized(self) -> np.ndarray:
        """Planes as float64 on ``[0, 1]``."""
        return self.planes.astype(np.float64) / self.max_value


def crop_at(doc: ScanDocument, x: int, y: int, size: int = CROP_SIZE) -> Crop:
    rgb = doc.image[y : y + size, x : x + size]
    if rgb.shape[:2] != (size, size):
        raise ValueError(f"crop at ({x}, {y}) leaves the scan")
    planes = np.concatenate([np.moveaxis(rgb, -1, 0), to_grayscale(rgb)[None]], axis=0)
    return Crop(planes, (int(x), int(y)), doc.scan_id, doc.printer_model)


def count_droplets(crop: Crop, params: PreprocessParams, channel: str = "gray") -> int:
    idx = ("R", "G", "B", "gray").index(channel)
    plane = crop.planes[idx].astype(np.float64) / crop.max_value
    return len(droplet_arrays(make_ink_mask(plane, params, channel))[0])


def sample_crops(
    doc: ScanDocument,
    n: int,
    rng_seed: int | np.random.SeedSequence,
    filter: CropFilter | None = None,
    params: PreprocessParams | None = None,
    size: int = CROP_SIZE,
    retries: int = RETRIES_PER_CROP,
) -> list[Crop]:
    """Draw ``n`` crops at uniform random origins, replacing crops that fail the filter.

    Crops may overlap. Each slot gets ``retries`` attempts before sampling gives up.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    h, w = doc.image.shape[:2]
    if h < size or w < size:
        raise ValueError(f"scan {doc.scan_id} is smaller than the crop size")
    filt = filter or CropFilter()
    params = params or PreprocessParams()
    rng = np.random.default_rng(rng_seed)
    crops: list[Crop] = []
    for _ in range(n):
        for _attempt in range(retries):
            x = int(rng.integers(0, w - size + 1))
            y = int(rng.integers(0, h - size + 1))
            crop = crop_at(doc, x, y, size)
            if filt.min_droplets == 0 or count_droplets(crop, params, filt.channel) >= filt.min_droplets:
                crops.append(crop)
                break
        else:
            raise CropSamplingError(
                f"scan {doc.scan_id}: no valid crop location after {retries} attempts "
                f"(found {len(crops)} of {n} crops)",
                found=len(crops),
            )
    return crops
