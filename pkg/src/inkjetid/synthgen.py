"""Parametric synthetic inkjet documents with known printer labels.

Each profile deposits three inks (cyan, magenta, yellow by default) on a
jittered nozzle grid. The grid pitch, droplet size distribution, occupancy
and satellite rate are the "printer model"; scans are rendered with a mild
optical blur and sensor noise, then quantized to 8 bits.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .dataset import EXPECTED_DPI, Manifest, ManifestEntry, ScanDocument

log = logging.getLogger(__name__)

UM_PER_INCH = 25400.0
DEFAULT_CANVAS = 1024
CMY = ((0, 255, 255), (255, 0, 255), (255, 255, 0))


def um_to_px(um: float | np.ndarray, dpi: float) -> float | np.ndarray:
    return um * dpi / UM_PER_INCH


@dataclass
class PrinterProfile:
    name: str
    manufacturer: str = "Synthetic"
    droplet_density: tuple[float, float, float] = (20.0, 20.0, 20.0)  # drops / mm^2 per ink
    radius_mean: float = 20.0  # um
    radius_std: float = 3.0  # um
    placement_jitter: float = 4.0  # um
    row_pitch: float = 80.0  # um
    satellite_prob: float = 0.05
    ink_colors: tuple = CMY
    seed: int = 0

    def __post_init__(self):
        self.droplet_density = tuple(float(d) for d in self.droplet_density)
        self.ink_colors = tuple(tuple(int(c) for c in ink) for ink in self.ink_colors)
        if len(self.droplet_density) != len(self.ink_colors):
            raise ValueError("one droplet density per ink is required")
        if any(d < 0 for d in self.droplet_density):
            raise ValueError("droplet densities must be >= 0")
        if self.radius_mean <= 0 or self.radius_std < 0 or self.placement_jitter < 0:
            raise ValueError("radius_mean must be > 0; radius_std and placement_jitter >= 0")
        if self.row_pitch <= 0:
            raise ValueError("row_pitch must be > 0")
        if not 0 <= self.satellite_prob <= 1:
            raise ValueError("satellite_prob must be in [0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["droplet_density"] = list(self.droplet_density)
        d["ink_colors"] = [list(c) for c in self.ink_colors]
        return d


def stamp_discs(shape: tuple[int, int], centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Anti-aliased coverage in ``[0, 1]`` of discs given as ``(x, y)`` centres in pixels."""
    cov = np.zeros(shape)
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 2)
    radii = np.asarray(radii, dtype=np.float64).reshape(-1)
    if len(radii) == 0:
        return cov
    half = int(np.ceil(radii.max() + 1.5))
    off = np.arange(-half, half + 1)
    ox, oy = np.meshgrid(off, off)
    px = np.floor(centers[:, 0])[:, None, None].astype(int) + ox
    py = np.floor(centers[:, 1])[:, None, None].astype(int) + oy
    dist = np.hypot(px + 0.5 - centers[:, 0, None, None], py + 0.5 - centers[:, 1, None, None])
    value = np.clip(radii[:, None, None] + 0.5 - dist, 0.0, 1.0)
    keep = (value > 0) & (px >= 0) & (py >= 0) & (px < shape[1]) & (py < shape[0])
    np.maximum.at(cov, (py[keep], px[keep]), value[keep])
    return cov


def _ink_coverage(profile: PrinterProfile, ink: int, shape, dpi: float,
                  content: np.ndarray | None, rng: np.random.Generator) -> np.ndarray:
    h, w = shape
    pitch = um_to_px(profile.row_pitch, dpi)
    # each ink head sits at its own sub-pitch offset
    start = pitch * (0.25 + ink / len(profile.ink_colors))
    gx = np.arange(start, w, pitch)
    gy = np.arange(start, h, pitch)
    sx, sy = (a.ravel() for a in np.meshgrid(gx, gy))
    n = sx.size
    # draw every site's randomness regardless of occupancy so coverage is monotone in density
    u = rng.random(n)
    jitter = rng.normal(0.0, um_to_px(profile.placement_jitter, dpi), size=(n, 2))
    radius = rng.normal(profile.radius_mean, profile.radius_std, size=n)
    sat_u = rng.random(n)
    sat_angle = rng.uniform(0, 2 * np.pi, size=n)
    occupancy = min(1.0, profile.droplet_density[ink] * (profile.row_pitch / 1000.0) ** 2)
    p = np.full(n, occupancy)
    if content is not None:
        iy = np.clip(sy.astype(int), 0, h - 1)
        ix = np.clip(sx.astype(int), 0, w - 1)
        p = p * content[iy, ix]
    on = u < p
    centers = np.stack([sx, sy], axis=1)[on] + jitter[on]
    r_px = np.maximum(um_to_px(radius[on], dpi), 0.5)
    sat = sat_u[on] < profile.satellite_prob
    sat_r = 0.35 * r_px[sat]
    sat_c = centers[sat] + (1.6 * r_px[sat])[:, None] * np.stack(
        [np.cos(sat_angle[on][sat]), np.sin(sat_angle[on][sat])], axis=1)
    return stamp_discs(shape, np.concatenate([centers, sat_c]), np.concatenate([r_px, sat_r]))


def render_document(profile: PrinterProfile, size: int | tuple[int, int] = DEFAULT_CANVAS,
                    dpi: float = EXPECTED_DPI, content: np.ndarray | None = None,
                    doc_index: int = 0, split: str = "train", blur_sigma: float = 0.6,
                    noise_std: float = 1.5) -> ScanDocument:
    """Render one scan of ``profile``.

    ``content`` is an optional coverage map in ``[0, 1]`` (same shape as the
    canvas) scaling the probability that a nozzle site fires. ``noise_std`` is
    in 8-bit grey levels.
    """
    h, w = (size, size) if np.isscalar(size) else size
    if h < 1 or w < 1:
        raise ValueError(f"degenerate canvas size {size}")
    if dpi <= 0:
        raise ValueError("dpi must be > 0")
    if content is not None:
        content = np.clip(np.asarray(content, dtype=np.float64), 0, 1)
        if content.shape != (h, w):
            raise ValueError("content map must match the canvas size")
    rng = np.random.default_rng([profile.seed, doc_index])
    transmit = np.ones((h, w, 3))
    for ink, color in enumerate(profile.ink_colors):
        cov = _ink_coverage(profile, ink, (h, w), dpi, content, rng)
        absorb = 1.0 - np.asarray(color, dtype=np.float64) / 255.0
        transmit *= 1.0 - cov[:, :, None] * absorb
    img = 255.0 * transmit
    if blur_sigma > 0:
        img = ndimage.gaussian_filter(img, sigma=(blur_sigma, blur_sigma, 0))
    if noise_std > 0:
        img = img + rng.normal(0.0, noise_std, size=img.shape)
    image = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    return ScanDocument(image, float(dpi), profile.name, profile.manufacturer,
                        f"{profile.name}-doc{doc_index}", split)


def separable_profiles(n: int = 8, seed: int = 0) -> list[PrinterProfile]:
    """``n`` profiles on a grid of nozzle pitch x droplet size (distinct printer models)."""
    pitches = (55.0, 70.0, 85.0, 100.0, 115.0, 130.0, 145.0)
    radii = (14.0, 26.0, 38.0)
    combos = list(itertools.product(radii[:2], pitches))
    combos += list(itertools.product(radii[2:], pitches))
    if n > len(combos):
        raise ValueError(f"at most {len(combos)} separable profiles are defined")
    out = []
    for i, (radius, pitch) in enumerate(combos[:n]):
        occupancy = 0.35
        density = occupancy / (pitch / 1000.0) ** 2
        out.append(PrinterProfile(
            name=f"synth-{i:02d}",
            manufacturer=f"Maker{i % 3}",
            droplet_density=(density, density * 0.8, density * 0.6),
            radius_mean=radius,
            radius_std=0.15 * radius,
            placement_jitter=0.06 * pitch,
            row_pitch=pitch,
            satellite_prob=0.05 + 0.1 * (i % 2),
            seed=seed * 1000 + i,
        ))
    return out


def indistinguishable_profiles(n: int = 8, seed: int = 0) -> list[PrinterProfile]:
    """``n`` profiles with identical parameters that differ only in their seed."""
    base = separable_profiles(1, seed)[0]
    return [PrinterProfile(**(base.to_dict() | {"name": f"clone-{i:02d}", "seed": seed * 1000 + 500 + i}))
            for i in range(n)]


def make_synthetic_dataset(profiles: list[PrinterProfile], docs_per_profile: int,
                           out_dir: str | Path, size: int = DEFAULT_CANVAS,
                           dpi: float = EXPECTED_DPI, manifest_name: str = "manifest.jsonl") -> Manifest:
    """Render every profile ``docs_per_profile`` times and write PNGs plus a manifest.

    The last document of each profile goes to the validation split, the rest to training.
    """
    from PIL import Image

    if len(profiles) < 2:
        raise ValueError("need at least 2 profiles")
    if docs_per_profile < 2:
        raise ValueError("need at least 2 documents per profile")
    if len({p.name for p in profiles}) != len(profiles):
        raise ValueError("profile names must be unique")
    out = Path(out_dir)
    (out / "scans").mkdir(parents=True, exist_ok=True)
    entries = []
    for profile in profiles:
        for k in range(docs_per_profile):
            split = "val" if k == docs_per_profile - 1 else "train"
            doc = render_document(profile, size, dpi, doc_index=k, split=split)
            path = out / "scans" / f"{doc.scan_id}.png"
            Image.fromarray(doc.image).save(path, dpi=(dpi, dpi))
            entries.append(ManifestEntry(path, profile.name, profile.manufacturer,
                                         doc.scan_id, split, float(dpi)))
    manifest = Manifest(entries, out)
    manifest.save(out / manifest_name)
    log.info("wrote %d scans to %s", len(entries), out)
    return manifest
