"""Droplet contours, their shape statistics, and the crop-suitability filter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .preprocess import InkMask

DROPLET_STAT_NAMES = tuple(
    f"{q}_{s}" for q in ("area", "perimeter") for s in ("mean", "std", "p25", "p50", "p75")
)

_EIGHT = np.ones((3, 3), dtype=bool)
_FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class Droplet:
    area: int
    perimeter: int
    centroid: tuple[float, float]  # (x, y)


@dataclass
class DropletStats:
    values: np.ndarray  # DROPLET_STAT_NAMES order
    droplet_count: int

    def as_array(self) -> np.ndarray:
        return self.values


@dataclass(frozen=True)
class CropFilter:
    min_droplets: int = 10
    channel: str = "gray"

    def __post_init__(self):
        if self.min_droplets < 0:
            raise ValueError("min_droplets must be >= 0")


def edge_count(mask: np.ndarray) -> np.ndarray:
    """Per-pixel count of 4-neighbour edges bordering background or the image border."""
    m = np.pad(mask.astype(np.int8), 1)
    inner = m[1:-1, 1:-1]
    neighbours = m[:-2, 1:-1] + m[2:, 1:-1] + m[1:-1, :-2] + m[1:-1, 2:]
    return np.where(inner > 0, 4 - neighbours, 0)


def label_components(mask: np.ndarray, connectivity: int = 8) -> tuple[np.ndarray, int]:
    """Label ink components, numbered in row-major order of their first pixel."""
    structure = _EIGHT if connectivity == 8 else _FOUR
    labels, n = ndimage.label(np.asarray(mask, dtype=bool), structure=structure)
    return labels, n


def _mask_array(mask: InkMask | np.ndarray) -> np.ndarray:
    return mask.mask if isinstance(mask, InkMask) else np.asarray(mask, dtype=bool)


def droplet_arrays(mask: InkMask | np.ndarray, connectivity: int = 8):
    """Per-component ``(area, perimeter)`` integer arrays in component order."""
    m = _mask_array(mask)
    labels, n = label_components(m, connectivity)
    flat = labels.ravel()
    area = np.bincount(flat, minlength=n + 1)[1:]
    perim = np.bincount(flat, weights=edge_count(m).ravel(), minlength=n + 1)[1:]
    return area, np.rint(perim).astype(np.int64), labels


def find_droplets(mask: InkMask | np.ndarray, connectivity: int = 8) -> list[Droplet]:
    area, perim, labels = droplet_arrays(mask, connectivity)
    if len(area) == 0:
        return []
    flat = labels.ravel()
    ys, xs = np.indices(labels.shape)
    n = len(area)
    cx = np.bincount(flat, weights=xs.ravel(), minlength=n + 1)[1:] / area
    cy = np.bincount(flat, weights=ys.ravel(), minlength=n + 1)[1:] / area
    return [
        Droplet(int(a), int(p), (float(x), float(y)))
        for a, p, x, y in zip(area, perim, cx, cy)
    ]


def _summary(v: np.ndarray) -> list[float]:
    return [v.mean(), v.std(), *np.percentile(v, [25, 50, 75])]


def droplet_stats(droplets: list[Droplet]) -> DropletStats:
    """Mean, std and quartiles of droplet area and perimeter; zeros when empty."""
    return stats_from_arrays(np.array([d.area for d in droplets]),
                             np.array([d.perimeter for d in droplets]))


def stats_from_arrays(area: np.ndarray, perimeter: np.ndarray) -> DropletStats:
    if len(area) == 0:
        return DropletStats(np.zeros(len(DROPLET_STAT_NAMES)), 0)
    area = np.asarray(area, dtype=np.float64)
    perimeter = np.asarray(perimeter, dtype=np.float64)
    return DropletStats(np.array(_summary(area) + _summary(perimeter)), len(area))


def passes_filter(droplets: list[Droplet], filt: CropFilter) -> bool:
    return len(droplets) >= filt.min_droplets
