"""Channel planes, contrast features and binary ink masks."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
from scipy import ndimage
from skimage.filters import threshold_otsu

CHANNELS = ("R", "G", "B", "gray")
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class PreprocessParams:
    """Parameters of the sharpen -> denoise -> threshold chain.

    Intensities are on the normalized ``[0, 1]`` scale. ``min_range`` guards
    Otsu against near-uniform planes (blank paper, solid fills): if the
    1st-99th percentile spread is below it, the plane is treated as a single
    class: ink if its median is below 0.5, paper otherwise.
    """

    sharpen_sigma: float = 1.0
    sharpen_amount: float = 1.0
    denoise_window: int = 3
    threshold_mode: str = "otsu"
    fixed_threshold: float = 0.5
    min_range: float = 0.1

    def __post_init__(self):
        if not self.sharpen_sigma > 0:
            raise ValueError("sharpen_sigma must be > 0")
        if self.sharpen_amount < 0:
            raise ValueError("sharpen_amount must be >= 0")
        if self.denoise_window < 1 or self.denoise_window % 2 == 0:
            raise ValueError("denoise_window must be odd and >= 1")
        if self.threshold_mode not in ("otsu", "fixed"):
            raise ValueError("threshold_mode must be 'otsu' or 'fixed'")
        if self.min_range < 0:
            raise ValueError("min_range must be >= 0")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class InkMask:
    mask: np.ndarray  # bool, True = ink
    channel: str


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """Rec.601 luma of an ``(H, W, 3)`` raster.

    Integer inputs are rounded back to their own dtype; float inputs stay float.
    """
    rgb = np.asarray(rgb)
    if rgb.ndim != 3 or rgb.shape[-1] != 3:
        raise ValueError(f"expected an (H, W, 3) raster, got shape {rgb.shape}")
    y = rgb.astype(np.float64) @ np.array(LUMA_WEIGHTS)
    if np.issubdtype(rgb.dtype, np.integer):
        info = np.iinfo(rgb.dtype)
        return np.clip(np.rint(y), info.min, info.max).astype(rgb.dtype)
    return y


def stack_planes(r: np.ndarray, g: np.ndarray, b: np.ndarray) -> np.ndarray:
    if not (r.shape == g.shape == b.shape):
        raise ValueError(f"plane sizes differ: {r.shape}, {g.shape}, {b.shape}")
    return np.stack([r, g, b], axis=-1)


def contrast_features(gray: np.ndarray) -> dict[str, float]:
    """Extremes and Michelson contrast of the intensity plane."""
    gray = np.asarray(gray, dtype=np.float64)
    if gray.size == 0:
        raise ValueError("empty plane")
    y_max = float(gray.max())
    y_min = float(gray.min())
    denom = y_max + y_min
    contrast = (y_max - y_min) / denom if denom > 0 else 0.0
    return {"y_max": y_max, "y_min": y_min, "contrast": contrast}


def sharpen(plane: np.ndarray, sigma: float, amount: float) -> np.ndarray:
    blurred = ndimage.gaussian_filter(plane, sigma, mode="reflect")
    return plane + amount * (plane - blurred)


def median(plane: np.ndarray, window: int) -> np.ndarray:
    """Median filter with edge replication."""
    if window in (3, 5):
        import cv2

        return cv2.medianBlur(plane.astype(np.float32), window).astype(np.float64)
    return ndimage.median_filter(plane, size=window, mode="nearest")


def make_ink_mask(plane: np.ndarray, params: PreprocessParams | None = None,
                  channel: str = "gray") -> InkMask:
    """Ink mask of a normalized plane (ink is darker than paper)."""
    p = params or PreprocessParams()
    plane = np.asarray(plane, dtype=np.float64)
    x = np.clip(sharpen(plane, p.sharpen_sigma, p.sharpen_amount), 0.0, 1.0)
    if p.denoise_window > 1:
        x = median(x, p.denoise_window)
    if p.threshold_mode == "fixed":
        mask = x < p.fixed_threshold
    else:
        lo, hi = np.percentile(x, [1, 99])
        if hi - lo < p.min_range:
            mask = np.full(x.shape, np.median(x) < 0.5)
        else:
            mask = x <= threshold_otsu(x)
    return InkMask(mask, channel)
