"""Frequency transforms (DFT, STFT, DWT) and per-sub-band statistics.

Every transform is reduced to exactly four real-valued sub-bands so that the
feature layout does not depend on the chosen method:

* ``dwt``: three-level Daubechies decomposition, ordered
  ``[approx_3, detail_3, detail_2, detail_1]``. In 2D the three oriented
  detail images of a level (LH, HL, HH) are pooled into one band.
* ``fft``: magnitude spectrum split into dyadic octaves of the absolute
  frequency: ``[0, n/16]``, ``(n/16, n/8]``, ``(n/8, n/4]``, ``(n/4, n/2]``.
  In 2D the frequency of a bin is ``max(|fx|, |fy|)`` (square annuli).
* ``stft``: the same dyadic split applied to the window's frequency rows,
  pooling all time positions.

Bands are always ordered from coarsest to finest.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Literal, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

N_BANDS = 4
DWT_LEVELS = N_BANDS - 1

Method = Literal["fft", "stft", "dwt"]
Mode = Literal["rowwise_1d", "full_2d"]
METHODS = ("fft", "stft", "dwt")
MODES = ("rowwise_1d", "full_2d")

# Reconstruction low-pass filters of the orthogonal Daubechies family.
_DAUBECHIES = {
    "db1": [0.7071067811865476, 0.7071067811865476],
    "db2": [
        0.48296291314453416, 0.8365163037378079, 0.2241438680420134,
        -0.12940952255126037,
    ],
    "db3": [
        0.33267055295008263, 0.8068915093110925, 0.45987750211849154,
        -0.13501102001025458, -0.08544127388202666, 0.03522629188570953,
    ],
    "db4": [
        0.2303778133088965, 0.7148465705529157, 0.6308807679298589,
        -0.027983769416859854, -0.18703481171909309, 0.030841381835560764,
        0.0328830116668852, -0.010597401785069032,
    ],
}
_DAUBECHIES["haar"] = _DAUBECHIES["db1"]

BOUNDARY_MODES = ("periodization", "symmetric")


@dataclass(frozen=True)
class Wavelet:
    """Orthogonal two-channel filter bank."""

    name: str
    rec_lo: np.ndarray
    rec_hi: np.ndarray
    dec_lo: np.ndarray
    dec_hi: np.ndarray

    @property
    def length(self) -> int:
        return len(self.rec_lo)

    @classmethod
    def from_name(cls, name: str) -> "Wavelet":
        try:
            rec_lo = np.asarray(_DAUBECHIES[name], dtype=np.float64)
        except KeyError:
            raise ValueError(
                f"unknown wavelet {name!r}; available: {sorted(_DAUBECHIES)}"
            ) from None
        n = len(rec_lo)
        rec_hi = rec_lo[::-1] * np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        return cls(name, rec_lo, rec_hi, rec_lo[::-1].copy(), rec_hi[::-1].copy())


def _as_wavelet(wavelet: str | Wavelet) -> Wavelet:
    return wavelet if isinstance(wavelet, Wavelet) else Wavelet.from_name(wavelet)


@dataclass
class SubBandSet:
    bands: list[np.ndarray]
    method: str
    mode: str

    def __post_init__(self):
        if len(self.bands) != N_BANDS:
            raise ValueError(f"expected {N_BANDS} bands, got {len(self.bands)}")
        if any(b.size == 0 for b in self.bands):
            raise ValueError("empty sub-band")


# ---------------------------------------------------------------------------
# DFT


def dft_1d(signal: Sequence[float] | np.ndarray) -> np.ndarray:
    """Discrete Fourier transform ``X(k) = sum_t x(t) exp(-2j*pi*k*t/T)``."""
    x = np.asarray(signal)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("dft_1d needs a non-empty 1D signal")
    return np.fft.fft(x)


# ---------------------------------------------------------------------------
# DWT


def max_dwt_level(n: int, wavelet: str | Wavelet) -> int:
    """Deepest decomposition for which the coarsest band still spans the filter."""
    filt = _as_wavelet(wavelet).length
    if n < filt - 1 or filt < 2:
        return 0
    return int(np.floor(np.log2(n / (filt - 1))))


def _periodic_index(n: int, filt: int) -> np.ndarray:
    k = np.arange((n + 1) // 2)[:, None]
    j = np.arange(filt)[None, :]
    return (2 * k + filt // 2 - j) % (n + n % 2)


def dwt(x: np.ndarray, wavelet: str | Wavelet, boundary: str = "periodization"):
    """Single-level DWT along the last axis. Returns ``(approx, detail)``."""
    w = _as_wavelet(wavelet)
    x = np.asarray(x, dtype=np.float64)
    filt = w.length
    if boundary == "periodization":
        if x.shape[-1] % 2:
            x = np.concatenate([x, x[..., -1:]], axis=-1)
        windows = x[..., _periodic_index(x.shape[-1], filt)]
    elif boundary == "symmetric":
        n = x.shape[-1]
        pad = [(0, 0)] * (x.ndim - 1) + [(filt - 1, filt - 1)]
        ext = np.pad(x, pad, mode="symmetric")
        m = (n + filt - 1) // 2
        idx = filt + 2 * np.arange(m)[:, None] - np.arange(filt)[None, :]
        windows = ext[..., idx]
    else:
        raise ValueError(f"unknown boundary mode {boundary!r}")
    return windows @ w.dec_lo, windows @ w.dec_hi


def idwt(
    approx: np.ndarray,
    detail: np.ndarray,
    wavelet: str | Wavelet,
    boundary: str = "periodization",
    length: int | None = None,
) -> np.ndarray:
    """Inverse of :func:`dwt`. ``length`` trims the output to the original size."""
    w = _as_wavelet(wavelet)
    a = np.asarray(approx, dtype=np.float64)
    d = np.asarray(detail, dtype=np.float64)
    if a.shape != d.shape:
        raise ValueError("approximation and detail shapes differ")
    filt = w.length
    m = a.shape[-1]
    if boundary == "periodization":
        n = 2 * m
        idx = _periodic_index(n, filt)
        out = np.zeros(a.shape[:-1] + (n,))
        # rows of idx hit distinct positions for a fixed tap
        for j in range(filt):
            out[..., idx[:, j]] += a * w.dec_lo[j] + d * w.dec_hi[j]
    elif boundary == "symmetric":
        up = np.zeros(a.shape[:-1] + (2 * m,))
        up_d = np.zeros_like(up)
        up[..., ::2] = a
        up_d[..., ::2] = d
        full = _convolve_last(up, w.rec_lo) + _convolve_last(up_d, w.rec_hi)
        n = 2 * m - filt + 2
        out = full[..., filt - 2 : filt - 2 + n]
    else:
        raise ValueError(f"unknown boundary mode {boundary!r}")
    if length is not None:
        out = out[..., :length]
    return out


def _convolve_last(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    pad = [(0, 0)] * (x.ndim - 1) + [(len(h) - 1, len(h) - 1)]
    xp = np.pad(x, pad)
    return sliding_window_view(xp, len(h), axis=-1)[..., : n + len(h) - 1, :] @ h[::-1]


def wavedec(
    x: np.ndarray,
    wavelet: str | Wavelet = "db4",
    levels: int = DWT_LEVELS,
    boundary: str = "periodization",
) -> list[np.ndarray]:
    """Multilevel DWT along the last axis: ``[approx_n, detail_n, ..., detail_1]``."""
    w = _as_wavelet(wavelet)
    x = np.asarray(x, dtype=np.float64)
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if levels > max_dwt_level(x.shape[-1], w):
        raise ValueError(
            f"signal of length {x.shape[-1]} is too short for {levels} levels "
            f"of {w.name} (max {max_dwt_level(x.shape[-1], w)})"
        )
    details = []
    approx = x
    for _ in range(levels):
        approx, d = dwt(approx, w, boundary)
        details.append(d)
    return [approx] + details[::-1]


def waverec(
    coeffs: Sequence[np.ndarray],
    wavelet: str | Wavelet = "db4",
    boundary: str = "periodization",
    length: int | None = None,
) -> np.ndarray:
    w = _as_wavelet(wavelet)
    approx = coeffs[0]
    for i, d in enumerate(coeffs[1:], start=1):
        approx = approx[..., : d.shape[-1]]
        nxt = coeffs[i + 1].shape[-1] if i + 1 < len(coeffs) else None
        approx = idwt(approx, d, w, boundary)
        if nxt is not None and approx.shape[-1] > nxt:
            approx = approx[..., :nxt]
    if length is not None:
        approx = approx[..., :length]
    return approx


def dwt_multilevel_1d(
    signal: np.ndarray,
    levels: int = DWT_LEVELS,
    wavelet: str | Wavelet = "db4",
    boundary: str = "periodization",
) -> SubBandSet:
    if levels != DWT_LEVELS:
        raise ValueError(
            f"the {N_BANDS}-band feature layout needs {DWT_LEVELS} levels; "
            "use wavedec() for other depths"
        )
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a 1D signal")
    return SubBandSet(wavedec(x, wavelet, levels, boundary), "dwt", "rowwise_1d")


def dwt2(plane: np.ndarray, wavelet: str | Wavelet, boundary: str = "periodization"):
    """Separable single-level 2D DWT: ``(LL, (LH, HL, HH))``.

    The first letter refers to the row (horizontal) filter.
    """
    lo, hi = dwt(plane, wavelet, boundary)
    ll, lh = (np.swapaxes(c, -1, -2) for c in dwt(np.swapaxes(lo, -1, -2), wavelet, boundary))
    hl, hh = (np.swapaxes(c, -1, -2) for c in dwt(np.swapaxes(hi, -1, -2), wavelet, boundary))
    return ll, (lh, hl, hh)


def idwt2(ll, details, wavelet: str | Wavelet, boundary: str = "periodization"):
    lh, hl, hh = details
    t = lambda c: np.swapaxes(c, -1, -2)  # noqa: E731
    lo = t(idwt(t(ll), t(lh), wavelet, boundary))
    hi = t(idwt(t(hl), t(hh), wavelet, boundary))
    return idwt(lo, hi, wavelet, boundary)


def wavedec2(plane, wavelet: str | Wavelet = "db4", levels: int = DWT_LEVELS,
             boundary: str = "periodization"):
    w = _as_wavelet(wavelet)
    plane = np.asarray(plane, dtype=np.float64)
    if levels > max_dwt_level(min(plane.shape[-2:]), w):
        raise ValueError(f"plane {plane.shape} too small for {levels} levels of {w.name}")
    out = []
    ll = plane
    for _ in range(levels):
        ll, det = dwt2(ll, w, boundary)
        out.append(det)
    return [ll] + out[::-1]


def waverec2(coeffs, wavelet: str | Wavelet = "db4", boundary: str = "periodization"):
    ll = coeffs[0]
    for det in coeffs[1:]:
        ll = ll[..., : det[0].shape[-2], : det[0].shape[-1]]
        ll = idwt2(ll, det, wavelet, boundary)
    return ll


# ---------------------------------------------------------------------------
# STFT


def _window(shape: str | np.ndarray, length: int) -> np.ndarray:
    if isinstance(shape, np.ndarray):
        if shape.shape != (length,):
            raise ValueError("window array does not match window length")
        return shape.astype(np.float64)
    if shape in ("rect", "rectangular", "boxcar"):
        return np.ones(length)
    return get_window(shape, length, fftbins=True)


def stft_1d(
    signal: np.ndarray,
    length: int = 64,
    hop: int = 32,
    window: str | np.ndarray = "hann",
    onesided: bool = False,
) -> np.ndarray:
    """Magnitude STFT of the last axis.

    Returns an array of shape ``(..., n_freq, n_frames)`` where ``n_freq`` is
    ``length`` (two-sided) or ``length // 2 + 1`` (one-sided). Frame ``n``
    covers samples ``[n*hop, n*hop + length)``; no padding is applied.
    """
    x = np.asarray(signal, dtype=np.float64)
    if hop < 1:
        raise ValueError("hop must be >= 1")
    if length < 1 or length > x.shape[-1]:
        raise ValueError(f"window length {length} exceeds signal length {x.shape[-1]}")
    frames = sliding_window_view(x, length, axis=-1)[..., ::hop, :]
    frames = frames * _window(window, length)
    spec = np.fft.rfft(frames, axis=-1) if onesided else np.fft.fft(frames, axis=-1)
    return np.swapaxes(np.abs(spec), -1, -2)


def stft_2d(
    plane: np.ndarray,
    length: int = 64,
    hop: int = 32,
    window: str | np.ndarray = "hann",
) -> np.ndarray:
    """Magnitude spectra of separably windowed square patches.

    Returns shape ``(n_patches_y, n_patches_x, length, length)``.
    """
    plane = np.asarray(plane, dtype=np.float64)
    if length > min(plane.shape):
        raise ValueError(f"window length {length} exceeds plane size {plane.shape}")
    if hop < 1:
        raise ValueError("hop must be >= 1")
    w = _window(window, length)
    patches = sliding_window_view(plane, (length, length))[::hop, ::hop]
    return np.abs(np.fft.fft2(patches * np.outer(w, w), axes=(-2, -1)))


# ---------------------------------------------------------------------------
# Band grouping


def dyadic_band_index(n: int) -> np.ndarray:
    """Band id (0 = coarsest) of each DFT bin ``k`` in ``0..n-1``."""
    k = np.arange(n)
    freq = np.minimum(k, n - k)
    return _octave(freq, n)


def _octave(freq: np.ndarray, n: int) -> np.ndarray:
    band = np.zeros(freq.shape, dtype=np.intp)
    for b in range(1, N_BANDS):
        band[freq * 2 ** (N_BANDS - b + 1) > n] = b
    return band


def dyadic_band_index_2d(n: int) -> np.ndarray:
    k = np.arange(n)
    freq = np.minimum(k, n - k)
    return _octave(np.maximum.outer(freq, freq), n)


@dataclass
class SpectralParams:
    method: str = "dwt"
    mode: str = "rowwise_1d"
    wavelet: str = "db4"
    boundary: str = "periodization"
    stft_window: str = "hann"
    stft_length: int = 64
    stft_hop: int = 32

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.boundary not in BOUNDARY_MODES:
            raise ValueError(f"boundary must be one of {BOUNDARY_MODES}")
        Wavelet.from_name(self.wavelet)
        if self.stft_length < 2 or self.stft_hop < 1:
            raise ValueError("stft_length must be >= 2 and stft_hop >= 1")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def rowwise_linearize(plane: np.ndarray, method: str = "dwt",
                      params: SpectralParams | None = None) -> SubBandSet:
    """Apply the 1D transform to every row and concatenate each band in row order."""
    p = params or SpectralParams(method=method, mode="rowwise_1d")
    method = method or p.method
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ValueError("expected a 2D plane")
    if method == "dwt":
        coeffs = wavedec(plane, p.wavelet, DWT_LEVELS, p.boundary)
        bands = [c.reshape(-1) for c in coeffs]
    elif method == "fft":
        mag = np.abs(np.fft.fft(plane, axis=-1))
        idx = dyadic_band_index(plane.shape[1])
        bands = [mag[:, idx == b].reshape(-1) for b in range(N_BANDS)]
    elif method == "stft":
        mag = stft_1d(plane, p.stft_length, p.stft_hop, p.stft_window)
        idx = dyadic_band_index(p.stft_length)
        bands = [mag[:, idx == b, :].reshape(-1) for b in range(N_BANDS)]
    else:
        raise ValueError(f"unknown method {method!r}")
    return SubBandSet(bands, method, "rowwise_1d")


def transform_2d(plane: np.ndarray, method: str = "dwt",
                 params: SpectralParams | None = None) -> SubBandSet:
    p = params or SpectralParams(method=method, mode="full_2d")
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2 or plane.shape[0] != plane.shape[1]:
        raise ValueError(f"transform_2d needs a square plane, got {plane.shape}")
    if method == "dwt":
        ll, *levels = wavedec2(plane, p.wavelet, DWT_LEVELS, p.boundary)
        bands = [ll.reshape(-1)] + [
            np.concatenate([d.reshape(-1) for d in det]) for det in levels
        ]
    elif method == "fft":
        mag = np.abs(np.fft.fft2(plane))
        idx = dyadic_band_index_2d(plane.shape[0])
        bands = [mag[idx == b] for b in range(N_BANDS)]
    elif method == "stft":
        mag = stft_2d(plane, p.stft_length, p.stft_hop, p.stft_window)
        idx = dyadic_band_index_2d(p.stft_length)
        bands = [mag[..., idx == b].reshape(-1) for b in range(N_BANDS)]
    else:
        raise ValueError(f"unknown method {method!r}")
    return SubBandSet(bands, method, "full_2d")


def sub_bands(plane: np.ndarray, params: SpectralParams) -> SubBandSet:
    if params.mode == "rowwise_1d":
        return rowwise_linearize(plane, params.method, params)
    return transform_2d(plane, params.method, params)


# ---------------------------------------------------------------------------
# Statistics

BAND_STAT_NAMES = (
    "entropy", "p5", "p25", "p50", "p75", "p95",
    "mean", "variance", "std", "rms", "zero_crossings", "mean_crossings",
)


@dataclass
class BandStats:
    entropy: float
    p5: float
    p25: float
    p50: float
    p75: float
    p95: float
    mean: float
    variance: float
    std: float
    rms: float
    zero_crossings: int
    mean_crossings: int

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in BAND_STAT_NAMES], dtype=np.float64)


def crossings(x: np.ndarray) -> int:
    """Adjacent strict sign changes; zeros never count."""
    return int(np.count_nonzero(x[:-1] * x[1:] < 0))


def energy_entropy(c: np.ndarray) -> float:
    """Shannon entropy (nats) of the normalized energy distribution ``c^2 / sum c^2``."""
    e = np.square(c, dtype=np.float64)
    total = e.sum()
    if total == 0:
        return 0.0
    p = e / total
    p = p[p > 0]  # tiny energies can underflow after the division
    return float(-(p * np.log(p)).sum())


def band_stats(band: np.ndarray) -> BandStats:
    c = np.asarray(band, dtype=np.float64).reshape(-1)
    if c.size == 0:
        raise ValueError("band_stats of an empty band")
    p5, p25, p50, p75, p95 = np.percentile(c, [5, 25, 50, 75, 95])
    mean = c.mean()
    var = float(np.mean((c - mean) ** 2))
    return BandStats(
        entropy=energy_entropy(c),
        p5=float(p5), p25=float(p25), p50=float(p50), p75=float(p75), p95=float(p95),
        mean=float(mean),
        variance=var,
        std=float(np.sqrt(var)),
        rms=float(np.sqrt(np.mean(c * c))),
        zero_crossings=crossings(c),
        mean_crossings=crossings(c - mean),
    )
