"""
Sub-bands of a printed crop
===========================

Render a synthetic page, cut one 256x256 crop and look at how the three
transforms split its gray plane into four coarse-to-fine bands.
"""

import numpy as np
import matplotlib.pyplot as plt

from inkjetid.dataset import crop_at
from inkjetid.spectral import SpectralParams, band_stats, sub_bands
from inkjetid.synthgen import render_document, separable_profiles

# one page of the first synthetic printer
doc = render_document(separable_profiles(1)[0], size=512)
crop = crop_at(doc, 128, 128)
gray = crop.normalized()[3]

# row-wise 1D transforms, the default linearization
fig, axes = plt.subplots(3, 4, figsize=(12, 7))
for row, method in zip(axes, ("fft", "stft", "dwt")):
    bands = sub_bands(gray, SpectralParams(method=method)).bands
    for k, (ax, band) in enumerate(zip(row, bands)):
        ax.hist(band, bins=80, log=True)
        s = band_stats(band)
        ax.set_title(f"{method} band {k}: n={band.size}, rms={s.rms:.3g}", fontsize=8)
fig.tight_layout()

# the same crop as an image, with its DWT detail energy per level
levels = [np.sum(b**2) for b in sub_bands(gray, SpectralParams(mode="full_2d")).bands]
print("2D db4 energy per band:", np.round(levels, 1))

plt.figure()
plt.imshow(gray, cmap="gray")
plt.title(f"{crop.source_scan} at {crop.origin}")
plt.show()
