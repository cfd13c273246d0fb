"""
Droplet statistics of two printers
==================================

The ink mask of a crop is split into 8-connected droplets. Printers with
larger drops on a wider nozzle pitch give visibly different area and
perimeter distributions.
"""

import numpy as np
import matplotlib.pyplot as plt

from inkjetid.dataset import crop_at
from inkjetid.droplet import DROPLET_STAT_NAMES, find_droplets, droplet_stats
from inkjetid.preprocess import make_ink_mask
from inkjetid.synthgen import render_document, separable_profiles

profiles = separable_profiles(8)
small, large = profiles[0], profiles[7]

fig, axes = plt.subplots(2, 3, figsize=(11, 7))
for row, prof in zip(axes, (small, large)):
    crop = crop_at(render_document(prof, size=512), 0, 0)
    gray = crop.normalized()[3]
    mask = make_ink_mask(gray)
    drops = find_droplets(mask)

    row[0].imshow(gray, cmap="gray")
    row[0].set_title(f"{prof.name}: pitch {prof.row_pitch:g} um, r {prof.radius_mean:g} um", fontsize=9)
    row[1].imshow(mask.mask, cmap="gray_r")
    row[1].set_title(f"{len(drops)} droplets", fontsize=9)
    row[2].scatter([d.area for d in drops], [d.perimeter for d in drops], s=4)
    row[2].set_xlabel("area (px)")
    row[2].set_ylabel("perimeter (pixel edges)")

    stats = droplet_stats(drops)
    print(prof.name)
    for name, value in zip(DROPLET_STAT_NAMES, stats.values):
        print(f"  {name:15s} {value:8.2f}")

# a perfect disc: pixel-edge perimeter overshoots the Euclidean one by about 4/pi
yy, xx = np.mgrid[:64, :64]
disc = (xx - 32) ** 2 + (yy - 32) ** 2 <= 15**2
d = find_droplets(disc)[0]
print("disc r=15:", d.area, "px,", d.perimeter, "edges vs 2*pi*r =", round(2 * np.pi * 15, 1))

fig.tight_layout()
plt.show()
