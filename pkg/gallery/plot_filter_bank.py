"""
The Morlet filter bank
======================

Build the oriented wavelets used by every model and look at them in space
and in frequency.  The Littlewood-Paley sum tells how evenly the bank
covers the frequency plane.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from wavetex import build_filter_bank
from wavetex.wavelets import littlewood_paley

bank = build_filter_bank(128, j_max=4, l_count=4)
print(bank.band_pass.shape, bank.low_pass.shape)

###############################################################################
# Real parts in space, one row per scale

fig, axes = plt.subplots(bank.j_max, bank.l_count, figsize=(8, 8))
for j in range(bank.j_max):
    for t in range(bank.l_count):
        psi = np.fft.fftshift(bank.band_pass_spatial[j, t])
        w = 6 * 2**j
        c = 64
        axes[j, t].imshow(psi.real[c - w:c + w, c - w:c + w], cmap="RdBu")
        axes[j, t].set_axis_off()
fig.savefig("filters_space.png", dpi=80)

###############################################################################
# Coverage of the frequency plane

lp = littlewood_paley(bank)
print("max / min (nonzero frequencies):", lp.max() / lp.reshape(-1)[1:].min())
plt.figure()
plt.imshow(np.fft.fftshift(lp))
plt.colorbar()
plt.savefig("littlewood_paley.png", dpi=80)
