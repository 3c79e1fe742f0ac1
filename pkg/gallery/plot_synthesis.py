"""
Synthesizing a texture
======================

Match the covariances of a gravel patch starting from white noise, then
compare several seeds.  The schedule here is short so the script runs in a
few minutes; raise ``restarts`` and ``iterations_per_restart`` for the full
setting.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from wavetex import ModelConfig, load_image, synthesize
from wavetex.synthesis import Objective

here = os.path.dirname(os.path.abspath(__file__))
obs = load_image(os.path.join(here, "..", "tests", "data", "gravel128.png"))[:64, :64]

cfg = ModelConfig(variant="I", n=64, j_max=4, boundary="windowed",
                  iterations_per_restart=150, restarts=2)
obj = Objective(obs, cfg)
print("statistics:", obj.operator.sizes)

###############################################################################
# Two seeds, same statistics

outs = []
for seed in (0, 1):
    out, run = synthesize(obs, cfg.replace(seed=seed), objective=obj)
    print(seed, "loss", run.initial_loss, "->", run.final_loss,
          "relative distance", obj.relative_distance(run.current))
    outs.append(out)

fig, axes = plt.subplots(1, 3, figsize=(9, 3))
for ax, img, title in zip(axes, [obs] + outs, ["observation", "seed 0", "seed 1"]):
    ax.imshow(img, cmap="gray", vmin=0, vmax=1)
    ax.set_title(title)
    ax.set_axis_off()
fig.savefig("synthesis.png", dpi=100)

###############################################################################
# Loss curve of the last run

plt.figure()
plt.semilogy([h["loss"] for h in run.loss_history])
plt.xlabel("accepted L-BFGS step")
plt.ylabel("loss")
plt.savefig("loss.png", dpi=80)
