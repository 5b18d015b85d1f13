# %% [markdown]
# Reading the learned axes
# ========================
#
# The toy discs vary in horizontal position, radius and brightness.  After
# training, we correlate the sorted PCA coefficients with those factors, then
# sweep single coefficients in [-2, 2] standard deviations and measure what
# changes in the decoded images.

# %%
from pathlib import Path

import numpy as np

from pcabottleneck.autoencoder import TrainConfig, build_model, fit
from pcabottleneck.bottleneck import make_layout
from pcabottleneck.datasets import TOY_FACTORS, SyntheticSpec, gen_toy_shapes, save_pgm
from pcabottleneck.experiments import image_statistic, monotone_frames, pearson_matrix, sorted_coefficients, tile_grid, traverse

OUT = Path(__file__).with_name("out")
OUT.mkdir(exist_ok=True)

toy = gen_toy_shapes(SyntheticSpec("toy_shapes", count=256, seed=0, image_size=16))
model = build_model((1, 16, 16), make_layout("single_vector", (16, 1, 1), 16, seed=0), hidden=(64,), seed=0)
fit(model, toy.images, TrainConfig(epochs=100, batch_size=16, learning_rate=5e-4))

# %%
coeffs = sorted_coefficients(model, toy.images)
r = pearson_matrix(coeffs[:, :6], toy.factors)
print("component  " + "  ".join(f"{f:>10s}" for f in TOY_FACTORS))
for q, row in enumerate(r):
    print(f"{q:9d}  " + "  ".join(f"{v:+10.2f}" for v in row))

# %%
for f_idx, factor in enumerate(TOY_FACTORS):
    q = int(np.argmax(np.abs(r[:, f_idx])))
    tr = traverse(model, toy.images, image_index=0, component=q)
    stat = image_statistic(tr.frames, factor)
    print(f"{factor:10s} <- component {q}: statistic {np.round(stat, 3)}  monotone {monotone_frames(stat)}/9")
    save_pgm(OUT / f"traverse_{factor}.pgm", tile_grid([list(tr.frames[:, 0])]))
print("strips written to", OUT)
