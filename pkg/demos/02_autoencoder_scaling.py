# %% [markdown]
# Autoencoder with a PCA bottleneck: bits versus quality
# ======================================================
#
# Train a small MLP autoencoder on 16x16 toy discs with a single 16-channel
# latent vector.  The bottleneck projects onto a basis learned by the Oja
# rule; after training we keep only the top-k components (ranked by explained
# variance) and watch reconstruction quality grow with k.

# %%
from pathlib import Path

from pcabottleneck.autoencoder import TrainConfig, build_model, fit
from pcabottleneck.bottleneck import make_layout
from pcabottleneck.datasets import SyntheticSpec, gen_toy_shapes, save_pgm
from pcabottleneck.experiments import scaling_sweep

OUT = Path(__file__).with_name("out")
OUT.mkdir(exist_ok=True)

toy = gen_toy_shapes(SyntheticSpec("toy_shapes", count=256, seed=0, image_size=16))
layout = make_layout("single_vector", (16, 1, 1), 16, seed=0)
model = build_model((1, 16, 16), layout, hidden=(64,), seed=0)

# %%
records = fit(model, toy.images, TrainConfig(epochs=100, batch_size=16, learning_rate=5e-4),
              on_epoch=lambda e, m, r: (e + 1) % 25 or print(f"epoch {e + 1}: step {m.step}"))
print("first/last loss:", round(records[0].loss, 3), round(records[-1].loss, 3))
print("largest orthogonality drift seen:", max(r.drift for r in records))

# %%
fractions = [1 / 16, 2 / 16, 4 / 16, 8 / 16, 1.0]
rows, grids = scaling_sweep(model, toy.images, fractions, grid_images=8)
print(" k  bits      mse    psnr   ssim")
for r, grid in zip(rows, grids):
    print(f"{r.k:2d} {r.bits:5.0f} {r.mse:8.5f} {r.psnr:7.2f} {r.ssim:6.3f}")
    save_pgm(OUT / f"grid_k{r.k:03d}.pgm", grid)
print("grids written to", OUT)

# %% [markdown]
# Each grid has the originals on the top row and the reconstructions below.
# Quality improves monotonically with k because the components are ordered by
# the variance they explain.
