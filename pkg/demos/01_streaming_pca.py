# %% [markdown]
# Streaming PCA with the Oja rule
# ===============================
#
# A 20-dimensional Gaussian with spectrum (10, 5, 2, 1, ..., 1) is fed to the
# tracker in minibatches of 32.  We compare the learned 3-dimensional subspace
# with batch PCA on the same samples, for a constant step size and for an
# inverse-time schedule, and look at the faded running mean along the way.

# %%
import numpy as np

from pcabottleneck.datasets import SyntheticSpec, gen_gaussian_lowrank
from pcabottleneck.oja import LearningRateSchedule, init_state, oja_step
from pcabottleneck.oracle import batch_pca, principal_angles
from pcabottleneck.streaming import GammaFadeMean, gamma_fade_direct, gamma_fade_update

STEPS, BATCH = 5000, 32
spectrum = (10.0, 5.0, 2.0) + (1.0,) * 17
z = gen_gaussian_lowrank(SyntheticSpec(dimension=20, spectrum=spectrum, count=STEPS * BATCH, seed=0))
oracle = batch_pca(z, 3)
print("batch PCA eigenvalues:", np.round(oracle.eigenvalues, 3))

# %%
schedules = {
    "constant eta=0.01": LearningRateSchedule("constant", 0.01),
    "constant eta=0.0025": LearningRateSchedule("constant", 0.0025),
    "inverse-time 0.01/(1+0.002t)": LearningRateSchedule("inverse_time", 0.01, 0.002),
}
for name, sched in schedules.items():
    state = init_state(20, 3, seed=0, schedule=sched, gamma=0.99)
    checkpoints = []
    for t in range(STEPS):
        state, trace = oja_step(state, z[t * BATCH : (t + 1) * BATCH])
        if (t + 1) in (100, 500, 1000, 2500, 5000):
            checkpoints.append(principal_angles(state.basis, oracle.eigenvectors).max())
    print(f"{name:30s} largest angle at 100/500/1k/2.5k/5k steps:", " ".join(f"{a:.3f}" for a in checkpoints))

# %% [markdown]
# The constant step plateaus at a noise floor that scales roughly with
# sqrt(eta / B); shrinking eta or decaying it over time pushes the angle down.

# %%
# the recursive faded mean matches the closed-form weighted average
rng = np.random.default_rng(1)
means = rng.standard_normal((50, 4))
fade = GammaFadeMean.zeros(4, gamma=0.9)
for m in means:
    fade = gamma_fade_update(fade, m)
print("recursive:", np.round(fade.mu, 6))
print("direct:   ", np.round(gamma_fade_direct(means, 0.9), 6))
