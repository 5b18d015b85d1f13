"""Numbered acceptance criteria, each asserted at its stated tolerance.

Run with ``pytest tests/test_acceptance.py``; the terminal summary prints one
PASS/FAIL line per criterion with the measured values.
"""

import csv
import dataclasses
import time

import numpy as np
import pytest

from pcabottleneck.autoencoder import TrainConfig, build_model, fit, loss_and_gradients
from pcabottleneck.bottleneck import bottleneck_forward, bottleneck_update, make_layout, stop_gradient_backward
from pcabottleneck.checkpoint import load_checkpoint, save_checkpoint
from pcabottleneck.cli import EXIT_OK, main
from pcabottleneck.config import load_config
from pcabottleneck.datasets import TOY_FACTORS, SyntheticSpec, gen_gaussian_lowrank, gen_toy_shapes
from pcabottleneck.errors import BadMagicError, CheckpointError, TruncatedCheckpointError, VersionMismatchError
from pcabottleneck.experiments import image_statistic, monotone_frames, pearson_matrix, sorted_coefficients, traverse
from pcabottleneck.linalg import orthonormality_error, random_orthonormal
from pcabottleneck.metrics import BitBudgetSpec, bit_budget
from pcabottleneck.oja import DRIFT_BOUND, LearningRateSchedule, init_state, oja_step, reorthonormalize
from pcabottleneck.oracle import batch_pca, principal_angles, reconstruction_mse, trace_identity_mse
from pcabottleneck.streaming import GammaFadeMean, gamma_fade_direct, gamma_fade_update

SPECTRUM_20 = (10.0, 5.0, 2.0) + (1.0,) * 17


def run_oja(seed, steps=5000, batch=32, eta=0.01, gamma=0.99, record_drift=False):
    spec = SyntheticSpec(dimension=20, spectrum=SPECTRUM_20, count=steps * batch, seed=seed)
    z = gen_gaussian_lowrank(spec)
    state = init_state(20, 3, seed=seed, schedule=LearningRateSchedule("constant", eta), gamma=gamma, ortho_period=1)
    drifts = []
    for t in range(steps):
        state, _ = oja_step(state, z[t * batch : (t + 1) * batch])
        if record_drift:
            drifts.append(state.drift())
    return state, z, drifts


@pytest.mark.acceptance(1, "Oja subspace converges to the batch-PCA top-3 subspace")
def test_c1_oja_convergence(report):
    t0 = time.perf_counter()
    angles = []
    for seed in range(5):
        state, z, _ = run_oja(seed)
        angles.append(float(principal_angles(state.basis, batch_pca(z, 3).eigenvectors).max()))
    elapsed = time.perf_counter() - t0
    passing = sum(a < 0.05 for a in angles)
    report("max angles " + ", ".join(f"{a:.3f}" for a in angles) + f" rad; {passing}/5 below 0.05; {elapsed:.1f}s")
    assert passing >= 4
    assert elapsed < 10.0


@pytest.mark.acceptance(2, "recursive gamma-fade mean equals the direct weighted form")
def test_c2_gamma_fade(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for gamma in (0.1, 0.5, 0.9, 0.99):
        means = rng.standard_normal((200, 7)) * rng.uniform(0.1, 10.0)
        state = GammaFadeMean.zeros(7, gamma)
        for t in range(200):
            state = gamma_fade_update(state, means[t])
            direct = gamma_fade_direct(means[: t + 1], gamma)
            worst = max(worst, float(np.max(np.abs(state.mu - direct))))
    elapsed = time.perf_counter() - t0
    report(f"max abs diff {worst:.1e}; {elapsed:.2f}s")
    assert worst < 1e-10
    assert elapsed < 1.0


@pytest.mark.acceptance(3, "reorthonormalization restores orthonormality; drift bound holds over 5000 steps")
def test_c3_orthonormality(report):
    rng = np.random.default_rng(1)
    worst_after = 0.0
    for trial in range(50):
        n = int(rng.integers(2, 24))
        q = int(rng.integers(1, n + 1))
        base = random_orthonormal(n, q, rng)
        scale = 10.0 ** rng.uniform(-4, -1)
        state = init_state(n, q, seed=trial)
        state = dataclasses.replace(state, basis=base + scale * rng.standard_normal((n, q)))
        worst_after = max(worst_after, orthonormality_error(reorthonormalize(state).basis))
    _, _, drifts = run_oja(0, record_drift=True)
    worst_drift = max(drifts)
    report(f"max error after reorthonormalize {worst_after:.1e}; max drift over 5000 steps {worst_drift:.1e}")
    assert worst_after < 1e-6
    assert worst_drift < DRIFT_BOUND


@pytest.mark.acceptance(4, "reconstruction MSE equals the trace identity")
def test_c4_loss_identity(report):
    rng = np.random.default_rng(2)
    worst = 0.0
    for i in range(20):
        n = int(rng.integers(2, 17))
        m = int(rng.integers(n + 1, 501))
        # q < n so the residual is nonzero and a relative comparison is meaningful
        q = int(rng.integers(1, n))
        data = rng.standard_normal((m, n)) * rng.uniform(0.1, 5.0, n) + rng.standard_normal(n)
        c = batch_pca(data, q).eigenvectors if i % 2 else random_orthonormal(n, q, rng)
        lhs, rhs = reconstruction_mse(c, data), trace_identity_mse(c, data)
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))
    report(f"max relative difference {worst:.1e} over 20 instances")
    assert worst < 1e-8


@pytest.mark.acceptance(5, "full-model gradients match finite differences; bottleneck has no gradients")
def test_c5_gradients(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    x = rng.uniform(size=(6, 1, 5, 5))
    worst = 0.0
    checked = 0
    for mode, latent, q in (("single_vector", (6, 1, 1), 3), ("multi_patch", (3, 2, 2), 2)):
        layout = make_layout(mode, latent, q, seed=4)
        model = build_model((1, 5, 5), layout, (12,), seed=4)
        model.layout = bottleneck_update(model.layout, model.encode(x))
        _, grads = loss_and_gradients(model, x)
        params = model.named_parameters()
        assert set(grads) == set(params)
        assert not any(name.startswith(("layout", "basis", "mean", "mu", "C")) for name in grads)
        bottleneck_ids = {id(s.basis) for s in model.layout.states} | {id(s.mu) for s in model.layout.states}
        assert not bottleneck_ids & {id(p) for p in params.values()}
        names = sorted(params)
        for _ in range(15):
            name = names[int(rng.integers(len(names)))]
            p = params[name]
            idx = tuple(int(rng.integers(d)) for d in p.shape)
            orig = p[idx]
            step = 1e-6
            p[idx] = orig + step
            up = loss_and_gradients(model, x)[0]
            p[idx] = orig - step
            down = loss_and_gradients(model, x)[0]
            p[idx] = orig
            fd = (up - down) / (2 * step)
            rel = abs(fd - grads[name][idx]) / max(abs(fd), abs(grads[name][idx]), 1e-8)
            worst = max(worst, rel)
            checked += 1
    elapsed = time.perf_counter() - t0
    report(f"{checked} parameters; max relative error {worst:.1e}; {elapsed:.1f}s")
    assert checked >= 20
    assert worst < 1e-4
    assert elapsed < 30.0


TOY_CONFIG = """\
dataset = toy_shapes
image_size = 16
num_images = 256
data_seed = 0
seed = 0
mode = single_vector
latent_channels = 16
latent_height = 1
latent_width = 1
num_components = 16
hidden = 64
epochs = 100
batch_size = 16
learning_rate = 0.0005
eval_k = 1,2,4,8,16
"""


@pytest.fixture(scope="module")
def toy_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy")
    cfg = root / "toy.cfg"
    cfg.write_text(TOY_CONFIG + f"output_dir = {root / 'run'}\n")
    t0 = time.perf_counter()
    assert main(["train", str(cfg)]) == EXIT_OK
    return cfg, root / "run", time.perf_counter() - t0


@pytest.mark.acceptance(6, "sorted truncation gives monotone MSE/PSNR; bits column exact")
@pytest.mark.slow
def test_c6_monotone_scaling(toy_run, report):
    cfg, out, _ = toy_run
    assert main(["eval", str(cfg)]) == EXIT_OK
    with open(out / "metrics.csv") as fh:
        rows = list(csv.DictReader(fh))
    ks = [int(r["k"]) for r in rows]
    mse = [float(r["mse"]) for r in rows]
    psnr = [float(r["psnr"]) for r in rows]
    report("k " + ",".join(map(str, ks)) + "; mse " + ", ".join(f"{v:.4f}" for v in mse)
           + "; psnr " + ", ".join(f"{v:.1f}" for v in psnr))
    assert ks == [1, 2, 4, 8, 16]
    assert all(a >= b for a, b in zip(mse, mse[1:]))
    assert all(a <= b for a, b in zip(psnr, psnr[1:]))
    for r in rows:
        assert int(r["bits"]) == bit_budget(BitBudgetSpec.continuous(1, int(r["k"]), 32)) == int(r["k"]) * 32


@pytest.mark.acceptance(7, "budget command prints the exact bit counts")
def test_c7_bit_budget(capsys, report):
    assert main(["budget", "--continuous", "256,256,32", "--discrete", "256,8192"]) == EXIT_OK
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    bits = [r["bits"] for r in rows]
    report(f"continuous {bits[0]}, discrete {bits[1]}")
    assert bits == ["2097152", "3328"]
    assert bit_budget(BitBudgetSpec.continuous(16 * 16, 256, 32)) == 2_097_152
    assert bit_budget(BitBudgetSpec.discrete(256, 8192)) == 3328


@pytest.mark.acceptance(8, "a top-3 component tracks a generative factor and its traversal is monotone")
@pytest.mark.slow
def test_c8_interpretability(toy_run, report):
    cfg, out, train_seconds = toy_run
    t0 = time.perf_counter()
    model = load_checkpoint(out / "checkpoint.opca").model
    conf = load_config(cfg)
    toy = gen_toy_shapes(SyntheticSpec("toy_shapes", count=conf.num_images, seed=conf.data_seed, image_size=conf.image_size))
    coeffs = sorted_coefficients(model, toy.images)[:, :3]
    r = pearson_matrix(coeffs, toy.factors)
    comp, fac = np.unravel_index(np.argmax(np.abs(r)), r.shape)
    factor = TOY_FACTORS[fac]
    tr = traverse(model, toy.images, 0, int(comp), (-2.0, 2.0), 9)
    stat = image_statistic(tr.frames, factor)
    mono = monotone_frames(stat)
    elapsed = train_seconds + time.perf_counter() - t0
    report(f"component {comp} vs {factor}: r={r[comp, fac]:+.2f}; {mono}/9 monotone frames; {elapsed:.0f}s")
    assert abs(r[comp, fac]) > 0.5
    assert mono >= 8
    assert elapsed < 300.0


@pytest.mark.slow
def test_brightness_component_traversal(toy_run):
    # the component most correlated with brightness moves mean intensity monotonically
    cfg, out, _ = toy_run
    model = load_checkpoint(out / "checkpoint.opca").model
    conf = load_config(cfg)
    toy = gen_toy_shapes(SyntheticSpec("toy_shapes", count=conf.num_images, seed=conf.data_seed, image_size=conf.image_size))
    r = pearson_matrix(sorted_coefficients(model, toy.images), toy.factors)
    b = TOY_FACTORS.index("brightness")
    comp = int(np.argmax(np.abs(r[:, b])))
    assert abs(r[comp, b]) > 0.5
    for image in range(5):
        tr = traverse(model, toy.images, image, comp)
        assert monotone_frames(image_statistic(tr.frames, "brightness")) >= 8


@pytest.mark.acceptance(9, "multi_patch with one position matches single_vector bitwise")
def test_c9_layout_equivalence(report):
    rng = np.random.default_rng(9)
    shape = (7, 1, 1)
    single = make_layout("single_vector", shape, 3, seed=5, schedule=LearningRateSchedule("inverse_time", 0.05, 0.01))
    multi = make_layout("multi_patch", shape, 3, seed=5, schedule=LearningRateSchedule("inverse_time", 0.05, 0.01))
    for _ in range(50):
        h = rng.standard_normal((8, *shape)) * np.arange(1, 8)[None, :, None, None]
        probe = rng.standard_normal((5, *shape))
        assert np.array_equal(bottleneck_forward(single, probe), bottleneck_forward(multi, probe))
        assert np.array_equal(stop_gradient_backward(single, probe), stop_gradient_backward(multi, probe))
        single, multi = bottleneck_update(single, h), bottleneck_update(multi, h)
        assert np.array_equal(single.states[0].basis, multi.states[0].basis)
        assert np.array_equal(single.states[0].mu, multi.states[0].mu)

    # and through the full model
    x = rng.uniform(size=(16, 1, 4, 4))
    models = [build_model((1, 4, 4), make_layout(m, shape, 3, seed=2), (8,), seed=2) for m in ("single_vector", "multi_patch")]
    for mdl in models:
        fit(mdl, x, TrainConfig(epochs=3, batch_size=4), rng=np.random.default_rng(0))
    assert np.array_equal(models[0].reconstruct(x), models[1].reconstruct(x))
    report("50 random update/forward/backward rounds and a 12-step training run identical")


@pytest.mark.acceptance(10, "checkpoint round trip is bitwise; corrupt files raise typed errors")
def test_c10_checkpoint(tmp_path, report):
    rng = np.random.default_rng(10)
    x = rng.uniform(size=(16, 1, 4, 4))
    probe = rng.uniform(size=(5, 1, 4, 4))
    for mode, latent in (("single_vector", (6, 1, 1)), ("multi_patch", (3, 2, 2))):
        model = build_model((1, 4, 4), make_layout(mode, latent, 2, seed=1), (8,), seed=1)
        fit(model, x, TrainConfig(epochs=2, batch_size=4))
        path = tmp_path / f"{mode}.opca"
        save_checkpoint(path, model, np.random.default_rng(3))
        restored = load_checkpoint(path).model
        assert np.array_equal(restored.reconstruct(probe), model.reconstruct(probe))
    blob = path.read_bytes()
    cases = {
        "bad magic": (b"XXXX" + blob[4:], BadMagicError),
        "version": (blob[:4] + (99).to_bytes(4, "little") + blob[8:], VersionMismatchError),
        "truncated": (blob[: len(blob) // 2], TruncatedCheckpointError),
        "empty": (b"", TruncatedCheckpointError),
    }
    for name, (data, exc) in cases.items():
        bad = tmp_path / f"{name}.opca"
        bad.write_bytes(data)
        with pytest.raises(exc):
            load_checkpoint(bad)
        assert issubclass(exc, CheckpointError)
    report("probe outputs identical for both layouts; 4 corruption cases rejected")
