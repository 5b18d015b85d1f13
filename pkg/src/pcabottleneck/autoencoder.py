"""Dense autoencoder around the PCA bottleneck, with hand-written backprop and Adam.

Encoder and decoder are small stacks of affine layers (``tanh`` hidden
activations, identity output). The bottleneck's basis and mean are updated by
their own Oja rule and never appear in the gradient registry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .bottleneck import BottleneckLayout, bottleneck_forward, bottleneck_update, stop_gradient_backward
from .errors import NumericalFailureError, RejectedInputError
from .oja import OjaStepTrace

ACTIVATIONS = ("tanh", "identity")


@dataclass
class Dense:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray
    activation: str = "tanh"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise RejectedInputError(f"unknown activation {self.activation!r}")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise RejectedInputError("bias length must equal the weight's output dimension")


@dataclass
class MlpStack:
    layers: list[Dense]

    def __post_init__(self):
        if not self.layers:
            raise RejectedInputError("an MLP needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.weight.shape[0] != nxt.weight.shape[1]:
                raise RejectedInputError("layer dimensions do not chain")

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    def parameters(self) -> list[np.ndarray]:
        return [a for layer in self.layers for a in (layer.weight, layer.bias)]

    def copy(self) -> "MlpStack":
        return MlpStack([Dense(l.weight.copy(), l.bias.copy(), l.activation) for l in self.layers])


def init_mlp(sizes: list[int], rng: np.random.Generator) -> MlpStack:
    """``tanh`` hidden layers and an identity output layer, weights scaled by ``1/sqrt(fan_in)``."""
    layers = []
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        act = "identity" if i == len(sizes) - 2 else "tanh"
        layers.append(Dense(rng.standard_normal((n_out, n_in)) / np.sqrt(n_in), np.zeros(n_out), act))
    return MlpStack(layers)


def mlp_forward(stack: MlpStack, x: np.ndarray) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """Apply the stack to row vectors; the cache holds (input, output) per layer."""
    cache = []
    for layer in stack.layers:
        pre = x @ layer.weight.T + layer.bias
        out = np.tanh(pre) if layer.activation == "tanh" else pre
        cache.append((x, out))
        x = out
    return x, cache


def mlp_backward(stack: MlpStack, cache, grad_out: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Returns the input gradient and parameter gradients ordered like :meth:`MlpStack.parameters`."""
    grads: list[np.ndarray] = []
    g = grad_out
    for layer, (x, out) in zip(reversed(stack.layers), reversed(cache)):
        if layer.activation == "tanh":
            g = g * (1.0 - out * out)
        grads[:0] = [g.T @ x, g.sum(axis=0)]
        g = g @ layer.weight
    return g, grads


def encoder_forward(enc: MlpStack, x, latent_shape: tuple[int, int, int]):
    """Images ``(B, C, H, W)`` to latents ``(B, D, H', W')``."""
    x = np.asarray(x, dtype=np.float64)
    flat = x.reshape(x.shape[0], -1)
    if flat.shape[1] != enc.input_dim:
        raise RejectedInputError(f"encoder expects {enc.input_dim} inputs per image, got {flat.shape[1]}")
    if int(np.prod(latent_shape)) != enc.output_dim:
        raise RejectedInputError(f"latent shape {latent_shape} does not match encoder output {enc.output_dim}")
    h, cache = mlp_forward(enc, flat)
    return h.reshape((x.shape[0],) + tuple(latent_shape)), cache


def decoder_forward(dec: MlpStack, h_hat, image_shape: tuple[int, int, int]):
    """Latents to real-valued image estimates; outputs are not clamped to [0, 1]."""
    h_hat = np.asarray(h_hat, dtype=np.float64)
    flat = h_hat.reshape(h_hat.shape[0], -1)
    if flat.shape[1] != dec.input_dim:
        raise RejectedInputError(f"decoder expects {dec.input_dim} latent values, got {flat.shape[1]}")
    if int(np.prod(image_shape)) != dec.output_dim:
        raise RejectedInputError(f"image shape {image_shape} does not match decoder output {dec.output_dim}")
    x_hat, cache = mlp_forward(dec, flat)
    return x_hat.reshape((h_hat.shape[0],) + tuple(image_shape)), cache


def mse_loss(x_hat, x) -> tuple[float, np.ndarray]:
    """Squared error summed over pixels, averaged over the batch, and its gradient."""
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x_hat.shape != x.shape:
        raise RejectedInputError(f"shape mismatch {x_hat.shape} vs {x.shape}")
    diff = x_hat - x
    b = x.shape[0]
    return float(np.sum(diff * diff) / b), 2.0 * diff / b


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: list[np.ndarray]) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_update(params, grads, state: AdamState, lr: float, beta1=0.9, beta2=0.999, eps=1e-8) -> None:
    """Bias-corrected Adam step, applied in place to ``params`` and ``state``."""
    if len(params) != len(grads) or any(p.shape != g.shape for p, g in zip(params, grads)):
        raise RejectedInputError("parameter and gradient shapes do not align")
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 16
    learning_rate: float = 5e-4
    seed: int = 0
    update_before_forward: bool = True
    update_layout: bool = True

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 0:
            raise RejectedInputError("batch_size must be >= 1 and epochs >= 0")
        if not self.learning_rate > 0:
            raise RejectedInputError("learning_rate must be positive")


@dataclass
class PcaAutoencoder:
    encoder: MlpStack
    decoder: MlpStack
    layout: BottleneckLayout
    image_shape: tuple[int, int, int]
    adam: AdamState | None = None
    step: int = 0

    @property
    def latent_shape(self) -> tuple[int, int, int]:
        return self.layout.latent_shape

    def named_parameters(self) -> dict[str, np.ndarray]:
        """The gradient registry: encoder and decoder arrays only."""
        out = {}
        for prefix, stack in (("encoder", self.encoder), ("decoder", self.decoder)):
            for i, layer in enumerate(stack.layers):
                out[f"{prefix}.{i}.weight"] = layer.weight
                out[f"{prefix}.{i}.bias"] = layer.bias
        return out

    def reconstruct(self, x, layout: BottleneckLayout | None = None) -> np.ndarray:
        h, _ = encoder_forward(self.encoder, x, self.latent_shape)
        x_hat, _ = decoder_forward(self.decoder, bottleneck_forward(layout or self.layout, h), self.image_shape)
        return x_hat

    def encode(self, x) -> np.ndarray:
        return encoder_forward(self.encoder, x, self.latent_shape)[0]

    def decode(self, h_hat) -> np.ndarray:
        return decoder_forward(self.decoder, h_hat, self.image_shape)[0]


def build_model(
    image_shape: tuple[int, int, int],
    layout: BottleneckLayout,
    hidden: list[int] | tuple[int, ...] = (64,),
    seed: int = 0,
) -> PcaAutoencoder:
    rng = np.random.default_rng(seed)
    n_in = int(np.prod(image_shape))
    n_lat = int(np.prod(layout.latent_shape))
    enc = init_mlp([n_in, *hidden, n_lat], rng)
    dec = init_mlp([n_lat, *reversed(hidden), n_in], rng)
    return PcaAutoencoder(enc, dec, layout, tuple(image_shape))


def loss_and_gradients(model: PcaAutoencoder, x, layout: BottleneckLayout | None = None):
    """Loss and gradients for every registered parameter, with the layout held fixed."""
    layout = layout or model.layout
    h, enc_cache = encoder_forward(model.encoder, x, model.latent_shape)
    h_hat = bottleneck_forward(layout, h)
    x_hat, dec_cache = decoder_forward(model.decoder, h_hat, model.image_shape)
    loss, g = mse_loss(x_hat, x)
    g_lat, dec_grads = mlp_backward(model.decoder, dec_cache, g.reshape(g.shape[0], -1))
    g_h = stop_gradient_backward(layout, g_lat.reshape(h.shape))
    _, enc_grads = mlp_backward(model.encoder, enc_cache, g_h.reshape(g_h.shape[0], -1))
    names = list(model.named_parameters())
    return loss, dict(zip(names, enc_grads + dec_grads))


def train_step(
    model: PcaAutoencoder, x, cfg: TrainConfig, traces: list[OjaStepTrace] | None = None
) -> float:
    """One optimization step on batch ``x``; updates ``model`` in place and returns the loss.

    The layout moves by its Oja step (before or after the gradient pass,
    per ``cfg.update_before_forward``); encoder and decoder move by Adam.
    """
    x = np.asarray(x, dtype=np.float64)
    if cfg.update_layout and cfg.update_before_forward:
        h = model.encode(x)
        model.layout = bottleneck_update(model.layout, h, traces)
    loss, grads = loss_and_gradients(model, x)
    if not np.isfinite(loss):
        raise NumericalFailureError(f"non-finite loss at step {model.step}")
    if cfg.update_layout and not cfg.update_before_forward:
        model.layout = bottleneck_update(model.layout, model.encode(x), traces)

    params = list(model.named_parameters().values())
    if model.adam is None:
        model.adam = AdamState.zeros_like(params)
    adam_update(params, [grads[k] for k in model.named_parameters()], model.adam, cfg.learning_rate)
    model.step += 1
    return loss


@dataclass
class StepRecord:
    step: int
    loss: float
    drift: float
    delta_norm: float


def iterate_minibatches(n: int, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def fit(model: PcaAutoencoder, images, cfg: TrainConfig, rng: np.random.Generator | None = None,
        on_epoch=None) -> list[StepRecord]:
    """Train for ``cfg.epochs`` shuffled passes over ``images`` and return per-step records."""
    images = np.asarray(images, dtype=np.float64)
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    records = []
    for epoch in range(cfg.epochs):
        for idx in iterate_minibatches(len(images), cfg.batch_size, rng):
            traces: list[OjaStepTrace] = []
            step = model.step
            loss = train_step(model, images[idx], cfg, traces)
            delta = float(np.mean([t.delta_norm for t in traces])) if traces else 0.0
            records.append(StepRecord(step, loss, model.layout.drift(), delta))
        if on_epoch is not None:
            on_epoch(epoch, model, rng)
    return records
