"""Versioned binary checkpoints.

Layout::

    b"OPCA"  u32 version
    section*  : 4-byte ASCII tag, u64 payload length, payload

Sections appear in the order MODL, ENCD, DECD, LAYT, ADAM, RNGS, STEP. All
integers in payloads are little-endian u64 and all reals little-endian f64.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autoencoder import AdamState, Dense, MlpStack, PcaAutoencoder
from .bottleneck import BACKWARD_MODES, MODES, BottleneckLayout
from .errors import BadMagicError, CheckpointError, TruncatedCheckpointError, VersionMismatchError
from .oja import LearningRateSchedule, OjaPcaState
from .streaming import GammaFadeMean

MAGIC = b"OPCA"
FORMAT_VERSION = 1
SECTIONS = (b"MODL", b"ENCD", b"DECD", b"LAYT", b"ADAM", b"RNGS", b"STEP")
_ACTIVATIONS = ("tanh", "identity")
_SCHEDULES = ("constant", "inverse_time")
_MASK64 = (1 << 64) - 1


@dataclass
class Checkpoint:
    model: PcaAutoencoder
    rng_state: dict | None = None

    def make_rng(self) -> np.random.Generator | None:
        if self.rng_state is None:
            return None
        bitgen = np.random.PCG64()
        bitgen.state = self.rng_state
        return np.random.Generator(bitgen)


class _Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def u64(self, *values: int) -> None:
        self.parts.append(struct.pack(f"<{len(values)}Q", *values))

    def f64(self, values) -> None:
        self.parts.append(np.ascontiguousarray(values, dtype="<f8").tobytes())

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedCheckpointError("checkpoint ends unexpectedly")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self, count: int = 1) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)

    def code(self, names: tuple[str, ...]) -> str:
        value = self.u64()
        if value >= len(names):
            raise CheckpointError(f"invalid enum code {value}")
        return names[value]

    def done(self) -> bool:
        return self.pos == len(self.data)


def _write_mlp(w: _Writer, stack: MlpStack) -> None:
    w.u64(len(stack.layers))
    for layer in stack.layers:
        out_dim, in_dim = layer.weight.shape
        w.u64(out_dim, in_dim, _ACTIVATIONS.index(layer.activation))
        w.f64(layer.weight)
        w.f64(layer.bias)


def _read_mlp(r: _Reader) -> MlpStack:
    layers = []
    for _ in range(r.u64()):
        out_dim, in_dim = r.u64(), r.u64()
        act = r.code(_ACTIVATIONS)
        weight = r.f64(out_dim * in_dim).reshape(out_dim, in_dim)
        layers.append(Dense(weight, r.f64(out_dim), act))
    return MlpStack(layers)


def _write_state(w: _Writer, s: OjaPcaState) -> None:
    w.u64(s.input_dim, s.num_components)
    w.f64(s.basis)
    w.f64(s.mu)
    w.f64([s.mean.gamma])
    w.u64(s.mean.step, s.steps_taken, s.ortho_period)
    w.f64([s.eps_ortho])
    w.u64(_SCHEDULES.index(s.schedule.kind))
    w.f64([s.schedule.eta0, s.schedule.decay])
    w.u64(int(s.track_mean))


def _read_state(r: _Reader) -> OjaPcaState:
    n, q = r.u64(), r.u64()
    basis = r.f64(n * q).reshape(n, q)
    mu = r.f64(n)
    gamma = float(r.f64()[0])
    mean_step, steps_taken, ortho_period = r.u64(), r.u64(), r.u64()
    eps = float(r.f64()[0])
    kind = r.code(_SCHEDULES)
    eta0, decay = r.f64(2)
    return OjaPcaState(
        basis=basis,
        mean=GammaFadeMean(mu=mu, gamma=gamma, step=mean_step),
        schedule=LearningRateSchedule(kind, float(eta0), float(decay)),
        steps_taken=steps_taken,
        ortho_period=ortho_period,
        eps_ortho=eps,
        track_mean=bool(r.u64()),
    )


def _encode_sections(model: PcaAutoencoder, rng_state: dict | None) -> dict[bytes, bytes]:
    sections = {}
    w = _Writer()
    w.u64(*model.image_shape)
    sections[b"MODL"] = w.getvalue()
    for tag, stack in ((b"ENCD", model.encoder), (b"DECD", model.decoder)):
        w = _Writer()
        _write_mlp(w, stack)
        sections[tag] = w.getvalue()

    w = _Writer()
    layout = model.layout
    w.u64(MODES.index(layout.mode), BACKWARD_MODES.index(layout.backward_mode), *layout.latent_shape)
    w.u64(len(layout.states))
    for s in layout.states:
        _write_state(w, s)
    sections[b"LAYT"] = w.getvalue()

    w = _Writer()
    adam = model.adam
    if adam is None:
        w.u64(0)
    else:
        w.u64(1, adam.t, len(adam.m))
        for arr in (*adam.m, *adam.v):
            w.u64(arr.size)
            w.f64(arr)
    sections[b"ADAM"] = w.getvalue()

    w = _Writer()
    if rng_state is None:
        w.u64(0)
    else:
        if rng_state.get("bit_generator") != "PCG64":
            raise CheckpointError("only PCG64 generator states can be saved")
        st = rng_state["state"]
        w.u64(1, st["state"] & _MASK64, st["state"] >> 64, st["inc"] & _MASK64, st["inc"] >> 64,
              rng_state["has_uint32"], rng_state["uinteger"])
    sections[b"RNGS"] = w.getvalue()

    w = _Writer()
    w.u64(model.step)
    sections[b"STEP"] = w.getvalue()
    return sections


def save_checkpoint(path, model: PcaAutoencoder, rng: np.random.Generator | None = None) -> None:
    """Write ``model`` (and optionally the data-shuffling RNG) to ``path`` atomically."""
    sections = _encode_sections(model, rng.bit_generator.state if rng is not None else None)
    out = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    for tag in SECTIONS:
        payload = sections[tag]
        out += [tag, struct.pack("<Q", len(payload)), payload]
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(b"".join(out))
    os.replace(tmp, path)


def load_checkpoint(path) -> Checkpoint:
    """Parse a checkpoint file.

    Raises
    ------
    BadMagicError, VersionMismatchError, TruncatedCheckpointError
        For the corresponding corruptions; other structural problems raise
        :class:`CheckpointError`. Nothing is returned unless the whole file parses.
    """
    data = Path(path).read_bytes()
    if len(data) < 4:
        raise TruncatedCheckpointError("checkpoint ends unexpectedly")
    if data[:4] != MAGIC:
        raise BadMagicError(f"not a checkpoint (magic {data[:4]!r})")
    r = _Reader(data)
    r.take(4)
    version = struct.unpack("<I", r.take(4))[0]
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"unsupported checkpoint version {version}")

    payloads = {}
    for tag in SECTIONS:
        got = r.take(4)
        if got != tag:
            raise CheckpointError(f"expected section {tag!r}, found {got!r}")
        payloads[tag] = _Reader(r.take(r.u64()))
    if not r.done():
        raise CheckpointError("trailing bytes after last section")

    try:
        model = _decode_model(payloads)
        rng_state = _decode_rng(payloads[b"RNGS"])
    except (ValueError, TypeError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"inconsistent checkpoint contents: {exc}") from exc
    for tag, reader in payloads.items():
        if not reader.done():
            raise CheckpointError(f"section {tag!r} has unexpected trailing bytes")
    return Checkpoint(model, rng_state)


def _decode_model(payloads: dict[bytes, _Reader]) -> PcaAutoencoder:
    m = payloads[b"MODL"]
    image_shape = (m.u64(), m.u64(), m.u64())
    encoder = _read_mlp(payloads[b"ENCD"])
    decoder = _read_mlp(payloads[b"DECD"])

    r = payloads[b"LAYT"]
    mode = r.code(MODES)
    backward = r.code(BACKWARD_MODES)
    latent_shape = (r.u64(), r.u64(), r.u64())
    states = tuple(_read_state(r) for _ in range(r.u64()))
    layout = BottleneckLayout(mode, latent_shape, states, backward)

    r = payloads[b"ADAM"]
    adam = None
    if r.u64():
        t, count = r.u64(), r.u64()
        arrays = [r.f64(r.u64()) for _ in range(2 * count)]
        params = encoder.parameters() + decoder.parameters()
        if count != len(params):
            raise CheckpointError("optimizer state does not match the parameter count")
        shaped = [a.reshape(p.shape) for a, p in zip(arrays, params * 2)]
        adam = AdamState(shaped[:count], shaped[count:], t)

    step = payloads[b"STEP"].u64()
    return PcaAutoencoder(encoder, decoder, layout, image_shape, adam, step)


def _decode_rng(r: _Reader) -> dict | None:
    if not r.u64():
        return None
    s_lo, s_hi, i_lo, i_hi, has_uint32, uinteger = (r.u64() for _ in range(6))
    return {
        "bit_generator": "PCG64",
        "state": {"state": s_lo | (s_hi << 64), "inc": i_lo | (i_hi << 64)},
        "has_uint32": has_uint32,
        "uinteger": uinteger,
    }
