"""Synthetic data with known structure, and binary PGM image I/O."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MissingDirectoryError, MixedDimensionsError, PgmFormatError, RejectedInputError
from .linalg import random_orthonormal

TOY_FACTORS = ("x_position", "radius", "brightness")


@dataclass(frozen=True)
class SyntheticSpec:
    kind: str = "gaussian_lowrank"
    dimension: int = 20
    spectrum: tuple[float, ...] = ()
    count: int = 1000
    seed: int = 0
    mean: tuple[float, ...] | None = None
    image_size: int = 16

    def __post_init__(self):
        if self.count < 1:
            raise RejectedInputError("count must be >= 1")
        if self.kind == "gaussian_lowrank":
            lam = np.asarray(self.spectrum, dtype=float)
            if lam.size < 1 or lam.size > self.dimension:
                raise RejectedInputError("spectrum must have between 1 and `dimension` entries")
            if np.any(lam <= 0) or np.any(np.diff(lam) > 0):
                raise RejectedInputError("spectrum entries must be positive and descending")
            if self.mean is not None and len(self.mean) != self.dimension:
                raise RejectedInputError("mean must have `dimension` entries")
        elif self.kind == "toy_shapes":
            if self.image_size < 8:
                raise RejectedInputError("image_size must be >= 8")
        else:
            raise RejectedInputError(f"unknown synthetic kind {self.kind!r}")


def lowrank_basis(spec: SyntheticSpec) -> np.ndarray:
    """The seeded orthonormal ``N x r`` basis (r = len(spectrum)) behind :func:`gen_gaussian_lowrank`."""
    rng = np.random.default_rng(spec.seed)
    return random_orthonormal(spec.dimension, len(spec.spectrum), rng)


def lowrank_covariance(spec: SyntheticSpec) -> np.ndarray:
    u = lowrank_basis(spec)
    return (u * np.asarray(spec.spectrum, dtype=float)) @ u.T


def gen_gaussian_lowrank(spec: SyntheticSpec) -> np.ndarray:
    """``M x N`` samples ``U diag(sqrt(lam)) eps + m`` with standard normal ``eps``."""
    if spec.kind != "gaussian_lowrank":
        raise RejectedInputError("expected a gaussian_lowrank SyntheticSpec")
    rng = np.random.default_rng(spec.seed)
    u = random_orthonormal(spec.dimension, len(spec.spectrum), rng)
    eps = rng.standard_normal((spec.count, len(spec.spectrum)))
    z = (eps * np.sqrt(np.asarray(spec.spectrum, dtype=float))) @ u.T
    if spec.mean is not None:
        z += np.asarray(spec.mean, dtype=float)
    return z


def render_disc(size: int, x: float, y: float, radius: float, brightness: float) -> np.ndarray:
    """Anti-aliased disc on a black ``size x size`` canvas (pixel centers at integer + 0.5)."""
    coords = np.arange(size) + 0.5
    dist = np.hypot(coords[None, :] - x, coords[:, None] - y)
    coverage = np.clip(radius - dist + 0.5, 0.0, 1.0)
    return brightness * coverage


@dataclass
class ToyShapes:
    images: np.ndarray  # (M, 1, H, W)
    factors: np.ndarray  # (M, 3), columns named in ``factor_names``
    factor_names: tuple[str, ...] = field(default=TOY_FACTORS)


def gen_toy_shapes(spec: SyntheticSpec) -> ToyShapes:
    """Single-channel discs with three uniform factors: horizontal position, radius and brightness."""
    if spec.kind != "toy_shapes":
        raise RejectedInputError("expected a toy_shapes SyntheticSpec")
    s = spec.image_size
    rng = np.random.default_rng(spec.seed)
    x = rng.uniform(0.3 * s, 0.7 * s, spec.count)
    r = rng.uniform(0.12 * s, 0.25 * s, spec.count)
    b = rng.uniform(0.3, 1.0, spec.count)
    images = np.stack([render_disc(s, xi, s / 2, ri, bi) for xi, ri, bi in zip(x, r, b)])[:, None]
    return ToyShapes(images, np.column_stack([x, r, b]))


def _read_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        if data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif data[pos : pos + 1].isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PgmFormatError("unexpected end of PGM header")
    return data[start:pos], pos


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM into an ``(H, W)`` array scaled to [0, 1]."""
    data = Path(path).read_bytes()
    fields = []
    pos = 0
    for _ in range(4):
        tok, pos = _read_token(data, pos)
        fields.append(tok)
    if fields[0] != b"P5":
        raise PgmFormatError(f"{path}: not a binary PGM (magic {fields[0]!r})")
    try:
        w, h, maxval = (int(f) for f in fields[1:])
    except ValueError as exc:
        raise PgmFormatError(f"{path}: malformed header") from exc
    if w < 1 or h < 1 or not 1 <= maxval <= 65535:
        raise PgmFormatError(f"{path}: invalid dimensions or maxval")
    pos += 1  # single whitespace byte after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = w * h * dtype.itemsize
    if len(data) - pos < need:
        raise PgmFormatError(f"{path}: pixel data truncated")
    pixels = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos)
    return pixels.reshape(h, w).astype(np.float64) / maxval


def save_pgm(path, image) -> None:
    """Write an ``(H, W)`` image in [0, 1] as 8-bit P5; values are clipped and rounded."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise RejectedInputError(f"PGM images must be 2-D, got shape {img.shape}")
    pixels = np.round(np.clip(img, 0.0, 1.0) * 255).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + pixels.tobytes())


def load_pgm_dir(path) -> np.ndarray:
    """All ``*.pgm`` files in a directory, in lexicographic order, as ``(M, 1, H, W)``."""
    if not os.path.isdir(path):
        raise MissingDirectoryError(f"no such directory: {path}")
    files = sorted(p for p in Path(path).iterdir() if p.suffix.lower() == ".pgm")
    if not files:
        raise MissingDirectoryError(f"no .pgm files in {path}")
    images = [read_pgm(f) for f in files]
    shapes = {im.shape for im in images}
    if len(shapes) > 1:
        raise MixedDimensionsError(f"images in {path} have differing sizes: {sorted(shapes)}")
    return np.stack(images)[:, None]
