"""Flat ``key = value`` experiment configuration."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autoencoder import TrainConfig
from .datasets import SyntheticSpec, gen_toy_shapes, load_pgm_dir
from .errors import ConfigError, RejectedInputError
from .oja import LearningRateSchedule


@dataclass
class ExperimentConfig:
    # training
    seed: int = 0
    epochs: int = 10
    batch_size: int = 16
    learning_rate: float = 5e-4
    hidden: tuple[int, ...] = (64,)
    update_before_forward: bool = True
    # data
    dataset: str = "toy_shapes"
    data_dir: str = ""
    image_size: int = 16
    num_images: int = 256
    data_seed: int = 0
    # bottleneck
    mode: str = "single_vector"
    latent_channels: int = 16
    latent_height: int = 1
    latent_width: int = 1
    num_components: int = 16
    gamma: float = 0.99
    eta_schedule: str = "constant"
    eta0: float = 0.01
    eta_decay: float = 0.0
    ortho_period: int = 1
    eps_ortho: float = 1e-8
    backward_mode: str = "projector"
    # outputs and sweeps
    output_dir: str = "runs/default"
    eval_k: tuple[int, ...] = ()
    fractions: tuple[float, ...] = (0.0625, 0.125, 0.25, 0.5, 1.0)
    grid_images: int = 8
    traverse_image: int = 0
    traverse_component: int = 0
    traverse_range: tuple[float, ...] = (-2.0, 2.0)
    traverse_steps: int = 9

    def __post_init__(self):
        if self.dataset not in ("toy_shapes", "pgm_dir"):
            raise ConfigError(f"unknown dataset {self.dataset!r}")
        if self.dataset == "pgm_dir" and not self.data_dir:
            raise ConfigError("dataset=pgm_dir needs data_dir")
        if len(self.traverse_range) != 2:
            raise ConfigError("traverse_range needs two values")
        try:
            self.train_config()
            self.schedule()
        except RejectedInputError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def latent_shape(self) -> tuple[int, int, int]:
        return (self.latent_channels, self.latent_height, self.latent_width)

    def train_config(self) -> TrainConfig:
        return TrainConfig(self.epochs, self.batch_size, self.learning_rate, self.seed, self.update_before_forward)

    def schedule(self) -> LearningRateSchedule:
        return LearningRateSchedule(self.eta_schedule, self.eta0, self.eta_decay)

    def load_images(self) -> tuple[np.ndarray, np.ndarray | None]:
        """Dataset images ``(M, C, H, W)`` and, for toy shapes, their generative factors."""
        if self.dataset == "pgm_dir":
            return load_pgm_dir(self.data_dir), None
        toy = gen_toy_shapes(SyntheticSpec("toy_shapes", count=self.num_images, seed=self.data_seed,
                                           image_size=self.image_size))
        return toy.images, toy.factors


FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _convert(name: str, raw: str):
    ftype = FIELDS[name].type
    raw = raw.strip()
    try:
        if ftype == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
        if ftype.startswith("tuple[int"):
            return tuple(int(v) for v in raw.split(",") if v.strip())
        if ftype.startswith("tuple[float"):
            return tuple(float(v) for v in raw.split(",") if v.strip())
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def parse_config_text(text: str, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment line. Unknown keys are rejected."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        values[key.strip()] = value
    values.update(overrides or {})
    unknown = sorted(set(values) - set(FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return ExperimentConfig(**{k: _convert(k, v) for k, v in values.items()})


def load_config(path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, overrides)


def format_config(cfg: ExperimentConfig) -> str:
    lines = []
    for name in FIELDS:
        value = getattr(cfg, name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"
