"""Command-line entry point: ``pcabottleneck {train,eval,scaling,traverse,budget}``.

Exit codes: 0 success, 1 configuration error, 2 data or checkpoint error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .autoencoder import build_model, fit
from .bottleneck import make_layout
from .checkpoint import load_checkpoint, save_checkpoint
from .config import FIELDS, ExperimentConfig, load_config
from .datasets import save_pgm
from .errors import ConfigError, NumericalFailureError, RejectedInputError
from .experiments import evaluate, scaling_sweep, tile_grid, traverse, truncation_sweep
from .metrics import BitBudgetSpec, bit_budget

log = logging.getLogger("pcabottleneck")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3
CHECKPOINT_NAME = "checkpoint.opca"


def fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _output_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _checkpoint_path(args, cfg: ExperimentConfig) -> Path:
    return Path(args.checkpoint) if args.checkpoint else Path(cfg.output_dir) / CHECKPOINT_NAME


def cmd_train(args, cfg: ExperimentConfig) -> int:
    images, _ = cfg.load_images()
    layout = make_layout(cfg.mode, cfg.latent_shape, cfg.num_components, cfg.seed, cfg.schedule(),
                         cfg.gamma, cfg.ortho_period, cfg.eps_ortho, cfg.backward_mode)
    model = build_model(images.shape[1:], layout, cfg.hidden, cfg.seed)
    out = _output_dir(cfg)
    ckpt = _checkpoint_path(args, cfg)

    def on_epoch(epoch, model, rng):
        save_checkpoint(ckpt, model, rng)
        log.info("epoch %d done, step %d", epoch + 1, model.step)

    records = fit(model, images, cfg.train_config(), on_epoch=on_epoch)
    if cfg.epochs == 0:
        save_checkpoint(ckpt, model, np.random.default_rng(cfg.seed))
    write_csv(out / "loss.csv", ["step", "loss", "orthogonality_drift", "mean_delta_norm"],
              [(r.step, r.loss, r.drift, r.delta_norm) for r in records])
    print(f"wrote {ckpt} and {out / 'loss.csv'}")
    return EXIT_OK


EVAL_HEADER = ["k", "bits", "mse", "psnr", "ssim"]


def cmd_eval(args, cfg: ExperimentConfig) -> int:
    model = load_checkpoint(_checkpoint_path(args, cfg)).model
    images, _ = cfg.load_images()
    ks = list(cfg.eval_k)
    rows = truncation_sweep(model, images, ks) if ks else [evaluate(model, images)]
    path = _output_dir(cfg) / "metrics.csv"
    write_csv(path, EVAL_HEADER, [(r.k, r.bits, r.mse, r.psnr, r.ssim) for r in rows])
    sys.stdout.write(path.read_text())
    return EXIT_OK


def cmd_scaling(args, cfg: ExperimentConfig) -> int:
    model = load_checkpoint(_checkpoint_path(args, cfg)).model
    images, _ = cfg.load_images()
    rows, grids = scaling_sweep(model, images, list(cfg.fractions), cfg.grid_images)
    out = _output_dir(cfg)
    write_csv(out / "scaling.csv", ["fraction"] + EVAL_HEADER,
              [(f, r.k, r.bits, r.mse, r.psnr, r.ssim) for f, r in zip(cfg.fractions, rows)])
    for r, grid in zip(rows, grids):
        save_pgm(out / f"grid_k{r.k:03d}.pgm", grid)
    sys.stdout.write((out / "scaling.csv").read_text())
    return EXIT_OK


def cmd_traverse(args, cfg: ExperimentConfig) -> int:
    model = load_checkpoint(_checkpoint_path(args, cfg)).model
    images, _ = cfg.load_images()
    q = cfg.traverse_component
    tr = traverse(model, images, cfg.traverse_image, q, cfg.traverse_range, cfg.traverse_steps)
    out = _output_dir(cfg)
    save_pgm(out / f"traverse_q{q:03d}.pgm", tile_grid([list(tr.frames.mean(axis=1))]))
    write_csv(out / f"traverse_q{q:03d}.csv", ["frame", "value_std_units", "coefficient"],
              [(i, float(v), float(c)) for i, (v, c) in enumerate(zip(tr.values, tr.coefficients))])
    print(f"wrote {out / f'traverse_q{q:03d}.pgm'}")
    return EXIT_OK


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def cmd_budget(args) -> int:
    specs = []
    for text in args.continuous or []:
        vals = _ints(text)
        if len(vals) not in (2, 3):
            raise ConfigError("--continuous takes N,k[,b]")
        specs.append(BitBudgetSpec.continuous(*vals))
    for text in args.discrete or []:
        vals = _ints(text)
        if len(vals) != 2:
            raise ConfigError("--discrete takes N,K")
        specs.append(BitBudgetSpec.discrete(*vals))
    if not specs:
        specs = [BitBudgetSpec.continuous(256, 256, 32), BitBudgetSpec.discrete(256, 8192)]
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["kind", "tokens", "active_channels", "bits_per_value", "codebook_size", "bits"])
    for s in specs:
        bits = bit_budget(s, ceil_per_token=args.ceil)
        writer.writerow([s.kind, s.tokens, s.active_channels, s.bits_per_value, s.codebook_size, fmt(bits)])
    return EXIT_OK


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "scaling": cmd_scaling, "traverse": cmd_traverse}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcabottleneck", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="key = value configuration file")
        p.add_argument("--checkpoint", help=f"checkpoint path (default: <output_dir>/{CHECKPOINT_NAME})")
        for key in FIELDS:
            p.add_argument(f"--{key}", dest=f"set_{key}", metavar="VALUE")
    p = sub.add_parser("budget", help="print latent bit budgets")
    p.add_argument("--continuous", action="append", metavar="N,k[,b]")
    p.add_argument("--discrete", action="append", metavar="N,K")
    p.add_argument("--ceil", action="store_true", help="round discrete bits per token up")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "budget":
            return cmd_budget(args)
        overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("set_") and v is not None}
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RejectedInputError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
