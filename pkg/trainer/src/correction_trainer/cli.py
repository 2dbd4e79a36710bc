"""Command-line entry point: train a multilevel correction surrogate and
emit predictions consumable by the dataset metrics tooling.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

import argparse
import json
import sys
from pathlib import Path

from .data import DataError, DatasetDir
from .model import ACTIVATIONS, ModelSpec
from .predict import PredictError, predict
from .train import TrainConfig, TrainError, final_train_errors, load_checkpoint, train

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="correction-trainer",
                                     description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit per-level models")
    p_train.add_argument("dataset_dir")
    p_train.add_argument("--out", default="run")
    p_train.add_argument("--epochs", type=int, default=200)
    p_train.add_argument("--batch-size", type=int, default=32)
    p_train.add_argument("--lr", type=float, default=3e-3)
    p_train.add_argument("--lr-decay", type=float, default=0.5)
    p_train.add_argument("--lr-step-epochs", type=int, default=60)
    p_train.add_argument("--width", type=int, default=16)
    p_train.add_argument("--unets", type=str, default=None,
                         help="comma-separated U-net count per level")
    p_train.add_argument("--activation", choices=sorted(ACTIVATIONS),
                         default="softplus")
    p_train.add_argument("--lumped-mass", action="store_true")
    p_train.add_argument("--seed", type=int, default=0)

    p_pred = sub.add_parser("predict", help="emit predictions for a split")
    p_pred.add_argument("checkpoint")
    p_pred.add_argument("dataset_dir")
    p_pred.add_argument("--split", default="test")
    p_pred.add_argument("--out", default="predictions")
    return parser


def cmd_train(args) -> int:
    data = DatasetDir(args.dataset_dir)
    unets = tuple(int(s) for s in args.unets.split(",")) if args.unets else ()
    spec = ModelSpec(levels=data.levels, unets_per_level=unets,
                     width=args.width, activation=args.activation)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                      learning_rate=args.lr, lr_decay=args.lr_decay,
                      lr_step_epochs=args.lr_step_epochs,
                      lumped_mass=args.lumped_mass, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "resolved_config.json", "w") as fh:
        json.dump({"model_spec": spec.to_json(),
                   "train_config": cfg.to_json(),
                   "dataset_dir": str(args.dataset_dir)},
                  fh, indent=2, sort_keys=True)
    _, history = train(args.dataset_dir, spec, cfg, out)
    for lvl, err in sorted(final_train_errors(history).items()):
        print(f"level {lvl}: final training H1 error {err:.4e}")
    print(f"checkpoint: {out / 'checkpoint.pt'}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    out = predict(model, args.dataset_dir, args.split, args.out)
    print(f"predictions written to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"train": cmd_train, "predict": cmd_predict}
    try:
        return handlers[args.command](args)
    except (DataError, PredictError, ValueError, OSError,
            json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
