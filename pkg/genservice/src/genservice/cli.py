"""Command line entry points: train a filler model, serve a checkpoint."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import GenServiceError
from .model import ModelSpec
from .training import DomainAccuracyEvaluator, TrainConfig, train_model

__version__ = "0.1.0"


def _domain_pair(text: str) -> tuple[str, Path]:
    name, sep, raw = text.partition("=")
    if not sep or not name or not raw:
        raise argparse.ArgumentTypeError(f"expected NAME=PATH, got {text!r}")
    path = Path(raw)
    if not path.exists():
        raise argparse.ArgumentTypeError(f"no such file: {path}")
    return name, path


def _existing_path(text: str) -> Path:
    path = Path(text)
    if not path.exists():
        raise argparse.ArgumentTypeError(f"no such file: {path}")
    return path


def _fraction(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError(f"holdout must be in [0, 1), got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genservice",
        description="train and serve the slot-filling generation model",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from corpora via the upstream toolkit")
    p.add_argument("--domain", action="append", type=_domain_pair, required=True,
                   metavar="NAME=PATH", help="domain corpus (JSONL); repeatable")
    p.add_argument("--snapshot", required=True, type=_existing_path)
    p.add_argument("--orientations", required=True, type=_existing_path)
    p.add_argument("--out", required=True, metavar="DIR", help="checkpoint directory")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--learning-rate", type=float, default=5e-5)
    p.add_argument("--weight-decay", type=float, default=1e-5)
    p.add_argument("--max-length", type=int, default=96)
    p.add_argument("--holdout", type=_fraction, default=0.1,
                   help="fraction of each corpus held out for model selection; 0 disables")
    p.add_argument("--d-model", type=int, default=64)
    p.add_argument("--d-kv", type=int, default=16)
    p.add_argument("--d-ff", type=int, default=128)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--primary", default="domainforge",
                   help="upstream CLI to invoke for masking and filtering")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="serve a trained checkpoint over HTTP")
    p.add_argument("--checkpoint", required=True, type=_existing_path, metavar="DIR")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def _split_corpus(source: Path, every: int, train_path: Path, eval_path: Path) -> None:
    """Send every Nth non-empty line to the eval file, the rest to train."""
    with open(source, encoding="utf-8") as src, \
            open(train_path, "w", encoding="utf-8") as train, \
            open(eval_path, "w", encoding="utf-8") as eval_out:
        kept = 0
        for line in src:
            if not line.strip():
                continue
            if kept % every == every - 1:
                eval_out.write(line)
            else:
                train.write(line)
            kept += 1


def cmd_train(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    domain_files = {name: path for name, path in args.domain}

    selector = None
    if args.holdout > 0 and len(domain_files) >= 2:
        splits = out_dir / "splits"
        splits.mkdir(exist_ok=True)
        every = max(2, round(1 / args.holdout))
        train_files: dict[str, Path] = {}
        eval_files: dict[str, Path] = {}
        for name, path in sorted(domain_files.items()):
            train_files[name] = splits / f"{name}-train.jsonl"
            eval_files[name] = splits / f"{name}-eval.jsonl"
            _split_corpus(path, every, train_files[name], eval_files[name])
        evaluator = DomainAccuracyEvaluator(
            domain_files=eval_files,
            corpus_files=train_files,
            snapshot=args.snapshot,
            workdir=out_dir / "eval",
            primary=(args.primary,),
        )
        selector = evaluator.score
        domain_files = train_files

    config = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        weight_decay=args.weight_decay,
        batch_size=args.batch_size,
        max_length=args.max_length,
        seed=args.seed,
    )
    spec = ModelSpec(
        d_model=args.d_model,
        d_kv=args.d_kv,
        d_ff=args.d_ff,
        num_layers=args.layers,
        num_heads=args.heads,
    )
    result = train_model(
        domain_files,
        args.snapshot,
        args.orientations,
        out_dir,
        config=config,
        spec=spec,
        primary=(args.primary,),
        selector=selector,
        log=print,
    )
    print(f"best epoch {result.best_epoch} -> {result.best}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app_from_checkpoint

    app = app_from_checkpoint(str(args.checkpoint))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GenServiceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
