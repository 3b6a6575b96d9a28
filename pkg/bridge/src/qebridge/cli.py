"""Command-line entry point: load the model, then speak the protocol."""

from __future__ import annotations

import argparse
import sys

from .config import RATED_SIDES, BridgeConfig
from .models import load_model
from .serve import ProtocolViolation, serve


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qe-bridge",
        description=(
            "Score {id, src, tgt} request lines from stdin with a wrapped "
            "quality model and write {id, score} responses to stdout."
        ),
    )
    parser.add_argument(
        "--model", default="mock",
        help="mock[:salt], constant:VALUE, or hf:MODEL_ID (default: mock)",
    )
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--device", default="cpu", help="cpu, cuda, cuda:0, ...")
    parser.add_argument(
        "--side", choices=RATED_SIDES, default="target",
        help="which text single-text rating models see (default: target)",
    )
    parser.add_argument(
        "--range", nargs=2, type=float, metavar=("LO", "HI"), default=(0.0, 1.0),
        help="documented output range of the wrapped model (default: 0 1)",
    )
    parser.add_argument(
        "--no-range", action="store_true",
        help="the wrapped model's output is unbounded; skip range checks",
    )
    parser.add_argument(
        "--sigmoid", action="store_true",
        help="squash raw hf logits through a sigmoid (logit-head checkpoints)",
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = BridgeConfig(
            model=args.model,
            batch_size=args.batch_size,
            device=args.device,
            rated_side=args.side,
            declared_range=None if args.no_range else tuple(args.range),
        )
        # Load before touching stdin: a broken model must fail without
        # consuming any requests.
        model = load_model(config, sigmoid=args.sigmoid)
    except Exception as exc:
        print(f"qe-bridge: model load failed: {exc}", file=sys.stderr)
        return 1
    try:
        return serve(config, model)
    except ProtocolViolation as exc:
        print(f"qe-bridge: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 1


if __name__ == "__main__":
    sys.exit(main())
