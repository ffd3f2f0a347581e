"""Command line: export-random and train-toy."""

from __future__ import annotations

import argparse
import sys

from .export import export_random_generator, train_toy_generator


def build_parser():
    parser = argparse.ArgumentParser(
        prog="weight-export",
        description="construct or train toy generators and export them to "
        "the solver's weight format (plus <name>.refs.csv)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_rand = sub.add_parser("export-random", help="spectral-scaled random net")
    p_rand.add_argument("--d", type=int, required=True)
    p_rand.add_argument("--hidden", default="",
                        help="comma-separated hidden sizes")
    p_rand.add_argument("--n", type=int, required=True)
    p_rand.add_argument("--activation", default="tanh",
                        choices=("identity", "tanh", "relu", "leaky_relu"))
    p_rand.add_argument("--seed", type=int, default=0)
    p_rand.add_argument("--gain", type=float, default=1.0)
    p_rand.add_argument("--out", default="generator.cggn")

    p_train = sub.add_parser("train-toy", help="train the toy GAN and export")
    p_train.add_argument("--dataset", required=True,
                         help="directory of square P5 PGM images")
    p_train.add_argument("--d", type=int, default=16)
    p_train.add_argument("--epochs", type=int, default=1)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--batch", type=int, default=16)
    p_train.add_argument("--lr", type=float, default=2e-4)
    p_train.add_argument("--channels", type=int, default=16)
    p_train.add_argument("--out", default="generator.cggn")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "export-random":
        hidden = tuple(int(h) for h in args.hidden.split(",") if h.strip())
        bundle = export_random_generator(
            d=args.d, hidden=hidden, n=args.n, activation=args.activation,
            seed=args.seed, weight_path=args.out, gain=args.gain,
        )
    else:
        bundle = train_toy_generator(
            dataset_path=args.dataset, d=args.d, epochs=args.epochs,
            seed=args.seed, weight_path=args.out, batch_size=args.batch,
            lr=args.lr, base_channels=args.channels,
        )
    print(f"wrote {bundle.weight_path}")
    print(f"wrote {bundle.refs_path} ({len(bundle.inputs)} reference pairs)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
