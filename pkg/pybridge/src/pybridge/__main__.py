"""Entry point: `python -m pybridge [--oracle MANIFEST]`."""

from __future__ import annotations

import argparse
import sys

from pybridge.adapter import AdapterSession, oracle_predict


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="pybridge",
        description="reference stdio adapter for the segmentation-harness protocol",
    )
    parser.add_argument(
        "--oracle",
        metavar="MANIFEST",
        default=None,
        help="answer predict requests from this dataset's ground-truth annotations "
        "(default: all-background masks)",
    )
    args = parser.parse_args(argv)
    predict = oracle_predict(args.oracle) if args.oracle else None
    return AdapterSession(predict=predict).serve()


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
