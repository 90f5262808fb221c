#!/usr/bin/env python3
"""Chain every pipeline stage on one config: validate through report and infer."""

import argparse
import sys

from lapaction.cli import main as cli_main

STAGES = ("validate", "extract-clips", "balance", "train", "evaluate", "report", "infer")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--actions", help="comma-separated subset of target actions")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--set", action="append", default=[], metavar="KEY.PATH=VALUE")
    parser.add_argument("--skip-infer", action="store_true")
    args = parser.parse_args()

    stages = STAGES[:-1] if args.skip_infer else STAGES
    for stage in stages:
        argv = [stage, "--config", args.config]
        for assignment in args.set:
            argv += ["--set", assignment]
        if args.out:
            argv += ["--out", args.out]
        if args.actions:
            argv += ["--actions", args.actions]
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        print(f"==> lapaction {stage}")
        code = cli_main(argv)
        if code != 0:
            print(f"stage {stage} failed with exit code {code}", file=sys.stderr)
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
