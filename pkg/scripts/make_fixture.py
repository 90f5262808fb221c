#!/usr/bin/env python3
"""Generate a synthetic moving-dot dataset plus a ready-to-run experiment config."""

import argparse
from pathlib import Path

from lapaction.actions import TARGET_ACTIONS, parse_action
from lapaction.fixture import make_fixture


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", type=Path, help="directory to create the fixture in")
    parser.add_argument(
        "--actions",
        default="needle_pulling,knot_pushing",
        help="comma-separated target actions (default: needle_pulling,knot_pushing; "
        f"'all' for every one of the {len(TARGET_ACTIONS)} targets)",
    )
    parser.add_argument("--train-videos", type=int, default=4)
    parser.add_argument("--test-videos", type=int, default=2)
    parser.add_argument("--interval-len", type=int, default=100, help="frames per action interval")
    parser.add_argument("--size", type=int, default=32, help="square frame edge in pixels")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if args.actions == "all":
        actions = list(TARGET_ACTIONS)
    else:
        actions = [parse_action(a.strip()) for a in args.actions.split(",")]
    info = make_fixture(
        args.out,
        actions=actions,
        n_train_videos=args.train_videos,
        n_test_videos=args.test_videos,
        interval_len=args.interval_len,
        size=args.size,
        seed=args.seed,
    )
    print(f"fixture: {len(info['manifests'])} videos under {info['root']}")
    print(f"config:  {info['config']}")
    print(f"next:    lapaction validate --config {info['config']}")


if __name__ == "__main__":
    main()
