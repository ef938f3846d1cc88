#!/usr/bin/env python3
"""Generate a synthetic train/valid/test split in the toolkit's JSONL schema.

    python scripts/make_corpus.py out_dir --train 1600 --valid 200 --test 200
"""

import argparse
import os

from turducken.corpus import write_jsonl
from turducken.synthetic import synthetic_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir")
    parser.add_argument("--train", type=int, default=1600)
    parser.add_argument("--valid", type=int, default=200)
    parser.add_argument("--test", type=int, default=200)
    parser.add_argument("--seed", type=int, default=1234)
    args = parser.parse_args()

    total = args.train + args.valid + args.test
    samples = synthetic_corpus(total, seed=args.seed)
    os.makedirs(args.out_dir, exist_ok=True)
    write_jsonl(os.path.join(args.out_dir, "train.jsonl"), samples[: args.train])
    write_jsonl(os.path.join(args.out_dir, "valid.jsonl"), samples[args.train : args.train + args.valid])
    write_jsonl(os.path.join(args.out_dir, "test.jsonl"), samples[args.train + args.valid :])
    print(f"wrote {args.train}/{args.valid}/{args.test} samples to {args.out_dir}")


if __name__ == "__main__":
    main()
