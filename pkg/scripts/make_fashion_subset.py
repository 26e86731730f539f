"""Build the bundled FashionMNIST subset from the `fashion-mnist` npm package.

The npm package (v1.1.0) ships all 70,000 FashionMNIST images as
``src/clothes/<label>.json``, 7,000 per class, each a list of 784-byte rows.
We treat the first 6,000 rows of each class as the training split and the
remaining 1,000 as the test split, and keep a small prefix of each.

    npm pack fashion-mnist && tar xzf fashion-mnist-1.1.0.tgz
    python scripts/make_fashion_subset.py package/src/clothes data/fashion-mnist
"""
import argparse
import json
from pathlib import Path

import numpy as np

from qpconv.data import write_idx

TRAIN_ROWS = 6000


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("clothes_dir", type=Path)
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--train-per-class", type=int, default=300)
    parser.add_argument("--test-per-class", type=int, default=100)
    args = parser.parse_args()

    splits = {"train": ([], []), "t10k": ([], [])}
    for label in range(10):
        rows = json.loads((args.clothes_dir / f"{label}.json").read_text())["data"]
        images = np.array([r for r in rows if r], dtype=np.uint8).reshape(-1, 28, 28)
        parts = {"train": images[:args.train_per_class],
                 "t10k": images[TRAIN_ROWS:TRAIN_ROWS + args.test_per_class]}
        for name, chunk in parts.items():
            splits[name][0].append(chunk)
            splits[name][1].append(np.full(len(chunk), label, dtype=np.uint8))

    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, (imgs, labels) in splits.items():
        write_idx(np.concatenate(imgs), np.concatenate(labels),
                  args.out_dir / f"{name}-images-idx3-ubyte.gz",
                  args.out_dir / f"{name}-labels-idx1-ubyte.gz")
        print(name, sum(len(i) for i in imgs), "images")


if __name__ == "__main__":
    main()
