"""Build the committed IDX dataset from the npm ``mnist`` package's digit JSONs.

The npm package (https://www.npmjs.com/package/mnist) bundles 10000 genuine
MNIST samples as per-digit JSON files, each holding a flat array of N*784
floats in [0, 1].  This script converts them into the standard IDX format
(big-endian headers, magic 2051 for images / 2049 for labels), making a
seeded stratified train/test split, and gzips the four output files.

To regenerate from scratch:

    npm pack mnist && tar xf mnist-*.tgz
    python scripts/build_dataset.py --digits-dir package/src/digits --out-dir data
"""

import argparse
import gzip
import json
import pathlib
import struct

import numpy as np

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049


def load_digit_jsons(digits_dir):
    """Read 0.json .. 9.json and return (pixels uint8 (N,784), labels uint8 (N,))."""
    images, labels = [], []
    for digit in range(10):
        path = pathlib.Path(digits_dir) / f"{digit}.json"
        flat = np.asarray(json.loads(path.read_text())["data"], dtype=np.float64)
        if flat.size % 784 != 0:
            raise ValueError(f"{path}: payload size {flat.size} not a multiple of 784")
        arr = np.clip(np.rint(flat * 255.0), 0, 255).astype(np.uint8).reshape(-1, 784)
        images.append(arr)
        labels.append(np.full(arr.shape[0], digit, dtype=np.uint8))
    return np.concatenate(images), np.concatenate(labels)


def stratified_split(labels, train_fraction, seed):
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for digit in range(10):
        idx = rng.permutation(np.where(labels == digit)[0])
        cut = int(round(len(idx) * train_fraction))
        train_idx.append(idx[:cut])
        test_idx.append(idx[cut:])
    return (rng.permutation(np.concatenate(train_idx)),
            rng.permutation(np.concatenate(test_idx)))


def write_idx_images(path, pixels):
    header = struct.pack(">IIII", IMAGE_MAGIC, pixels.shape[0], 28, 28)
    with gzip.GzipFile(path, "wb", mtime=0) as fh:
        fh.write(header + pixels.tobytes())


def write_idx_labels(path, labels):
    header = struct.pack(">II", LABEL_MAGIC, labels.shape[0])
    with gzip.GzipFile(path, "wb", mtime=0) as fh:
        fh.write(header + labels.tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--digits-dir", required=True, help="directory with 0.json .. 9.json")
    ap.add_argument("--out-dir", required=True)
    ap.add_argument("--train-fraction", type=float, default=0.8)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    pixels, labels = load_digit_jsons(args.digits_dir)
    train, test = stratified_split(labels, args.train_fraction, args.seed)

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_idx_images(out / "train-images-idx3-ubyte.gz", pixels[train])
    write_idx_labels(out / "train-labels-idx1-ubyte.gz", labels[train])
    write_idx_images(out / "test-images-idx3-ubyte.gz", pixels[test])
    write_idx_labels(out / "test-labels-idx1-ubyte.gz", labels[test])
    print(f"wrote {len(train)} train / {len(test)} test records to {out}")


if __name__ == "__main__":
    main()
