#!/usr/bin/env python3
"""Builds the bundled MNIST-5k IDX files under data/mnist5k/.

The 5000-sample MNIST subset shipped inside the mlxtend wheel (BSD-3) is
fetched with `pip download`, split per class into 400 train / 100 test
samples, and written as gzip-compressed big-endian IDX files.
"""
import argparse
import glob
import gzip
import io
import os
import struct
import subprocess
import tempfile
import zipfile

import numpy as np


def write_idx_images(path, images):
    n, h, w = images.shape
    header = struct.pack(">IIII", 0x00000803, n, h, w)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    header = struct.pack(">II", 0x00000801, len(labels))
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + labels.astype(np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "mnist5k"))
    ap.add_argument("--wheel", help="path to an already downloaded mlxtend wheel")
    args = ap.parse_args()

    wheel = args.wheel
    if wheel is None:
        tmp = tempfile.mkdtemp()
        subprocess.check_call(["pip", "download", "mlxtend==0.24.0", "--no-deps", "-d", tmp])
        wheel = glob.glob(os.path.join(tmp, "mlxtend-*.whl"))[0]

    raw = gzip.decompress(zipfile.ZipFile(wheel).read("mlxtend/data/data/mnist_5k.csv.gz"))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",")
    pixels = table[:, :-1].reshape(-1, 28, 28)
    labels = table[:, -1].astype(np.int64)

    train_idx, test_idx = [], []
    for c in range(10):
        idx = np.flatnonzero(labels == c)
        train_idx.extend(idx[:400])
        test_idx.extend(idx[400:500])
    train_idx = np.array(train_idx)
    test_idx = np.array(test_idx)

    os.makedirs(args.out, exist_ok=True)
    write_idx_images(os.path.join(args.out, "train-images-idx3-ubyte.gz"), pixels[train_idx])
    write_idx_labels(os.path.join(args.out, "train-labels-idx1-ubyte.gz"), labels[train_idx])
    write_idx_images(os.path.join(args.out, "t10k-images-idx3-ubyte.gz"), pixels[test_idx])
    write_idx_labels(os.path.join(args.out, "t10k-labels-idx1-ubyte.gz"), labels[test_idx])
    print(f"wrote {len(train_idx)} train / {len(test_idx)} test samples to {args.out}")


if __name__ == "__main__":
    main()
