#!/usr/bin/env python3
"""Builds a 5,000-image MNIST subset in gzipped IDX format.

The images come from the `mnist_5k.csv.gz` table shipped inside the mlxtend
wheel (784 pixel columns followed by the label). The wheel is fetched with
`pip download` unless a local path is given.

    python3 tools/make_mnist_subset.py --out data/mnist5k [--wheel mlxtend.whl]
"""
import argparse
import glob
import gzip
import os
import struct
import subprocess
import tempfile
import zipfile

TABLE = "mlxtend/data/data/mnist_5k.csv.gz"


def fetch_wheel(workdir):
    subprocess.run(["pip", "download", "--no-deps", "--dest", workdir, "mlxtend==0.24.0"],
                   check=True, stdout=subprocess.DEVNULL)
    return glob.glob(os.path.join(workdir, "mlxtend-*.whl"))[0]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--wheel")
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel or fetch_wheel(tmp)
        rows = gzip.decompress(zipfile.ZipFile(wheel).read(TABLE)).decode().splitlines()

    images = bytearray()
    labels = bytearray()
    for row in rows:
        values = [int(v) for v in row.split(",")]
        assert len(values) == 785
        images.extend(values[:784])
        labels.append(values[784])

    n = len(labels)
    os.makedirs(args.out, exist_ok=True)
    # mtime=0 keeps the archives byte-reproducible.
    with open(os.path.join(args.out, "images-idx3-ubyte.gz"), "wb") as f:
        f.write(gzip.compress(struct.pack(">IIII", 0x803, n, 28, 28) + bytes(images), mtime=0))
    with open(os.path.join(args.out, "labels-idx1-ubyte.gz"), "wb") as f:
        f.write(gzip.compress(struct.pack(">II", 0x801, n) + bytes(labels), mtime=0))
    print(f"wrote {n} images to {args.out}")


if __name__ == "__main__":
    main()
