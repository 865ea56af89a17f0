#!/usr/bin/env python3
"""Write a small MNIST subset as gzipped IDX files.

Source is the 5000-digit CSV shipped inside the mlxtend wheel
(784 pixel columns followed by the label). Pass either the wheel or the
extracted csv(.gz). Split is stratified: per class, the first 450 digits go
to train and the last 50 to test; each split is then shuffled with a fixed
seed.
"""
import argparse
import gzip
import io
import random
import struct
import zipfile
from pathlib import Path

CSV_IN_WHEEL = "mlxtend/data/data/mnist_5k.csv.gz"


def read_rows(src: Path):
    if src.suffix == ".whl":
        raw = gzip.decompress(zipfile.ZipFile(src).read(CSV_IN_WHEEL))
    elif src.suffix == ".gz":
        raw = gzip.decompress(src.read_bytes())
    else:
        raw = src.read_bytes()
    rows = []
    for line in io.StringIO(raw.decode()):
        vals = [int(float(x)) for x in line.strip().split(",") if x]
        if len(vals) != 785:
            continue
        rows.append((bytes(vals[:784]), vals[784]))
    return rows


def write_idx(path: Path, images, labels):
    with gzip.GzipFile(path.with_suffix(".images.idx.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for img in images:
            f.write(img)
    with gzip.GzipFile(path.with_suffix(".labels.idx.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("source", type=Path)
    ap.add_argument("--out", type=Path, default=Path("data"))
    ap.add_argument("--test-per-class", type=int, default=50)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rows = read_rows(args.source)
    by_class = {}
    for img, lab in rows:
        by_class.setdefault(lab, []).append((img, lab))
    train, test = [], []
    for lab in sorted(by_class):
        items = by_class[lab]
        train += items[: len(items) - args.test_per_class]
        test += items[len(items) - args.test_per_class:]
    rng = random.Random(args.seed)
    rng.shuffle(train)
    rng.shuffle(test)

    args.out.mkdir(parents=True, exist_ok=True)
    write_idx(args.out / "mnist-train", [i for i, _ in train], [l for _, l in train])
    write_idx(args.out / "mnist-test", [i for i, _ in test], [l for _, l in test])
    print(f"train {len(train)}  test {len(test)}  -> {args.out}")


if __name__ == "__main__":
    main()
