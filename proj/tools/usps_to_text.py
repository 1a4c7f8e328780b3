#!/usr/bin/env python3
"""Convert a USPS digits distribution into the one-image-per-line text format.

Accepted inputs:
  usps.h5             HDF5 with train/{data,target} and test/{data,target}
  usps, usps.bz2      libsvm format, labels 1..10 (10 is digit 0)
  usps.t, usps.t.bz2  same, test part

Several inputs may be given; their images are concatenated (the loader does
its own per-seed train/test split).
"""

import argparse
import bz2
import sys

import numpy as np


def read_h5(path):
    import h5py

    images, labels = [], []
    with h5py.File(path, "r") as f:
        for part in ("train", "test"):
            if part in f:
                images.append(np.asarray(f[part]["data"], dtype=float).reshape(-1, 256))
                labels.append(np.asarray(f[part]["target"], dtype=int).ravel())
    return np.concatenate(images), np.concatenate(labels)


def read_libsvm(path):
    opener = bz2.open if path.endswith(".bz2") else open
    images, labels = [], []
    with opener(path, "rt") as f:
        for line_no, line in enumerate(f, 1):
            parts = line.split()
            if not parts:
                continue
            label = int(float(parts[0]))
            row = np.zeros(256)
            for item in parts[1:]:
                idx, val = item.split(":")
                idx = int(idx)
                if not 1 <= idx <= 256:
                    sys.exit(f"{path}:{line_no}: feature index {idx} out of range")
                row[idx - 1] = float(val)
            images.append(row)
            labels.append(label)
    labels = np.asarray(labels)
    # libsvm numbers the classes 1..10 for digits 0..9.
    if labels.min() >= 1 and labels.max() == 10:
        labels = labels - 1
    return np.asarray(images), labels


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("inputs", nargs="+")
    ap.add_argument("-o", "--out", required=True)
    args = ap.parse_args()

    all_images, all_labels = [], []
    for path in args.inputs:
        images, labels = read_h5(path) if path.endswith((".h5", ".hdf5")) else read_libsvm(path)
        all_images.append(images)
        all_labels.append(labels)
    images = np.concatenate(all_images)
    labels = np.concatenate(all_labels)
    if images.shape[1] != 256 or labels.min() < 0 or labels.max() > 9:
        sys.exit("unexpected image size or labels outside 0-9")

    with open(args.out, "w") as f:
        f.write("# USPS: label then 256 pixels, row-major 16x16\n")
        for img, y in zip(images, labels):
            f.write(f"{int(y)} " + " ".join(f"{v:.6g}" for v in img) + "\n")
    counts = np.bincount(labels, minlength=10)
    print(f"wrote {len(labels)} images to {args.out}; per digit: {counts.tolist()}")


if __name__ == "__main__":
    main()
