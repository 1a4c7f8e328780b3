#!/usr/bin/env python3
"""Convert the JapaneseVowels .ts files (sktime/aeon distribution) into the
UCI `ae` text layout read by esnt::data::load_jv.

Output:
  ae.train           270 utterance blocks, blank-line separated
  ae.test            370 utterance blocks, blank-line separated
  ae.test.counts     key-value sidecar with per-speaker test block counts

Usage:
  jv_from_ts.py JapaneseVowels_TRAIN.ts JapaneseVowels_TEST.ts OUT_DIR
"""
import itertools
import os
import sys


def read_ts(path):
    samples = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line[0] in "#@":
                continue
            *dims, label = line.split(":")
            rows = [[float(v) for v in d.split(",")] for d in dims]
            frames = list(zip(*rows))
            samples.append((int(label), frames))
    return samples


def write_ae(samples, path):
    with open(path, "w") as fh:
        for _, frames in samples:
            for frame in frames:
                fh.write(" ".join(f"{v:.6f}" for v in frame) + " \n")
            fh.write("\n")


def main():
    if len(sys.argv) != 4:
        sys.exit(__doc__)
    train = read_ts(sys.argv[1])
    test = read_ts(sys.argv[2])
    out = sys.argv[3]
    os.makedirs(out, exist_ok=True)
    for samples in (train, test):
        labels = [s[0] for s in samples]
        if labels != sorted(labels):
            sys.exit("samples are not grouped by speaker")
    write_ae(train, os.path.join(out, "ae.train"))
    write_ae(test, os.path.join(out, "ae.test"))
    with open(os.path.join(out, "ae.test.counts"), "w") as fh:
        fh.write("# utterance blocks per speaker in ae.test, in file order\n")
        for speaker, group in itertools.groupby(s[0] for s in test):
            fh.write(f"speaker{speaker} = {len(list(group))}\n")


if __name__ == "__main__":
    main()
