#!/usr/bin/env python3
"""Recompute the evaluation table from a raw feature matrix.

usage: eval_reference.py RAW_MATRIX LABELS SPLIT [THRESHOLD]

Prints `variant \t precision \t recall \t f1 \t coverage \t rmse`, one line
per single-feature model followed by `all_features`.
"""

import math
import sys

import numpy as np

FEATURES = ["pagerank", "outlink_count", "inlink_count", "in_out_ratio", "category_count",
            "subject_count", "subject_type_count", "object_count", "object_type_count", "social_score"]


def rows(path):
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if line and not line.startswith("#"):
                yield line.split("\t")


def load_raw(path):
    out = []
    for r in rows(path):
        vals = [None if v == "-" else float(v) for v in r[2:]]
        assert len(vals) == len(FEATURES)
        out.append((r[0], r[1], vals))
    return out


def normalize(raw):
    logs = [[0.0 if v is None else math.log(max(v, 1.0)) for v in vals] for _, _, vals in raw]
    den = [max(col) for col in zip(*logs)]
    return [(kb, lang, [x / d if d > 0 else 0.0 for x, d in zip(row, den)])
            for (kb, lang, _), row in zip(raw, logs)]


def representative(norm):
    # English row if the entity has one, else the row with most nonzero values
    # (ties: alphabetically first language)
    best = {}
    for kb, lang, vals in norm:
        key = (lang == "en", sum(1 for v in vals if v != 0.0), [-ord(c) for c in lang])
        if kb not in best or key > best[kb][0]:
            best[kb] = (key, vals)
    return {kb: v for kb, (_, v) in best.items()}


def fit(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm, ym = x.mean(axis=0), y.mean()
    w, *_ = np.linalg.lstsq(x - xm, y - ym, rcond=None)
    return w, ym - xm @ w


def round_half_up(v):
    return min(5, max(1, math.floor(v + 0.5)))


def metrics(pred, gold, threshold):
    tp = sum(1 for p, g in zip(pred, gold) if p >= threshold and g >= threshold)
    fp = sum(1 for p, g in zip(pred, gold) if p >= threshold and g < threshold)
    fn = sum(1 for p, g in zip(pred, gold) if p < threshold and g >= threshold)
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    rmse = math.sqrt(sum((a - b) ** 2 for a, b in zip(pred, gold)) / len(gold))
    return p, r, f1, rmse


def main(argv):
    raw = load_raw(argv[1])
    labels = {r[0]: int(r[1]) for r in rows(argv[2])}
    split = {"train": [], "test": []}
    for kb, side in rows(argv[3]):
        split[side].append(kb)
    threshold = int(argv[4]) if len(argv) > 4 else 4

    covered = {}
    for kb, _, vals in raw:
        flags = covered.setdefault(kb, [False] * len(FEATURES))
        for i, v in enumerate(vals):
            flags[i] = flags[i] or (v is not None and v != 0.0)
    n = len(covered)
    coverage = [sum(f[i] for f in covered.values()) / n for i in range(len(FEATURES))]
    coverage_any = sum(any(f) for f in covered.values()) / n

    rep = representative(normalize(raw))
    train, test = sorted(split["train"]), sorted(split["test"])
    gold = [labels[k] for k in test]
    variants = [(name, [i], coverage[i]) for i, name in enumerate(FEATURES)]
    variants.append(("all_features", list(range(len(FEATURES))), coverage_any))
    for name, cols, cov in variants:
        w, b = fit([[rep[k][c] for c in cols] for k in train], [labels[k] for k in train])
        pred = [round_half_up(b + sum(wi * rep[k][c] for wi, c in zip(w, cols))) for k in test]
        p, r, f1, rmse = metrics(pred, gold, threshold)
        print("\t".join([name] + [repr(float(v)) for v in (p, r, f1, cov, rmse)]))


if __name__ == "__main__":
    main(sys.argv)
