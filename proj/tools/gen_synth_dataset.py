#!/usr/bin/env python3
"""Regenerates data/synth_multiclass.csv.

Five Gaussian blobs in 50 dimensions, 400 samples each. The class means are
close enough that the classes overlap and the logistic fit stays bounded
without relying on the L2 term alone. Deterministic: fixed seed, fixed
formatting, so the file is stable across regenerations.
"""
import math
import random

N_PER_CLASS = 400
N_FEATURES = 50
N_CLASSES = 5
SEED = 20240817


def main() -> None:
    rng = random.Random(SEED)
    means = [[rng.gauss(0.0, 1.0) for _ in range(N_FEATURES)] for _ in range(N_CLASSES)]
    # Normalize mean separation so classes overlap but are learnable.
    for m in means:
        norm = math.sqrt(sum(v * v for v in m))
        for j in range(N_FEATURES):
            m[j] *= 1.5 / norm

    rows = []
    for c in range(N_CLASSES):
        for _ in range(N_PER_CLASS):
            x = [means[c][j] + rng.gauss(0.0, 1.0) for j in range(N_FEATURES)]
            rows.append((x, c))
    rng.shuffle(rows)

    with open("data/synth_multiclass.csv", "w") as out:
        out.write(",".join(f"f{j}" for j in range(N_FEATURES)) + ",label\n")
        for x, c in rows:
            out.write(",".join(f"{v:.6f}" for v in x) + f",{c}\n")


if __name__ == "__main__":
    main()
