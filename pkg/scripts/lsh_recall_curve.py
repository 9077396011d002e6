#!/usr/bin/env python3
"""Empirical LSH candidate-recall curve vs. the banding formula.

For each similarity s, plants set pairs at that true Jaccard, indexes their
MinHash signatures, and compares the measured candidate rate to the
theoretical 1 - (1 - s^rows)^bands.

Usage:
    python3 scripts/lsh_recall_curve.py --num-perm 112 --bands 14 --rows 8
"""

import argparse

import numpy as np

from corpusprep.near_dedup import LshIndex, ShingleSet, minhash_signature


def pair_at_jaccard(rng, j: float, n: int = 400):
    """Two random uint64 sets with |A∩B| / |A∪B| == round-off of j."""
    k = int(round(2 * n * j / (1 + j)))  # overlap size so J = k/(2n-k)
    base = rng.integers(0, 2**64, size=2 * n - k, dtype=np.uint64)
    a = frozenset(base[:n].tolist())
    b = frozenset(base[n - k:].tolist())
    return ShingleSet(shingles=a, n=5), ShingleSet(shingles=b, n=5)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--num-perm", type=int, default=112)
    ap.add_argument("--bands", type=int, default=14)
    ap.add_argument("--rows", type=int, default=8)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    assert args.bands * args.rows == args.num_perm

    rng = np.random.default_rng(args.seed)
    print(f"k={args.num_perm}, b={args.bands}, r={args.rows}, "
          f"t* = (1/b)^(1/r) = {(1 / args.bands) ** (1 / args.rows):.3f}\n")
    print(f"{'jaccard':>8}  {'empirical':>9}  {'theory':>7}")
    for j in np.arange(0.3, 1.0001, 0.05):
        hits = 0
        for t in range(args.trials):
            sa, sb = pair_at_jaccard(rng, float(j))
            index = LshIndex(bands=args.bands, rows=args.rows)
            index.insert("a", minhash_signature(sa, args.num_perm, perm_seed=t))
            index.insert("b", minhash_signature(sb, args.num_perm, perm_seed=t))
            hits += ("a", "b") in set(index.candidate_pairs())
        theory = 1.0 - (1.0 - float(j) ** args.rows) ** args.bands
        print(f"{j:>8.2f}  {hits / args.trials:>9.3f}  {theory:>7.3f}")


if __name__ == "__main__":
    main()
