"""Factorizations G = HK of S(3,3,3,3), and why there are 457 of them."""

import math
from collections import Counter

from commsq.factorization import count_factorizations, enumerate_factorizations, operator_norm_sq
from commsq.graphs import make_star


def center_grouping(f, center_cols):
    """Sizes of the groups of center edges that share a rank-one piece."""
    sizes = []
    for h, k in f.pairs():
        hit = sum(1 for j in center_cols if h[0] and k[j])
        if hit:
            sizes.append(hit)
    return tuple(sorted(sizes, reverse=True))


def main():
    g = make_star([3, 3, 3, 3])
    G = g.adjacency
    facs = enumerate_factorizations(G)
    counts = count_factorizations(G)
    print(f"canonical factorizations (middle index up to permutation): {counts.canonical}")
    print(f"labeled factorizations:                                   {counts.labeled}")

    center_cols = [j for j in range(G.shape[1]) if G[0, j]]
    groups = Counter(center_grouping(f, center_cols) for f in facs)
    print("\nby how the four edges at the center are grouped into pieces:")
    for key in sorted(groups, key=lambda k: (len(k), k), reverse=True):
        print(f"  {key}: {groups[key]}")

    norms = Counter(round(operator_norm_sq(f.H), 6) for f in facs)
    print("\n||H||^2 over all factorizations:")
    for v in sorted(norms):
        print(f"  {v:9.6f}  x {norms[v]}")
    target = (3 + math.sqrt(5)) / 2
    print(f"\nnone equals (3 + sqrt 5)/2 = {target:.6f}: {all(abs(v - target) > 1e-6 for v in norms)}")


if __name__ == "__main__":
    main()
