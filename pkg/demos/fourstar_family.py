"""The one-parameter family on S(i,i,j,j) and the index table it fills in."""

import math

import numpy as np

from commsq.connection import verify
from commsq.fourstar import family_connection, family_point, fourstar_constants, index_table


def main():
    c = fourstar_constants(2, 3)
    print(f"S(2,2,3,3): alpha = ({c.alpha1:.6f}, {c.alpha2:.6f}, {c.alpha3:.6f}), "
          f"beta = {c.beta:.6f}, xi = {c.xi:.6f}")
    print("    s        t(s)      first row of the central block          |4th row|")
    for s in np.linspace(0, 2 * np.pi, 6, endpoint=False):
        p = family_point(c, float(s))
        row = " ".join(f"{x.real:+.4f}" for x in p.block[0])
        mods = " ".join(f"{x:.4f}" for x in np.abs(p.block[3]))
        print(f"  {s:5.3f}  {p.t:+8.5f}   {row}   {mods}")
    rep = verify(family_connection(2, 3, 1.0), 1e-10)
    print(f"full connection at s = 1: passes {rep.passed}, "
          f"residual {max(rep.max_unitarity_residual_u, rep.max_unitarity_residual_v):.1e}")

    tab = index_table(4, 4, limits=True)
    print("\nnorm^2 of S(i,i,j,j) (rows j, columns i; inf uses arm length 60)")
    for j in [1, 2, 3, 4, math.inf]:
        cells = [f"{tab[(i, j)]:.5f}" if (i, j) in tab else "" for i in [1, 2, 3, 4, math.inf]]
        print(f"  {str(j):>4}  " + "  ".join(f"{x:>8}" for x in cells))


if __name__ == "__main__":
    main()
