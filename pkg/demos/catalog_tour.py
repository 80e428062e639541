"""Build the four catalog connections and print what makes each one valid."""

import time

from commsq import catalog
from commsq.connection import block_layout, verify
from commsq.graphs import spectral, wenzl_bound


def main():
    for name in catalog.CATALOG_NAMES:
        t0 = time.perf_counter()
        entry = catalog.catalog_entry(name)
        rep = verify(entry.connection, 1e-10)
        shape = entry.shape
        hist = block_layout(shape, "u").size_histogram()
        print(f"{name}")
        print(f"  index ||G||^2          {spectral(shape.graph('G')).norm_sq:.12f}")
        print(f"  u block sizes          {hist}")
        print(f"  unitarity (u, v)       {rep.max_unitarity_residual_u:.1e}, {rep.max_unitarity_residual_v:.1e}")
        print(f"  completed over         {entry.connection.meta.get('field')}")
        print(f"  Wenzl bound rows/cols  {wenzl_bound(shape.G, shape.L)}/{wenzl_bound(shape.G, shape.L, True)}")
        if entry.identities:
            print(f"  worst identity         {entry.max_identity_residual():.1e} over {len(entry.identities)}")
        print(f"  built in               {time.perf_counter() - t0:.2f} s")

    t0 = catalog.large_broom_t0()
    print("\nlarge broom along s + t = t0")
    for s in (0.0, 0.4, 1.7):
        ids = catalog.large_broom_identities(s)
        worst = max(abs(v) for k, v in ids.items() if k[0] in "FG")
        print(f"  s = {s:.1f}  t = {t0 - s:.4f}  max |F|, |G| = {worst:.1e}")


if __name__ == "__main__":
    main()
