"""Multiplication maps K x L -> M on regular triples, raw and up to Aut(M)."""

from commsq.fusion import Triple, builtin_ring, find_multiplication_maps, fusion_graph, regular_bimodule


def main():
    for name in ("Z2", "Z3", "Z4", "fib", "su2_2"):
        M = regular_bimodule(builtin_ring(name))
        t = Triple(M, M, M)
        maps = find_multiplication_maps(t)
        raw = find_multiplication_maps(t, modulo_automorphisms=False)
        literal = find_multiplication_maps(t, literal_d=True)
        print(f"{name:6} maps {len(maps)}  raw {len(raw)}  with (d) as printed {len(literal)}")
    fib = regular_bimodule(builtin_ring("fib"))
    t = Triple(fib, fib, fib)
    m = find_multiplication_maps(t)[0]
    print("\nFibonacci products:", m.to_json(t)["products"])
    g = fusion_graph(builtin_ring("su2_4"), "f1")
    print("su2_4 fusion graph of f1:")
    print(g.adjacency)


if __name__ == "__main__":
    main()
