"""Witt vectors in coordinates, against the integer model.

W_m(F_p) is Z/p^m in disguise: the bijection sends n to n * (1, 0, ...)
by repeated Witt addition. This script builds the table for W_3(F_2),
prints a few landmark elements, and shows the operators F, V and the
Teichmüller lift doing their thing.
"""

from raynaud.witt import (
    GaloisRing,
    WittRing,
    frobenius,
    teichmuller,
    valuation,
    verschiebung,
    witt_add,
    witt_mul,
)


def coords(x):
    return tuple(c.coords[0] for c in x.components)


def main():
    p, m = 2, 3
    ring = WittRing(p, 1, m)
    table = [ring.zero()]
    for _ in range(p**m - 1):
        table.append(witt_add(table[-1], ring.one()))

    print(f"W_{m}(F_{p}) as Z/{p**m}: integer -> Witt coordinates")
    for n, x in enumerate(table):
        print(f"  {n} -> {coords(x)}")

    two = table[2]
    print("\n2 + 2 =", coords(witt_add(two, two)), "(= 4)")
    print("2 * 2 =", coords(witt_mul(two, two)), "(= 4)")
    print("V(1)  =", coords(verschiebung(ring.one())), "(= 2: V is multiplication by p here)")
    print("val(4) =", valuation(table[4]))

    # the Galois-ring route computes the same ring
    gr = GaloisRing(p, 1, m)
    assert all(gr.from_witt(x)[0] == n for n, x in enumerate(table))
    print("\nGalois-ring digits agree with the table for all", p**m, "elements")

    # a genuinely twisted example: W_3(F_4) with its Frobenius
    ring4 = WittRing(2, 2, 3)
    w = ring4.field.gen()
    t = teichmuller(w, 3)
    print("\nIn W_3(F_4): sigma[w] = [w^2]:", frobenius(t) == teichmuller(w * w, 3))
    print("F(V(x)) = 2x for x = [w]:", frobenius(verschiebung(t)) == witt_mul(ring4.from_int(2), t))


if __name__ == "__main__":
    main()
