"""Ekedahl's star product, three ways.

The presentation route instantiates the defining relations over a
symbol grid; the closed form applies when Frobenius is bijective on the
second factor; and the derived route resolves a height block by
multiplication with F^i - V^j and reads the cohomology off the band
decomposition of R * N.  They agree wherever they overlap, and the
derived route reproduces the two elementary dominoes that drive the
degree-3 asymmetry.
"""

from raynaud.blocks import make_block
from raynaud.homs import find_isomorphism
from raynaud.star import (
    derived_star,
    star_frobenius_bijective,
    star_presentation,
    star_with_R,
)


def exps_of(tower, m, n):
    L = tower.level(m, n)
    return {g: L.piece(g).pres.min_exps() for g in L.gradings() if L.piece(g).pres.min_exps()}


def main():
    p = 2
    W = make_block("UnitW", p)
    k = make_block("ResidueK", p)
    D = make_block("DAlphaP", p)
    U0 = make_block("Domino", p, t=0)
    E = make_block("Dieudonne", p, i=1, j=1)

    print("unit law: U_0 * W at (2, 6) has the normal form of U_0:")
    tower, _ = star_presentation(U0, W, 2, 6)
    print("  U_0 * W:", exps_of(tower, 2, 6))
    print("  U_0:    ", exps_of(U0.tower, 2, 6))
    print("  explicit isomorphism found:", find_isomorphism(tower, U0.tower, 2, 4) is not None)

    print("\nclosed form vs presentation for E * k (F bijective on k):")
    cf = star_frobenius_bijective(E, k)
    pres, _ = star_presentation(E, k, 3, 8)
    print("  closed form: ", exps_of(cf, 3, 8))
    print("  presentation:", exps_of(pres, 3, 8))
    L = cf.level(1, 4)
    print("  F acts nilpotently mod p:", (L.F_lift(0) % p).tolist())

    print("\nthe four-band decomposition of R * D(alpha_p) at depth 6:")
    sw = star_with_R(D, 2, 6)
    print("  band sizes:", sw["bands"])

    print("\nderived star of the height block (two elementary dominoes):")
    res = derived_star(E, D, 2, 6)
    print("  H^-1 =", res["H-1"]["identified"], " presentation:", res["H-1"]["exps"])
    print("  H^0  =", res["H0"]["identified"], " presentation:", res["H0"]["exps"])

    print("\nagainst the unit instead, the resolution is exact in degree -1:")
    resw = derived_star(E, W, 2, 6)
    print("  H^-1 =", resw["H-1"]["identified"], "  H^0 =", resw["H0"]["identified"])


if __name__ == "__main__":
    main()
