"""Hom spaces, isomorphism search, and cones at finite truncation.

A morphism of towers is a compatible family of level maps commuting
with V, d and with F across levels.  Solving at a single level keeps
phantom solutions that do not lift up the tower (e.g. the socle maps
k -> W_m), so `hom_space` solves a chain system over several levels and
reports the span of the bottom component; the answer is accepted when
two consecutive chain lengths agree.
"""

from __future__ import annotations

import numpy as np

from .linalg import Pres, ZMod, kernel_gens, quotient_by, subquotient
from .rmod import Level, Tower, Unstable, _same_span


class ShiftDepth(Tower):
    """The same tower read at depth n + offset (for level-offset matching)."""

    def __init__(self, inner: Tower, offset: int):
        super().__init__(inner.p, inner.r)
        self.inner = inner
        self.offset = offset

    def gradings(self):
        return self.inner.gradings()

    def _build(self, m, n):
        return self.inner.level(m, n + self.offset)

    def proj(self, i, hi, lo):
        (mh, nh), (ml, nl) = hi, lo
        return self.inner.proj(i, (mh, nh + self.offset), (ml, nl + self.offset))

    def scalar_matrix(self, i, a, m, n):
        return self.inner.scalar_matrix(i, a, m, n + self.offset)


class GradingShift(Tower):
    """inner(a): grading g here is the inner grading g + a."""

    def __init__(self, inner: Tower, a: int):
        super().__init__(inner.p, inner.r)
        self.inner = inner
        self.a = a

    def gradings(self):
        return sorted(g - self.a for g in self.inner.gradings())

    def _build(self, m, n):
        L = self.inner.level(m, n)
        pieces = {g - self.a: L.piece(g) for g in L.pieces}
        V = {g - self.a: mat for g, mat in L.opV.items()}
        d = {g - self.a: mat for g, mat in L.opd.items()}
        F = {g - self.a: mat for g, mat in L.opF.items()}
        return Level(L.R, n, pieces, V, d, F, r=self.r)

    def proj(self, i, hi, lo):
        return self.inner.proj(i + self.a, hi, lo)

    def scalar_matrix(self, i, a, m, n):
        return self.inner.scalar_matrix(i + self.a, a, m, n)


class HomResult:
    def __init__(self, exps, stable, basis, base_level):
        self.exps = exps  # annihilator exponents of the hom module
        self.stable = stable
        self.basis = basis  # list of dict grading -> matrix at base level
        self.base_level = base_level

    def dim_k(self):
        if any(e != 1 for e in self.exps):
            raise ValueError("hom space is not a k-vector space")
        return len(self.exps)

    def rank_and_torsion(self, precision):
        free = sum(1 for e in self.exps if e >= precision)
        tors = sorted(e for e in self.exps if 0 < e < precision)
        return free, tors

    def __repr__(self):
        return f"<HomResult exps={self.exps} stable={self.stable}>"


def _phi_ambient(src: Tower, dst: Tower, m, n) -> Pres:
    """Ambient module of level maps, modulo maps into the relations."""
    R = ZMod(src.p, m)
    gradings = sorted(set(src.gradings()) | set(dst.gradings()))
    Ls, Ld = src.level(m, n), dst.level(m, n)
    total = sum(Ls.piece(i).ngens * Ld.piece(i).ngens for i in gradings)
    cols = []
    off = 0
    for i in gradings:
        ns, nd = Ls.piece(i).ngens, Ld.piece(i).ngens
        rels = Ld.piece(i).pres.rels
        for c in range(ns):
            for rc in range(rels.shape[1]):
                v = np.zeros(total, dtype=np.int64)
                v[off + c * nd : off + (c + 1) * nd] = rels[:, rc]
                cols.append(v)
        off += ns * nd
    Z = np.stack(cols, axis=1) % R.q if cols else R.zeros(total, 0)
    return Pres(R, total, Z)


def _chain_levels(m, n, length, m_cap_extra=2):
    """Chain levels (m + min(c, cap), n + c), c = 0..length-1."""
    return [(m + min(c, m_cap_extra), n + c) for c in range(length)]


def _step_maps(tower: Tower, i, hi, lo):
    """(F, proj) from chain level hi down to chain level lo (one step)."""
    (mh, nh), (ml, nl) = hi, lo
    q = tower.p**ml
    F1 = tower.F_true(i, mh, nh)  # -> (mh, nh - 1)
    PF = tower.proj(i, (mh, nh - 1), (ml, nl))
    P = tower.proj(i, (mh, nh), (ml, nl))
    return (PF @ F1) % q, P


def _chain_solutions(src: Tower, dst: Tower, m, n, length, scalar):
    """Solve the chain system; return (exps, phi^(0) generators, ambient)."""
    gradings = sorted(set(src.gradings()) | set(dst.gradings()))
    levels = _chain_levels(m, n, length)
    Mbig = max(mc for mc, _ in levels)
    RB = ZMod(src.p, Mbig)
    p = src.p

    offsets = {}
    lattice = []
    total = 0
    for c, (mc, nc) in enumerate(levels):
        Ls, Ld = src.level(mc, nc), dst.level(mc, nc)
        for i in gradings:
            ns, nd = Ls.piece(i).ngens, Ld.piece(i).ngens
            offsets[(c, i)] = (total, nd, ns)
            lattice.extend([mc] * (nd * ns))  # phi^(c) entries live mod p^mc
            total += nd * ns

    rows = []

    def kron_block(A, B):
        return np.kron(B.T.astype(np.int64), A.astype(np.int64)) % RB.q

    def add_equation(parts, target: Pres, mc):
        """sum_parts A phi B == 0 mod rels(target), target at precision mc."""
        if target.ngens == 0 or not parts:
            return
        width = parts[0][1].shape[0]
        E = np.zeros((width, total), dtype=np.int64)
        for off, C in parts:
            E[:, off : off + C.shape[1]] = (E[:, off : off + C.shape[1]] + C) % RB.q
        exps, P = target.normal_form()
        ncopies = width // target.ngens
        bigP = np.kron(np.eye(ncopies, dtype=np.int64), P % RB.q)
        E = (bigP @ E) % RB.q
        scale = np.array(
            [p ** (Mbig - min(e, mc)) for _ in range(ncopies) for e in exps], dtype=np.int64
        )
        E = (E * scale[:, None]) % RB.q
        keep = E.any(axis=1)
        if keep.any():
            rows.append(E[keep])

    for c, (mc, nc) in enumerate(levels):
        Ls, Ld = src.level(mc, nc), dst.level(mc, nc)
        for i in gradings:
            off, nd, ns = offsets[(c, i)]
            if ns == 0 or nd == 0:
                continue
            tgt = Ld.piece(i).pres
            rels = Ls.piece(i).pres.rels
            if rels.shape[1]:
                add_equation([(off, kron_block(np.eye(nd, dtype=np.int64), rels))], tgt, mc)
            # V-commutation: phi V_src - V_dst phi = 0
            add_equation(
                [
                    (off, kron_block(np.eye(nd, dtype=np.int64), Ls.V(i))),
                    (off, (-kron_block(Ld.V(i), np.eye(ns, dtype=np.int64))) % RB.q),
                ],
                tgt,
                mc,
            )
            # d-commutation into grading i + 1
            tgt_d = Ld.piece(i + 1).pres
            nd1 = Ld.piece(i + 1).ngens
            if tgt_d.ngens and nd1:
                parts = [(off, (-kron_block(Ld.d(i), np.eye(ns, dtype=np.int64))) % RB.q)]
                off1, nd_up, ns_up = offsets[(c, i + 1)]
                if nd_up and ns_up:
                    parts.append((off1, kron_block(np.eye(nd1, dtype=np.int64), Ls.d(i))))
                add_equation(parts, tgt_d, mc)
            if scalar is not None and src.r > 1:
                Msrc = src.scalar_matrix(i, scalar, mc, nc)
                Mdst = dst.scalar_matrix(i, scalar, mc, nc)
                add_equation(
                    [
                        (off, kron_block(np.eye(nd, dtype=np.int64), Msrc)),
                        (off, (-kron_block(Mdst, np.eye(ns, dtype=np.int64))) % RB.q),
                    ],
                    tgt,
                    mc,
                )
        if c >= 1:
            ml, nl = levels[c - 1]
            Ldl, Lsl = dst.level(ml, nl), src.level(ml, nl)
            for i in gradings:
                off_hi, nd_hi, ns_hi = offsets[(c, i)]
                off_lo, nd_lo, ns_lo = offsets[(c - 1, i)]
                tgt = Ldl.piece(i).pres
                if tgt.ngens == 0 or ns_hi == 0:
                    continue
                Fs, Ps = _step_maps(src, i, levels[c], levels[c - 1])
                Fd, Pd = _step_maps(dst, i, levels[c], levels[c - 1])
                # F phi^(c) = phi^(c-1) F  and  proj phi^(c) = phi^(c-1) proj
                parts_f = [(off_hi, (-kron_block(Fd, np.eye(ns_hi, dtype=np.int64))) % RB.q)]
                parts_p = [(off_hi, (-kron_block(Pd, np.eye(ns_hi, dtype=np.int64))) % RB.q)]
                if nd_lo and ns_lo:
                    parts_f.append((off_lo, kron_block(np.eye(nd_lo, dtype=np.int64), Fs)))
                    parts_p.append((off_lo, kron_block(np.eye(nd_lo, dtype=np.int64), Ps)))
                add_equation(parts_f, tgt, ml)
                add_equation(parts_p, tgt, ml)

    if rows:
        big = np.concatenate(rows, axis=0) % RB.q
        G = kernel_gens(big, RB, src_exps=lattice)
    else:
        G = np.diag([p**e for e in lattice]).astype(np.int64) if lattice else RB.zeros(0, 0)
        G = np.concatenate([RB.eye(total), G], axis=1) if total else G
    bottom = sum(offsets[(0, i)][1] * offsets[(0, i)][2] for i in gradings)
    R0 = ZMod(p, m)
    G0 = (G[:bottom, :] % R0.q) if G.size else R0.zeros(bottom, 0)
    amb = _phi_ambient(src, dst, m, n)
    S, _ = subquotient(amb, G0, amb.rels)
    return S.min_exps(), G0, amb, G, offsets, levels


def formal_hom(X, Y, m: int, n: int, max_chain: int = 5):
    """Hom space between two formal objects concentrated in one
    cohomological degree; zero when the degrees differ."""
    degs_x, degs_y = X.degrees(), Y.degrees()
    if len(degs_x) > 1 or len(degs_y) > 1:
        raise ValueError("objects must be concentrated in one cohomological degree")
    if degs_x and degs_y and degs_x != degs_y:
        return HomResult([], True, [], (m, n))
    return hom_space(X.module_tower(), Y.module_tower(), m, n, max_chain=max_chain)


def hom_space(src: Tower, dst: Tower, m: int, n: int, max_chain: int = 5, scalar=None):
    """Tower homs src -> dst reported at level (m, n).

    Returns a HomResult whose exps describe Hom as a Z/p^m-module;
    raises Unstable if chain lengths up to `max_chain` do not agree.
    """
    prev = None
    for length in range(2, max_chain + 1):
        exps, G0, amb = _chain_solutions(src, dst, m, n, length, scalar)[:3]
        if prev is not None and prev[0] == exps and _same_span(prev[1], G0, amb):
            basis = _unpack_basis(G0, src, dst, m, n)
            return HomResult(exps, True, basis, (m, n))
        prev = (exps, G0)
    raise Unstable(f"hom space did not stabilize with chain length <= {max_chain}")


def _unpack_basis(G0, src, dst, m, n):
    """Solution columns as per-grading matrices, dropping maps whose
    image lies in the destination relations (the zero homs)."""
    gradings = sorted(set(src.gradings()) | set(dst.gradings()))
    Ls, Ld = src.level(m, n), dst.level(m, n)
    q = src.p**m
    basis = []
    for col in range(G0.shape[1]):
        mats = {}
        off = 0
        nonzero = False
        for i in gradings:
            ns, nd = Ls.piece(i).ngens, Ld.piece(i).ngens
            blockv = G0[off : off + ns * nd, col]
            mats[i] = blockv.reshape(ns, nd).T % q
            if mats[i].size:
                span = Ld.piece(i).pres.rel_span()
                if any(not span.contains(mats[i][:, c]) for c in range(ns)):
                    nonzero = True
            off += ns * nd
        if nonzero:
            basis.append(mats)
    return basis


def is_isomorphism_at(phi, src: Tower, dst: Tower, m, n) -> bool:
    """phi (dict grading -> matrix) is invertible at level (m, n)."""
    Ls, Ld = src.level(m, n), dst.level(m, n)
    for i in sorted(set(src.gradings()) | set(dst.gradings())):
        ps, pd = Ls.piece(i).pres, Ld.piece(i).pres
        if ps.min_exps() != pd.min_exps():
            return False
        if ps.ngens == 0:
            continue
        A = phi.get(i)
        if A is None or A.shape != (pd.ngens, ps.ngens):
            return False
        C = quotient_by(pd, A)
        if not C.is_zero():
            return False
    return True


def find_isomorphism(src: Tower, dst: Tower, m, n, rng=None, tries=40):
    """A tower hom invertible at both levels of a length-2 chain, or None.

    Phantom homs are harmless here: any solution that is invertible at
    (m, n) and whose chain partner is invertible at the level above is
    an isomorphism of the truncations in the tower sense.
    """
    exps, G0, amb, G, offsets, levels = _chain_solutions(src, dst, m, n, 2, None)
    if not G.size or not G.any():
        return None
    if rng is None:
        rng = np.random.default_rng(0)
    Mbig = max(mc for mc, _ in levels)
    qb = src.p**Mbig
    ncand = G.shape[1]
    vectors = [G[:, c] for c in range(ncand)]
    for _ in range(tries):
        coeffs = rng.integers(0, qb, size=ncand)
        vectors.append((G @ coeffs) % qb)
    gradings = sorted(set(src.gradings()) | set(dst.gradings()))
    for vec in vectors:
        phis = []
        good = True
        for c, (mc, nc) in enumerate(levels):
            qc = src.p**mc
            Ls, Ld = src.level(mc, nc), dst.level(mc, nc)
            mats = {}
            for i in gradings:
                off, nd, ns = offsets[(c, i)]
                mats[i] = vec[off : off + nd * ns].reshape(ns, nd).T % qc
            if not is_isomorphism_at(mats, ShiftDepth(src, nc - n), ShiftDepth(dst, nc - n), mc, n):
                good = False
                break
            phis.append(mats)
        if good:
            return phis[0]
    return None


def identify_block(model: Tower, candidates, m, n, offsets=(0, -1, 1, -2, 2)):
    """Match a computed tower against candidate blocks up to a depth offset.

    candidates: list of (name, tower).  Returns (name, offset, phi) for
    the first candidate isomorphic to the model at matched levels, or
    None.  Dimension fingerprints cut the search before any hom solve.
    """
    for name, tower in candidates:
        for off in offsets:
            if n + off < 2:
                continue
            shifted = ShiftDepth(tower, off)
            ok = True
            for k in (0, 1):
                Lm = model.level(m + k, n + k)
                Lc = shifted.level(m + k, n + k)
                keys = set(model.gradings()) | set(tower.gradings())
                if any(
                    Lm.piece(i).pres.min_exps() != Lc.piece(i).pres.min_exps() for i in keys
                ):
                    ok = False
                    break
            if not ok:
                continue
            phi = find_isomorphism(shifted, model, m, n)
            if phi is not None:
                return name, off, phi
    return None


class QuotientTower(Tower):
    """A tower modulo a compatible family of extra relation columns.

    extra(m, n) returns {grading: columns}; the span must be stable
    under V, d and mapped into the lower span by F (true for the image
    of any tower hom), so the inherited operator matrices descend.
    """

    def __init__(self, inner: Tower, extra):
        super().__init__(inner.p, inner.r)
        self.inner = inner
        self.extra = extra

    def gradings(self):
        return self.inner.gradings()

    def _build(self, m, n):
        L = self.inner.level(m, n)
        pieces = {}
        for i, pc in L.pieces.items():
            add = self.extra(m, n).get(i)
            if add is None or add.size == 0:
                pieces[i] = pc
            else:
                rels = np.concatenate([pc.pres.rels, add % L.R.q], axis=1)
                pieces[i] = type(pc)(pc.labels, Pres(L.R, pc.ngens, rels))
        return Level(L.R, n, pieces, dict(L.opV), dict(L.opd), dict(L.opF), r=L.r)

    def proj(self, i, hi, lo):
        return self.inner.proj(i, hi, lo)

    def scalar_matrix(self, i, a, m, n):
        return self.inner.scalar_matrix(i, a, m, n)


def canonical_map_k_to_domino(p, lam, m, n, r=1):
    """The hom k(-1) -> U_{-1} with parameter lam, as level matrices.

    The image of 1 is lam * (dV^{-1} + dV^0 + dV^1 + ...): over F_p the
    compatibility lambda_j = lambda_{j+1}^p forces equal coefficients.
    """
    if r != 1:
        raise NotImplementedError("canonical extension maps are implemented for r = 1")
    from .blocks import DominoTower

    tower = DominoTower(p, -1)
    L = tower.level(m, n)
    nu = L.piece(1).ngens
    q = p**m
    col = np.full((nu, 1), lam % q, dtype=np.int64)
    return {1: col % q}


def cone_or_extension(p, lam, m=3, n=8, r=1):
    """Cone of the map k(-1) -> U_{-1} with class lam.

    lam a unit: the cone is U_0 (explicit isomorphism of truncations is
    returned).  lam = 0: the split sum U_{-1} + k(-1)[1], returned as a
    formal object.
    """
    from .blocks import DominoTower, make_block
    from .formal import FormalObject

    lam = int(lam) % p
    if lam == 0:
        return {"kind": "split", "object": _split_object(p, r)}
    um1 = DominoTower(p, -1, r)

    def extra(mm, nn):
        return {i: mat for i, mat in canonical_map_k_to_domino(p, lam, mm, nn, r).items()}

    cone = QuotientTower(um1, extra)
    # the map is injective on k (pro-stably), so the cone is the cokernel
    u0 = make_block("Domino", p, r, t=0)
    ident = identify_block(cone, [("U_0", u0.tower)], min(m, 3), min(n, 6))
    return {
        "kind": "U_0",
        "lam": lam,
        "cone_tower": cone,
        "identification": ident,
        "block": u0 if ident else None,
    }


def _split_object(p, r):
    from .blocks import make_block
    from .formal import FormalObject

    um1 = make_block("Domino", p, r, t=-1)
    kblk = make_block("ResidueK", p, r)
    return FormalObject.of_blocks(p, r, (um1, 0, 0), (kblk, -1, 1))
