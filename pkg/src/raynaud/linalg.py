"""Exact linear algebra over the local ring Z/p^m.

Everything the graded-module kernel needs reduces to a handful of
primitives over Z/p^m: Smith normal form with unimodular transforms,
kernels of matrices between modules with prescribed coordinate
annihilators, membership tests, presentations of spans and quotients,
and a division-free characteristic polynomial.

Matrices are numpy int64 arrays with entries reduced into [0, p^m).
Entries stay below p^m <= 7^8, so int64 products never overflow.
"""

from __future__ import annotations

import numpy as np

_INT64_SAFE = 2**62


class ZMod:
    """The coefficient ring Z/p^m, p prime, with p-adic valuations."""

    __slots__ = ("p", "m", "q")

    def __init__(self, p: int, m: int):
        if p < 2 or m < 1:
            raise ValueError("need a prime p >= 2 and precision m >= 1")
        self.p = p
        self.m = m
        self.q = p**m
        if self.q * self.q >= _INT64_SAFE:
            raise ValueError(f"p^m = {self.q} too large for exact int64 arithmetic")

    def val(self, x: int) -> int:
        """p-adic valuation of x mod p^m; the valuation of 0 is m."""
        x = int(x) % self.q
        if x == 0:
            return self.m
        v = 0
        while x % self.p == 0:
            x //= self.p
            v += 1
        return v

    def inv_unit(self, u: int) -> int:
        u = int(u) % self.q
        if u % self.p == 0:
            raise ZeroDivisionError(f"{u} is not a unit mod {self.p}^{self.m}")
        return pow(u, -1, self.q)

    def reduce(self, A) -> np.ndarray:
        return np.asarray(A, dtype=np.int64) % self.q

    def zeros(self, rows: int, cols: int) -> np.ndarray:
        return np.zeros((rows, cols), dtype=np.int64)

    def eye(self, n: int) -> np.ndarray:
        return np.eye(n, dtype=np.int64)

    def __repr__(self):
        return f"ZMod({self.p}, {self.m})"

    def __eq__(self, other):
        return isinstance(other, ZMod) and (self.p, self.m) == (other.p, other.m)

    def __hash__(self):
        return hash((self.p, self.m))


def smith_normal_form(A, R: ZMod):
    """Return (U, V, exps) with U @ A @ V = diag(p^exps) mod p^m.

    U and V are invertible over Z/p^m and exps is ascending, so the
    diagonal forms a divisibility chain.  An exponent equal to R.m
    means the diagonal entry is 0 in Z/p^m.

    Pivots are chosen layer by layer in the valuation: once every
    valuation-e entry of the remaining submatrix is exhausted, none can
    reappear, so the search per step is a single vectorized pass.
    """
    D = R.reduce(A).copy()
    rows, cols = D.shape
    U = R.eye(rows)
    V = R.eye(cols)
    q = R.q
    k = min(rows, cols)
    exps = []
    t = 0
    for e in range(R.m):
        pe = R.p**e
        while t < k:
            sub = D[t:, t:]
            if e == 0:
                cand = sub % R.p
            else:
                cand = np.where(sub % pe == 0, (sub // pe) % R.p, 0)
            flat = int(np.argmax(cand != 0))
            if not cand.flat[flat]:
                break
            pi, pj = divmod(flat, sub.shape[1])
            pi += t
            pj += t
            if pi != t:
                D[[t, pi]] = D[[pi, t]]
                U[[t, pi]] = U[[pi, t]]
            if pj != t:
                D[:, [t, pj]] = D[:, [pj, t]]
                V[:, [t, pj]] = V[:, [pj, t]]
            u = R.inv_unit(D[t, t] // pe)
            D[t] = (D[t] * u) % q
            U[t] = (U[t] * u) % q
            col = D[t + 1 :, t]
            if col.any():
                c = (col // pe) % q
                D[t + 1 :] = (D[t + 1 :] - c[:, None] * D[t]) % q
                U[t + 1 :] = (U[t + 1 :] - c[:, None] * U[t]) % q
            row = D[t, t + 1 :]
            if row.any():
                c = (row // pe) % q
                D[:, t + 1 :] = (D[:, t + 1 :] - D[:, [t]] * c[None, :]) % q
                V[:, t + 1 :] = (V[:, t + 1 :] - V[:, [t]] * c[None, :]) % q
            exps.append(e)
            t += 1
        if t >= k or not D[t:, t:].any():
            break
    while len(exps) < k:
        exps.append(R.m)
    return U, V, exps


def invert_unimodular(U, R: ZMod) -> np.ndarray:
    """Inverse of a matrix invertible over Z/p^m (Gauss-Jordan).

    Every pivot of an invertible matrix over the local ring can be
    chosen to be a unit, so a single elimination sweep suffices.
    """
    n = U.shape[0]
    q = R.q
    A = R.reduce(U).copy()
    B = R.eye(n)
    for t in range(n):
        col = A[t:, t] % R.p
        rel = int(np.argmax(col != 0))
        if not col[rel]:
            raise ZeroDivisionError("matrix is not invertible over Z/p^m")
        piv = rel + t
        if piv != t:
            A[[t, piv]] = A[[piv, t]]
            B[[t, piv]] = B[[piv, t]]
        inv = R.inv_unit(A[t, t])
        A[t] = (A[t] * inv) % q
        B[t] = (B[t] * inv) % q
        other = [i for i in range(n) if i != t and A[i, t]]
        if other:
            c = A[other, t][:, None]
            A[other] = (A[other] - c * A[t]) % q
            B[other] = (B[other] - c * B[t]) % q
    return B


def kernel_gens(A, R: ZMod, dst_exps=None, src_exps=None) -> np.ndarray:
    """Generators (columns) of {x : A x = 0 in prod Z/p^dst_exps[i]},
    where source coordinate j is understood mod p^src_exps[j].

    With both exps omitted this is the plain kernel over Z/p^m.
    """
    A = R.reduce(A)
    rows, cols = A.shape
    if rows == 0:
        B = A
    elif dst_exps is None:
        B = A
    else:
        scale = np.array([R.p ** (R.m - min(e, R.m)) for e in dst_exps], dtype=np.int64)
        B = (A * scale[:, None]) % R.q
    gens = []
    if rows == 0 or not B.any():
        gens.append(R.eye(cols))
    else:
        U, V, exps = smith_normal_form(B, R)
        r = len(exps)
        cols_list = []
        for t in range(r):
            if exps[t] == 0:
                continue
            cols_list.append((V[:, t] * (R.p ** (R.m - exps[t]))) % R.q)
        for t in range(r, cols):
            cols_list.append(V[:, t])
        if cols_list:
            gens.append(np.stack(cols_list, axis=1))
    if src_exps is not None:
        lat = np.diag([R.p ** min(e, R.m) for e in src_exps]).astype(np.int64) % R.q
        gens.append(lat)
    if not gens:
        return R.zeros(cols, 0)
    G = np.concatenate(gens, axis=1) % R.q
    return G[:, G.any(axis=0)] if G.size else G


class LinearSolver:
    """Cached Smith transforms for solving A x = b repeatedly."""

    def __init__(self, A, R: ZMod, dst_exps=None):
        self.R = R
        A = R.reduce(A)
        if dst_exps is not None:
            self._scale = np.array(
                [R.p ** (R.m - min(e, R.m)) for e in dst_exps], dtype=np.int64
            )
            A = (A * self._scale[:, None]) % R.q
        else:
            self._scale = None
        self.shape = A.shape
        self.U, self.V, self.exps = smith_normal_form(A, R)

    def solve(self, b):
        R = self.R
        b = R.reduce(b).reshape(-1)
        if self._scale is not None:
            b = (b * self._scale) % R.q
        c = (self.U @ b) % R.q
        r = len(self.exps)
        y = np.zeros(self.shape[1], dtype=np.int64)
        for t in range(self.shape[0]):
            if t >= r or self.exps[t] >= R.m:
                if t < len(c) and c[t] % R.q != 0:
                    return None
                continue
            pe = R.p ** self.exps[t]
            if c[t] % pe != 0:
                return None
            y[t] = c[t] // pe
        return (self.V @ y) % R.q


def solve(A, b, R: ZMod, dst_exps=None):
    """One solution x of A x = b (mod the target lattice), or None."""
    return LinearSolver(A, R, dst_exps=dst_exps).solve(b)


def member(G, x, R: ZMod, ambient_exps=None) -> bool:
    """Is x in the span of the columns of G (plus the ambient lattice)?"""
    return solve(G, x, R, dst_exps=ambient_exps) is not None


class Span:
    """Cached membership tests for the span of a set of columns.

    One Smith normal form serves any number of membership queries, so
    comparing generating sets is linear in the number of generators.
    """

    def __init__(self, G, R: ZMod, ambient_exps=None):
        self.R = R
        G = R.reduce(G)
        if ambient_exps is not None:
            scale = np.array(
                [R.p ** (R.m - min(e, R.m)) for e in ambient_exps], dtype=np.int64
            )
            G = (G * scale[:, None]) % R.q
            self._scale = scale
        else:
            self._scale = None
        self.U, _, self.exps = smith_normal_form(G, R)
        self.shape = G.shape

    def contains(self, x) -> bool:
        R = self.R
        x = R.reduce(x).reshape(-1)
        if self._scale is not None:
            x = (x * self._scale) % R.q
        c = (self.U @ x) % R.q
        r = len(self.exps)
        for t in range(self.shape[0]):
            if t >= r or self.exps[t] >= R.m:
                if c[t] % R.q != 0:
                    return False
            elif c[t] % (R.p ** self.exps[t]) != 0:
                return False
        return True

    def contains_all(self, H) -> bool:
        return all(self.contains(H[:, j]) for j in range(H.shape[1]))


def span_contains(G, H, R: ZMod, ambient_exps=None) -> bool:
    """Do the columns of G span every column of H?"""
    return all(member(G, H[:, j], R, ambient_exps) for j in range(H.shape[1]))


class Pres:
    """A module presented as (Z/p^m)^ngens modulo the span of `rels`.

    Relations are stored raw; the normal form (exponents of the cyclic
    decomposition, with basis transform) is computed lazily.  The
    implicit lattice p^m * (every generator) is always part of the
    relations.
    """

    __slots__ = ("R", "ngens", "rels", "_nf", "_span")

    def __init__(self, R: ZMod, ngens: int, rels=None):
        self.R = R
        self.ngens = ngens
        if rels is None or (hasattr(rels, "size") and rels.size == 0):
            rels = R.zeros(ngens, 0)
        rels = R.reduce(rels)
        if rels.shape[0] != ngens:
            raise ValueError("relation matrix has wrong number of rows")
        if rels.shape[1] > 1:
            rels = np.unique(rels, axis=1)
            rels = rels[:, rels.any(axis=0)]
        self.rels = rels
        self._nf = None
        self._span = None

    @classmethod
    def free(cls, R: ZMod, ngens: int):
        return cls(R, ngens)

    @classmethod
    def vector_space(cls, R: ZMod, dim: int):
        """k-vector space of the given F_p-dimension: all exponents 1."""
        return cls(R, dim, (R.p * R.eye(dim)) % R.q)

    def normal_form(self):
        """(exps, P): exps[i] = annihilator exponent of the i-th new
        generator; x_new = P x_old diagonalizes the relation lattice."""
        if self._nf is None:
            if self.rels.shape[1] == 0:
                self._nf = ([self.R.m] * self.ngens, self.R.eye(self.ngens))
            else:
                U, _, sexps = smith_normal_form(self.rels, self.R)
                exps = [self.R.m] * self.ngens
                for t, e in enumerate(sexps):
                    exps[t] = min(e, self.R.m)
                self._nf = (exps, U % self.R.q)
        return self._nf

    @property
    def exps(self):
        return self.normal_form()[0]

    def length(self) -> int:
        """Length over Z/p^m (= log_p of the order for finite modules)."""
        return int(sum(self.exps))

    def kdim(self) -> int:
        """Dimension over F_p when the module is a vector space."""
        exps = self.exps
        if any(e > 1 for e in exps):
            raise ValueError("module is not killed by p; no k-dimension")
        return sum(1 for e in exps if e == 1)

    def min_exps(self) -> list:
        """Sorted nonzero annihilator exponents (the SNF invariant)."""
        return sorted(e for e in self.exps if e > 0)

    def is_zero(self) -> bool:
        return all(e == 0 for e in self.exps)

    def rel_span(self) -> "Span":
        if not hasattr(self, "_span") or self._span is None:
            self._span = Span(self.rels, self.R, ambient_exps=self.exps_ambient())
        return self._span

    def element_is_zero(self, x) -> bool:
        return self.rel_span().contains(x)

    def exps_ambient(self):
        return [self.R.m] * self.ngens

    def __repr__(self):
        return f"Pres({self.R!r}, exps={self.min_exps()})"


def map_is_welldefined(A, src: Pres, dst: Pres) -> bool:
    """Does the matrix A send the relations of src into those of dst?"""
    R = src.R
    img = (R.reduce(A) @ src.rels) % R.q
    span = dst.rel_span()
    return all(span.contains(img[:, j]) for j in range(img.shape[1]))


def kernel_into(A, src: Pres, dst: Pres) -> np.ndarray:
    """Generators of ker(A : src -> dst) in source coordinates.

    Solves A x in span(rels_dst) modulo the relations of src; the source
    relations are included among the generators (they map to zero).
    """
    R = src.R
    A = R.reduce(A)
    k = dst.rels.shape[1]
    if k == 0:
        G = kernel_gens(A, R, dst_exps=dst.exps_ambient(), src_exps=None)
    else:
        # unknowns (x, y) with A x - rels_dst y = 0 over Z/q
        big = np.concatenate([A, (-dst.rels) % R.q], axis=1)
        G = kernel_gens(big, R)
        G = G[: src.ngens, :]
    G = np.concatenate([G, src.rels], axis=1) % R.q
    G = G[:, G.any(axis=0)]
    return G if G.size else R.zeros(src.ngens, 0)


def present_span(G, amb: Pres):
    """Present the submodule spanned by the columns of G inside amb.

    Returns (K, incl) where K is a Pres on G's columns as generators and
    incl is the ngens_amb x ngens_K matrix of their coordinates.
    """
    R = amb.R
    G = R.reduce(G)
    t = G.shape[1]
    K_rels = kernel_into(G, Pres.free(R, t), amb)
    return Pres(R, t, K_rels), G


def minimal_gens(G, amb: Pres) -> np.ndarray:
    """A minimal generating set of span(G) inside amb.

    Writes the span's presentation in normal form and keeps one
    generator per nonzero cyclic factor.
    """
    R = amb.R
    G = R.reduce(G)
    if G.shape[1] == 0:
        return G
    K, _ = present_span(G, amb)
    exps, P = K.normal_form()
    Pinv = invert_unimodular(P, R)
    keep = [t for t, e in enumerate(exps) if e > 0]
    if not keep:
        return R.zeros(amb.ngens, 0)
    return (G @ Pinv[:, keep]) % R.q


def quotient_by(amb: Pres, extra) -> Pres:
    """amb modulo the span of the extra columns (same generators)."""
    R = amb.R
    extra = R.reduce(extra)
    rels = np.concatenate([amb.rels, extra], axis=1) % R.q
    return Pres(R, amb.ngens, rels)


def subquotient(amb: Pres, top, bot):
    """(span(top) + rels)/(span(bot) + rels) inside amb.

    Returns (S, reps) with S a Pres on the columns of top and reps = top
    (coordinate representatives in amb).
    """
    R = amb.R
    top = R.reduce(top)
    amb_bot = quotient_by(amb, bot)
    S_rels = kernel_into(top, Pres.free(R, top.shape[1]), amb_bot)
    return Pres(R, top.shape[1], S_rels), top


def induced_matrix(A, src_gens, dst_gens, dst: Pres):
    """Express A @ src_gens in terms of dst_gens modulo dst's relations.

    Returns the matrix B with A @ src_gens = dst_gens @ B (mod rels),
    or None if some image is not in the span.
    """
    R = dst.R
    img = (R.reduce(A) @ src_gens) % R.q
    big = np.concatenate([dst_gens, dst.rels], axis=1) % R.q
    solver = LinearSolver(big, R, dst_exps=dst.exps_ambient())
    cols = []
    for j in range(img.shape[1]):
        sol = solver.solve(img[:, j])
        if sol is None:
            return None
        cols.append(sol[: dst_gens.shape[1]])
    if not cols:
        return R.zeros(dst_gens.shape[1], 0)
    return np.stack(cols, axis=1) % R.q


def charpoly(A, R: ZMod) -> list:
    """Characteristic polynomial of A mod p^m by the Berkowitz method.

    Division-free, so valid over Z/p^m.  Returns [1, c_1, ..., c_n] with
    char(x) = x^n + c_1 x^(n-1) + ... + c_n.
    """
    A = R.reduce(A)
    n = A.shape[0]
    if n == 0:
        return [1]
    q = R.q
    # Berkowitz: iteratively build the coefficient vector via Toeplitz products
    C = np.array([1, (-A[0, 0]) % q], dtype=np.int64)
    for k in range(1, n):
        a = A[k, k] % q
        row = A[k, :k] % q
        col = A[:k, k] % q
        Mk = A[:k, :k]
        # powers row @ Mk^j @ col for j = 0..k-1
        terms = [int(row @ col % q)]
        v = col.copy()
        for _ in range(k - 1):
            v = (Mk @ v) % q
            terms.append(int(row @ v % q))
        # Toeplitz vector t = [1, -a, -terms[0], -terms[1], ...]
        t = [1, (-a) % q] + [(-x) % q for x in terms]
        newC = np.zeros(k + 2, dtype=np.int64)
        for i in range(k + 2):
            s = 0
            for j in range(max(0, i - len(C) + 1), min(i, len(t) - 1) + 1):
                s += t[j] * int(C[i - j])
            newC[i] = s % q
        C = newC
    return [int(c) for c in C]
