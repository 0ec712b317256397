"""Exact linear algebra over Z/p^m, checked against brute-force enumeration.

The enumeration oracle walks every vector of a small module, so kernel
sizes, span sizes and normal forms are verified independently of the
SNF machinery.
"""

import itertools

import numpy as np
import pytest

from raynaud.linalg import (
    ZMod,
    charpoly,
    invert_unimodular,
    kernel_gens,
    kernel_into,
    member,
    present_span,
    Pres,
    quotient_by,
    smith_normal_form,
    solve,
    subquotient,
)


def enumerate_vectors(q, n):
    return itertools.product(range(q), repeat=n)


def brute_kernel_size(A, R, dst_exps=None):
    A = np.asarray(A) % R.q
    rows, cols = A.shape
    if dst_exps is None:
        dst_exps = [R.m] * rows
    count = 0
    for x in enumerate_vectors(R.q, cols):
        y = A @ np.array(x, dtype=np.int64)
        if all(int(y[i]) % (R.p ** min(dst_exps[i], R.m)) == 0 for i in range(rows)):
            count += 1
    return count


def brute_span_size(G, R):
    G = np.asarray(G) % R.q
    n, t = G.shape
    seen = set()
    for c in enumerate_vectors(R.q, t):
        v = tuple(int(x) for x in (G @ np.array(c, dtype=np.int64)) % R.q)
        seen.add(v)
    return len(seen)


def span_size_from_gens(G, R):
    _, incl = present_span(G, Pres.free(R, G.shape[0]))
    K, _ = present_span(G, Pres.free(R, G.shape[0]))
    return R.p ** K.length()


SMALL_CASES = [
    (2, 2, [[2, 1], [0, 2]]),
    (2, 2, [[1, 3], [2, 2]]),
    (2, 3, [[4, 2], [6, 4]]),
    (3, 2, [[3, 6], [0, 3]]),
    (2, 2, [[0, 0], [0, 0]]),
    (3, 1, [[1, 2, 0], [0, 1, 1]]),
]


@pytest.mark.parametrize("p,m,A", SMALL_CASES)
def test_snf_identity_and_invertibility(p, m, A):
    R = ZMod(p, m)
    A = R.reduce(A)
    U, V, exps = smith_normal_form(A, R)
    D = (U @ A @ V) % R.q
    expect = np.zeros_like(D)
    for t, e in enumerate(exps):
        expect[t, t] = pow(p, e, R.q) if e < m else 0
    assert np.array_equal(D, expect)
    assert exps == sorted(exps)
    Ui = invert_unimodular(U, R)
    assert np.array_equal((U @ Ui) % R.q, R.eye(U.shape[0]))
    Vi = invert_unimodular(V, R)
    assert np.array_equal((Vi @ V) % R.q, R.eye(V.shape[0]))


def test_snf_random_roundtrip():
    rng = np.random.default_rng(7)
    for p, m in [(2, 3), (3, 2), (5, 2)]:
        R = ZMod(p, m)
        for _ in range(25):
            rows, cols = rng.integers(1, 5, size=2)
            A = R.reduce(rng.integers(0, R.q, size=(rows, cols)))
            U, V, exps = smith_normal_form(A, R)
            D = (U @ A @ V) % R.q
            off = D.copy()
            for t in range(min(rows, cols)):
                off[t, t] = 0
            assert not off.any()
            for t in range(min(rows, cols)):
                assert R.val(D[t, t]) == min(exps[t], m)


@pytest.mark.parametrize("p,m,A", SMALL_CASES[:4])
def test_kernel_matches_enumeration(p, m, A):
    R = ZMod(p, m)
    G = kernel_gens(A, R)
    # every generator is in the kernel
    img = (R.reduce(A) @ G) % R.q
    assert not img.any()
    assert brute_span_size(G, R) == brute_kernel_size(A, R)


def test_kernel_with_target_exponents():
    R = ZMod(2, 3)
    A = R.reduce([[1], [2]])
    # target coordinates mod (2^1, 2^2): x = 0 mod 2 and 2x = 0 mod 4
    G = kernel_gens(A, R, dst_exps=[1, 2])
    assert brute_span_size(G, R) == brute_kernel_size(A, R, dst_exps=[1, 2])


def test_solve_and_membership():
    R = ZMod(2, 3)
    A = R.reduce([[2, 4], [1, 6]])
    rng = np.random.default_rng(3)
    for _ in range(30):
        x = rng.integers(0, R.q, size=2)
        b = (A @ x) % R.q
        s = solve(A, b, R)
        assert s is not None
        assert np.array_equal((A @ s) % R.q, b)
    assert member(A, (A @ [1, 1]) % R.q, R)
    # 1 is odd, image of A has even first coordinate combinations only if...
    assert solve(R.reduce([[2], [0]]), [1, 0], R) is None


def test_presentation_normal_form():
    R = ZMod(2, 3)
    # Z/8 + Z/8 modulo (2x = 4y) and 4y = 0: exps should be {3, ...}
    M = Pres(R, 2, R.reduce([[2], [4]]))
    size = R.p ** M.length()
    # brute force: vectors modulo span of relations + 8Z
    rels = np.concatenate([M.rels, 8 * np.eye(2, dtype=np.int64) % 8], axis=1)
    assert size == (R.q**2) // brute_span_size(M.rels, R)


def test_present_span_and_subquotient():
    R = ZMod(2, 2)
    amb = Pres(R, 2, R.reduce([[2, 0], [0, 2]]))  # (Z/2)^2
    G = R.reduce([[1], [1]])
    K, incl = present_span(G, amb)
    assert K.min_exps() == [1]
    S, reps = subquotient(amb, R.eye(2), G)
    assert S.min_exps() == [1]


def test_quotient_by():
    R = ZMod(3, 2)
    amb = Pres.free(R, 2)  # (Z/9)^2
    Q = quotient_by(amb, R.reduce([[3], [0]]))
    assert sorted(Q.min_exps()) == [1, 2]


def test_kernel_into_with_relations():
    R = ZMod(2, 2)
    src = Pres.free(R, 1)  # Z/4
    dst = Pres(R, 1, R.reduce([[2]]))  # Z/2
    A = R.reduce([[1]])
    G = kernel_into(A, src, dst)
    # kernel of Z/4 -> Z/2 is 2Z/4
    K, _ = present_span(G, src)
    assert K.min_exps() == [1]


def test_charpoly_matches_expansion():
    R = ZMod(5, 2)
    rng = np.random.default_rng(11)
    for n in [1, 2, 3, 4]:
        A = rng.integers(0, R.q, size=(n, n))
        cp = charpoly(A, R)
        # oracle: evaluate det(xI - A) at n+1 points is unusable mod p^m;
        # instead expand by permutations exactly over Z then reduce.
        coeffs = np.zeros(n + 1, dtype=object)
        for perm in itertools.permutations(range(n)):
            sign = 1
            seen = [False] * n
            # compute permutation sign
            sgn = 1
            visited = [False] * n
            for i in range(n):
                if visited[i]:
                    continue
                clen = 0
                j = i
                while not visited[j]:
                    visited[j] = True
                    j = perm[j]
                    clen += 1
                if clen % 2 == 0:
                    sgn = -sgn
            # product over i of (x*delta - A)[i, perm[i]]
            poly = np.array([1], dtype=object)
            for i in range(n):
                term = (
                    np.array([-int(A[i, perm[i]]), 1], dtype=object)
                    if perm[i] == i
                    else np.array([-int(A[i, perm[i]])], dtype=object)
                )
                poly = np.convolve(poly, term)
            padded = np.zeros(n + 1, dtype=object)
            padded[: len(poly)] = poly
            coeffs += sgn * padded
        oracle = [int(coeffs[n - i]) % R.q for i in range(n + 1)]
        assert cp == oracle


def test_charpoly_shift_matrix():
    R = ZMod(2, 3)
    A = R.reduce([[0, 2], [1, 0]])
    # char poly of [[0,p],[1,0]] is x^2 - p
    assert charpoly(A, R) == [1, 0, (-2) % 8]
