"""The classifying-stack pipeline: spectral-sequence rows for B(alpha_p),
the extension in degree three, the Gm-twist, and the counterexample
report.

Geometry enters only through recorded facts: for a supersingular
elliptic curve E over an algebraically closed field, the diagonal-heart
table of its de Rham-Witt cohomology is H~^0 = W, H~^1 = E_{1/2},
H~^2 = W(-1)[1] (nothing above, as dim E = 1), and the Frobenius
isogeny acts on H~^1 as right multiplication by F.  Everything else --
the alternating-sum maps on the columns, the sub/quotient split of the
second row, the derived star computation, the extension cones, and all
numerical tables -- is computed from module data at truncation.

The non-splitness of 0 -> U_{-1} -> E_2^{1,2} -> k(-1)[1] -> 0 rests on
an external Hodge-cohomology computation; it is carried as a recorded
fact with provenance and the split counterfactual is available as a
mode.  The alternating-sum maps follow the displayed component
formulas; a global sign would only rescale kernels and cokernels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .linalg import Pres, kernel_into, quotient_by, subquotient
from .rmod import Unstable, stable_pushdown
from .blocks import make_block, truncate
from .formal import FormalObject, Summand
from .homs import cone_or_extension
from .invariants import (
    CheckResult,
    InvariantConfig,
    crew_check,
    ekedahl_check,
    hodge_witt_numbers,
    symmetry_check,
)
from .star import derived_star, star_presentation

NONSPLIT_PROVENANCE = (
    "recorded fact: the degree-3 extension is non-split; this rests on the "
    "Hodge cohomology of B(alpha_p) (external input), not on this kernel"
)


@dataclass(frozen=True)
class PipelineConfig:
    p: int = 2
    m: int = 8
    n: int = 16
    degree_bound: int = 3
    mode: str = "paper-nonsplit"

    def cell_level(self):
        """Working level for cell computations; all cells stabilize well
        below the default truncation and the double-step rule certifies
        independence of the requested (m, n)."""
        return min(self.m, 3), min(self.n, 8)


def elliptic_htilde_table(p):
    """The recorded diagonal-heart table of a supersingular elliptic curve."""
    W = make_block("UnitW", p)
    E = make_block("Dieudonne", p, i=1, j=1)
    return {
        0: [Summand(W, 0, 0)],
        1: [Summand(E, 0, 0)],
        2: [Summand(W, -1, 1)],
    }


@dataclass(frozen=True)
class StarPair:
    """An unresolved completed star product of two shifted blocks."""

    left: Summand
    right: Summand

    def label(self):
        def one(s):
            t = s.block.label()
            if s.i or s.j:
                t += f"({s.i})[{s.j}]"
            return t

        return f"{one(self.left)} * {one(self.right)}"


def kunneth_tilde_h(factors):
    """Convolution of diagonal-heart tables: the degree-n entry of the
    product is the sum over i + j = n of the starred entries.

    Entries are lists of summands.  A pair with a unit factor collapses
    by the unit law (the shifts add); any other pair is returned as a
    StarPair for the star module to resolve.
    """
    out = None
    for table in factors:
        if out is None:
            out = {deg: list(items) for deg, items in table.items()}
            continue
        new = {}
        for d1, items1 in out.items():
            for d2, items2 in table.items():
                deg = d1 + d2
                for a in items1:
                    for b in items2:
                        new.setdefault(deg, []).append(_star_entry(a, b))
        out = new
    return {deg: items for deg, items in sorted(out.items())} if out else {}


def _star_entry(a, b):
    if isinstance(a, Summand) and isinstance(b, Summand):
        if a.block.kind == "UnitW":
            return Summand(b.block, b.i + a.i, b.j + a.j)
        if b.block.kind == "UnitW":
            return Summand(a.block, a.i + b.i, a.j + b.j)
    # a unit factor absorbs into one leg of an unresolved pair
    if isinstance(a, StarPair) and isinstance(b, Summand) and b.block.kind == "UnitW":
        left = Summand(a.left.block, a.left.i + b.i, a.left.j + b.j)
        return StarPair(left, a.right)
    if isinstance(b, StarPair) and isinstance(a, Summand) and a.block.kind == "UnitW":
        left = Summand(b.left.block, b.left.i + a.i, b.left.j + a.j)
        return StarPair(left, b.right)
    return StarPair(a, b)


# ---------------------------------------------------------------------------
# rows 0 and 1


def row0_cells(cfg: PipelineConfig, cols=4):
    """E_2 cells of the zeroth row: W -0-> W -id-> W -0-> W ..."""
    p = cfg.p
    m, n = cfg.cell_level()
    W = make_block("UnitW", p)
    L = truncate(W, m, n)
    amb = L.piece(0).pres
    size = amb.ngens
    out = {}
    for i in range(cols):
        dout_id = i % 2 == 1  # map out of column i is the identity for odd i
        din_id = (i - 1) % 2 == 1 and i >= 1
        A_out = (np.eye(size, dtype=np.int64) if dout_id else amb.R.zeros(size, size))
        ker = kernel_into(A_out, amb, amb)
        bot = np.eye(size, dtype=np.int64) if din_id else amb.R.zeros(size, size)
        S, _ = subquotient(amb, ker, bot)
        out[i] = S.min_exps()
    assert out[0] == [min(m, n)], "E_2^{0,0} must be W at the working precision"
    assert all(not out[i] for i in range(1, cols)), "higher row-0 cells must vanish"
    return {"E2_00": "W", "zero_cells": [f"E2_{i}0" for i in range(1, cols)]}


def row1_map(p, ncols, m, n):
    """The alternating-sum map out of column (ncols - 1) of the first row.

    Columns are powers of the height-2 block: C^t = B^t + B (t copies of
    H~^1(E) plus H~^1 of the quotient curve); the displayed component
    formulas use g^* = right multiplication by F.
    """
    E = make_block("Dieudonne", p, i=1, j=1)
    L = truncate(E, m, n)
    sz = L.piece(0).pres.ngens
    R = L.R
    gstar = L.F_lift(0)  # right multiplication by F has the same matrix
    nsrc = ncols - 1  # source has nsrc - 1 copies of B^t... see below
    # source column index t = ncols - 1 has (t - 1) E-copies plus one;
    # the map goes to column t + 1 = ncols with t copies plus one.
    t = ncols
    src_copies = t - 1 + 1
    dst_copies = t + 1
    A = R.zeros(dst_copies * sz, src_copies * sz)

    def put(bi, bj, mat):
        A[bi * sz : (bi + 1) * sz, bj * sz : (bj + 1) * sz] = mat % R.q

    eye = np.eye(sz, dtype=np.int64)
    if t % 2 == 1:
        # odd slots cancel in the alternating sum: the image is
        # (-x_0, 0, x_1 - x_2, 0, x_3 - x_4, .., x_{t-2} - g*(y), 0)
        if t == 1:
            put(0, 0, (-gstar) % R.q)
        else:
            put(0, 0, (-eye) % R.q)
            for u in range(2, t - 1, 2):
                put(u, u - 1, eye)
                put(u, u, (-eye) % R.q)
            put(t - 1, t - 2, eye)
            put(t - 1, t - 1, (-gstar) % R.q)
    else:
        # (x_0, .., x_{t-2}, y) -> (0, x_1, x_1, x_3, x_3, .., g*(y), y)
        for u in range(1, t - 1, 2):
            put(u, u, eye)
            put(u + 1, u, eye)
        put(t - 1, t - 1, gstar)
        put(t, t - 1, eye)
    return A, src_copies, dst_copies, L


def e2_rows01(cfg: PipelineConfig):
    """E_2 cells of rows 0 and 1: W at (0,0), D(alpha_p) at (1,1), rest 0."""
    p = cfg.p
    m, n = cfg.cell_level()
    row0 = row0_cells(cfg)
    E = make_block("Dieudonne", p, i=1, j=1)

    def column_pres(copies, mm, nn):
        L = truncate(E, mm, nn)
        a = L.piece(0).pres
        R = a.R
        return Pres(R, copies * a.ngens, np.kron(np.eye(copies, dtype=np.int64), a.rels))

    def maps_at(mm, nn):
        d01, s0, d0, L = row1_map(p, 1, mm, nn)
        d11, s1, d1, _ = row1_map(p, 2, mm, nn)
        d21, s2, d2, _ = row1_map(p, 3, mm, nn)
        return d01, d11, d21, L

    # E_2^{0,1} = ker d^{0,1}: the kernel of right multiplication by F
    d01_base, d11_base, d21_base, Lbase = maps_at(m, n)
    src0 = column_pres(1, m, n)

    def ker01_at(k):
        d01, _, _, L = maps_at(m + k, n + k)
        K = kernel_into(d01, column_pres(1, m + k, n + k), column_pres(2, m + k, n + k))
        P = E.tower.proj(0, (m + k, n + k), (m, n))
        return K, P

    K01, _ = stable_pushdown(ker01_at, src0, steps=4, what="E2^{0,1}")
    if K01.min_exps():
        raise Unstable("E2^{0,1} expected to vanish")

    # E_2^{1,1} = ker d^{1,1} / im d^{0,1} = coker of right multiplication by F
    src1 = column_pres(2, m, n)

    def ker11_at(k):
        _, d11, _, L = maps_at(m + k, n + k)
        K = kernel_into(d11, column_pres(2, m + k, n + k), column_pres(3, m + k, n + k))
        P = np.kron(np.eye(2, dtype=np.int64), E.tower.proj(0, (m + k, n + k), (m, n)))
        return K, P

    K11st, K11 = stable_pushdown(ker11_at, src1, steps=4, what="E2^{1,1}")
    S11, _ = subquotient(src1, K11, d01_base)
    if S11.min_exps() != [1]:
        raise Unstable(f"E2^{{1,1}} should be one-dimensional, got {S11.min_exps()}")
    # the induced operators on the cell must all vanish (the alpha_p module)
    _check_cell_ops_vanish(E, K11, d01_base, m, n)

    # E_2^{2,1} = ker d^{2,1} / im d^{1,1} = 0
    src2 = column_pres(3, m, n)

    def ker21_at(k):
        _, _, d21, L = maps_at(m + k, n + k)
        K = kernel_into(d21, column_pres(3, m + k, n + k), column_pres(4, m + k, n + k))
        P = np.kron(np.eye(3, dtype=np.int64), E.tower.proj(0, (m + k, n + k), (m, n)))
        return K, P

    K21st, K21 = stable_pushdown(ker21_at, src2, steps=4, what="E2^{2,1}")
    S21, _ = subquotient(src2, K21, d11_base)
    if S21.min_exps():
        raise Unstable(f"E2^{{2,1}} expected to vanish, got {S21.min_exps()}")

    return {
        "row0": row0,
        "E2_01": "0",
        "E2_11": "D(alpha_p)",
        "E2_21": "0",
    }


def _check_cell_ops_vanish(E, Ktop, Kbot, m, n):
    """F, V, d all act by zero on the E2^{1,1} cell (it is D(alpha_p))."""
    L = truncate(E, m, n)
    R = L.R
    sz = L.piece(0).pres.ngens
    two = np.kron(np.eye(2, dtype=np.int64), np.eye(sz, dtype=np.int64))
    src = Pres(R, 2 * sz, np.kron(np.eye(2, dtype=np.int64), L.piece(0).pres.rels))
    bot_quot = quotient_by(src, Kbot)
    span_bot = np.concatenate([Kbot, src.rels], axis=1)
    for name, mat in (("F", L.F_lift(0)), ("V", L.V(0))):
        op = np.kron(np.eye(2, dtype=np.int64), mat)
        img = (op @ Ktop) % R.q
        from .linalg import Span

        sp = Span(np.concatenate([span_bot, R.p * two], axis=1) % R.q, R)
        for c in range(img.shape[1]):
            if not sp.contains(img[:, c]):
                raise Unstable(f"operator {name} does not vanish on E2^{{1,1}}")


# ---------------------------------------------------------------------------
# row 2


def row2_e2(cfg: PipelineConfig):
    """E_2^{0,2} = 0 and the SES 0 -> U_{-1} -> E_2^{1,2} -> k(-1)[1] -> 0.

    The middle cohomology is taken against the subcomplex
    0 -> E*E --id*(.F)--> E*E and the quotient W(-1)[1] --(-p)--> W(-1)[1]:
    the sub's cohomology comes from the derived star (cross-checked on a
    presentation of E*E), the quotient's from exact W_m arithmetic, and
    the connecting map vanishes because its source k(-1)[1] and target
    U_1 sit in different cohomological degrees of the diagonal heart.
    """
    p = cfg.p
    m, n = cfg.cell_level()
    E = make_block("Dieudonne", p, i=1, j=1)
    D = make_block("DAlphaP", p)
    W = make_block("UnitW", p)

    # E_2^{0,2} = 0: multiplication by p is injective on W(-1)[1] pro-stably
    Wpres = truncate(W, m, n).piece(0).pres

    def kerp_at(k):
        amb = truncate(W, m + k, n + k).piece(0).pres
        K = kernel_into((p * amb.R.eye(amb.ngens)) % amb.R.q, amb, amb)
        P = W.tower.proj(0, (m + k, n + k), (m, n))
        return K, P

    Kp, _ = stable_pushdown(kerp_at, Wpres, steps=4, what="ker(p) on W")
    if Kp.min_exps():
        raise Unstable("multiplication by p on W(-1)[1] must be injective")

    # subcomplex cohomology via the derived star (the band route)
    ds = derived_star(E, D, m, n)
    sub_h1 = ds["H-1"]["identified"]
    sub_h2 = ds["H0"]["identified"]
    if sub_h1 != "U_-1" or sub_h2 != "U_1":
        raise Unstable(f"subcomplex cohomology not identified: {sub_h1}, {sub_h2}")

    # presentation cross-check: kernel and cokernel of id * (.F) on E * E
    cross = _row2_presentation_check(cfg)

    # quotient complex: multiplication by -p on W
    C = quotient_by(Wpres, (-p * Wpres.R.eye(Wpres.ngens)) % Wpres.R.q)
    if C.min_exps() != [1]:
        raise Unstable("coker(-p) on W(-1)[1] must be k(-1)[1]")

    ses = {
        "sub": "U_-1",
        "quot": "k(-1)[1]",
        "E2_02": "0",
        "connecting_zero": "degree reasons: source lives in cohomological "
        "degree -1, target U_1 in degree 0",
        "sub_H2": "U_1",
        "presentation_crosscheck": cross,
        # domino additivity across the SES fixes T^0 regardless of the class
        "T0_middle": 1,
        "T1_middle": 0,
    }
    return ses


def _row2_presentation_check(cfg: PipelineConfig):
    """ker / coker of id * (.F) on the star presentation of E * E."""
    p = cfg.p
    m, n = min(cfg.m, 2), min(cfg.n, 6)
    E = make_block("Dieudonne", p, i=1, j=1)
    tower, model = star_presentation(E, E, m, n)
    Lbig = model.model
    R = Lbig.R
    gstar = E.tower.level(m, model.S).F_lift(0)
    fmap = model.second_factor_map({0: gstar})
    results = {}
    for g in sorted(Lbig.pieces):
        A = fmap.get(g)
        if A is None:
            continue
        amb = Lbig.piece(g).pres
        K = kernel_into(A, amb, amb)
        Kp, _ = subquotient(amb, K, amb.rels)
        Q = quotient_by(amb, A)
        results[g] = {"ker": Kp.min_exps(), "coker": Q.min_exps()}
    # dimension fingerprints against the expected dominoes: the kernel is
    # the U_{-1}-shaped band, the cokernel the U_1-shaped one, and both
    # are killed by p
    ok = all(
        all(e == 1 for e in r["ker"]) and all(e == 1 for e in r["coker"])
        for r in results.values()
    )
    kdim = sum(len(r["ker"]) for r in results.values())
    cdim = sum(len(r["coker"]) for r in results.values())
    if not ok or kdim == 0 or cdim == 0 or abs(kdim - cdim) > 2:
        raise Unstable(
            f"presentation cross-check out of shape: ker {kdim}, coker {cdim}"
        )
    return {"cells": results, "status": "computed", "ker_dim": kdim, "coker_dim": cdim}


# ---------------------------------------------------------------------------
# extension, table, twist


def resolve_extension(cfg: PipelineConfig):
    policy = cfg.mode
    p = cfg.p
    if policy == "paper-nonsplit":
        cone = cone_or_extension(p, 1, *cfg.cell_level())
        if cone["identification"] is None or cone["identification"][0] != "U_0":
            raise Unstable("the unit-class cone did not identify as U_0")
        return {
            "policy": policy,
            "H3": [Summand(make_block("Domino", p, t=0), 0, 0)],
            "provenance": NONSPLIT_PROVENANCE,
            "watermark": None,
        }
    if policy == "split":
        split = cone_or_extension(p, 0, *cfg.cell_level())
        return {
            "policy": policy,
            "H3": list(split["object"].summands),
            "provenance": "counterfactual mode: zero extension class",
            "watermark": "counterfactual",
        }
    raise ValueError(f"unknown extension policy {policy!r}")


def assemble_balphap_table(cfg: PipelineConfig):
    """The diagonal-heart table of B(alpha_p) in degrees <= 3."""
    if cfg.degree_bound > 3:
        raise ValueError(
            "not certified by pipeline: rows >= 3 of the spectral sequence "
            "are outside the computed range"
        )
    p = cfg.p
    rows01 = e2_rows01(cfg)
    ses = row2_e2(cfg)
    ext = resolve_extension(cfg)
    W = make_block("UnitW", p)
    D = make_block("DAlphaP", p)
    table = {
        0: [Summand(W, 0, 0)],
        1: [],
        2: [Summand(D, 0, 0)],
        3: list(ext["H3"]),
    }
    certificates = {
        "rows01": rows01,
        "row2": ses,
        "extension": {k: v for k, v in ext.items() if k != "H3"},
        "degeneration": "all differentials into and out of the certified "
        "cells have zero source or target among the computed cells",
    }
    return table, certificates


def twist_bgm(table, degree_bound=3):
    """Convolution with the Gm-ladder: out[n] = sum_b table[n-2b](-b)[b]."""
    out = {}
    for deg in range(degree_bound + 1):
        pieces = []
        b = 0
        while deg - 2 * b >= 0:
            for s in table.get(deg - 2 * b, []):
                pieces.append(Summand(s.block, s.i - b, s.j + b))
            b += 1
        out[deg] = pieces
    return out


def counterexample_object(cfg: PipelineConfig):
    """The certified degrees of the fourfold: sum H~^deg [-deg]."""
    table, certs = assemble_balphap_table(cfg)
    twisted = twist_bgm(table, cfg.degree_bound)
    summands = []
    for deg, pieces in twisted.items():
        for s in pieces:
            summands.append(Summand(s.block, s.i, s.j - deg))
    return FormalObject(cfg.p, 1, summands), twisted, certs


# ---------------------------------------------------------------------------
# the report


def structural_table(twisted):
    """Cells (i, j) -> block label: each diagonal-heart piece B(a)[b] of
    H~^deg contributes its module at H^(deg - b) in grading -a."""
    cells = {}
    for deg, pieces in twisted.items():
        for s in pieces:
            i, j = -s.i, deg - s.j
            if i + j > 3:
                continue
            label = s.block.label()
            if s.i:
                label += f"({s.i})"
            cells[(i, j)] = label
    return cells


def counterexample_report(cfg: PipelineConfig = None, **kwargs):
    if cfg is None:
        cfg = PipelineConfig(**kwargs)
    if cfg.degree_bound > 3:
        raise ValueError("not certified by pipeline (degree bound is 3)")
    X, twisted, certs = counterexample_object(cfg)
    icfg = InvariantConfig(*cfg.cell_level())
    table = hodge_witt_numbers(X, icfg)
    hW = {}
    for (i, j), v in table.hW.items():
        if 0 <= i and 0 <= j and i + j <= 3:
            hW[(i, j)] = int(v)
    crew = {}
    for i in range(0, 4):
        c = crew_check(X, i, icfg)
        crew[str(i)] = {"pass": bool(c), "hW_sum": int(c.details["hW_sum"]), "h_sum": int(c.details["h_sum"])}
    # Hodge symmetry holds in total degree <= 2; Serre symmetry pairs the
    # certified cells with degrees > 3 and is only meaningful on complete
    # fixtures, so the report checks the Hodge deltas
    sym_full = symmetry_check(X, 4, icfg, max_total=2)
    sym = CheckResult(
        "symmetry_le2",
        not sym_full.details["hodge_deltas"],
        {"hodge_deltas": sym_full.details["hodge_deltas"]},
    )
    eke = ekedahl_check(X, icfg)
    asym = {
        "hW_03": hW.get((0, 3), 0),
        "hW_30": hW.get((3, 0), 0),
        "difference": hW.get((0, 3), 0) - hW.get((3, 0), 0),
    }
    struct = structural_table(twisted)
    report = {
        "mode": cfg.mode,
        "table": {f"{i},{j}": lab for (i, j), lab in sorted(struct.items())},
        "hW": {f"{i},{j}": v for (i, j), v in sorted(hW.items())},
        "checks": {
            "crew": crew,
            "symmetry_le2": bool(sym),
            "asymmetry_deg3": asym,
            "ekedahl": bool(eke),
            "e2_cells": {
                "E2_00": certs["rows01"]["row0"]["E2_00"],
                "E2_11": certs["rows01"]["E2_11"],
                "E2_01": certs["rows01"]["E2_01"],
                "E2_21": certs["rows01"]["E2_21"],
                "E2_02": certs["row2"]["E2_02"],
                "E2_12": "U_0" if cfg.mode == "paper-nonsplit" else "U_-1 + k(-1)[1]",
            },
            "extension": certs["extension"],
        },
        "truncation": {"p": cfg.p, "m": cfg.m, "n": cfg.n},
    }
    if cfg.mode == "split":
        report["watermark"] = "counterfactual"
    ok = (
        all(v["pass"] for v in crew.values())
        and bool(sym)
        and bool(eke)
        and asym["difference"] == 1
        and hW == _expected_grid()
    )
    report["all_checks_pass"] = ok
    return report


def _expected_grid():
    return {(0, 0): 1, (1, 1): 1, (2, 1): 1, (0, 3): 1, (1, 2): -2}


def report_to_json(report) -> str:
    return json.dumps(report, sort_keys=True)


def report_to_markdown(report) -> str:
    lines = [f"# Hodge-Witt counterexample report (mode: {report['mode']})", ""]
    if report.get("watermark"):
        lines += [f"**{report['watermark'].upper()}**", ""]
    lines.append("Structural table H^j(..)^[i,i] for i + j <= 3:")
    lines.append("")
    for cell, lab in report["table"].items():
        lines.append(f"- ({cell}): {lab}")
    lines += ["", "h_W grid (rows j = 3..0, columns i = 0..3):", ""]
    hW = {tuple(int(x) for x in k.split(",")): v for k, v in report["hW"].items()}
    lines.append("| j\\i | 0 | 1 | 2 | 3 |")
    lines.append("|---|---|---|---|---|")
    for j in range(3, -1, -1):
        row = [f"| {j} |"]
        for i in range(4):
            row.append(f" {hW.get((i, j), 0)} |" if i + j <= 3 else "  |")
        lines.append("".join(row))
    lines += ["", f"Checks: {json.dumps(report['checks']['crew'], sort_keys=True)}"]
    lines += [
        f"Symmetry (degrees <= 2): {report['checks']['symmetry_le2']}",
        f"Degree-3 asymmetry: {report['checks']['asymmetry_deg3']}",
        f"Ekedahl h_W <= h: {report['checks']['ekedahl']}",
        f"Extension: {report['checks']['extension']['provenance']}",
        "",
    ]
    return "\n".join(lines)
