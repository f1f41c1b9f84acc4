"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings.  Reports for the ratio scans and exponent fits are
archived as CSV under reports/ (override with SHARPWT_REPORT_DIR).
"""

import os
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from sharpwt.decomp import decompose, verify_decomposition
from sharpwt.dyadic import DyadicCube, companion, dilate, family_index
from sharpwt.gridfn import GridFunction, local_osc, median, rearrangement_value
from sharpwt.harness import (
    ACCEPTANCE_RUNS,
    corpus_functions,
    emit,
    exponent_experiment,
    ratio_scan,
)
from sharpwt.intrinsic import _holder_class, hat_coefficients, intrinsic_engine

REPORT_DIR = Path(os.environ.get("SHARPWT_REPORT_DIR", "reports"))
REPORT_DIR.mkdir(parents=True, exist_ok=True)
_LOG = REPORT_DIR / "acceptance.log"
_LOG.write_text("")


def report(criterion: str, passed: bool, detail: str = "") -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}  {detail}"
    print(line)
    with open(_LOG, "a") as fh:
        fh.write(line + "\n")


# ---------------------------------------------------------------------------
# 1. dyadic geometry, exhaustively, in under 10 seconds
# ---------------------------------------------------------------------------


def test_criterion_1_dyadic_geometry():
    t0 = time.monotonic()
    violations = 0

    cubes = []
    for k in range(-6, 7):
        side = Fraction(2) ** -k
        j_lo = int(np.floor(-8 / float(side)))
        j_hi = int(np.ceil(8 / float(side)))
        cubes += [DyadicCube(k, (j,)) for j in range(j_lo, j_hi)
                  if (j + 1) * side > -8 and j * side < 8]
    groups = {0: [], 1: [], 2: []}
    for c in cubes:
        side = c.side
        groups[family_index(c)].append(((c.index[0] - 1) * side, (c.index[0] + 2) * side))
    for triples in groups.values():
        arr = np.array([(float(a), float(b)) for a, b in triples])
        lo, hi = arr[:, 0], arr[:, 1]
        disj = (hi[:, None] <= lo[None, :]) | (hi[None, :] <= lo[:, None])
        nest = ((lo[:, None] >= lo[None, :]) & (hi[:, None] <= hi[None, :])) | (
            (lo[None, :] >= lo[:, None]) & (hi[None, :] <= hi[:, None]))
        violations += int(np.sum(~(disj | nest)))

    for c in cubes:
        side = c.side
        j = c.index[0]
        for fam in range(3):
            comp = companion(c, fam)
            if family_index(comp) != fam or comp.level != c.level:
                violations += 1
                continue
            t_lo, t_hi = (comp.index[0] - 1) * side, (comp.index[0] + 2) * side
            if not (t_lo <= j * side and (j + 1) * side <= t_hi):
                violations += 1
            if not ((j - 2) * side <= t_lo and t_hi <= (j + 3) * side):
                violations += 1

    # n = 2 spot check via the product rule
    cubes2 = []
    for k in range(-3, 4):
        side = Fraction(2) ** -k
        j_lo = int(np.floor(-2 / float(side)))
        j_hi = int(np.ceil(2 / float(side)))
        rng = [j for j in range(j_lo, j_hi) if (j + 1) * side > -2 and j * side < 2]
        cubes2 += [DyadicCube(k, (j1, j2)) for j1 in rng for j2 in rng]
    groups2: dict[int, list] = {}
    for c in cubes2:
        groups2.setdefault(family_index(c), []).append(c)
    for fam, cs in groups2.items():
        boxes = [dilate(c, 3) for c in cs]
        lo = np.array([[float(v) for v in b.lower()] for b in boxes])
        hi = np.array([[float(v) for v in b.upper()] for b in boxes])
        disj = ((hi[:, None, 0] <= lo[None, :, 0]) | (hi[None, :, 0] <= lo[:, None, 0])
                | (hi[:, None, 1] <= lo[None, :, 1]) | (hi[None, :, 1] <= lo[:, None, 1]))
        a_in_b = ((lo[:, None] >= lo[None, :]) & (hi[:, None] <= hi[None, :])).all(axis=2)
        violations += int(np.sum(~(disj | a_in_b | a_in_b.T)))
    for c in cubes2[::7]:
        me, five = dilate(c, 1), dilate(c, 5)
        for fam in range(9):
            comp = companion(c, fam)
            tri = dilate(comp, 3)
            if not (tri.contains(me) and five.contains(tri) and family_index(comp) == fam):
                violations += 1

    elapsed = time.monotonic() - t0
    ok = violations == 0 and elapsed < 10.0
    report("criterion 1 (Wilson families + companions)",
           ok, f"violations={violations} time={elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 2. decomposition on 1000 seeded random functions, s = 10
# ---------------------------------------------------------------------------


def test_criterion_2_decomposition_corpus():
    t0 = time.monotonic()
    rng = np.random.default_rng(20211)
    worst_slack, fails = -np.inf, 0
    for trial in range(1000):
        f = GridFunction(0, 10, rng.standard_normal(1024))
        d = decompose(f)
        rep = verify_decomposition(f, d, tol=1e-9)
        worst_slack = max(worst_slack, rep["i_pointwise"]["worst_slack"])
        if not rep["passed"]:
            fails += 1
    elapsed = time.monotonic() - t0
    ok = fails == 0 and elapsed < 300.0
    report("criterion 2 (Theorem-4.1 decomposition, 1000 fns)",
           ok, f"fails={fails} worst_(i)_slack={worst_slack:.3g} time={elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 3. oscillation calculus oracles, 1000 cases
# ---------------------------------------------------------------------------


def test_criterion_3_oscillation_oracles():
    rng = np.random.default_rng(303)
    lam = Fraction(1, 8)
    n = 64
    worst_osc = 0.0
    bad = {"median": 0, "rearr": 0, "lemma43": 0, "ineq41": 0}
    for case in range(1000):
        f = GridFunction(0, 6, rng.standard_normal(n))
        # two-pointer omega vs brute force over candidate centers
        vals = np.sort(f.values)
        cands = np.unique(np.concatenate([(vals[:, None] + vals[None, :]).ravel() / 2.0, vals]))
        allowed = int(lam * n)
        dev = np.sort(np.abs(f.values[None, :] - cands[:, None]), axis=1)[:, ::-1]
        brute = float(np.min(dev[:, allowed]))
        worst_osc = max(worst_osc, abs(local_osc(f, None, lam) - brute))

        # median vs exhaustive scan for the min-|m| valid value
        m = median(f)
        valid = [v for v in vals
                 if np.sum(f.values > v) * 2 <= n and np.sum(f.values < v) * 2 <= n]
        if m != min(valid, key=lambda v: (abs(v), v)):
            bad["median"] += 1

        # rearrangement inf property
        t = float(rng.uniform(1 / n, 1.0))
        r = rearrangement_value(f, None, t)
        if np.sum(np.abs(f.values) > r) / n > t:
            bad["rearr"] += 1
        if r > 0 and np.sum(np.abs(f.values) > r - 1e-9 * (1 + r)) / n <= t:
            bad["rearr"] += 1

        # inequality (4.1)
        lev = int(rng.integers(0, 5))
        size = n >> lev
        a = int(rng.integers(0, n // size)) * size
        if abs(median(f, (a, a + size))) > rearrangement_value(f, (a, a + size), size / n / 2):
            bad["ineq41"] += 1

        # Lemma 4.3 on every 4th case
        if case % 4 == 0:
            k = int(rng.integers(2, 5))
            fs = [GridFunction(0, 6, rng.standard_normal(n)) for _ in range(k)]
            tot = fs[0].with_values(np.sum([g.values for g in fs], axis=0))
            lhs = local_osc(tot, (a, a + size), lam)
            rhs = sum(local_osc(g, (a, a + size), Fraction(lam, k)) for g in fs)
            if lhs > rhs + 1e-12:
                bad["lemma43"] += 1

    ok = worst_osc <= 1e-12 and all(v == 0 for v in bad.values())
    report("criterion 3 (oscillation calculus oracles, 1000 cases)",
           ok, f"worst_osc_diff={worst_osc:.2g} failures={bad}")
    assert ok


# ---------------------------------------------------------------------------
# 4. discrete Lemma 5.1 sandwich at s = 8, LP mode, q = 17
# ---------------------------------------------------------------------------


def test_criterion_4_sandwich():
    t0 = time.monotonic()
    worst_left, worst_right = -np.inf, -np.inf
    for label, f in corpus_functions(seed=51, resolution_s=8, n_random=40):
        eng = intrinsic_engine(f, alpha=0.5, q=17, mode="lp")
        g1 = eng.g_cone(1.0).values
        gt = eng.g_tilde().values
        g4 = eng.g_cone(4.0, closed=True).values
        worst_left = max(worst_left, float(np.max(g1 - gt)))
        worst_right = max(worst_right, float(np.max(gt - g4)))
    ok = worst_left <= 1e-12 and worst_right <= 1e-12
    report("criterion 4 (Lemma 5.1 sandwich, 50 fns, s=8)",
           ok, f"left={worst_left:.2g} right={worst_right:.2g} time={time.monotonic()-t0:.0f}s")
    assert ok


# ---------------------------------------------------------------------------
# 5. LP evaluator vs lattice oracle (q = 5); dictionary below LP
# ---------------------------------------------------------------------------


def lattice_sup_q5(c, alpha=0.5, step=1e-3, box=0.85):
    u = np.linspace(-1, 1, 5)
    grid = np.arange(-box, box + step / 2, step)
    a, b = np.meshgrid(grid, grid, indexing="ij")
    phis = [np.zeros_like(a), a, b, -(a + b), np.zeros_like(a)]
    feas = np.ones_like(a, dtype=bool)
    for i in range(5):
        for j in range(i + 1, 5):
            feas &= np.abs(phis[i] - phis[j]) <= (u[j] - u[i]) ** alpha
    obj = np.abs(sum(ci * p for ci, p in zip(c, phis)))
    return float(np.max(np.where(feas, obj, 0.0)))


def test_criterion_5_lp_oracles():
    rng = np.random.default_rng(55)
    cls5 = _holder_class(0.5, 5)
    cls17 = _holder_class(0.5, 17)
    worst5, ncases = 0.0, 0
    for _ in range(24):
        vals = np.zeros(64)
        vals[int(rng.integers(0, 64))] = 1.0
        f = GridFunction(0, 6, vals)
        c = hat_coefficients(f, float(rng.uniform(0, 1)), float(rng.uniform(0.05, 0.6)), 5)
        tol = 1e-3 * float(np.sum(np.abs(c)))
        if tol == 0:
            continue
        ncases += 1
        worst5 = max(worst5, abs(cls5.lp_sup(c) - lattice_sup_q5(c)) - tol)
    worst_dict = -np.inf
    for _, f in corpus_functions(seed=56, resolution_s=6, n_random=10):
        for _ in range(10):
            y = float(rng.uniform(-0.2, 1.2))
            t = float(rng.uniform(0.02, 1.0))
            c = hat_coefficients(f, y, t, 17)
            worst_dict = max(worst_dict, cls17.dict_sup(c) - cls17.lp_sup(c))
    ok = worst5 <= 0 and ncases >= 10 and worst_dict <= 1e-9
    report("criterion 5 (LP vs lattice oracle; dictionary <= LP)",
           ok, f"lattice_excess={worst5:.2g} on {ncases} cases, dict-lp={worst_dict:.2g}")
    assert ok


# ---------------------------------------------------------------------------
# 6. ratio scans: bounded, drift <= 1.5 under s -> s+1, archived as CSV
# ---------------------------------------------------------------------------

SCAN_IDS = ("5.2", "5.3", "5.9", "2.1", "2.2", "2.3", "5.13", "5.5-dom")


@pytest.mark.parametrize("lemma", SCAN_IDS)
def test_criterion_6_ratio_scan(lemma):
    t0 = time.monotonic()
    rep = ratio_scan(lemma, seed=6, n_random=50)
    path = REPORT_DIR / f"scan-{lemma.replace('.', '_')}.csv"
    emit(rep, str(path))
    ok = rep.passed and np.isfinite(rep.max_base)
    report(f"criterion 6 (ratio scan {lemma})",
           ok, f"max={rep.max_base:.4g} drift={rep.drift:.3f} argmax={rep.argmax} "
               f"time={time.monotonic()-t0:.0f}s -> {path}")
    assert ok


# ---------------------------------------------------------------------------
# 7. exponent reproduction, frozen windows
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(ACCEPTANCE_RUNS))
def test_criterion_7_exponent(name):
    spec, target, (lo, hi) = ACCEPTANCE_RUNS[name]
    t0 = time.monotonic()
    result = exponent_experiment(spec)
    elapsed = time.monotonic() - t0
    emit(result, str(REPORT_DIR / f"exponent-{name}.csv"))
    ok = lo <= result.slope <= hi and elapsed < 600.0
    # fitted slopes are lower-bound estimates; they must not overshoot
    ok = ok and result.slope <= target + 0.1
    report(f"criterion 7 (exponent {name})",
           ok, f"slope={result.slope:.4f} target={target:.3g} window=[{lo},{hi}] "
               f"r2={result.r2:.3f} time={elapsed:.0f}s")
    assert ok


# ---------------------------------------------------------------------------
# 8. determinism: repeated runs byte-identical
# ---------------------------------------------------------------------------


def test_criterion_8_determinism(tmp_path):
    spec = ACCEPTANCE_RUNS["sd-p3"][0]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit(exponent_experiment(spec), str(a))
    emit(exponent_experiment(spec), str(b))
    same_fit = a.read_bytes() == b.read_bytes()

    r1, r2 = ratio_scan("2.2", seed=8, n_random=10), ratio_scan("2.2", seed=8, n_random=10)
    c, d = tmp_path / "c.csv", tmp_path / "d.csv"
    emit(r1, str(c))
    emit(r2, str(d))
    same_scan = c.read_bytes() == d.read_bytes()
    ok = same_fit and same_scan
    report("criterion 8 (determinism)", ok, f"fit={same_fit} scan={same_scan}")
    assert ok
