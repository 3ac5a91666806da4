"""Acceptance criteria, one test per criterion.

The terminal summary prints one PASS/FAIL line per criterion (see conftest).
Each test is self-contained and seeded.
"""
import filecmp
import math
import os
import time

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from toepspec import harness
from toepspec.cli import main as cli_main
from toepspec.grushin import build_grushin
from toepspec.harness import ExperimentConfig, run_experiment
from toepspec.matrices import build_circulant, build_toeplitz, noise_model, perturbed
from toepspec.quasimodes import quasimode_basis
from toepspec.spectral import apply_op, eigenpairs, fundamental_solution, gap_report, singular_triplets
from toepspec.symbol import LaurentSymbol, roots_at
from toepspec.symfunc import (UpperToeplitz, cauchy_binet_det_k, det_expansion, direct_minor,
                              h_enumerate, h_jacobi, toeplitz_minor, widom_determinant)

from ._util import LIMACON, cnormal, random_point, random_symbol

acc = pytest.mark.acceptance
WORKERS = max(1, min(4, os.cpu_count() or 1))


def _budget(t0, seconds):
    el = time.perf_counter() - t0
    assert el < seconds, f"runtime {el:.1f}s over the {seconds}s budget"


@acc(1, "Grushin problem exactness and norm bounds")
def test_grushin_exactness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    done = 0
    while done < 100:
        sym = random_symbol(rng)
        n = int(rng.integers(8, 257))
        m = int(rng.integers(1, 6))
        st = singular_triplets(sym, random_point(rng), n)
        if st.t[m] - st.t[m - 1] <= 1e-8 * max(st.t[m], 1.0):
            continue
        g = build_grushin(st, m)
        nr = g.norms()
        assert g.inverse_error() <= 1e-10
        assert nr["E"] <= 1 / g.alpha + 1e-9
        assert abs(nr["E_plus"] - 1) <= 1e-9 and abs(nr["E_minus"] - 1) <= 1e-9
        assert nr["E_minus_plus"] <= g.alpha + 1e-12
        done += 1
    _budget(t0, 30)


@acc(2, "circulant spectrum equals symbol samples")
def test_circulant_spectrum():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    for _ in range(20):
        sym = random_symbol(rng)
        for n in (16, 64, 256):
            if n <= sym.width:
                continue
            w = np.linalg.eigvals(build_circulant(sym, n).storage)
            ref = sym(np.exp(2j * np.pi * np.arange(n) / n))
            cost = np.abs(w[:, None] - ref[None, :])
            r, c = linear_sum_assignment(cost)
            assert cost[r, c].max() <= 1e-9
    _budget(t0, 20)


def _min_sep(roots):
    if roots.size < 2:
        return math.inf
    d = np.abs(roots[:, None] - roots[None, :])
    np.fill_diagonal(d, np.inf)
    return float(d.min())


@acc(3, "closed-form determinant against LU")
def test_widom_vs_lu():
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    done = 0
    while done < 200:
        sym = random_symbol(rng, n_plus=int(rng.integers(0, 4)), n_minus=int(rng.integers(1, 4)))
        z = random_point(rng)
        prof = roots_at(sym, z)
        if prof.m0 or prof.m_inf or _min_sep(prof.roots) < 1e-3:
            continue
        n = int(rng.integers(sym.width + 1, 33))
        ref = np.linalg.det(build_toeplitz(sym, n, z).storage)
        ours = widom_determinant(sym, z, n)
        assert abs(ours - ref) <= 1e-8 * abs(ref), (sym, z, n)
        done += 1
    _budget(t0, 30)


def _xy(rng, n, g):
    k = int(rng.integers(0, min(n, 4) + 1))
    X = sorted(int(x) for x in rng.choice(np.arange(1, n + 1), k, replace=False))
    if rng.random() < 0.5:
        Y = sorted(int(y) for y in rng.choice(np.arange(1, n + 1), k, replace=False))
    else:
        # shift each removed row left by at most g; keeps many cases non-vanishing
        Y = sorted({max(1, x - int(rng.integers(0, g + 1))) for x in X})
        while len(Y) < k:
            Y = sorted(set(Y) | {int(rng.integers(1, n + 1))})
    return X, Y


def _interlaces(X, Y, g):
    k = len(X)
    return all(X[i] >= Y[i] and (i + g >= k or X[i] < Y[i + g]) for i in range(k))


@acc(4, "skew Schur values of banded triangular Toeplitz minors")
def test_minor_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    zeros = nonzeros = 0
    for _ in range(500):
        g = int(rng.integers(1, 4))
        n = int(rng.integers(g + 1, 13))
        c = rng.standard_normal(g + 1) + 1j * rng.standard_normal(g + 1)
        t = UpperToeplitz(c, n)
        X, Y = _xy(rng, n, g)
        ours = toeplitz_minor(t, X, Y)
        ref = direct_minor(t.dense(), X, Y)
        if not _interlaces(X, Y, g):
            assert ours == 0
            assert abs(ref) <= 1e-12 * max(1.0, np.abs(c).max()) ** n
            zeros += 1
        elif ours == 0:
            assert abs(ref) <= 1e-12 * max(1.0, np.abs(c).max()) ** n
        else:
            assert abs(ours - ref) <= 1e-8 * abs(ref), (c, n, X, Y)
            nonzeros += 1
    assert zeros > 50 and nonzeros > 100
    _budget(t0, 60)


@acc(5, "complete homogeneous polynomials by enumeration and divided differences")
def test_jacobi_h():
    t0 = time.perf_counter()
    rng = np.random.default_rng(505)
    for _ in range(200):
        w = int(rng.integers(1, 5))
        t = rng.standard_normal(w) + 1j * rng.standard_normal(w)
        for r in range(7):
            e = h_enumerate(r, t)
            assert abs(h_jacobi(r, t) - e) <= 1e-10 * max(abs(e), 1e-300)
    _budget(t0, 10)


def _case1_symbol(rng):
    while True:
        npl, nmi = (int(x) for x in rng.integers(0, 3, 2))
        if npl + nmi == 0:
            continue
        sym = random_symbol(rng, n_plus=npl, n_minus=nmi)
        prof = roots_at(sym, 0.0)
        if prof.on_curve or prof.m0 or _min_sep(prof.roots) < 1e-3:
            continue
        if prof.roots.size and np.min(np.abs(np.abs(prof.roots) - 1)) < 0.05:
            continue
        return sym


@acc(6, "fundamental solution of the convolution operator")
def test_fundamental_solution():
    t0 = time.perf_counter()
    rng = np.random.default_rng(606)
    for _ in range(50):
        q = _case1_symbol(rng)
        e = fundamental_solution(q, (-60, 60))
        op = apply_op(q, e, (-50, 50))
        assert max(abs(v - (n == 0)) for n, v in op.items()) <= 1e-8
    # l1 mass grows like N / log N when a root sits log N / N inside the circle
    ns = np.array([128, 256, 512, 1024, 2048, 4096])
    mass = []
    for n in ns:
        rho = 1 - math.log(n) / n
        q = LaurentSymbol({-1: 1.0, 0: -(rho + 3), 1: 3 * rho})  # (zeta - rho)(zeta - 3) / zeta
        hi = int(40 / (1 - rho))
        e = fundamental_solution(q, (-60, hi))
        mass.append(sum(abs(v) for v in e.values()))
    slope = np.polyfit(np.log(ns / np.log(ns)), np.log(mass), 1)[0]
    assert abs(slope - 1) <= 0.25, slope
    _budget(t0, 60)


@acc(7, "quasimode residuals and near orthonormality")
def test_quasimode_quality():
    t0 = time.perf_counter()
    worst = []
    for n in (128, 256, 512, 1024):
        z = 2 - 2 * math.log(n) / n
        qb = quasimode_basis(LIMACON, z, n)
        assert qb.class_2
        worst.append(float(max(qb.residuals[qb.class_2])))
    assert all(a >= b for a, b in zip(worst, worst[1:])), worst
    t = singular_triplets(LIMACON, z, 1024, k=abs(qb.d) + 1).t
    assert max(qb.residuals) <= 10 * t[abs(qb.d) - 1]
    assert qb.gram_error <= 0.05
    _budget(t0, 300)


@acc(8, "singular value splitting")
def test_singular_value_splitting():
    t0 = time.perf_counter()
    n = 1024
    s = math.log(n) / n
    g1 = gap_report(LIMACON, 2 - 2 * s, n)
    assert g1.d == 1 and g1.t_next / g1.t_d >= 10
    g2 = gap_report(LIMACON, -2 * s, n)
    assert g2.d == 2
    assert g2.t_low <= 1e-10  # exponential tier
    assert g2.t_mid_lo >= 1e3 * g2.t_low and g2.t_mid_lo <= 1e-3 * s  # polynomial tier
    assert g2.t_next >= 0.5 * s  # order log N / N
    _budget(t0, 300)


@acc(9, "Jordan block eigenvalues stay off the unit circle")
def test_jordan_separation():
    t0 = time.perf_counter()
    n, gamma, gp = 512, 1.5, 1.25
    ok = 0
    for seed in range(20):
        smp = perturbed("z", n, gamma, seed, noise_model("ginibre"))
        w = eigenpairs(smp.matrix, vectors=False)
        ok += float(np.min((1 - np.abs(w)) * n / math.log(n))) >= 0.2 * (gp - 1)
    assert ok >= 18, ok
    _budget(t0, 180)


@acc(10, "bulk eigenvector localization")
def test_localization(tmp_path):
    t0 = time.perf_counter()
    n = 1024
    cfg = ExperimentConfig.from_dict({"symbol": LIMACON, "N": n, "gamma": 1.2, "trials": 10,
                                      "seed": 10, "workers": WORKERS, "out_dir": str(tmp_path)})
    summary, code, _ = run_experiment(cfg, write=False)
    assert code == 0
    med = summary["medians"]
    assert med["median_projection_deficit_good_d1"] <= 0.15
    assert med["median_supp_good_d1"] <= 0.2 * n
    assert med["median_right_tail_half_good_d1"] <= 0.05
    _budget(t0, 600)


@acc(11, "noise strength contrast between gamma 0.8 and 1.2")
def test_gamma_contrast(tmp_path):
    t0 = time.perf_counter()
    n = 1024
    runs = {}
    for gamma in (0.8, 1.2):
        cfg = ExperimentConfig.from_dict({"symbol": LIMACON, "N": n, "gamma": gamma, "trials": 10,
                                          "seed": 11, "workers": WORKERS, "localization": False,
                                          "profiles": False, "out_dir": str(tmp_path)})
        runs[gamma] = run_experiment(cfg, write=False)[0]["trials"]
    lo, hi = runs[0.8], runs[1.2]
    supp_wins = sum(a["median_supp_bulk"] > b["median_supp_bulk"] for a, b in zip(lo, hi))
    ratio = (np.median([t["median_dist_scaled"] for t in lo])
             / np.median([t["median_dist_scaled"] for t in hi]))
    assert supp_wins >= 8, supp_wins
    assert ratio >= 2, f"median curve distance ratio {ratio:.3f} < 2"
    _budget(t0, 900)


@acc(12, "noise expansion coefficients")
def test_det_k_consistency():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1212)
    for _ in range(50):
        sym = random_symbol(rng, max_band=2)
        n = int(rng.integers(max(8, sym.width + 1), 129))
        z = random_point(rng, 1.5)
        gamma = float(rng.uniform(1.0, 2.0))
        q = cnormal(rng, (n, n))
        de = det_expansion(sym, z, gamma, q)
        full = np.linalg.det(build_toeplitz(sym, n, z).storage + n ** -gamma * q)
        assert abs(np.sum(de.det_k) - full) <= 1e-6 * abs(full)
    for _ in range(20):
        sym = random_symbol(rng, max_band=2)
        n = int(rng.integers(max(3, sym.width + 1), 9))
        z = random_point(rng, 1.5)
        q = cnormal(rng, (n, n))
        de = det_expansion(sym, z, 1.5, q)
        pz = build_toeplitz(sym, n, z).storage
        scale = float(np.abs(de.det_k).max())
        for k in (0, 1, 2):
            ref = cauchy_binet_det_k(pz, q, n ** -1.5, k)
            assert abs(de.det_k[k] - ref) <= 1e-8 * max(abs(ref), scale * 1e-8)
    _budget(t0, 120)


@acc(13, "repeated experiment runs are byte identical")
def test_determinism(tmp_path):
    out = tmp_path / "run"
    argv = ["experiment", "--symbol", LIMACON, "--n", "96", "--trials", "3", "--seed", "13",
            "--workers", str(WORKERS), "--out", str(out)]
    assert cli_main(argv) == 0
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert cli_main(argv) == 0
    second = {p.name: p.read_bytes() for p in out.iterdir()}
    assert first.keys() == second.keys() and len(first) == 10
    assert all(first[k] == second[k] for k in first)
