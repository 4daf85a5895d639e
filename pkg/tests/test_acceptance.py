"""Acceptance suite: one test per criterion, each reporting a pass/fail line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary lines are
printed at the end of the session.
"""
import json
import subprocess
import sys
import time
from math import prod, sqrt

import numpy as np
import pytest

from rtsms.baselines import (
    adaptive_r_sthosvd,
    hosvd,
    r_gn_st_tucker,
    r_sthosvd,
    sthosvd,
    sthosvd_full,
)
from rtsms.driver import RtsmsConfig, rtsms, rtsms_fixed_rank
from rtsms.gallery import function_tensor, hilbert_tensor, noisy_lowrank, runge
from rtsms.runner import geometric_mean
from rtsms.sketched_lsq import LsqConfig, solve_factor
from rtsms.sketching import RandomStream
from rtsms.tensor import TuckerDecomposition, fold, mode_product, reconstruct, relative_residual, unfold

from conftest import illconditioned_lsq, lowrank_tensor, prop32_instance, sthosvd_error_terms

pytestmark = pytest.mark.acceptance

RESULTS = []


def report(n, ok, detail):
    RESULTS.append(f"[{'PASS' if ok else 'FAIL'}] criterion {n:>2}: {detail}")
    assert ok, detail


def test_01_algebra_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    failures = 0
    for _ in range(200):
        d = int(rng.integers(1, 6))
        dims = tuple(int(x) for x in rng.integers(1, 6, size=d))
        t = rng.standard_normal(dims)
        k = int(rng.integers(0, d))
        failures += any(not np.array_equal(fold(unfold(t, m), m, dims), t) for m in range(d))
        f = rng.standard_normal((int(rng.integers(1, 5)), dims[k]))
        g = rng.standard_normal((int(rng.integers(1, 5)), f.shape[0]))
        lhs = mode_product(mode_product(t, f, k), g, k)
        rhs = mode_product(t, g @ f, k)
        failures += np.linalg.norm(lhs - rhs) > 1e-12 * np.linalg.norm(rhs)
        ranks = [int(rng.integers(1, n + 1)) for n in dims]
        core = rng.standard_normal(ranks)
        factors = [rng.standard_normal((n, r)) for n, r in zip(dims, ranks)]
        kron = np.ones((1, 1))
        for u in factors:
            kron = np.kron(u, kron)
        vec = kron @ core.ravel(order="F")
        full = reconstruct(TuckerDecomposition(core, factors)).ravel(order="F")
        failures += np.linalg.norm(full - vec) > 1e-12 * np.linalg.norm(vec)
    secs = time.perf_counter() - t0
    report(1, failures == 0 and secs < 10, f"algebra identities on 200 shapes: {failures} failures, {secs:.2f} s")


def test_02_exactness():
    dims, ranks = (30, 30, 30), (3, 3, 3)
    a0 = lowrank_tensor(dims, ranks, np.random.default_rng(2))
    det = {
        "hosvd": relative_residual(a0, hosvd(a0, ranks)),
        "sthosvd": relative_residual(a0, sthosvd(a0, ranks)),
    }
    randomized = {
        "r_sthosvd": lambda a, s: r_sthosvd(a, ranks, rs=RandomStream(s)),
        "adaptive_r_sthosvd": lambda a, s: adaptive_r_sthosvd(a, 1e-10, rs=RandomStream(s)),
        "gn-st": lambda a, s: r_gn_st_tucker(a, ranks, rs=RandomStream(s)),
        "rtsms fixed": lambda a, s: rtsms_fixed_rank(a, ranks, rs=RandomStream(s), compute_residual=False)[0],
        "rtsms adaptive": lambda a, s: rtsms(a, RtsmsConfig(tol=1e-10), RandomStream(s), compute_residual=False)[0],
    }
    hits = {}
    for name, fn in randomized.items():
        hits[name] = 0
        for seed in range(100):
            a = lowrank_tensor(dims, ranks, np.random.default_rng(10_000 + seed))
            hits[name] += relative_residual(a, fn(a, seed)) <= 1e-8
    ok = all(v <= 1e-8 for v in det.values()) and all(h >= 95 for h in hits.values())
    detail = ", ".join([f"{k} {v:.1e}" for k, v in det.items()] + [f"{k} {h}/100" for k, h in hits.items()])
    report(2, ok, f"exact rank-(3,3,3) recovery: {detail}")


def test_03_sthosvd_error_identity():
    rng = np.random.default_rng(3)
    worst_identity, bound_ok = 0.0, True
    for _ in range(20):
        a = rng.standard_normal((12, 10, 8))
        ranks = tuple(int(rng.integers(1, n + 1)) for n in a.shape)
        total, steps, discarded = sthosvd_error_terms(a, ranks)
        if total > 0:
            worst_identity = max(worst_identity, abs(total - steps) / total)
        # "exact" up to the rounding of the two sums themselves
        bound_ok &= total <= discarded * (1 + 1e-12)
    report(3, worst_identity <= 1e-10 and bound_ok,
           f"STHOSVD error identity worst rel. gap {worst_identity:.1e}, discarded-sigma bound held: {bound_ok}")


def test_04_leverage_sampled_solve_bound():
    violations = 0
    for seed in range(100):
        realized, bound = prop32_instance(seed)
        violations += realized > bound * (1 + 1e-12)
    report(4, violations == 0, f"sampled LS residual bound on 100 instances: {violations} violations")


def test_05_tolerance_tracking():
    t0 = time.perf_counter()
    a = function_tensor(runge, 100, 100, 100)
    rows, ok = [], True
    for tol in (1e-2, 1e-4, 1e-6, 1e-8):
        ref = sthosvd_full(a, tol=tol).decomposition.ranks
        dec, rep = rtsms(a, RtsmsConfig(tol=tol, convert_to_hosvd=True), RandomStream(0))
        close = all(abs(x - y) <= 3 for x, y in zip(dec.ranks, ref))
        ok &= rep.relative_residual <= 10 * tol and close
        rows.append(f"tol {tol:.0e}: res {rep.relative_residual:.1e} ranks {dec.ranks} vs {ref}")
    secs = time.perf_counter() - t0
    report(5, ok and secs < 60, f"Runge 100^3 tracking ({secs:.1f} s); " + "; ".join(rows))


def test_06_fixed_rank_parity():
    h = hilbert_tensor(4, 30)
    rows, ok = [], True
    for r in (3, 5, 7):
        ranks = (r,) * 4
        ref = relative_residual(h, sthosvd(h, ranks))
        raw = geometric_mean([rtsms_fixed_rank(h, ranks, rs=RandomStream(s))[1].relative_residual for s in range(5)])
        cfg = RtsmsConfig(convert_to_hosvd=True)
        cut = geometric_mean([
            rtsms_fixed_rank(h, ranks, cfg, RandomStream(s), truncate_to_rank=True)[1].relative_residual
            for s in range(5)
        ])
        ok &= raw <= 10 * ref and cut <= 10 * ref
        rows.append(f"r={r}: sthosvd {ref:.1e}, rtsms {raw:.1e}, rtsms cut to r {cut:.1e}")
    report(6, ok, "Hilbert 30^4 fixed rank; " + "; ".join(rows))


def test_07_noise_floor():
    res = []
    for seed in range(5):
        a = noisy_lowrank(100, 10, 1e-6, RandomStream(seed))
        cfg = RtsmsConfig(convert_to_hosvd=True)
        _, rep = rtsms_fixed_rank(a, (10, 10, 10), cfg, RandomStream(seed), truncate_to_rank=True)
        res.append(rep.relative_residual)
    hits = sum(r <= 4e-6 for r in res)
    report(7, hits >= 4, f"noisy rank-10 100^3, RHOSVDSMS at (10,10,10): {hits}/5 within 4e-6 "
           f"(max {max(res):.2e})")


def error_bound_constant(s_sizes, r_hats, ells):
    total, running = 0.0, 1.0
    for s, r, l in zip(s_sizes, r_hats, ells):
        running *= sqrt(1 + s / (s - r - 1)) * sqrt(1 + r / (r - l - 1))
        total += running
    return total


def test_08_statistical_error_bound():
    ranks, r_hat, cfg = (3, 3, 3), 5, LsqConfig()
    s_sizes = [cfg.sample_size(r_hat, i == 0) for i in range(3)]  # 80, 60, 60
    const = error_bound_constant(s_sizes, [r_hat] * 3, [1] * 3)
    errs, opts = [], []
    for seed in range(30):
        g = np.random.default_rng(8_000 + seed)
        a = lowrank_tensor((20, 20, 20), ranks, g)
        a = a / np.linalg.norm(a)
        a = a + 1e-6 * g.standard_normal(a.shape) / sqrt(a.size)
        dec, _ = rtsms_fixed_rank(a, ranks, rs=RandomStream(seed), compute_residual=False)
        errs.append(np.linalg.norm(a - reconstruct(dec)))
        opts.append(np.linalg.norm(a - reconstruct(hosvd(a, ranks))))
    lhs, rhs = float(np.mean(errs)), const * float(np.mean(opts))
    report(8, lhs <= rhs, f"mean error {lhs:.2e} <= bound {rhs:.2e} (constant {const:.2f}, 30 seeds)")


def test_09_refinement_efficacy():
    on, off = [], []
    for seed in range(50):
        sk, a = illconditioned_lsq(seed)
        for flag, acc in ((True, on), (False, off)):
            f = solve_factor(sk, a, None, LsqConfig(refinement=flag), True, RandomStream(seed))
            acc.append(np.linalg.norm(f @ sk - a) / np.linalg.norm(a))
    m_on, m_off = float(np.median(on)), float(np.median(off))
    report(9, m_on <= m_off, f"median residual with refinement {m_on:.2e} vs without {m_off:.2e}")


def test_10_determinism(tmp_path):
    def cli(*args):
        subprocess.run([sys.executable, "-m", "rtsms.cli", *map(str, args)], check=True,
                       capture_output=True)

    src = tmp_path / "in.rten"
    cli("gallery", "noisy", "--dims", "30,30,30", "--true-rank", "4", "--seed", "3", "--out", src)
    blobs = []
    for run in range(2):
        outs = []
        for algo, flags in (("rtsms", ["--tol", "1e-5"]), ("rhosvdsms", ["--rank", "4,4,4"]),
                            ("rsthosvd", ["--rank", "4,4,4"]), ("adaptive-rsthosvd", ["--tol", "1e-4"]),
                            ("gn-st", ["--rank", "4,4,4"])):
            tuk, rep = tmp_path / f"{algo}{run}.rtuk", tmp_path / f"{algo}{run}.jsonl"
            cli("compress", "--in", src, "--out", tuk, "--algorithm", algo, *flags,
                "--seed", "11", "--report", rep, "--no-timings")
            outs.append(tuk.read_bytes() + rep.read_bytes())
        blobs.append(outs)
    same = sum(a == b for a, b in zip(*blobs))
    report(10, same == len(blobs[0]), f"byte-identical TuckerFiles and reports: {same}/{len(blobs[0])} algorithms")
