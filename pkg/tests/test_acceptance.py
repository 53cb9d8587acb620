"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""

import cmath
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from laws import gamma_laws, residue_limit  # noqa: E402

from ellint import Bases, TorusGrid, beta, core, inversion, series  # noqa: E402
from ellint.errors import NearPole  # noqa: E402
from ellint.identities import sweep  # noqa: E402
from ellint.registry import RunConfig, run_sample  # noqa: E402

LINES: dict[int, str] = {}


def record(number, ok, text):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {text}"
    LINES[number] = line
    print(line)
    return ok


def run_samples(name, cfg, count, tol, budget_s):
    worst, slowest = 0.0, 0.0
    for k in range(count):
        start = time.perf_counter()
        rep = run_sample(name, cfg, k)
        slowest = max(slowest, time.perf_counter() - start)
        worst = max(worst, math.inf if rep.error or rep.rel_err is None else rep.rel_err)
    return worst < tol and slowest < budget_s, f"max rel_err {worst:.2e} < {tol:.0e}, slowest {slowest:.2f} s"


def criterion_1():
    ok, text = run_samples("univariate", RunConfig(grid=256, m_cap=0.3, modulus_cap=0.85), 20, 1e-9, 5)
    return record(1, ok, f"univariate integral, 20 samples at N=256: {text}")


def criterion_2():
    ok, text = run_samples("an", RunConfig(n=2, grid=128), 5, 1e-7, 120)
    return record(2, ok, f"A_2 integral, 5 samples at N=128: {text}")


def criterion_3():
    ok, text = run_samples("cn", RunConfig(n=2, grid=128), 5, 1e-7, 120)
    return record(3, ok, f"C_2 integral, 5 samples at N=128: {text}")


def criterion_4():
    ok1, t1 = run_samples("new_an", RunConfig(n=1, grid=256), 10, 1e-9, 60)
    ok2, t2 = run_samples("new_an", RunConfig(n=2, grid=128), 5, 1e-7, 120)
    ok3, t3 = run_samples("new_an_qlimit", RunConfig(n=2, grid=128), 5, 1e-8, 120)
    return record(4, ok1 and ok2 and ok3, f"new A_n integral: n=1 {t1}; n=2 {t2}; p=0 n=2 {t3}")


def criterion_5():
    # the registry cycles the test-function tag with the seed
    ok, text = run_samples("inversion_n1", RunConfig(grid=256), 10, 1e-7, 120)
    return record(5, ok, f"rank-one inversion, 10 samples over 3 tags at N=256: {text}")


def criterion_6():
    fhat = roundtrip = sym = 0.0
    for seed in range(5):
        smp = inversion.sample_rank_one(seed, "newpair_f")
        res = inversion.bailey_pair_n1(smp.f.s, smp.t, smp.bases, TorusGrid(1, 256))
        fhat, roundtrip = max(fhat, res.fhat_residual), max(roundtrip, res.roundtrip_residual)
        probe = inversion.default_probe_points(smp.t)
        sym = max(sym, inversion.ffhat_symmetry_residual(smp.f.s, smp.t, smp.bases, probe))
    ok = fhat < 1e-7 and roundtrip < 1e-7 and sym < 1e-11
    return record(6, ok, f"Bailey pair, 5 samples: fhat {fhat:.2e}, round trip {roundtrip:.2e} (< 1e-7); "
                         f"symmetry {sym:.2e} (< 1e-11)")


def criterion_7():
    worst = {"ros": 0.0, "eb": 0.0, "reversal": 0.0}
    for k in range(50):
        rng = np.random.default_rng([7, k])
        n = 1 + k % 3
        box = tuple(int(v) for v in rng.integers(0, 3, size=n))
        p = series.sample_ros(n, box, k)
        worst["ros"] = max(worst["ros"], abs(series.ros_lhs(p) / series.ros_rhs(p) - 1))
        worst["reversal"] = max(worst["reversal"], series.reversal_residual(p))
        e = series.sample_eb(n, box, k)
        worst["eb"] = max(worst["eb"], abs(series.eb_lhs(e) / series.eb_rhs(e) - 1))
    ok = worst["ros"] < 1e-11 and worst["eb"] < 1e-11 and worst["reversal"] < 1e-12
    return record(7, ok, f"series sums, 50 samples each, n <= 3, N_i <= 2: Ros {worst['ros']:.2e}, "
                         f"eB {worst['eb']:.2e} (< 1e-11); reversal {worst['reversal']:.2e} (< 1e-12)")


def criterion_8():
    names = ("theta1", "theta2", "theta3", "an_partial_fraction", "c_partial_fraction", "qdiff_lemma")
    worst = max(sweep(name, 3, 100, seed=8).max_residual for name in names)
    contiguous = sweep("contiguous_I", 3, 100, seed=8, threshold=1e-9).max_residual
    ok = worst < 1e-10 and contiguous < 1e-9
    return record(8, ok, f"theta identities and q-difference lemma, 100 points each: {worst:.2e} (< 1e-10); "
                         f"contiguous relation {contiguous:.2e} (< 1e-9)")


def _random_annulus(rng, lo, hi):
    return cmath.rect(math.exp(rng.uniform(math.log(lo), math.log(hi))), rng.uniform(-math.pi, math.pi))


def criterion_9():
    rng = np.random.default_rng(9)
    worst = dict.fromkeys(("pq_symmetry", "reflection", "q_shift", "p_shift", "theta_reflection", "limit"), 0.0)
    done = 0
    while done < 200:
        b = Bases(_random_annulus(rng, 0.02, 0.5), _random_annulus(rng, 0.02, 0.5))
        z = _random_annulus(rng, 0.6, 1.6)
        try:
            laws = gamma_laws(z, b)
        except NearPole:
            continue
        laws["limit"] = abs(residue_limit(z, b) / core.residue_constant(b) - 1)
        for k, v in laws.items():
            worst[k] = max(worst[k], v)
        done += 1
    ok = max(worst.values()) < 1e-11
    return record(9, ok, "core laws over 200 points: " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
                  + " (< 1e-11)")


def criterion_10():
    rng = np.random.default_rng(10)
    fact = weyl = coincide = exp2 = 0.0
    for n in (1, 2, 3):
        b = Bases(0.1 * cmath.exp(1j * rng.uniform(-math.pi, math.pi)), 0.1 * cmath.exp(1j * rng.uniform(-math.pi, math.pi)))
        t = 0.8 * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        t1 = 0.6 * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        points = lambda m: [tuple([cmath.rect(math.exp(rng.uniform(-0.2, 0.2)), rng.uniform(-math.pi, math.pi))  # noqa: E731
                                   for _ in range(m)] for _ in range(3)) for _ in range(5)]
        for family in ("Delta_AA", "Delta_AC", "Delta_CA"):
            fact = max(fact, inversion.check_factorization(family, points(n), n, t, b))
        fact = max(fact, inversion.check_factorization("Delta_1", points(1), 1, t1, b))
        weyl = max(weyl, *inversion.weyl_residuals(n, t, b, seed=n).values())
        coincide = max(coincide, *inversion.rank_one_coincidence([tuple(c[0] for c in pt) for pt in points(1)],
                                                                 t1, b).values())
        x = abs(t1) ** 0.5 * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        zs = [cmath.exp(1j * a) for a in rng.uniform(0.1, 3.0, 4)]
        exp2 = max(exp2, inversion.exp2_residual(x, t1, b, zs, TorusGrid(1, 256)))
    ok = fact < 1e-11 and weyl < 1e-11 and coincide < 1e-11 and exp2 < 1e-9
    return record(10, ok, f"kernels, n = 1..3: factorizations {fact:.2e}, Weyl {weyl:.2e}, "
                          f"rank-one coincidence {coincide:.2e} (< 1e-11); annihilation {exp2:.2e} (< 1e-9)")


def criterion_11(floor=1e-13):
    worst = 0.0
    for seed in range(20):
        p = beta.sample_params("univariate", seed, modulus_cap=0.85, m_cap=0.3)
        rhs = beta.univariate_rhs(p)
        errs = [abs(beta.univariate_lhs(p, TorusGrid(1, n)).value / rhs - 1) for n in (64, 128, 256)]
        for a, b in zip(errs, errs[1:]):
            # once at rounding level there is nothing left to contract
            if a >= floor and b >= floor:
                worst = max(worst, b / a)
    ok = worst <= 1e-2
    return record(11, ok, f"quadrature convergence, 20 univariate integrands, N = 64, 128, 256: "
                          f"worst contraction per doubling {worst:.2e} (<= 1e-2, errors below {floor:.0e} skipped)")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9, criterion_10, criterion_11]


@pytest.mark.parametrize("check", CRITERIA, ids=lambda f: f.__name__)
def test_criterion(check):
    assert check(), LINES[int(check.__name__.split("_")[1])]


if __name__ == "__main__":
    results = [check() for check in CRITERIA]
    sys.exit(0 if all(results) else 1)
