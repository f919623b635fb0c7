"""Acceptance suite: one test per criterion, each printing a single verdict line.

Run with ``pytest -s tests/test_acceptance.py`` to see the verdicts.
"""
import math
import time

import numpy as np
import pytest

from oracles import divergence_bruteforce, iid_vector, kt_prob, renyi_bruteforce
from renyi_redundancy.audit import (
    converse_beta,
    converse_epsilon,
    converse_lower_bound,
    jeffreys_gap,
    laplace_decomposition_binary,
    run_battery,
)
from renyi_redundancy.cli import endpoints_ordered
from renyi_redundancy.measures import scale_bijection, scaled_distribution, sundaresan_divergence
from renyi_redundancy.mixtures import divergence_to_mixture, jeffreys_mixture
from renyi_redundancy.solver import (
    ParameterGrid,
    asymptotic_constant,
    classical_redundancy_r0,
    renyi_redundancy,
    shtarkov_regret,
    zchannel_optimal_prior,
    zchannel_solve,
    zchannel_value,
)


def verdict(number: int, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def test_acceptance_01_zchannel_closed_forms():
    start = time.perf_counter()
    worst_value = worst_prior = 0.0
    for lam in (0.5, 1.0, 2.0, 4.0):
        res = zchannel_solve(lam)
        worst_value = max(worst_value, abs(res.value - zchannel_value(lam)))
        worst_prior = max(worst_prior, abs(res.weights[1] - zchannel_optimal_prior(lam)))
    elapsed = time.perf_counter() - start
    at_one = abs(zchannel_value(1.0) - math.log(4 / 3)) + abs(zchannel_optimal_prior(1.0) - 1 / 3)
    ok = worst_value <= 1e-6 and worst_prior <= 1e-6 and elapsed < 1.0 and at_one <= 1e-12
    verdict(1, ok, f"max |value diff|={worst_value:.2e} max |prior diff|={worst_prior:.2e} "
                   f"(tol 1e-6) runtime={elapsed:.3f}s (< 1 s)")


def test_acceptance_02_duality_certification():
    start = time.perf_counter()
    grid = ParameterGrid.binary(2001)
    worst = -math.inf
    for n in range(1, 9):
        for lam in (0.5, 1.0, 2.0):
            worst = max(worst, renyi_redundancy(n, 2, lam, grid=grid).gap)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-4 and elapsed < 120
    verdict(2, ok, f"max gap={worst:.2e} nats (tol 1e-4) runtime={elapsed:.1f}s (< 120 s)")


def test_acceptance_03_scaling_identity():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        k = int(rng.integers(2, 4))
        n = int(rng.integers(1, 5))
        theta = rng.dirichlet(np.ones(k))
        R = rng.dirichlet(np.ones(k ** n))
        lam = float(rng.uniform(0.05, 5))
        scaled = scaled_distribution(iid_vector(theta, n), 1 / (1 + lam))
        image = iid_vector(scale_bijection(theta, lam), n)
        lhs = renyi_bruteforce(scaled, R, lam)
        rhs = renyi_bruteforce(image, R, lam)
        worst = max(worst, abs(lhs - rhs))
    # sup of Sundaresan over a grid equals sup of Renyi over the relabelled grid
    n, lam = 3, 1.5
    Q = rng.dirichlet(np.ones(8))
    Q_scaled = scaled_distribution(Q, 1 / (1 + lam))
    grid = ParameterGrid.binary(201).interior().points
    sund = np.array([sundaresan_divergence(iid_vector(t, n), Q, lam) for t in grid])
    renyi = np.array([renyi_bruteforce(iid_vector(scale_bijection(t, lam), n), Q_scaled, lam)
                      for t in grid])
    sup_diff = abs(sund.max() - renyi.max())
    same_arg = int(np.argmax(sund)) == int(np.argmax(renyi))
    ok = worst <= 1e-12 and sup_diff <= 1e-12 and same_arg
    verdict(3, ok, f"max identity error={worst:.2e} over 1000 tuples (tol 1e-12); "
                   f"grid-sup difference={sup_diff:.2e}, same argmax={same_arg}")


def test_acceptance_04_bruteforce_equivalence():
    rng = np.random.default_rng(4)
    worst = 0.0
    count = 0
    for k in (2, 3):
        for n in range(1, 6):
            Q = jeffreys_mixture(n, k)
            kt = lambda s, k=k: kt_prob(s, k)
            for theta in rng.dirichlet(np.ones(k), size=50):
                for lam in (0.5, 1.0, 2.0):
                    got = divergence_to_mixture(theta, Q, lam)
                    want = divergence_bruteforce(theta, n, lam, kt)
                    worst = max(worst, abs(got - want))
                    count += 1
    verdict(4, worst <= 1e-12, f"max |type sum - sequence sum|={worst:.2e} over {count} cases (tol 1e-12)")


def test_acceptance_05_endpoint_sandwich():
    lambdas = (0.25, 0.5, 1.0, 2.0, 4.0)
    all_ordered = True
    for n in range(1, 9):
        r0 = classical_redundancy_r0(n, 2)
        brackets = [renyi_redundancy(n, 2, lam) for lam in lambdas]
        all_ordered &= endpoints_ordered(r0, brackets, shtarkov_regret(n, 2), slack=1e-6)
    r1_errors = [abs(shtarkov_regret(1, k) - math.log(k)) for k in (2, 3, 4, 5)]
    r2_error = abs(shtarkov_regret(2, 2) - math.log(2.5))
    ok = all_ordered and max(r1_errors) == 0.0 and r2_error <= 1e-12
    verdict(5, ok, f"sandwich holds for n<=8 (slack 1e-6): {all_ordered}; "
                   f"max |r_1 - ln k|={max(r1_errors):.1e} (exact); |r_2 - ln 2.5|={r2_error:.1e} (tol 1e-12)")


def test_acceptance_06_finite_n_trend():
    start = time.perf_counter()
    lam = 1.0
    grid = ParameterGrid.binary(2001).interior().points
    ns = [2 ** j for j in range(4, 13)]
    g = []
    for n in ns:
        sup = float(np.max(divergence_to_mixture(grid, jeffreys_mixture(n, 2), lam)))
        g.append(sup - 0.5 * math.log(n / (2 * math.pi)))
    elapsed = time.perf_counter() - start
    tail = [v for n, v in zip(ns, g) if n >= 64]
    monotone = all(b <= a for a, b in zip(tail, tail[1:])) or all(b >= a for a, b in zip(tail, tail[1:]))
    target = asymptotic_constant(2, lam)
    dist = abs(g[-1] - target)
    ok = monotone and dist <= 0.1 and elapsed < 300
    verdict(6, ok, f"g(4096)={g[-1]:.5f} vs {target:.5f} (|diff|={dist:.4f}, tol 0.1); "
                   f"monotone for n>=64: {monotone}; runtime={elapsed:.1f}s (< 300 s)")


def test_acceptance_07_audit_battery():
    start = time.perf_counter()
    report = run_battery()
    elapsed = time.perf_counter() - start
    worst = max(report.reports, key=lambda r: r.max_violation)
    replay_ok = all(r.replay() == r.max_violation for r in report.reports)
    ok = report.passed and replay_ok and elapsed < 600
    verdict(7, ok, f"{len(report.reports)} audits, worst max_violation={worst.max_violation:.3g} "
                   f"({worst.name}); failures={[r.name for r in report.failures()]}; "
                   f"replay exact={replay_ok}; runtime={elapsed:.1f}s (< 600 s)")


def test_acceptance_08_laplace_envelopes():
    n, lam, delta, c = 4096, 1.0, 0.05, 0.25
    lo = c * math.log(n) / n
    grid = np.concatenate([[lo], np.arange(1, 1001) / 2000])
    grid = grid[grid >= lo]
    splits = [laplace_decomposition_binary(n, lam, t, delta, c) for t in grid]
    s1 = max(s.S1 for s in splits)
    s2 = max(s.S2 for s in splits)
    s3 = max(s.S3 for s in splits)
    s2_cap = (1 + lam) ** -0.5 + 0.05
    ok = s1 < 1e-6 and s3 < 1e-3 and s2 <= s2_cap
    verdict(8, ok, f"sup S1={s1:.3g} (< 1e-6), sup S3={s3:.3g} (< 1e-3), "
                   f"sup S2={s2:.4f} (<= {s2_cap:.4f}) over {len(grid)} theta1 values")


def test_acceptance_09_jeffreys_gap():
    g = jeffreys_gap(4096, 2, 1, 1.0)
    gap_err = abs(g.gap - math.log(2))
    L_err = abs(g.L - 1)
    ok = gap_err <= 0.1 and L_err <= 0.01
    verdict(9, ok, f"gap={g.gap:.5f} vs ln 2 (|diff|={gap_err:.4f}, tol 0.1); "
                   f"L(2,1,4096)={g.L:.6f} (|L-1| tol 0.01)")


def test_acceptance_10_converse():
    eps = converse_epsilon(4096, 0.1, 2, 1.0)
    beta = converse_beta(4096, 0.01, 2)
    below = True
    worst_margin = -math.inf
    for n in range(4, 9):
        for lam in (0.5, 1.0, 2.0):
            cb = converse_lower_bound(n, 2, lam, 0.5)
            lower = renyi_redundancy(n, 2, lam).lower
            worst_margin = max(worst_margin, cb.redundancy_lower - lower)
            below &= cb.redundancy_lower <= lower
    ok = abs(eps - 1) <= 0.02 and abs(beta - math.pi) <= 0.15 and below
    verdict(10, ok, f"eps(4096,0.1,2,1)={eps:.5f} (|eps-1| tol 0.02); "
                    f"beta(4096,0.01,2)={beta:.4f} (|beta-pi|={abs(beta - math.pi):.4f}, tol 0.15); "
                    f"bound <= bracket lower for n in 4..8: {below} (max margin {worst_margin:.3f})")
