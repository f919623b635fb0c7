import json
import math

import mpmath as mp
import numpy as np
import pytest

from renyi_redundancy.audit import (
    BATTERY,
    BoundReport,
    constants,
    converse_beta,
    converse_epsilon,
    converse_lower_bound,
    edge_mass_split,
    evaluate_check,
    face_factor_L,
    in_window,
    integral_bound_terms,
    jeffreys_gap,
    jeffreys_normalizer_quadrature,
    laplace_decomposition_binary,
    laplace_decomposition_general,
    log_K,
    log_M_uniform,
    log_T,
    audit_edge_mass_bound,
    audit_integral_bound,
    audit_K_bounds,
    audit_T_bound,
    audit_uniform_divergence_bound,
    merge_reports,
    robbins_multinomial_bounds,
    run_battery,
    run_check,
    stirling_gamma_bounds,
    sweep,
    M_window,
)
from renyi_redundancy.errors import DomainError, PreconditionError
from renyi_redundancy.mixtures import divergence_to_mixture, jeffreys_mixture
from renyi_redundancy.solver import ParameterGrid
from renyi_redundancy.simplex import enumerate_types

LAMS = (0.5, 1.0, 2.0)


def test_robbins_examples():
    for t, exact in (((2, 2), math.log(6)), ((1, 1), math.log(2)), ((3, 1, 2), math.log(60))):
        lo, ex, hi = robbins_multinomial_bounds(t)
        assert ex == pytest.approx(exact, abs=1e-13)
        assert lo <= ex <= hi
    with pytest.raises(DomainError):
        robbins_multinomial_bounds((3, 0))


def test_stirling_examples():
    approx, r = stirling_gamma_bounds(1.0)
    assert approx == pytest.approx(math.sqrt(2 * math.pi) / math.e, rel=1e-14)
    assert approx == pytest.approx(0.92214, abs=1e-5)
    assert r == pytest.approx(0.08690, abs=1e-5)
    assert abs(1 / approx - 1) <= r
    approx, r = stirling_gamma_bounds(10.0)
    assert abs(math.factorial(9) / approx - 1) <= math.expm1(1 / 120)
    assert evaluate_check("stirling_remainder", x=0.5) <= 0
    with pytest.raises(DomainError):
        stirling_gamma_bounds(0)


def test_constants_examples():
    c = constants(2, 1.0)
    assert c.M_uniform <= 3 * math.exp(1 / 12)
    for lam in (0.5, 2.0, 3.0):
        c = constants(2, lam)
        assert c.C_tilde == pytest.approx(2 * c.C2 ** lam * c.C3 ** lam, rel=1e-12)
        assert c.M_uniform <= 3 ** lam * math.exp(1 / 12)
    for k in range(2, 7):
        for lam in (0.1, 0.5, 1, 2, 4, 8):
            vals = constants(k, lam).as_dict().values()
            assert all(0 < v < math.inf for v in vals)


def test_constants_frozen_values():
    # independent mpmath evaluation of the closed forms at k=2, lam=1
    with mp.workdps(30):
        C1 = mp.e ** (mp.mpf(13) / 12) * mp.pi / mp.sqrt(2 * mp.pi) / (2 - mp.e ** (mp.mpf(1) / 6)) ** 2 * mp.sqrt(2)
        C3 = mp.pi * mp.e ** (mp.mpf(7) / 12) / (2 - mp.e ** (mp.mpf(1) / 6))
    c = constants(2, 1.0)
    assert c.C1 == pytest.approx(float(C1), rel=1e-12)
    assert c.C3 == pytest.approx(float(C3), rel=1e-12)
    assert c.C1 == pytest.approx(7.814, abs=1e-3)


def test_jeffreys_divergence_examples():
    for n in (1, 7, 64):
        rep = audit_uniform_divergence_bound(n, 2, 1.0)
        assert rep.satisfied
        assert rep.witness["theta"] in ([1.0, 0.0], [0.0, 1.0])
    assert audit_uniform_divergence_bound(32, 3, 1.0).satisfied


def test_edge_mass_examples(rng):
    rep = audit_edge_mass_bound(64, 2, 1.0, [0.5, 0.5], 0.25)
    assert rep.satisfied and rep.evaluations == 1
    for theta in rng.dirichlet(np.ones(3), size=5):
        theta = 0.9 * theta + 0.1 / 3
        assert audit_edge_mass_bound(32, 3, 1.0, theta, 0.25).satisfied
    with pytest.raises(PreconditionError):
        audit_edge_mass_bound(64, 2, 1.0, [0.001, 0.999], 0.25)
    with pytest.raises(PreconditionError):
        audit_edge_mass_bound(3, 6, 1.0, [1 / 6] * 6, 0.25)


@pytest.mark.parametrize("n,k", [(16, 2), (64, 2), (12, 3)])
def test_edge_split_is_a_partition(n, k):
    theta = np.full(k, 1 / k)
    for lam in LAMS:
        lnV, lnW, lamD = edge_mass_split(n, k, lam, theta)
        assert abs(np.logaddexp(lnV, lnW) - lamD) <= 1e-12


def test_T_examples():
    for n in (1, 10, 64):
        for lam in LAMS:
            assert audit_T_bound(n, 2, lam, [0.3, 0.7]).satisfied
    assert audit_T_bound(32, 3, 1.0, [0.2, 0.3, 0.5]).satisfied
    assert log_T(1, 2, 1.0, [0.5, 0.5]) == -math.inf
    assert log_T(2, 2, 1.0, [0.5, 0.5]) > -math.inf


def test_K_examples():
    assert audit_K_bounds(256, 2, 1.0).uniform.satisfied
    ka = audit_K_bounds(1024, 2, 1.0, c=0.25, delta=0.1)
    assert ka.window.satisfied and ka.uniform.satisfied
    assert math.exp(log_M_uniform(2, 1.0)) <= 3 * math.exp(1 / 12)


def test_K_window_factor_tends_to_one():
    # the factor is 1 + O(lam/ln n); at n=4096 it is within 0.05 of 1 for lam=0.5
    assert abs(M_window(2, 0.5, 4096, 0.25, 0.1) - 1) <= 0.05
    ms = [M_window(2, 1.0, n, 0.25, 0.1) for n in (2 ** 8, 2 ** 12, 2 ** 16, 2 ** 20)]
    assert all(b < a for a, b in zip(ms, ms[1:]))
    assert ms[-1] - 1 < 0.5 * (ms[0] - 1)


def test_log_K_against_direct_product():
    k, lam, n, t = 3, 1.5, 20, np.array([3, 7, 10])
    K = math.exp(1 / (12 * n)) * (
        (1 + k / (2 * n)) ** (n + (k - 1) / 2) * math.exp(1 / (12 * n + 6 * k))
        / np.prod([(1 + 1 / (2 * x)) ** x * (2 - math.exp(1 / (12 * x + 6))) for x in t])) ** lam
    assert log_K(k, lam, n, t) == pytest.approx(math.log(K), rel=1e-13)


def test_in_window():
    assert in_window((50, 50), 100, 0.25, 0.1)
    assert not in_window((0, 100), 100, 0.25, 0.1)
    assert not in_window((60, 40), 100, 0.25, 0.1)


def test_integral_example():
    value, err, bound = integral_bound_terms(1024, 1.0, 0.01, 0.1, 0.25, 0.5)
    with mp.workdps(25):
        a = 2048
        lo = mp.mpf("0.011")
        f = lambda x: a / mp.sqrt(x * (1 - x)) * mp.e ** (-a * (x * mp.log(x / mp.mpf("0.01"))
                                                                 + (1 - x) * mp.log((1 - x) / mp.mpf("0.99"))))
        ref = float(mp.quad(f, [lo, lo + mp.mpf("0.005"), lo + mp.mpf("0.02"), mp.mpf("0.25")]))
    assert value == pytest.approx(ref, rel=1e-8)
    assert value == pytest.approx(35.8216, abs=1e-4)
    assert value + err <= bound
    assert audit_integral_bound(1024, 1.0, 0.01, 0.1, 0.25, 0.5).satisfied
    with pytest.raises(PreconditionError):
        integral_bound_terms(1024, 1.0, 0.5, 0.1, 0.25, 0.5)


def test_jeffreys_normalizer():
    assert jeffreys_normalizer_quadrature() == pytest.approx(math.pi, abs=1e-12)


def test_laplace_binary_partition():
    for n, theta1 in ((64, 0.3), (512, 0.05), (4096, 0.01)):
        s = laplace_decomposition_binary(n, 1.0, theta1, 0.1)
        assert abs(s.S1 + s.S2 + s.S3 - s.total) <= 1e-12 * max(1.0, s.total)
    with pytest.raises(PreconditionError):
        laplace_decomposition_binary(64, 1.0, 0.001, 0.1)
    with pytest.raises(PreconditionError):
        laplace_decomposition_binary(64, 1.0, 0.3, 1.2)


def test_laplace_binary_central_part():
    # the central part tends to (1+lam)^(-1/2); at n=4096 it is already close
    s = laplace_decomposition_binary(4096, 1.0, 0.3, 0.05)
    assert s.S2 <= 2 ** -0.5 + 0.05
    assert s.S2 == pytest.approx(2 ** -0.5, abs=0.02)


def test_laplace_general():
    s = laplace_decomposition_general(512, 3, 1.0, [1 / 3] * 3, 0.1)
    assert abs(s.S1 + s.S2 - s.total) <= 1e-12 * max(1.0, s.total)
    assert s.S1 <= 0.6
    # frozen finite-n value; the tail vanishes only in the limit
    assert s.S2 == pytest.approx(0.0314, abs=5e-4)
    with pytest.raises(PreconditionError):
        laplace_decomposition_general(512, 3, 1.0, [0.5, 0.3, 0.2], 0.1)


def test_converse_pieces():
    assert abs(converse_epsilon(4096, 0.1, 2, 1.0) - 1) <= 0.02
    b = converse_beta(4096, 0.1, 2)
    assert b == pytest.approx(math.pi - 4 * math.asin(math.sqrt(0.05)), abs=5e-3)
    cb = converse_lower_bound(4096, 2, 1.0, 0.1)
    assert cb.bound < math.log(math.pi) - 0.5 * math.log(2)
    with pytest.raises(PreconditionError):
        converse_lower_bound(8, 2, 1.0, 0.1)


def test_jeffreys_gap_examples():
    g = jeffreys_gap(4096, 2, 1, 1.0)
    assert abs(g.gap - math.log(2)) <= 0.1
    assert abs(g.L - 1) <= 0.01
    assert abs(face_factor_L(2, 1, 4096) - 1) <= 0.01
    assert jeffreys_gap(512, 3, 2, 1.0, denominator=32).gap > 0
    full = divergence_to_mixture([1.0, 0.0], jeffreys_mixture(64, 2), 1.0)
    assert jeffreys_gap(64, 2, 1, 1.0).sup_divergence == pytest.approx(full, abs=1e-10)
    with pytest.raises(DomainError):
        jeffreys_gap(64, 2, 2, 1.0)


def test_sweep_and_replay():
    cases = [{"t": t} for t in enumerate_types(20, 3) if np.all(t > 0)]
    rep = sweep("robbins_multinomial", "n=20 k=3", cases)
    assert rep.evaluations == len(cases)
    assert rep.replay() == rep.max_violation
    back = json.loads(json.dumps(rep.to_record()))
    assert evaluate_check(back["name"], **back["witness"]) == rep.max_violation
    with pytest.raises(PreconditionError):
        sweep("pinsker", "empty", [])
    with pytest.raises(DomainError):
        evaluate_check("no_such_bound")


def test_merge_reports():
    a = BoundReport("pinsker", "a", -1.0, {"tau": 0.1, "theta": 0.5}, 3)
    b = BoundReport("pinsker", "b", -0.5, {"tau": 0.2, "theta": 0.5}, 4)
    m = merge_reports("pinsker", [a, b])
    assert m.max_violation == -0.5 and m.evaluations == 7 and m.domain == "a; b"
    with pytest.raises(DomainError):
        merge_reports("robbins_multinomial", [a])


def test_nan_violation_is_infinite():
    assert evaluate_check("bernoulli_monotone", theta_lo=0.0, theta_hi=0.5, xi=1.0, lam=1.0) <= 0


@pytest.mark.parametrize("name", ["pinsker", "taylor_binary_left", "taylor_binary_remainder",
                                  "uniform_constant_closed_form", "bernoulli_monotone",
                                  "robbins_multinomial", "stirling_remainder"])
def test_fast_battery_entries(name):
    rep = run_check(name)
    assert rep.satisfied, rep.to_record()
    assert rep.replay() == rep.max_violation


def test_fault_injection_is_caught():
    report = run_battery(["relative_information_bound"], c1_scale=0.001)
    assert not report.passed
    bad = report.failures()[0]
    assert bad.max_violation > 0
    assert bad.replay() == bad.max_violation
    payload = json.loads(report.to_json())
    assert payload["passed"] is False and payload["schema_version"] == 1
    assert "VIOLATED" in report.summary_table()


def test_battery_names_and_order():
    assert set(BATTERY) >= {"robbins_multinomial", "jeffreys_divergence_bound", "edge_mass_bound",
                            "interior_sum_bound", "K_uniform_bound", "K_window_bound", "pinsker",
                            "tail_integral_bound", "weak_duality"}
    with pytest.raises(DomainError):
        run_battery(["nonsense"])
    rep = run_battery(["pinsker", "uniform_constant_closed_form"])
    assert [r.name for r in rep.reports] == ["pinsker", "uniform_constant_closed_form"]
