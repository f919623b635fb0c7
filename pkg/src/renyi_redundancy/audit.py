"""Numerical audits of the explicit inequalities behind the asymptotic analysis.

Each audit evaluates a single registered check over a finite domain and
keeps the worst case.  A check maps one input point (passed as keyword
arguments) to a violation: ``lhs - rhs`` for additive bounds, or
``ln lhs - ln rhs`` for multiplicative ones.  A value ``<= 0`` means the
inequality holds at that point.  The worst input is kept as the witness, and
``BoundReport.replay`` re-runs the same check on it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad
from scipy.special import gammaln

from .errors import DomainError, PreconditionError
from .measures import binary_divergence, check_lambda, renyi_divergence
from .mixtures import dirichlet_log, divergence_terms, divergence_to_mixture, jeffreys_mixture
from .simplex import as_counts, as_probs, enumerate_types, log_multinomial_table, log_sum_exp
from .solver import (
    ParameterGrid,
    asymptotic_constant,
    equalizer_mixture,
    sibson_value,
)
from .mixtures import DiscretePrior, face_correction

SCHEMA_VERSION = 1
LOG_2PI = math.log(2 * math.pi)
QUAD_EPSABS = 1e-9
REMAINDER_MIN_OFFSET = 1e-9

_CHECKS: dict[str, Callable[..., float]] = {}


def _register(name: str):
    def deco(fn):
        def check(**kw) -> float:
            v = float(fn(**kw))
            return math.inf if math.isnan(v) else v
        check.__name__ = fn.__name__
        check.__doc__ = fn.__doc__
        _CHECKS[name] = check
        return check
    return deco


def check_names() -> list[str]:
    return sorted(_CHECKS)


def evaluate_check(name: str, **inputs) -> float:
    """Evaluate the violation of check ``name`` at one input point."""
    try:
        return _CHECKS[name](**inputs)
    except KeyError:
        raise DomainError(f"unknown check {name!r}") from None


@dataclass(frozen=True)
class BoundReport:
    """Worst observed violation of one inequality over a stated domain."""

    name: str
    domain: str
    max_violation: float
    witness: dict = field(default_factory=dict)
    evaluations: int = 0

    @property
    def satisfied(self) -> bool:
        return self.max_violation <= 0

    def replay(self) -> float:
        return evaluate_check(self.name, **self.witness)

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "domain": self.domain,
            "max_violation": self.max_violation,
            "satisfied": self.satisfied,
            "evaluations": self.evaluations,
            "witness": self.witness,
        }


def _plain(value):
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


def sweep(name: str, domain: str, cases: Iterable[dict]) -> BoundReport:
    """Evaluate check ``name`` on every case and report the worst one."""
    check = _CHECKS[name]
    worst, witness, count = -math.inf, None, 0
    for case in cases:
        case = {key: _plain(v) for key, v in case.items()}
        v = check(**case)
        count += 1
        if witness is None or v > worst:
            worst, witness = v, case
    if witness is None:
        raise PreconditionError(f"empty domain for {name}")
    return BoundReport(name, domain, worst, witness, count)


def merge_reports(name: str, reports: Iterable[BoundReport]) -> BoundReport:
    """Combine reports of the same check over several domains."""
    reports = list(reports)
    if not reports or any(r.name != name for r in reports):
        raise DomainError("merge_reports needs nonempty reports of one check")
    worst = max(reports, key=lambda r: r.max_violation)
    return BoundReport(name, "; ".join(r.domain for r in reports), worst.max_violation,
                       worst.witness, sum(r.evaluations for r in reports))


# ---------------------------------------------------------------------------
# Stirling and Robbins

def _log_stirling(x: float) -> float:
    return 0.5 * LOG_2PI + (x - 0.5) * math.log(x) - x


def stirling_gamma_bounds(x: float) -> tuple[float, float]:
    """``(sqrt(2 pi) x^(x-1/2) e^-x, e^(1/(12x)) - 1)``."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    return math.exp(_log_stirling(x)), math.expm1(1 / (12 * x))


@_register("stirling_remainder")
def _stirling_violation(x):
    r = math.expm1(math.lgamma(x) - _log_stirling(x))
    return abs(r) - math.expm1(1 / (12 * x))


def robbins_multinomial_bounds(t) -> tuple[float, float, float]:
    """Log of the Robbins lower bound, exact multinomial and upper bound."""
    c = as_counts(t)
    if np.any(c < 1):
        raise DomainError(f"Robbins bounds need positive counts, got {tuple(c)}")
    n, k = int(c.sum()), c.size
    logs = [math.log(ti) for ti in c]
    H = -sum(ti / n * (lt - math.log(n)) for ti, lt in zip(c, logs))
    base = n * H - (k - 1) / 2 * LOG_2PI + 0.5 * (math.log(n) - sum(logs))
    lower = base + 1 / (12 * (n + 1)) - sum(1 / (12 * ti) for ti in c)
    upper = base + 1 / (12 * n) - sum(1 / (12 * (ti + 1)) for ti in c)
    exact = math.lgamma(n + 1) - sum(math.lgamma(ti + 1) for ti in c)
    return lower, exact, upper


@_register("robbins_multinomial")
def _robbins_violation(t):
    lower, exact, upper = robbins_multinomial_bounds(t)
    return max(lower - exact, exact - upper)


# ---------------------------------------------------------------------------
# Closed-form constants

@dataclass(frozen=True)
class BoundConstants:
    k: int
    lam: float
    C1: float
    C2: float
    C3: float
    C_tilde: float
    M_uniform: float

    def as_dict(self) -> dict:
        return {"C1": self.C1, "C2": self.C2, "C3": self.C3,
                "C_tilde": self.C_tilde, "M_uniform": self.M_uniform}


def _check_k(k: int) -> int:
    if int(k) != k or k < 2:
        raise DomainError(f"alphabet size must be an integer >= 2, got {k}")
    return int(k)


def log_C1(k: int) -> float:
    k = _check_k(k)
    return ((6 * k + 1) / 12 + dirichlet_log(np.full(k, 0.5)) - (k - 1) / 2 * LOG_2PI
            - k * math.log(2 - math.exp(1 / 6)) + (k - 1) / 2 * math.log1p(k / 2))


def log_C2(k: int) -> float:
    k = _check_k(k)
    return (math.lgamma((k - 1) / 2) - math.lgamma(k / 2) + (k - 1) / 2 * math.log1p(k / 2)
            + (12 * k + 1) / 24 - math.log(2 - math.exp(1 / 18)))


def log_C3(k: int) -> float:
    k = _check_k(k)
    return (math.log(math.pi) + (6 * k - 5) / 12 - math.log(2 - math.exp(1 / 6))
            + (k - 2) / 2 * math.log1p((k - 1) / 2))


def log_C_tilde(k: int, lam: float) -> float:
    lam = check_lambda(lam)
    return math.log(2 ** k - 2) + lam * (log_C2(k) + log_C3(k))


def log_M_uniform(k: int, lam: float) -> float:
    """Uniform bound on ``ln K(k, lam, n, t)`` over all positive types."""
    k, lam = _check_k(k), check_lambda(lam)
    inner = (k / 2 + (k - 1) / 2 * math.log1p(k / 2) + 1 / (12 + 6 * k)
             - k * math.log(1.5 * (2 - math.exp(1 / 18))))
    return 1 / 12 + lam * inner


def constants(k: int, lam: float) -> BoundConstants:
    return BoundConstants(k, float(lam), math.exp(log_C1(k)), math.exp(log_C2(k)),
                          math.exp(log_C3(k)), math.exp(log_C_tilde(k, lam)),
                          math.exp(log_M_uniform(k, lam)))


@_register("uniform_constant_closed_form")
def _m2_violation(lam):
    return log_M_uniform(2, lam) - (lam * math.log(3) + 1 / 12)


# ---------------------------------------------------------------------------
# Divergence to Jeffreys' mixture

def _jeffreys(n: int, k: int):
    return jeffreys_mixture(n, k)


@_register("relative_information_bound")
def _relinfo_violation(t, c1_scale=1.0):
    """Largest relative information over theta of one type, against the bound."""
    c = as_counts(t)
    n, k = int(c.sum()), c.size
    pos = c[c > 0]
    ml = float(np.sum(pos * (np.log(pos) - math.log(n))))
    logq = dirichlet_log(c + 0.5) - dirichlet_log(np.full(k, 0.5))
    bound = (k - 1) / 2 * math.log(n) + log_C1(k) + math.log(c1_scale)
    return ml - logq - bound


@_register("jeffreys_divergence_bound")
def _jeffreys_divergence_violation(n, k, lam, theta, c1_scale=1.0):
    D = divergence_to_mixture(np.asarray(theta, dtype=float), _jeffreys(n, k), lam)
    return D - ((k - 1) / 2 * math.log(n) + log_C1(k) + math.log(c1_scale))


def audit_uniform_divergence_bound(n: int, k: int, lam: float, grid=None,
                                   c1_scale: float = 1.0) -> BoundReport:
    """Divergence to Jeffreys' mixture against ``(k-1)/2 ln n + ln C1(k)`` on a grid."""
    if grid is None:
        grid = ParameterGrid.lattice(k, 100 if k == 2 else 12)
    cases = ({"n": n, "k": k, "lam": lam, "theta": th, "c1_scale": c1_scale} for th in grid.points)
    return sweep("jeffreys_divergence_bound", f"k={k}, n={n}, lam={lam}, {grid.resolution}", cases)


def _zero_mask(types):
    return np.any(types == 0, axis=1)


def edge_mass_split(n: int, k: int, lam: float, theta) -> tuple[float, float, float]:
    """``(ln V, ln W, lam * D)`` where V sums types with a zero count and W the rest."""
    th = as_probs(theta)
    Q = _jeffreys(n, k)
    terms = divergence_terms(th, Q, lam)[:, 0]
    zero = _zero_mask(Q.types)
    return (log_sum_exp(terms[zero]), log_sum_exp(terms[~zero]),
            lam * divergence_to_mixture(th, Q, lam))


def _edge_preconditions(n, k, theta, c):
    if not 0 < c < 0.5:
        raise PreconditionError(f"c must lie in (0, 1/2), got {c}")
    if not k * math.log(n) / (2 * n) < 1:
        raise PreconditionError(f"k ln(n)/(2n) < 1 fails for n={n}, k={k}")
    a = c * math.log(n) / n
    if np.min(theta) < a * (1 - 1e-12):
        raise PreconditionError(f"theta must have every coordinate >= c ln(n)/n = {a}")


def edge_mass_bound(n: int, k: int, lam: float, c: float) -> float:
    """Log of ``C_tilde(k, lam) n^(-(1+lam) c + lam (k-1)/2)``."""
    return log_C_tilde(k, lam) + (-(1 + lam) * c + lam * (k - 1) / 2) * math.log(n)


@_register("edge_mass_bound")
def _edge_violation(n, k, lam, theta, c):
    th = as_probs(theta)
    _edge_preconditions(n, k, th, c)
    logV, _, _ = edge_mass_split(n, k, lam, th)
    return logV - edge_mass_bound(n, k, lam, c)


def audit_edge_mass_bound(n: int, k: int, lam: float, theta, c: float = 0.25) -> BoundReport:
    th = as_probs(theta)
    if th.size != k:
        raise DomainError(f"theta has {th.size} coordinates, expected {k}")
    _edge_preconditions(n, k, th, c)
    case = {"n": n, "k": k, "lam": lam, "theta": th, "c": c}
    return sweep("edge_mass_bound", f"k={k}, n={n}, lam={lam}, c={c}, single theta", [case])


def _log_T_terms(n: int, k: int, lam: float, theta) -> NDArray[np.float64]:
    th = as_probs(theta)
    types = enumerate_types(n, k)
    types = types[np.all(types >= 1, axis=1)]
    if types.shape[0] == 0:
        return np.empty(0)
    tau = types / n
    div = np.sum(tau * (np.log(tau) - np.log(th)[None, :]), axis=1)
    return (-(k - 1) / 2 * LOG_2PI + 0.5 * (math.log(n) - np.log(types).sum(axis=1))
            - n * (1 + lam) * div)


def log_T(n: int, k: int, lam: float, theta) -> float:
    terms = _log_T_terms(n, k, lam, theta)
    return log_sum_exp(terms) if terms.size else -math.inf


def log_T_bound(k: int, lam: float) -> float:
    return (lam * log_C1(k) + lam * (k - 1) / 2 * LOG_2PI - lam * dirichlet_log(np.full(k, 0.5))
            + k * (20 * lam + 3) / 36 - lam * math.log(2 - math.exp(1 / (6 * k))))


@_register("interior_sum_bound")
def _T_violation(n, k, lam, theta):
    return log_T(n, k, lam, theta) - log_T_bound(k, lam)


def audit_T_bound(n: int, k: int, lam: float, theta) -> BoundReport:
    case = {"n": n, "k": k, "lam": lam, "theta": as_probs(theta)}
    return sweep("interior_sum_bound", f"k={k}, n={n}, lam={lam}, single theta", [case])


# ---------------------------------------------------------------------------
# The factor K

def log_K(k: int, lam: float, n: int, t) -> NDArray[np.float64] | float:
    """``ln K(k, lam, n, t)``; ``t`` may be real and may hold several rows."""
    t = np.asarray(t, dtype=float)
    single = t.ndim == 1
    t = np.atleast_2d(t)
    if np.any(t <= 0):
        raise DomainError("K is defined for positive counts")
    head = (n + (k - 1) / 2) * math.log1p(k / (2 * n)) + 1 / (12 * n + 6 * k)
    per = t * np.log1p(1 / (2 * t)) + np.log(2 - np.exp(1 / (12 * t + 6)))
    out = 1 / (12 * n) + lam * (head - per.sum(axis=1))
    return float(out[0]) if single else out


def window_corner(k: int, n: int, c: float, delta: float) -> NDArray[np.float64]:
    """The point ``c (1-delta) u`` at which the windowed bound evaluates K."""
    v = np.full(k, c * (1 - delta) * math.log(n))
    v[-1] = (1 - (k - 1) * delta) * n / k
    return v


def _window_preconditions(k, n, c, delta):
    if n <= 2:
        raise PreconditionError("the windowed bound needs n > 2")
    if not 0 < c < 0.5:
        raise PreconditionError(f"c must lie in (0, 1/2), got {c}")
    if not 0 < delta < 1 / (k - 1):
        raise PreconditionError(f"delta must lie in (0, 1/(k-1)), got {delta}")


def log_M_window(k: int, lam: float, n: int, c: float, delta: float) -> float:
    _window_preconditions(k, n, c, delta)
    return log_K(k, lam, n, window_corner(k, n, c, delta))


def M_window(k: int, lam: float, n: int, c: float, delta: float) -> float:
    return math.exp(log_M_window(k, lam, n, c, delta))


def in_window(t, n: int, c: float, delta: float) -> bool:
    """Whether some admissible theta puts ``t`` inside its window.

    Admissible means every coordinate is at least ``c ln(n)/n`` and the last
    one is at least ``1/k``; the window constrains the first ``k-1`` counts.
    """
    t = as_counts(t)
    k = t.size
    a = c * math.log(n) / n
    head = t[:-1]
    if np.any(head < (1 - delta) * n * a):
        return False
    lo = np.maximum(a, head / (n * (1 + delta)))
    return bool(lo.sum() <= 1 - 1 / k)


@_register("K_uniform_bound")
def _K_uniform_violation(k, lam, t):
    t = as_counts(t)
    return log_K(k, lam, int(t.sum()), t) - log_M_uniform(k, lam)


@_register("K_window_bound")
def _K_window_violation(k, lam, t, c, delta):
    t = as_counts(t)
    n = int(t.sum())
    _window_preconditions(k, n, c, delta)
    if not in_window(t, n, c, delta):
        raise PreconditionError(f"type {tuple(t)} is outside every window")
    return log_K(k, lam, n, t) - log_M_window(k, lam, n, c, delta)


def _positive_types(n: int, k: int):
    types = enumerate_types(n, k)
    return types[np.all(types >= 1, axis=1)]


@dataclass(frozen=True)
class KAudit:
    uniform: BoundReport
    window: BoundReport
    M_window: float


def audit_K_bounds(n: int, k: int, lam: float, c: float = 0.25, delta: float = 0.1) -> KAudit:
    """Uniform and windowed bounds on K for every positive type of length ``n``."""
    uni = sweep("K_uniform_bound", f"k={k}, n={n}, lam={lam}, all positive types",
                ({"k": k, "lam": lam, "t": t} for t in _positive_types(n, k)))
    cases = [{"k": k, "lam": lam, "t": t, "c": c, "delta": delta}
             for t in _positive_types(n, k) if in_window(t, n, c, delta)]
    win = sweep("K_window_bound", f"k={k}, n={n}, lam={lam}, c={c}, delta={delta}, window types",
                cases)
    return KAudit(uni, win, M_window(k, lam, n, c, delta))


# ---------------------------------------------------------------------------
# Pinsker, Taylor and monotonicity

@_register("pinsker")
def _pinsker_violation(tau, theta):
    return 2 * (tau - theta) ** 2 - binary_divergence(tau, theta)


@_register("taylor_binary_window")
def _taylor_window_violation(tau, theta, delta):
    if not (0 < theta < 0.5 and 0 < delta < 1 and abs(tau - theta) <= delta * theta * (1 + 1e-12)):
        raise PreconditionError("need theta in (0, 1/2) and |tau - theta| <= delta theta")
    quad_form = 0.5 * (1 - delta) * (tau - theta) ** 2 / (theta * (1 - theta))
    return quad_form - binary_divergence(tau, theta)


@_register("taylor_binary_left")
def _taylor_left_violation(tau, theta):
    if not 0 < tau <= theta <= 0.5:
        raise PreconditionError("need 0 < tau <= theta <= 1/2")
    return 0.5 * (tau - theta) ** 2 / (theta * (1 - theta)) - binary_divergence(tau, theta)


def _remainder_slope(alpha):
    return (2 * alpha - 1) / (alpha ** 2 * (1 - alpha) ** 2)


@_register("taylor_binary_remainder")
def _taylor_remainder_violation(tau, theta):
    """Distance of the implied third-derivative value outside its admissible range."""
    h = tau - theta
    if h == 0 or not (0 < tau < 1 and 0 < theta < 1):
        raise PreconditionError("need distinct interior tau and theta")
    implied = 6 * (binary_divergence(tau, theta) - 0.5 * h * h / (theta * (1 - theta))) / h ** 3
    lo, hi = _remainder_slope(min(tau, theta)), _remainder_slope(max(tau, theta))
    return max(lo - implied, implied - hi) / max(1.0, abs(implied))


def _general_taylor_inputs(tau, theta, delta):
    tau, th = np.asarray(tau, dtype=float), as_probs(theta)
    k = th.size
    if abs(tau.sum() - 1) > 1e-12 or np.any(tau < 0):
        raise PreconditionError("tau must be a distribution")
    if not (th[-1] >= 1 / k and 0 < delta < 1 / (k - 1)):
        raise PreconditionError("need theta_k >= 1/k and delta in (0, 1/(k-1))")
    if np.any(np.abs(tau[:-1] - th[:-1]) > delta * th[:-1] * (1 + 1e-12)):
        raise PreconditionError("tau is outside the delta window")
    return tau, th, k


def _kl(tau, th):
    pos = tau > 0
    return float(np.sum(tau[pos] * (np.log(tau[pos]) - np.log(th[pos]))))


@_register("taylor_general_window")
def _taylor_general_violation(tau, theta, delta):
    tau, th, k = _general_taylor_inputs(tau, theta, delta)
    d = tau[:-1] - th[:-1]
    quad_form = float(np.sum(d * d / th[:-1]) + d.sum() ** 2 / th[-1])
    return 0.5 * quad_form * (1 - (k - 1) * delta) - _kl(tau, th)


@_register("taylor_general_remainder")
def _taylor_general_remainder_violation(tau, theta):
    """Per-coordinate Lagrange remainder of ``x ln(x/theta) - x + theta``."""
    tau, th = np.asarray(tau, dtype=float), as_probs(theta)
    if np.any(tau <= 0) or np.any(th <= 0):
        raise PreconditionError("need interior points")
    worst = -math.inf
    for x, p in zip(tau, th):
        h = x - p
        # offsets at rounding level carry no information about the remainder
        if abs(h) < REMAINDER_MIN_OFFSET:
            continue
        f = x * math.log(x / p) - h
        implied = 6 * (h * h / (2 * p) - f) / h ** 3
        lo, hi = 1 / max(x, p) ** 2, 1 / min(x, p) ** 2
        worst = max(worst, max(lo - implied, implied - hi) / max(1.0, abs(implied)))
    return worst


def _bernoulli_renyi(theta, xi, lam):
    return renyi_divergence([theta, 1 - theta], [xi, 1 - xi], 1 + lam)


@_register("bernoulli_monotone")
def _monotone_violation(theta_lo, theta_hi, xi, lam):
    if not 0 <= theta_lo < theta_hi <= xi <= 1:
        raise PreconditionError("need 0 <= theta_lo < theta_hi <= xi <= 1")
    hi, lo = _bernoulli_renyi(theta_hi, xi, lam), _bernoulli_renyi(theta_lo, xi, lam)
    if math.isinf(lo):
        return 0.0 if math.isinf(hi) else -math.inf
    return hi - lo


# ---------------------------------------------------------------------------
# Integral bound

def _integral_preconditions(n, lam, theta1, delta, kappa, beta, c):
    check_lambda(lam)
    if not (0 < beta < 1 and 0 < delta < 1 and 0 < kappa < 0.5 and 0 < c < 0.5):
        raise PreconditionError("need beta, delta in (0,1), kappa in (0,1/2), c in (0,1/2)")
    lo, hi = c * math.log(n) / n, n ** (-beta / 2)
    if not lo <= theta1 <= hi:
        raise PreconditionError(f"theta1 must lie in [{lo}, {hi}]")
    if not (1 + delta) * theta1 < kappa:
        raise PreconditionError("the integration range (1+delta) theta1 .. kappa is empty")


def integral_bound_terms(n: int, lam: float, theta1: float, delta: float, kappa: float,
                         beta: float, c: float = 0.25) -> tuple[float, float, float]:
    """``(integral, quadrature error estimate, closed-form bound)``."""
    _integral_preconditions(n, lam, theta1, delta, kappa, beta, c)
    a = n * (1 + lam)
    lo = (1 + delta) * theta1

    def integrand(tau):
        return a / math.sqrt(tau * (1 - tau)) * math.exp(-a * binary_divergence(tau, theta1))

    # the integrand decays on the scale 1/(a d'(lo)); place breakpoints there
    scale = 1 / (a * math.log(lo * (1 - theta1) / (theta1 * (1 - lo))))
    pts = [lo + scale * s for s in (1, 4, 16, 64, 256) if lo + scale * s < kappa]
    value, err = quad(integrand, lo, kappa, points=pts or None, epsabs=QUAD_EPSABS,
                      epsrel=1e-12, limit=500)
    bound = 1 / (math.log1p(delta) * math.sqrt(lo * (1 - lo)))
    return value, err, bound


@_register("tail_integral_bound")
def _integral_violation(n, lam, theta1, delta, kappa, beta, c=0.25):
    value, err, bound = integral_bound_terms(n, lam, theta1, delta, kappa, beta, c)
    return value + err - bound


def audit_integral_bound(n: int, lam: float, theta1: float, delta: float, kappa: float,
                         beta: float, c: float = 0.25) -> BoundReport:
    case = {"n": n, "lam": lam, "theta1": theta1, "delta": delta, "kappa": kappa,
            "beta": beta, "c": c}
    return sweep("tail_integral_bound", "single tuple", [case])


def jeffreys_normalizer_quadrature() -> float:
    """``int_0^1 (theta (1-theta))^(-1/2) d theta`` with ``u = sqrt`` substitutions at both ends."""
    # theta = u^2 on [0, 1/2] and 1 - theta = u^2 on [1/2, 1]; both halves are equal
    half, _ = quad(lambda u: 2 / math.sqrt(1 - u * u), 0, math.sqrt(0.5), epsabs=QUAD_EPSABS,
                   epsrel=1e-13)
    return 2 * half


# ---------------------------------------------------------------------------
# Weak duality

@_register("weak_duality")
def _weak_duality_violation(n, lam, support, weights, q_support=None, q_weights=None):
    """Sibson value of a prior minus the worst divergence over its support to a mixture Q.

    Q is the Sibson output of the second prior, or Jeffreys' mixture when none is given.
    """
    pts = np.asarray(support, dtype=float)
    k = pts.shape[1]
    lower = sibson_value(weights, pts, n, lam)
    if q_support is None:
        Q = _jeffreys(n, k)
    else:
        Q = equalizer_mixture(DiscretePrior(q_support, q_weights), n, lam)
    upper = max(divergence_to_mixture(p, Q, lam) for p in pts)
    return lower - upper


# ---------------------------------------------------------------------------
# Laplace decompositions

@dataclass(frozen=True)
class LaplaceSplit:
    """Partial sums of the Laplace-type sum and the sum itself."""

    parts: tuple[float, ...]
    total: float

    @property
    def S1(self) -> float:
        return self.parts[0]

    @property
    def S2(self) -> float:
        return self.parts[1]

    @property
    def S3(self) -> float:
        return self.parts[2]


def _S_terms(types: NDArray[np.int64], n: int, lam: float, theta) -> NDArray[np.float64]:
    k = types.shape[1]
    th = np.asarray(theta, dtype=float)
    tau = types / n
    div = np.sum(tau * (np.log(tau) - np.log(th)[None, :]), axis=1)
    logs = (log_K(k, lam, n, types) - (k - 1) / 2 * LOG_2PI
            + 0.5 * (math.log(n) - np.log(types).sum(axis=1)) - n * (1 + lam) * div)
    return np.exp(logs)


def binary_split_points(n: int, theta1: float, delta: float) -> tuple[int, int]:
    """Last index of the lower tail and of the central window.

    A count on the boundary ``n (1 - delta) theta1`` belongs to the lower tail.
    """
    return math.floor(n * (1 - delta) * theta1), math.floor(n * (1 + delta) * theta1)


def laplace_decomposition_binary(n: int, lam: float, theta1: float, delta: float,
                                 c: float = 0.25) -> LaplaceSplit:
    """Split the binary Laplace sum at ``n (1 -/+ delta) theta1``."""
    lam = check_lambda(lam)
    if not 0 < delta < 1:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    if not c * math.log(n) / n <= theta1 <= 0.5:
        raise PreconditionError(f"theta1 must lie in [c ln(n)/n, 1/2], got {theta1}")
    t1 = np.arange(1, n)
    types = np.stack([t1, n - t1], axis=1)
    terms = _S_terms(types, n, lam, [theta1, 1 - theta1])
    a, b = binary_split_points(n, theta1, delta)
    masks = [t1 <= a, (t1 > a) & (t1 <= b), t1 > b]
    return LaplaceSplit(tuple(math.fsum(terms[m]) for m in masks), math.fsum(terms))


def laplace_decomposition_general(n: int, k: int, lam: float, theta, delta: float,
                                  c: float = 0.25) -> LaplaceSplit:
    """Split the general Laplace sum into the delta-neighbourhood of ``n theta`` and the rest."""
    lam = check_lambda(lam)
    th = as_probs(theta)
    if th.size != k:
        raise DomainError(f"theta has {th.size} coordinates, expected {k}")
    if not 0 < delta < 1 / (k - 1):
        raise PreconditionError(f"delta must lie in (0, 1/(k-1)), got {delta}")
    if np.min(th) < c * math.log(n) / n or th[-1] < 1 / k:
        raise PreconditionError("theta must lie in the interior region with theta_k >= 1/k")
    types = _positive_types(n, k)
    terms = _S_terms(types, n, lam, th)
    near = np.all(np.abs(types / (n * th[None, :]) - 1) <= delta, axis=1)
    return LaplaceSplit((math.fsum(terms[near]), math.fsum(terms[~near])), math.fsum(terms))


# ---------------------------------------------------------------------------
# Converse

@dataclass(frozen=True)
class ConverseBound:
    n: int
    k: int
    lam: float
    delta: float
    beta: float
    epsilon: float
    bound: float

    @property
    def redundancy_lower(self) -> float:
        """The bound shifted back to a lower bound on the redundancy itself."""
        return self.bound + (self.k - 1) / 2 * math.log(self.n / (2 * math.pi))


def converse_beta(n: int, delta: float, k: int) -> float:
    """Riemann sum of ``prod tau_j^(-1/2)`` over types with every count >= n delta / k."""
    types = enumerate_types(n, k)
    types = types[np.all(types >= n * delta / k, axis=1)]
    if types.shape[0] == 0:
        return 0.0
    return math.fsum(np.exp(-(k - 1) * math.log(n) - 0.5 * np.log(types / n).sum(axis=1)))


def converse_epsilon(n: int, delta: float, k: int, lam: float) -> float:
    a = (1 + lam) * n
    log_eps = (1 / (12 * (n + 1)) - k * k / (12 * n * delta)
               + n * delta * math.log1p(k / (2 * a * delta))
               - (n + (k - 1) / (2 * (1 + lam))) * math.log1p(k / (2 * a))
               + (k * math.log(2 - math.exp(k / (12 * a * delta + 6 * k)))
                  - 1 / (12 * a + 6 * k)) / (1 + lam))
    return math.exp(log_eps)


def converse_lower_bound(n: int, k: int, lam: float, delta: float) -> ConverseBound:
    """Lower bound on ``R_lam(n) - (k-1)/2 ln(n / 2 pi)`` from Jeffreys' prior."""
    lam = check_lambda(lam)
    k = _check_k(k)
    if not 0 < delta < 1:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")
    if n * delta / k < 1:
        raise PreconditionError(f"need n delta / k >= 1, got {n * delta / k}")
    beta = converse_beta(n, delta, k)
    eps = converse_epsilon(n, delta, k, lam)
    bound = (-dirichlet_log(np.full(k, 0.5)) / lam - (k - 1) / (2 * lam) * math.log1p(lam)
             + (1 + lam) / lam * math.log(beta * eps))
    return ConverseBound(n, k, float(lam), float(delta), beta, eps, bound)


# ---------------------------------------------------------------------------
# Jeffreys' mixture on faces

def face_factor_L(k: int, l: int, n: int) -> float:
    """The auxiliary factor ``L(k, l, n)``, which tends to 1."""
    log_L = ((n + (k - 1) / 2) * math.log1p(k / (2 * n)) - (n + (l - 1) / 2) * math.log1p(l / (2 * n))
             + math.log(2 - math.exp(1 / (12 * n + 6 * k))) - (k - l) / 2 - 1 / (12 * n + 6 * l))
    return math.exp(log_L)


@dataclass(frozen=True)
class JeffreysGap:
    """Excess of the worst face divergence to Jeffreys' mixture over the interior prediction."""

    n: int
    k: int
    l: int
    lam: float
    sup_divergence: float
    reference: float
    gap: float
    limit: float
    L: float
    argmax_theta: tuple[float, ...]


def face_grid(k: int, l: int, denominator: int = 64) -> NDArray[np.float64]:
    """Relative-interior lattice points of the face spanned by the first ``l`` symbols."""
    if l == 1:
        pts = np.zeros((1, k))
        pts[0, 0] = 1.0
        return pts
    sub = enumerate_types(denominator, l)
    sub = sub[np.all(sub > 0, axis=1)] / denominator
    return np.hstack([sub, np.zeros((sub.shape[0], k - l))])


def jeffreys_gap(n: int, k: int, l: int, lam: float, denominator: int = 64) -> JeffreysGap:
    """Worst divergence on an ``l``-symbol face minus ``(k-1)/2 ln(n/2pi)`` and the constant.

    Vertices (``l = 1``) use the closed form; larger faces use a lattice.
    """
    lam = check_lambda(lam)
    k = _check_k(k)
    if not 1 <= l <= k - 1:
        raise DomainError(f"need 1 <= l <= k-1, got l={l}, k={k}")
    pts = face_grid(k, l, denominator)
    if l == 1:
        values = np.array([face_correction(n, k, 1)])
    else:
        values = np.atleast_1d(divergence_to_mixture(pts, _jeffreys(n, k), lam))
    i = int(np.argmax(values))
    reference = (k - 1) / 2 * math.log(n / (2 * math.pi)) + asymptotic_constant(k, lam)
    sup = float(values[i])
    limit = (k - l) / 2 * (math.log(2) + math.log1p(lam) / lam)
    return JeffreysGap(n, k, l, float(lam), sup, reference, sup - reference, limit,
                       face_factor_L(k, l, n), tuple(float(x) for x in pts[i]))


# ---------------------------------------------------------------------------
# Battery

LAMBDAS = (0.5, 1.0, 2.0)


def _binary_interior(m: int) -> NDArray[np.float64]:
    j = np.arange(1, m)
    return np.stack([j / m, 1 - j / m], axis=1)


def _edge_thetas(n: int, k: int, c: float) -> list[NDArray[np.float64]]:
    a = c * math.log(n) / n
    if k == 2:
        return [np.array([x, 1 - x]) for x in np.linspace(a, 0.5, 25)]
    pts = [p for p in ParameterGrid.lattice(k, 12).points if p.min() >= a]
    pts += [np.array([a, a, 1 - 2 * a]), np.array([a, (1 - a) / 2, (1 - a) / 2])]
    return pts


def _robbins_cases():
    for k in (2, 3):
        for n in range(k, 65):
            for t in _positive_types(n, k):
                yield {"t": t}


def _relinfo_cases(c1_scale):
    for k in (2, 3):
        for n in range(1, 65):
            for t in enumerate_types(n, k):
                yield {"t": t, "c1_scale": c1_scale}


def _jeffreys_divergence_cases(c1_scale):
    for k, nmax, den in ((2, 64, 100), (3, 32, 12)):
        pts = ParameterGrid.lattice(k, den).points
        for n in range(1, nmax + 1):
            for lam in LAMBDAS:
                for th in pts:
                    yield {"n": n, "k": k, "lam": lam, "theta": th, "c1_scale": c1_scale}


def _edge_cases():
    for k, nmax in ((2, 64), (3, 32)):
        for n in range(max(k, 2), nmax + 1):
            for c in (0.1, 0.25, 0.45):
                for lam in LAMBDAS:
                    for th in _edge_thetas(n, k, c):
                        yield {"n": n, "k": k, "lam": lam, "theta": th, "c": c}


def _T_cases():
    for k, nmax, pts in ((2, 64, _binary_interior(50)),
                         (3, 32, ParameterGrid.lattice(3, 12).interior().points)):
        for n in range(1, nmax + 1):
            for lam in LAMBDAS:
                for th in pts:
                    yield {"n": n, "k": k, "lam": lam, "theta": th}


def _K_uniform_cases():
    for k, ns in ((2, range(2, 257)), (3, range(3, 65)), (2, (1024, 4096))):
        for n in ns:
            for lam in LAMBDAS:
                for t in _positive_types(n, k):
                    yield {"k": k, "lam": lam, "t": t}


def _K_window_cases():
    for k, ns, deltas in ((2, range(3, 257), (0.1, 0.5)), (3, range(3, 65), (0.1, 0.4)),
                          (2, (1024, 4096), (0.1,))):
        for n in ns:
            for delta in deltas:
                for lam in LAMBDAS:
                    for t in _positive_types(n, k):
                        if in_window(t, n, 0.25, delta):
                            yield {"k": k, "lam": lam, "t": t, "c": 0.25, "delta": delta}


def _pinsker_cases():
    for i in range(101):
        for j in range(1, 100):
            yield {"tau": i / 100, "theta": j / 100}


def _taylor_window_cases():
    for j in range(1, 200):
        theta = j / 400
        for delta in (0.05, 0.1, 0.25, 0.5, 0.9):
            for s in np.linspace(-1, 1, 21):
                yield {"tau": theta * (1 + s * delta), "theta": theta, "delta": delta}


def _taylor_left_cases():
    for j in range(1, 201):
        for i in range(1, j + 1):
            yield {"tau": i / 400, "theta": j / 400}


def _taylor_remainder_cases():
    for j in range(1, 50):
        for i in range(1, 50):
            if i != j:
                yield {"tau": i / 50, "theta": j / 50}


def _general_taylor_thetas():
    return [p for p in ParameterGrid.lattice(3, 30).points if p.min() > 0 and p[-1] >= 1 / 3]


def _taylor_general_cases():
    s = np.linspace(-1, 1, 7)
    for th in _general_taylor_thetas():
        for delta in (0.1, 0.25, 0.45):
            for s1 in s:
                for s2 in s:
                    if s1 == 0 and s2 == 0:
                        continue
                    tau = np.array([th[0] * (1 + s1 * delta), th[1] * (1 + s2 * delta), 0.0])
                    tau[2] = 1 - tau[0] - tau[1]
                    yield {"tau": tau, "theta": th, "delta": delta}


def _taylor_general_remainder_cases():
    for case in _taylor_general_cases():
        if case["delta"] == 0.25 and np.all(case["tau"] > 0):
            yield {"tau": case["tau"], "theta": case["theta"]}


def _monotone_cases():
    for xi in np.arange(1, 21) / 20:
        grid = np.linspace(0, xi, 101)
        for lam in (0.5, 1.0, 2.0, 4.0):
            for lo, hi in zip(grid[:-1], grid[1:]):
                yield {"theta_lo": lo, "theta_hi": hi, "xi": xi, "lam": lam}


def _integral_cases():
    beta, c = 0.5, 0.25
    for n in (256, 1024, 4096):
        lo, hi = c * math.log(n) / n, n ** (-beta / 2)
        for lam in LAMBDAS:
            for delta in (0.05, 0.1, 0.5):
                for kappa in (0.25, 0.45):
                    for theta1 in (lo, math.sqrt(lo * hi), hi):
                        if (1 + delta) * theta1 >= kappa:
                            continue
                        yield {"n": n, "lam": lam, "theta1": theta1, "delta": delta,
                               "kappa": kappa, "beta": beta, "c": c}


def _weak_duality_cases(seed: int = 20240601):
    rng = np.random.default_rng(seed)
    grid = ParameterGrid.binary(201).points
    for n in range(1, 9):
        for lam in LAMBDAS:
            for trial in range(4):
                idx = np.sort(rng.choice(len(grid), size=4, replace=False))
                w = rng.dirichlet(np.ones(4))
                case = {"n": n, "lam": lam, "support": grid[idx], "weights": w / w.sum()}
                if trial == 2:
                    case.update(q_support=case["support"], q_weights=case["weights"])
                elif trial % 2:
                    qidx = np.sort(rng.choice(len(grid), size=3, replace=False))
                    qw = rng.dirichlet(np.ones(3))
                    case.update(q_support=grid[qidx], q_weights=qw / qw.sum())
                yield case


BATTERY: dict[str, tuple[str, Callable[..., Iterable[dict]]]] = {
    "robbins_multinomial": ("k in {2,3}, all positive types, n <= 64", lambda c1: _robbins_cases()),
    "stirling_remainder": ("x in [0.5, 500], 4001 log-spaced points",
                           lambda c1: ({"x": x} for x in np.geomspace(0.5, 500, 4001))),
    "relative_information_bound": ("k in {2,3}, all types, n <= 64", _relinfo_cases),
    "jeffreys_divergence_bound": ("k=2 n<=64 grid 1/100; k=3 n<=32 lattice 1/12; lam in {0.5,1,2}",
                          _jeffreys_divergence_cases),
    "edge_mass_bound": ("k=2 n<=64, k=3 n<=32; c in {0.1,0.25,0.45}; theta in R0 incl. boundary",
                         lambda c1: _edge_cases()),
    "interior_sum_bound": ("k=2 n<=64 grid 1/50; k=3 n<=32 lattice 1/12 interior; lam in {0.5,1,2}",
                 lambda c1: _T_cases()),
    "K_uniform_bound": ("k=2 n<=256 and n in {1024,4096}; k=3 n<=64; all positive types",
                         lambda c1: _K_uniform_cases()),
    "uniform_constant_closed_form": ("lam in [0.05, 16], 200 log-spaced points",
                              lambda c1: ({"lam": x} for x in np.geomspace(0.05, 16, 200))),
    "K_window_bound": ("k=2 n<=256 and n in {1024,4096}; k=3 n<=64; c=0.25; window types",
                        lambda c1: _K_window_cases()),
    "pinsker": ("tau in {i/100}, theta in {j/100} interior", lambda c1: _pinsker_cases()),
    "taylor_binary_window": ("theta = j/400 < 1/2, delta in {0.05..0.9}, 21 offsets",
                             lambda c1: _taylor_window_cases()),
    "taylor_binary_left": ("0 < tau <= theta <= 1/2 on the 1/400 lattice",
                           lambda c1: _taylor_left_cases()),
    "taylor_binary_remainder": ("tau != theta on the interior 1/50 lattice",
                                lambda c1: _taylor_remainder_cases()),
    "taylor_general_window": ("k=3, theta on 1/30 lattice with theta_3 >= 1/3, delta in {0.1,0.25,0.45}",
                              lambda c1: _taylor_general_cases()),
    "taylor_general_remainder": ("k=3 window points at delta=0.25",
                                 lambda c1: _taylor_general_remainder_cases()),
    "bernoulli_monotone": ("xi in {j/20}, 100 steps on [0, xi], lam in {0.5,1,2,4}",
                        lambda c1: _monotone_cases()),
    "tail_integral_bound": ("n in {256,1024,4096}, up to 54 tuples per n with a nonempty range, beta=0.5, c=0.25",
                        lambda c1: _integral_cases()),
    "weak_duality": ("k=2, n<=8, lam in {0.5,1,2}, random 4-point priors on the 201-point grid",
                     lambda c1: _weak_duality_cases()),
}


@dataclass(frozen=True)
class AuditReport:
    reports: tuple[BoundReport, ...]
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(r.satisfied for r in self.reports)

    def failures(self) -> list[BoundReport]:
        return [r for r in self.reports if not r.satisfied]

    def to_json(self) -> str:
        payload = {"schema_version": self.schema_version, "passed": self.passed,
                   "reports": [r.to_record() for r in self.reports]}
        return json.dumps(payload, indent=2, sort_keys=True, default=_json_float)

    def summary_table(self) -> str:
        width = max(len(r.name) for r in self.reports)
        lines = [f"{'bound':<{width}}  {'max_violation':>14}  {'evals':>8}  status"]
        for r in self.reports:
            status = "ok" if r.satisfied else "VIOLATED"
            lines.append(f"{r.name:<{width}}  {r.max_violation:>14.6g}  {r.evaluations:>8d}  {status}")
        return "\n".join(lines)


def _json_float(value):
    return _plain(value)


def run_check(name: str, c1_scale: float = 1.0) -> BoundReport:
    domain, cases = BATTERY[name]
    return sweep(name, domain, cases(c1_scale))


def run_battery(names: Iterable[str] | None = None, c1_scale: float = 1.0,
                executor=None) -> AuditReport:
    """Run the audits in ``names`` (all by default), optionally on an executor.

    ``c1_scale`` multiplies C1 inside the Jeffreys divergence checks; values below 1
    inject a fault.  Reports come back in battery order regardless of the
    executor.
    """
    names = list(BATTERY) if names is None else list(names)
    unknown = [x for x in names if x not in BATTERY]
    if unknown:
        raise DomainError(f"unknown audits: {unknown}")
    if executor is None:
        reports = [run_check(x, c1_scale) for x in names]
    else:
        reports = list(executor.map(run_check, names, [c1_scale] * len(names)))
    return AuditReport(tuple(reports))
