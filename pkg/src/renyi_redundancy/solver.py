"""Minimax Rényi redundancy on a parameter grid.

The maximin side maximizes Sibson's alpha-mutual information over priors on
the grid with a fully corrective conditional-gradient method.  The minimax
side evaluates the worst grid divergence to the Sibson output of the returned
prior.  Both numbers are reported, so the pair brackets the value of the
grid-restricted game.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import minimize, minimize_scalar
from scipy.special import gammaln

from .errors import DomainError
from .measures import check_lambda
from .mixtures import DiscretePrior, ExchangeableMixture, divergence_to_mixture
from .simplex import (
    DEFAULT_TYPE_CAP,
    SUM_TOL,
    as_probs,
    enumerate_types,
    log_likelihood_matrix,
    log_multinomial_table,
    log_sum_exp,
    safe_log,
)

DEFAULT_GAP_THRESHOLD = 1e-4
DEFAULT_SOLVER_TOL = 1e-7
DEFAULT_MAX_ITER = 2_000
DEFAULT_RESOLUTION = {2: 2000, 3: 120}


@dataclass(frozen=True)
class ParameterGrid:
    """A finite set of simplex points standing in for the whole simplex."""

    points: NDArray[np.float64] = field(repr=False)
    resolution: str

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise DomainError("grid needs at least one point")
        for p in pts:
            as_probs(p)
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise DomainError("grid points must be distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def lattice(cls, k: int, denominator: int | None = None) -> "ParameterGrid":
        """All points whose coordinates are multiples of ``1/denominator``.

        The lattice contains every vertex and every face lattice.  For
        ``k = 2`` and denominator ``m - 1`` this is the uniform ``m``-point
        grid on ``[0, 1]``, ordered by decreasing first coordinate.
        """
        if denominator is None:
            denominator = DEFAULT_RESOLUTION.get(k)
            if denominator is None:
                raise DomainError(f"no default resolution for k={k}")
        counts = enumerate_types(denominator, k)
        return cls(counts / denominator, f"lattice(k={k}, denominator={denominator})")

    @classmethod
    def binary(cls, m: int = 2001) -> "ParameterGrid":
        if m < 2:
            raise DomainError("a binary grid needs at least the two vertices")
        return cls.lattice(2, m - 1)

    @classmethod
    def from_points(cls, points: ArrayLike, label: str = "explicit") -> "ParameterGrid":
        return cls(np.atleast_2d(np.asarray(points, dtype=float)), label)

    @property
    def k(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def interior(self) -> "ParameterGrid":
        """The points with every coordinate positive."""
        keep = np.all(self.points > 0, axis=1)
        return ParameterGrid(self.points[keep], self.resolution + " interior")


@dataclass(frozen=True)
class MaximinResult:
    prior: DiscretePrior
    value: float
    gap: float
    iterations: int
    converged: bool
    weights: NDArray[np.float64] = field(repr=False)


@dataclass(frozen=True)
class RedundancyBracket:
    """Certified bracket ``lower <= R <= upper`` for the grid-restricted game."""

    n: int
    k: int
    lam: float
    lower: float
    upper: float
    iterations: int
    tolerance: float
    certified: bool
    argmax_theta: tuple[float, ...]
    prior: DiscretePrior = field(repr=False)

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    def to_record(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "lambda": self.lam,
            "lower": self.lower,
            "upper": self.upper,
            "gap": self.gap,
            "certified": self.certified,
            "argmax_theta": list(self.argmax_theta),
            "prior_support": [
                {"theta": [float(x) for x in p], "weight": float(w)}
                for p, w in zip(self.prior.support_array, self.prior.weights)
            ],
        }


class _SibsonObjective:
    """``ln g(w)`` with ``g(w) = sum_t c_t (A_t . w)^beta`` and rows of A scaled to max 1.

    With ``beta = 1/(1+lam)`` the alpha-mutual information of the prior w is
    ``(1+lam)/lam * (ln g(w) + shift)``.
    """

    def __init__(self, types, thetas, lam):
        ll = log_likelihood_matrix(types, thetas)
        top = ll.max(axis=1, keepdims=True)
        if np.any(np.isneginf(top)):
            raise DomainError("some type has zero likelihood under every grid point")
        self.beta = 1.0 / (1.0 + lam)
        self.lam = lam
        self.A = np.exp((1.0 + lam) * (ll - top))
        logc = log_multinomial_table(types) + top[:, 0]
        self.shift = float(logc.max())
        self.c = np.exp(logc - self.shift)

    def evaluate(self, w, cols=None):
        """Objective and its gradient; restricted to ``cols`` when given."""
        A = self.A if cols is None else self.A[:, cols]
        u = np.maximum(A @ w, 1e-300)
        g = float(self.c @ u ** self.beta)
        grad = self.beta * ((self.c * u ** (self.beta - 1.0)) @ A)
        return math.log(g), grad / g

    def hessian(self, w, cols):
        A = self.A[:, cols]
        u = np.maximum(A @ w, 1e-300)
        g = float(self.c @ u ** self.beta)
        dg = self.beta * ((self.c * u ** (self.beta - 1.0)) @ A)
        Hg = self.beta * (self.beta - 1.0) * (A.T * (self.c * u ** (self.beta - 2.0))) @ A
        return Hg / g - np.outer(dg, dg) / g ** 2

    def gap(self, value, grad):
        # max_theta D(P_theta || Q_w) - I(w), using w . grad = beta
        return math.log(float(grad.max()) / self.beta) / self.lam


class _ShannonObjective:
    """Mutual information between a grid prior and the type of ``Y^n``."""

    def __init__(self, types, thetas):
        logW = (log_multinomial_table(types)[:, None] + log_likelihood_matrix(types, thetas)).T
        self.logW = logW
        self.W = np.exp(logW)
        self.finite = np.isfinite(logW)

    def divergences(self, w, cols=None):
        W = self.W if cols is None else self.W[cols]
        q = w @ (self.W if cols is None else W)
        # divergences from every grid row to the output of w
        with np.errstate(divide="ignore"):
            logq = np.log(q)
        logW, finite = (self.logW, self.finite) if cols is None else (self.logW[cols], self.finite[cols])
        diff = np.where(finite, logW - logq[None, :], 0.0)
        return (W * diff).sum(axis=1)

    def evaluate(self, w, cols=None):
        D = self.divergences(w, cols)
        return float(w @ D), D - 1.0

    def hessian(self, w, cols):
        W = self.W[cols]
        q = w @ W
        inv = np.where(q > 0, 1.0 / np.where(q > 0, q, 1.0), 0.0)
        return -(W * inv) @ W.T

    def gap(self, value, grad):
        return float(grad.max()) + 1.0 - value


def _initial_support(thetas: NDArray[np.float64], count: int) -> NDArray[np.int64]:
    m = thetas.shape[0]
    idx = set(np.unique(np.linspace(0, m - 1, min(m, count)).round().astype(int)).tolist())
    interior = np.flatnonzero(np.all(thetas > 0, axis=1))
    if interior.size:
        centre = interior[np.argmax(thetas[interior].min(axis=1))]
        idx.add(int(centre))
    return np.array(sorted(idx))


def _grid_points(grid) -> NDArray[np.float64]:
    return grid.points if isinstance(grid, ParameterGrid) else np.atleast_2d(np.asarray(grid, dtype=float))


def sibson_value(weights: ArrayLike, thetas: ArrayLike, n: int, lam: float) -> float:
    """Alpha-mutual information between a grid prior and ``Y^n``, summed over types."""
    lam = check_lambda(lam)
    th = np.atleast_2d(np.asarray(thetas, dtype=float))
    w = np.asarray(weights, dtype=float)
    keep = w > 0
    types = enumerate_types(n, th.shape[1])
    ll = log_likelihood_matrix(types, th[keep])
    inner = log_sum_exp(np.log(w[keep])[None, :] + (1 + lam) * ll, axis=1) / (1 + lam)
    return (1 + lam) / lam * log_sum_exp(log_multinomial_table(types) + inner)


def _restricted_solve(obj, S: NDArray[np.int64], w0: NDArray[np.float64]):
    # maximize the objective over priors supported on the columns S
    def negated(x):
        value, grad = obj.evaluate(x, S)
        return -value, -grad

    res = minimize(negated, w0, jac=True, method="SLSQP",
                   bounds=[(0.0, 1.0)] * S.size,
                   constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1.0,
                                 "jac": lambda x: np.ones_like(x)}],
                   options={"ftol": 1e-16, "maxiter": 500})
    x = np.maximum(res.x, 0.0)
    return _newton_polish(obj, S, x / x.sum())


def _newton_polish(obj, S, x, steps: int = 8):
    # equality-constrained Newton steps on the atoms that SLSQP kept; a step
    # is accepted when it shrinks the spread of the gradient over live atoms,
    # since value changes this close to the optimum fall below rounding
    def residual(z):
        g = obj.evaluate(z, S)[1][z > 1e-12]
        return float(g.max() - g.min())

    res = residual(x)
    for _ in range(steps):
        live = np.flatnonzero(x > 1e-12)
        grad = obj.evaluate(x, S)[1][live]
        H = obj.hessian(x, S)[np.ix_(live, live)]
        r = live.size
        K = np.zeros((r + 1, r + 1))
        K[:r, :r] = H
        K[:r, r] = K[r, :r] = 1.0
        try:
            d = np.linalg.solve(K, np.concatenate([-grad, [0.0]]))[:r]
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(d)):
            break
        shrink = d < 0
        t = min(1.0, 0.99 * float(np.min(-x[live][shrink] / d[shrink]))) if shrink.any() else 1.0
        trial = x.copy()
        trial[live] += t * d
        trial = np.maximum(trial, 0.0)
        trial /= trial.sum()
        new_res = residual(trial)
        if not new_res < res:
            break
        x, res = trial, new_res
    return x


def _pairwise_step(obj, w, s, v):
    # move mass from v to s, maximizing along the segment
    delta = np.zeros_like(w)
    delta[s], delta[v] = 1.0, -1.0
    res = minimize_scalar(lambda gamma: -obj.evaluate(w + gamma * delta)[0],
                          bounds=(0.0, w[v]), method="bounded",
                          options={"xatol": 1e-14 * max(w[v], 1e-300)})
    gamma = float(res.x)
    if -res.fun < obj.evaluate(w)[0]:
        return w
    out = w + gamma * delta
    out[v] = max(out[v], 0.0)
    return out


def _fully_corrective(obj, m: int, start: NDArray[np.int64], tol: float, max_iter: int):
    w = np.zeros(m)
    w[start] = 1.0 / start.size
    gap = math.inf
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        active = np.flatnonzero(w > 0)
        value, _ = obj.evaluate(w)
        trial = _restricted_solve(obj, active, w[active])
        candidate = np.zeros(m)
        candidate[active] = trial
        candidate[candidate < 1e-15] = 0.0
        candidate /= candidate.sum()
        trial_value, _ = obj.evaluate(candidate)
        if trial_value >= value:
            w = candidate
        value, grad = obj.evaluate(w)
        gap = obj.gap(value, grad)
        if gap <= tol:
            converged = True
            break
        s = int(np.argmax(grad))
        active = np.flatnonzero(w > 0)
        v = int(active[np.argmin(grad[active])])
        if v == s:
            break
        if w[s] == 0:
            # open a new atom; the restricted solve redistributes mass next round
            nxt = w * (1.0 - 1e-3)
            nxt[s] = 1e-3
            w = nxt if obj.evaluate(nxt)[0] > value else _pairwise_step(obj, w, s, v)
        else:
            w = _pairwise_step(obj, w, s, v)
        w /= w.sum()
    return w, gap, it, converged


def maximin_solve(grid, n: int, lam: float, tol: float = DEFAULT_SOLVER_TOL,
                  max_iter: int = DEFAULT_MAX_ITER) -> MaximinResult:
    """Maximize the alpha-mutual information over priors on ``grid``.

    Each outer iteration re-optimizes the weights on the active set and
    then adds the grid point with the largest gradient entry.  The method
    stops once ``max_theta D(P_theta || Q_w) - I(w) <= tol``.  Here
    ``Q_w`` is the Sibson output of the current prior ``w``, so the
    difference is the conditional-gradient duality gap expressed in nats.
    If ``max_iter`` outer iterations pass without reaching ``tol``, the last
    iterate is returned with ``converged=False``.
    """
    lam = check_lambda(lam)
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    thetas = _grid_points(grid)
    types = enumerate_types(n, thetas.shape[1], DEFAULT_TYPE_CAP)
    obj = _SibsonObjective(types, thetas, lam)
    start = _initial_support(thetas, 2 * types.shape[0] + 1)
    w, gap, it, converged = _fully_corrective(obj, thetas.shape[0], start, tol, max_iter)
    support = np.flatnonzero(w > 0)
    prior = DiscretePrior(thetas[support], w[support] / w[support].sum())
    value = sibson_value(w, thetas, n, lam)
    return MaximinResult(prior, value, gap, it, converged, w)


def equalizer_mixture(prior: DiscretePrior, n: int, lam: float) -> ExchangeableMixture:
    """Sibson output of ``prior`` on ``Y^n``, stored per type."""
    lam = check_lambda(lam)
    types = enumerate_types(n, prior.k)
    ll = log_likelihood_matrix(types, prior.support_array)
    logw = safe_log(prior.weights)
    inner = log_sum_exp(logw[None, :] + (1 + lam) * ll, axis=1) / (1 + lam)
    return ExchangeableMixture.from_log_weights(n, prior.k, types, inner)


def minimax_upper(Q: ExchangeableMixture, grid, lam: float) -> tuple[float, NDArray[np.float64]]:
    """Worst grid divergence ``max_theta D_{1+lam}(P_theta^n || Q)`` and a maximizer.

    Ties go to the lowest grid index.
    """
    thetas = _grid_points(grid)
    values = divergence_to_mixture(thetas, Q, lam)
    i = int(np.argmax(values))
    return float(values[i]), thetas[i].copy()


def renyi_redundancy(n: int, k: int = 2, lam: float = 1.0, resolution: int | None = None,
                     tol: float = DEFAULT_GAP_THRESHOLD, solver_tol: float | None = None,
                     grid: ParameterGrid | None = None,
                     max_iter: int = DEFAULT_MAX_ITER) -> RedundancyBracket:
    """Bracket the minimax Rényi redundancy of order ``1+lam`` on a grid.

    ``resolution`` is the lattice denominator (``m - 1`` for ``k = 2``).
    The bracket is certified when ``upper - lower <= tol``.
    """
    lam = check_lambda(lam)
    if grid is None:
        grid = ParameterGrid.lattice(k, resolution)
    elif grid.k != k:
        raise DomainError(f"grid has k={grid.k}, expected {k}")
    if solver_tol is None:
        solver_tol = min(DEFAULT_SOLVER_TOL, tol / 10)
    res = maximin_solve(grid, n, lam, solver_tol, max_iter)
    Q = equalizer_mixture(res.prior, n, lam)
    upper, arg = minimax_upper(Q, grid, lam)
    lower = res.value
    return RedundancyBracket(n, k, lam, lower, upper, res.iterations, tol,
                             upper - lower <= tol, tuple(float(x) for x in arg), res.prior)


def shtarkov_regret(n: int, k: int) -> float:
    """``ln sum_t multinom(t) exp(-n H(t/n))``, the log normalizer of the NML code."""
    types = enumerate_types(n, k)
    p = types / n
    with np.errstate(divide="ignore", invalid="ignore"):
        ml = np.where(types > 0, types * np.log(p), 0.0).sum(axis=1)
    return log_sum_exp(log_multinomial_table(types) + ml)


@dataclass(frozen=True)
class CapacityResult:
    lower: float
    upper: float
    iterations: int
    converged: bool
    weights: NDArray[np.float64] = field(repr=False)


def classical_redundancy_r0(n: int, k: int = 2, grid=None, tol: float = 1e-8,
                            max_iter: int | None = None,
                            method: str = "corrective") -> CapacityResult:
    """Shannon redundancy: the capacity of the channel ``theta -> type of Y^n``.

    ``method="blahut-arimoto"`` runs the classical alternating update,
    which converges slowly on fine grids.  The default ``"corrective"`` uses
    the same active-set scheme as ``maximin_solve``.  Either way ``lower`` is
    the mutual information of the returned prior and ``upper`` is the
    largest conditional divergence to its output.
    """
    if grid is None:
        grid = ParameterGrid.lattice(k)
    thetas = _grid_points(grid)
    types = enumerate_types(n, thetas.shape[1])
    obj = _ShannonObjective(types, thetas)
    m = thetas.shape[0]
    if method == "corrective":
        start = _initial_support(thetas, 2 * types.shape[0] + 1)
        w, _, it, converged = _fully_corrective(obj, m, start, tol, max_iter or DEFAULT_MAX_ITER)
    elif method == "blahut-arimoto":
        w = np.full(m, 1.0 / m)
        converged = False
        it = 0
        for it in range(1, (max_iter or 1_000_000) + 1):
            D = obj.divergences(w)
            if D.max() - w @ D <= tol:
                converged = True
                break
            w = w * np.exp(D - D.max())
            w /= w.sum()
    else:
        raise DomainError(f"unknown method {method!r}")
    D = obj.divergences(w)
    return CapacityResult(float(w @ D), float(D.max()), it, converged, w)


def asymptotic_constant(k: int, lam: float) -> float:
    """Constant term of the large-``n`` expansion after ``(k-1)/2 ln(n/2pi)``."""
    lam = check_lambda(lam, allow_zero=True, allow_inf=True)
    if lam == 0:
        tilt = 1.0
    elif math.isinf(lam):
        tilt = 0.0
    else:
        tilt = math.log1p(lam) / lam
    return float(-(k - 1) / 2 * tilt + k * gammaln(0.5) - gammaln(k / 2))


def asymptotic_prediction(n: int, k: int, lam: float) -> float:
    """``(k-1)/2 ln(n / (2 pi (1+lam)^(1/lam))) + ln(Gamma(1/2)^k / Gamma(k/2))``."""
    if n < 2:
        raise DomainError("the expansion is stated for n >= 2")
    check_lambda(lam)
    return (k - 1) / 2 * math.log(n / (2 * math.pi)) + asymptotic_constant(k, lam)


ZCHANNEL_ROWS = np.array([[1.0, 0.0], [0.5, 0.5]])


def zchannel_value(lam: float) -> float:
    """Maximal alpha-mutual information of the Z-channel with crossover 1/2."""
    lam = check_lambda(lam)
    return math.log1p((2.0 ** (1 + lam) - 1) ** (-1 / lam))


def zchannel_optimal_prior(lam: float) -> float:
    """Optimal probability of the noisy input."""
    lam = check_lambda(lam)
    r = 2.0 ** (1 + lam) - 1
    return 1 - (1 - r ** (-(1 + lam) / lam)) / (1 + r ** (-1 / lam))


def zchannel_solve(lam: float, tol: float = 1e-12) -> MaximinResult:
    grid = ParameterGrid.from_points(ZCHANNEL_ROWS, "z-channel")
    return maximin_solve(grid, 1, lam, tol)
