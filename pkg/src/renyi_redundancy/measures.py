"""Divergences, alpha-mutual information and related information measures.

Orders are passed in two ways, following the natural parameter of each
quantity: Rényi divergences take the order ``alpha >= 1`` directly, while
code-length and mutual-information quantities take the risk-aversion
parameter ``lam`` with ``alpha = 1 + lam``.  Negative ``lam`` (risk-seeking)
is rejected everywhere.  Symbols are indexed from 0.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError, NonDominationError
from .simplex import SUM_TOL, as_probs, log_sum_exp, safe_log


def check_lambda(lam: float, *, allow_zero: bool = False, allow_inf: bool = False) -> float:
    """Validate a risk-aversion parameter and return it as a float."""
    lam = float(lam)
    if math.isnan(lam) or lam < 0:
        raise DomainError(f"lambda must be nonnegative (risk-seeking orders are excluded), got {lam}")
    if lam == 0 and not allow_zero:
        raise DomainError("lambda = 0 is not allowed here")
    if math.isinf(lam) and not allow_inf:
        raise DomainError("lambda = inf is not allowed here")
    return lam


def as_distribution(p: ArrayLike) -> NDArray[np.float64]:
    """Validate a finite distribution (entries >= 0 summing to 1)."""
    arr = np.asarray(p, dtype=float).reshape(-1)
    if arr.size < 1 or np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError(f"not a distribution: {arr}")
    if abs(arr.sum() - 1.0) > SUM_TOL:
        raise DomainError(f"distribution sums to {arr.sum()!r}")
    return arr


def _pair(P, Q):
    p, q = as_distribution(P), as_distribution(Q)
    if p.size != q.size:
        raise DomainError(f"dimension mismatch: {p.size} vs {q.size}")
    return p, q


def relative_information(P: ArrayLike, Q: ArrayLike, a: int) -> float:
    """``log P(a)/Q(a)`` for the symbol with 0-based index ``a``."""
    p, q = _pair(P, Q)
    if p[a] > 0 and q[a] == 0:
        raise NonDominationError(f"P({a}) > 0 but Q({a}) = 0")
    if p[a] == 0:
        return -math.inf
    return math.log(p[a]) - math.log(q[a])


def relative_entropy(P: ArrayLike, Q: ArrayLike) -> float:
    p, q = _pair(P, Q)
    s = p > 0
    if np.any(q[s] == 0):
        return math.inf
    return float(np.dot(p[s], np.log(p[s]) - np.log(q[s])))


def renyi_divergence(P: ArrayLike, Q: ArrayLike, alpha: float) -> float:
    """Rényi divergence of order ``alpha`` in nats, for ``alpha`` in ``[1, inf]``.

    Returns ``inf`` when P is not dominated by Q.  Orders 1 and infinity use
    their own formulas rather than a limit of the general one.
    """
    alpha = float(alpha)
    if not alpha >= 1:
        raise DomainError(f"order must be >= 1, got {alpha}")
    p, q = _pair(P, Q)
    if alpha == 1:
        return relative_entropy(p, q)
    s = p > 0
    if np.any(q[s] == 0):
        return math.inf
    ratio = np.log(p[s]) - np.log(q[s])
    if math.isinf(alpha):
        return float(np.max(ratio))
    lam = alpha - 1.0
    return log_sum_exp(np.log(p[s]) + lam * ratio) / lam


def scaled_distribution(P: ArrayLike, alpha: float) -> NDArray[np.float64]:
    """The escort distribution ``P^alpha / sum P^alpha``."""
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    p = np.asarray(P, dtype=float).reshape(-1)
    if np.any(p < 0) or not np.any(p > 0):
        raise DomainError("need a nonnegative, not all-zero vector")
    logs = alpha * safe_log(p)
    out = np.exp(logs - log_sum_exp(logs))
    return out / out.sum()


def sundaresan_divergence(P: ArrayLike, Q: ArrayLike, lam: float) -> float:
    """Rényi divergence of order ``1+lam`` between the ``1/(1+lam)``-escorts."""
    lam = check_lambda(lam)
    p, q = _pair(P, Q)
    beta = 1.0 / (1.0 + lam)
    return renyi_divergence(scaled_distribution(p, beta), scaled_distribution(q, beta), 1.0 + lam)


def scale_bijection(theta, lam: float) -> NDArray[np.float64]:
    """Map a source parameter to the parameter of its ``1/(1+lam)``-escort.

    The i.i.d. law of the image equals the escort of the i.i.d. law of
    ``theta`` on every block length, which is what makes the escort-based and
    plain minimax problems coincide.
    """
    lam = check_lambda(lam)
    return scaled_distribution(as_probs(theta), 1.0 / (1.0 + lam))


def _weights_rows(weights, rows):
    if rows is None:
        rows = weights.support_array
    if hasattr(weights, "weights"):
        weights = weights.weights
    w = np.asarray(weights, dtype=float).reshape(-1)
    W = np.atleast_2d(np.asarray(rows, dtype=float))
    if w.size == 0:
        raise DomainError("empty prior support")
    if W.shape[0] != w.size:
        raise DomainError(f"{w.size} weights for {W.shape[0]} channel rows")
    if np.any(w < 0) or abs(w.sum() - 1.0) > SUM_TOL:
        raise DomainError("prior weights must be nonnegative and sum to 1")
    return w, W


def _sibson_log_terms(w, W, lam):
    # ln( sum_theta w P^{1+lam}(y) )^{1/(1+lam)} for each output y
    logs = safe_log(W) * (1.0 + lam) + safe_log(w)[:, None]
    return log_sum_exp(logs, axis=0) / (1.0 + lam)


def alpha_mutual_information(weights, rows=None, lam: float = 1.0) -> float:
    """Sibson's alpha-mutual information of order ``1+lam`` in nats.

    ``weights`` is a prior over the rows of the channel matrix ``rows``
    (shape ``(support, outputs)``).  A prior object exposing ``weights`` and
    ``support_array`` may be passed alone; its support points then act as
    the channel rows.  ``lam = 0`` gives Shannon mutual information and
    ``lam = inf`` gives ``log sum_y max_theta P(y|theta)`` over the support.
    """
    w, W = _weights_rows(weights, rows)
    lam = check_lambda(lam, allow_zero=True, allow_inf=True)
    keep = w > 0
    w, W = w[keep], W[keep]
    if lam == 0:
        py = w @ W
        return float(sum(wi * relative_entropy(row, py) for wi, row in zip(w, W)))
    if math.isinf(lam):
        return float(np.log(np.max(W, axis=0).sum()))
    return (1.0 + lam) / lam * log_sum_exp(_sibson_log_terms(w, W, lam))


def sibson_optimal_output(weights, rows=None, lam: float = 1.0) -> NDArray[np.float64]:
    """Output distribution attaining the infimum in the alpha-mutual information."""
    w, W = _weights_rows(weights, rows)
    lam = check_lambda(lam)
    terms = _sibson_log_terms(w[w > 0], W[w > 0], lam)
    out = np.exp(terms - log_sum_exp(terms))
    return out / out.sum()


def conditional_renyi_divergence(weights, rows, Q: ArrayLike, lam: float) -> float:
    """``D_{1+lam}(P_{Y|V} P_V || Q P_V)``."""
    w, W = _weights_rows(weights, rows)
    lam = check_lambda(lam)
    q = as_distribution(Q)
    keep = w > 0
    w, W = w[keep], W[keep]
    if np.any((W > 0) & (q == 0)[None, :]):
        return math.inf
    logs = (1.0 + lam) * safe_log(W) - lam * safe_log(np.where(q > 0, q, 1.0))[None, :]
    return log_sum_exp(logs + safe_log(w)[:, None]) / lam


def campbell_cost(P: ArrayLike, lengths: ArrayLike, lam: float) -> float:
    """Exponential-moment code length ``(1/lam) log E[exp(lam * length)]``."""
    p = as_distribution(P)
    ell = np.asarray(lengths, dtype=float).reshape(-1)
    if ell.size != p.size:
        raise DomainError(f"{ell.size} lengths for {p.size} symbols")
    if np.any(ell < 0):
        raise DomainError("code lengths must be nonnegative")
    lam = check_lambda(lam, allow_inf=True)
    s = p > 0
    if math.isinf(lam):
        return float(np.max(ell[s]))
    return log_sum_exp(np.log(p[s]) + lam * ell[s]) / lam


def fisher_information(theta) -> tuple[NDArray[np.float64], float]:
    """Fisher matrix of the categorical model in its first ``k-1`` coordinates.

    Returns the matrix together with its determinant ``1 / prod(theta)``.
    """
    p = as_probs(theta)
    if np.any(p <= 0):
        raise DomainError("Fisher information needs every coordinate positive")
    J = np.diag(1.0 / p[:-1]) + 1.0 / p[-1]
    return J, float(np.exp(-np.log(p).sum()))


def _xlogy_ratio(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x > 0, x * (np.log(x) - np.log(y)), 0.0)
    return out


def binary_divergence(tau, theta):
    """``d(tau || theta)`` in nats; ``inf`` when tau is not dominated by theta."""
    val = _xlogy_ratio(tau, theta) + _xlogy_ratio(1.0 - np.asarray(tau, dtype=float),
                                                  1.0 - np.asarray(theta, dtype=float))
    val = np.where(np.isnan(val), np.inf, val)
    return float(val) if np.ndim(val) == 0 else val


def binary_entropy(tau):
    tau = np.asarray(tau, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(tau > 0, tau * np.log(tau), 0.0) - np.where(tau < 1, (1 - tau) * np.log1p(-tau), 0.0)
    return float(h) if h.ndim == 0 else h
