"""Dirichlet integrals, Jeffreys mixtures and their modified variants.

Every mixture here is exchangeable, so it is stored as one log-probability
per type: the probability of a single sequence with that type, not the
total mass of the type class.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import gammaln

from .errors import DomainError
from .measures import check_lambda
from .simplex import (
    DEFAULT_TYPE_CAP,
    SUM_TOL,
    SimplexPoint,
    as_counts,
    as_probs,
    enumerate_types,
    log_likelihood_matrix,
    log_multinomial_table,
    log_sum_exp,
    safe_log,
)

NORMALIZATION_TOL = 1e-9
# rows of theta processed per block in divergence sweeps
_SWEEP_BLOCK = 512


@dataclass(frozen=True)
class DiscretePrior:
    """A finitely supported prior on the simplex."""

    support_array: NDArray[np.float64]
    weights: NDArray[np.float64]

    def __init__(self, support: ArrayLike, weights: ArrayLike):
        pts = np.atleast_2d(np.array([as_probs(p) for p in support], dtype=float))
        w = np.array(weights, dtype=float).reshape(-1)
        if pts.shape[0] == 0 or pts.size == 0:
            raise DomainError("prior support must be nonempty")
        if w.size != pts.shape[0]:
            raise DomainError(f"{w.size} weights for {pts.shape[0]} support points")
        if np.any(~np.isfinite(w)) or np.any(w < 0) or abs(w.sum() - 1.0) > SUM_TOL:
            raise DomainError("weights must be nonnegative and sum to 1")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "support_array", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def point_mass(cls, theta) -> "DiscretePrior":
        return cls([as_probs(theta)], [1.0])

    @property
    def k(self) -> int:
        return self.support_array.shape[1]

    @property
    def support(self) -> list[SimplexPoint]:
        return [SimplexPoint(p) for p in self.support_array]

    def __len__(self) -> int:
        return self.weights.size

    def trimmed(self, threshold: float = 0.0) -> "DiscretePrior":
        """Drop atoms with weight ``<= threshold`` and renormalize."""
        keep = self.weights > threshold
        w = self.weights[keep]
        return DiscretePrior(self.support_array[keep], w / w.sum())


@dataclass(frozen=True)
class ExchangeableMixture:
    """A law on length-``n`` strings given by per-sequence log-probability of each type."""

    n: int
    k: int
    types: NDArray[np.int64] = field(repr=False)
    log_type_prob: NDArray[np.float64] = field(repr=False)

    def __post_init__(self):
        types = np.asarray(self.types)
        logq = np.array(self.log_type_prob, dtype=float).reshape(-1)
        if types.shape != (logq.size, self.k) or np.any(types.sum(axis=1) != self.n):
            raise DomainError("type table does not match n and k")
        if np.any(np.isnan(logq)) or np.any(np.isposinf(logq)):
            raise DomainError("log-probabilities must be finite or -inf")
        total = log_sum_exp(log_multinomial_table(types) + logq)
        if abs(math.expm1(total)) > NORMALIZATION_TOL:
            raise DomainError(f"mixture mass is exp({total!r}), not 1")
        logq.setflags(write=False)
        object.__setattr__(self, "log_type_prob", logq)

    @classmethod
    def from_log_weights(cls, n: int, k: int, types, log_unnormalized) -> "ExchangeableMixture":
        """Normalize arbitrary per-sequence log-weights into a mixture."""
        logw = np.asarray(log_unnormalized, dtype=float)
        logw = logw - log_sum_exp(log_multinomial_table(types) + logw)
        return cls(n, k, types, logw)

    def log_prob(self, t) -> float:
        """Log-probability of one sequence with type ``t``."""
        c = as_counts(t)
        if c.size != self.k or c.sum() != self.n:
            raise DomainError(f"type {tuple(c)} does not belong to n={self.n}, k={self.k}")
        idx = np.flatnonzero(np.all(self.types == c, axis=1))
        return float(self.log_type_prob[idx[0]])

    def log_mass(self) -> float:
        """Log of the total mass; zero up to rounding."""
        return log_sum_exp(log_multinomial_table(self.types) + self.log_type_prob)

    def items(self) -> Iterator[tuple[tuple[int, ...], float]]:
        for t, v in zip(self.types, self.log_type_prob):
            yield tuple(int(x) for x in t), float(v)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"t{i + 1}" for i in range(self.k)] + ["log_prob"])
        for t, v in self.items():
            writer.writerow(list(t) + [repr(v)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ExchangeableMixture":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        k = len(header) - 1
        types = np.array([[int(x) for x in r[:k]] for r in body], dtype=np.int64)
        logq = np.array([float(r[k]) for r in body])
        return cls(int(types[0].sum()), k, types, logq)


@dataclass(frozen=True)
class ModifiedPriorSpec:
    """Parameters of the modified Jeffreys prior.

    The extra atoms sit at distance ``c * ln(n) / n`` from the faces.  ``c``
    is in nats, so its admissible range is ``(0, 1/2)``.
    """

    n: int
    epsilon: float = 0.05
    c: float = 0.25
    k: int = 2

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("blocklength must be at least 2")
        if not 0 < self.epsilon <= 1:
            raise DomainError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not 0 < self.c < 0.5:
            raise DomainError(f"c must lie in (0, 1/2), got {self.c}")
        if self.k < 2:
            raise DomainError("k must be at least 2")
        if not self.edge_point < 1.0 / self.k:
            raise DomainError(f"c ln(n)/n = {self.edge_point} must be below 1/k")

    @property
    def edge_point(self) -> float:
        return self.c * math.log(self.n) / self.n


def dirichlet_log(alphas: ArrayLike) -> float:
    """``ln D_k(alpha) = sum ln Gamma(alpha_i) - ln Gamma(sum alpha_i)``."""
    a = np.asarray(alphas, dtype=float)
    if np.any(~(a > 0)):
        raise DomainError("Dirichlet parameters must be positive")
    return float(gammaln(a).sum(axis=-1) - gammaln(a.sum(axis=-1)))


def _dirichlet_log_rows(a: NDArray[np.float64]) -> NDArray[np.float64]:
    return gammaln(a).sum(axis=1) - gammaln(a.sum(axis=1))


def jeffreys_prior_log_density(theta) -> float:
    """Log density of Jeffreys' prior w.r.t. Lebesgue measure on the first ``k-1`` coordinates.

    Returns ``inf`` on the boundary of the simplex.
    """
    p = as_probs(theta)
    if np.any(p == 0):
        return math.inf
    k = p.size
    return float(-0.5 * np.log(p).sum() - dirichlet_log(np.full(k, 0.5)))


def _jeffreys_log_probs(types: NDArray[np.int64]) -> NDArray[np.float64]:
    k = types.shape[1]
    return _dirichlet_log_rows(types + 0.5) - dirichlet_log(np.full(k, 0.5))


def jeffreys_mixture(n: int, k: int, cap: int = DEFAULT_TYPE_CAP) -> ExchangeableMixture:
    """Jeffreys' mixture: ``Q*(t) = D_k(t + 1/2) / D_k(1/2, ..., 1/2)``."""
    types = enumerate_types(n, k, cap)
    return ExchangeableMixture(n, k, types, _jeffreys_log_probs(types))


def _log_weight(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def modified_mixture_binary(spec: ModifiedPriorSpec) -> ExchangeableMixture:
    """``(1-eps) Q* + eps/2 P_a + eps/2 P_{1-a}`` with ``a = c ln(n)/n``."""
    if spec.k != 2:
        raise DomainError("the binary construction needs k = 2")
    n, a, eps = spec.n, spec.edge_point, spec.epsilon
    types = enumerate_types(n, 2)
    t1, t2 = types[:, 0], types[:, 1]
    la, lb = math.log(a), math.log1p(-a)
    parts = np.stack([
        _log_weight(1 - eps) + _jeffreys_log_probs(types),
        math.log(eps / 2) + t1 * la + t2 * lb,
        math.log(eps / 2) + t2 * la + t1 * lb,
    ])
    return ExchangeableMixture(n, 2, types, log_sum_exp(parts, axis=0))


def edge_component_log_probs(types: NDArray[np.int64], i: int, a: float) -> NDArray[np.float64]:
    """``ln M_i(t)``: coordinate ``i`` is Bernoulli(a), the rest follow Jeffreys on ``k-1`` symbols."""
    n = int(types[0].sum())
    k = types.shape[1]
    ti = types[:, i]
    rest = np.delete(types, i, axis=1)
    jeff = _dirichlet_log_rows(rest + 0.5) - dirichlet_log(np.full(k - 1, 0.5))
    return ti * math.log(a) + (n - ti) * math.log1p(-a) + jeff


def modified_mixture_general(spec: ModifiedPriorSpec, k: int | None = None) -> ExchangeableMixture:
    """``(eps/k) sum_i M_i + (1-eps) Q*`` for ``k >= 3``."""
    k = spec.k if k is None else k
    if k < 3:
        raise DomainError("the general construction needs k >= 3; use modified_mixture_binary")
    if k != spec.k:
        spec = ModifiedPriorSpec(spec.n, spec.epsilon, spec.c, k)
    n, a, eps = spec.n, spec.edge_point, spec.epsilon
    types = enumerate_types(n, k)
    parts = [_log_weight(1 - eps) + _jeffreys_log_probs(types)]
    parts += [math.log(eps / k) + edge_component_log_probs(types, i, a) for i in range(k)]
    return ExchangeableMixture(n, k, types, log_sum_exp(np.stack(parts), axis=0))


def divergence_terms(thetas: ArrayLike, Q: ExchangeableMixture, lam: float) -> NDArray[np.float64]:
    """Per-type log summands ``ln multinom(t) + (1+lam) l_theta(t) - lam ln Q(t)``.

    Shape ``(len(types), len(thetas))``.  A summand is ``inf`` when theta
    charges a type that Q excludes.
    """
    lam = check_lambda(lam)
    th = np.atleast_2d(np.asarray(thetas, dtype=float))
    ll = log_likelihood_matrix(Q.types, th)
    logq = Q.log_type_prob[:, None]
    with np.errstate(invalid="ignore"):
        out = log_multinomial_table(Q.types)[:, None] + (1 + lam) * ll - lam * logq
    out[np.isneginf(ll)] = -math.inf
    out[np.isfinite(ll) & np.isneginf(logq)] = math.inf
    return out


def divergence_to_mixture(theta, Q: ExchangeableMixture, lam: float):
    """``D_{1+lam}(P_theta^n || Q)`` by an exact sum over type classes.

    ``theta`` may be a single point or an ``(m, k)`` array of points; the
    result is a float or an array accordingly.
    """
    th = np.asarray(theta.probs if isinstance(theta, SimplexPoint) else theta, dtype=float)
    single = th.ndim == 1
    th = np.atleast_2d(th)
    if th.shape[1] != Q.k:
        raise DomainError(f"theta has {th.shape[1]} coordinates, mixture has k={Q.k}")
    lam = check_lambda(lam)
    out = np.empty(th.shape[0])
    for start in range(0, th.shape[0], _SWEEP_BLOCK):
        block = th[start:start + _SWEEP_BLOCK]
        out[start:start + block.shape[0]] = log_sum_exp(divergence_terms(block, Q, lam), axis=0) / lam
    return float(out[0]) if single else out


@dataclass(frozen=True)
class FaceDivergence:
    """Closed-form pieces of the divergence from a face point to Jeffreys' mixture."""

    correction: float
    value: float | None


def face_correction(n: int, k: int, l: int) -> float:
    """``ln [Gamma(l/2) Gamma(n+k/2)] / [Gamma(k/2) Gamma(n+l/2)]``."""
    if not 1 <= l <= k:
        raise DomainError(f"need 1 <= l <= k, got l={l}, k={k}")
    return float(gammaln(l / 2) + gammaln(n + k / 2) - gammaln(k / 2) - gammaln(n + l / 2))


def vertex_divergence_closed_form(n: int, k: int, l: int = 1, lam: float = 1.0) -> FaceDivergence:
    """Divergence from a point with ``l`` nonzero coordinates to Jeffreys' mixture.

    The divergence to the ``k``-symbol mixture equals the divergence of the
    reduced point to the ``l``-symbol mixture plus ``face_correction``.
    For a vertex (``l = 1``) the reduced divergence is zero and the full
    value ``-ln Q*(constant string)`` is returned, which does not depend
    on ``lam``.  Otherwise ``value`` is ``None``.
    """
    check_lambda(lam)
    if n < 1:
        raise DomainError("n must be positive")
    corr = face_correction(n, k, l)
    return FaceDivergence(corr, corr if l == 1 else None)
