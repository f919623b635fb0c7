"""Simplex points, type enumeration and log-space arithmetic.

Everything here works in natural-log units.  A probability of zero is stored
as ``-inf``; the convention ``0 * log 0 = 0`` is applied wherever a count
multiplies a log-probability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import gammaln

from .errors import DomainError, SizeError

LOG_ZERO = -math.inf
SUM_TOL = 1e-12
DEFAULT_TYPE_CAP = 10**7


@dataclass(frozen=True)
class SimplexPoint:
    """A probability vector on ``k >= 2`` symbols."""

    probs: NDArray[np.float64]

    def __init__(self, probs: ArrayLike):
        p = np.array(probs, dtype=float).reshape(-1)
        if p.size < 2:
            raise DomainError(f"need k >= 2 coordinates, got {p.size}")
        if np.any(~np.isfinite(p)) or np.any(p < 0):
            raise DomainError(f"entries must be finite and nonnegative: {p}")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise DomainError(f"entries sum to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def k(self) -> int:
        return self.probs.size

    def __iter__(self):
        return iter(self.probs)

    def __len__(self) -> int:
        return self.k

    def __eq__(self, other):
        if not isinstance(other, SimplexPoint):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())


@dataclass(frozen=True)
class TypeVector:
    """Composition of ``n`` into ``k`` nonnegative counts."""

    counts: tuple[int, ...]

    def __init__(self, counts: Iterable[int]):
        c = tuple(int(x) for x in counts)
        if len(c) < 1 or any(x < 0 for x in c):
            raise DomainError(f"counts must be nonnegative integers: {c}")
        if sum(c) < 1:
            raise DomainError("type of an empty sequence")
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def k(self) -> int:
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts)

    def __len__(self) -> int:
        return len(self.counts)


def as_probs(theta) -> NDArray[np.float64]:
    """Return the coordinate array of a SimplexPoint or validate a raw vector."""
    if isinstance(theta, SimplexPoint):
        return theta.probs
    return SimplexPoint(theta).probs


def as_counts(t) -> NDArray[np.int64]:
    if isinstance(t, TypeVector):
        return np.array(t.counts, dtype=np.int64)
    return np.array(TypeVector(t).counts, dtype=np.int64)


def count_types(n: int, k: int) -> int:
    """Number of compositions of ``n`` into ``k`` nonnegative parts."""
    return math.comb(n + k - 1, k - 1)


def _compositions(n: int, k: int):
    # descending in the first coordinate, then recursively in the rest
    if k == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


@lru_cache(maxsize=64)
def _type_table(n: int, k: int) -> NDArray[np.int64]:
    if k == 2:
        first = np.arange(n, -1, -1, dtype=np.int64)
        table = np.column_stack([first, n - first])
    else:
        table = np.array(list(_compositions(n, k)), dtype=np.int64)
    table.setflags(write=False)
    return table


def enumerate_types(n: int, k: int, cap: int = DEFAULT_TYPE_CAP) -> NDArray[np.int64]:
    """All types of length-``n`` sequences over ``k`` symbols.

    Rows are in lexicographic order, largest first count first; e.g. for
    ``n=2, k=2`` the rows are ``(2,0), (1,1), (0,2)``.  The returned array is
    read-only and cached.
    """
    if n < 1 or k < 2:
        raise DomainError(f"need n >= 1 and k >= 2, got n={n}, k={k}")
    count = count_types(n, k)
    if count > cap:
        raise SizeError(f"{count} types for n={n}, k={k} exceeds the cap of {cap}")
    return _type_table(int(n), int(k))


def log_gamma(x):
    """Natural log of the Gamma function for ``x > 0`` (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("log_gamma is only defined here for x > 0")
    out = gammaln(arr)
    return float(out) if out.ndim == 0 else out


def log_multinomial(t) -> float:
    """``ln(n! / (t_1! ... t_k!))``."""
    c = as_counts(t)
    return float(gammaln(c.sum() + 1) - gammaln(c + 1).sum())


def log_multinomial_table(types: NDArray[np.int64]) -> NDArray[np.float64]:
    """Row-wise ``log_multinomial`` for a table of types sharing one ``n``."""
    types = np.asarray(types)
    n = types.sum(axis=1)
    return gammaln(n + 1.0) - gammaln(types + 1.0).sum(axis=1)


def safe_log(p: ArrayLike) -> NDArray[np.float64]:
    """Elementwise log that maps 0 to ``-inf`` without warnings."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(p)


def type_log_likelihood(theta, t) -> float:
    """``sum_i t_i ln theta_i`` with ``0 ln 0 = 0``; ``-inf`` if impossible."""
    p = as_probs(theta)
    c = as_counts(t)
    if p.size != c.size:
        raise DomainError(f"dimension mismatch: theta has {p.size}, t has {c.size}")
    if np.any((c > 0) & (p == 0)):
        return LOG_ZERO
    mask = c > 0
    return float(np.dot(c[mask], np.log(p[mask])))


def log_likelihood_matrix(types: NDArray[np.int64], thetas: ArrayLike) -> NDArray[np.float64]:
    """Per-sequence log-likelihood of every type under every parameter.

    Returns an array of shape ``(len(types), len(thetas))``.
    """
    types = np.asarray(types, dtype=float)
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    logs = safe_log(thetas)
    finite = np.where(thetas > 0, logs, 0.0)
    out = types @ finite.T
    impossible = types @ (thetas == 0).T.astype(float) > 0
    out[impossible] = LOG_ZERO
    return out


def log_sum_exp(values: ArrayLike, axis=None):
    """Stable ``log(sum(exp(values)))``; all ``-inf`` input gives ``-inf``.

    Summation goes through numpy's pairwise reduction over a fixed ordering,
    so the result does not depend on how callers batch their work.
    """
    v = np.asarray(values, dtype=float)
    top = np.max(v, axis=axis, keepdims=True) if v.size else np.array(LOG_ZERO)
    safe_top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        s = np.log(np.sum(np.exp(v - safe_top), axis=axis, keepdims=True)) + safe_top
    s = np.where(np.isposinf(top), np.inf, s)
    if axis is None:
        return float(s.reshape(()))
    return np.squeeze(s, axis=axis)


def log_normalization(types: NDArray[np.int64], log_seq_prob: ArrayLike) -> float:
    """``ln sum_t multinom(t) exp(log_seq_prob[t])``; zero for a normalized law."""
    return log_sum_exp(log_multinomial_table(types) + np.asarray(log_seq_prob, dtype=float))


def empirical_distribution(t) -> NDArray[np.float64]:
    c = as_counts(t)
    return c / c.sum()


def empirical_entropy(t) -> float:
    """Entropy in nats of the empirical distribution ``t / n``."""
    p = empirical_distribution(t)
    p = p[p > 0]
    return float(-np.dot(p, np.log(p)))


def uniform_point(k: int) -> SimplexPoint:
    return SimplexPoint(np.full(k, 1.0 / k))


def vertex(k: int, i: int) -> SimplexPoint:
    p = np.zeros(k)
    p[i] = 1.0
    return SimplexPoint(p)


def binary_point(theta1: float) -> SimplexPoint:
    """``(theta1, 1 - theta1)``."""
    return SimplexPoint([theta1, 1.0 - theta1])


def random_simplex_points(rng: np.random.Generator, k: int, size: int,
                          concentration: float = 1.0) -> NDArray[np.float64]:
    """Dirichlet draws, renormalized so each row sums to 1 within rounding."""
    x = rng.dirichlet(np.full(k, concentration), size=size)
    return x / x.sum(axis=1, keepdims=True)


def to_base(value: float, log_base: str = "nats") -> float:
    """Convert a nat-valued quantity for display in ``nats`` or ``bits``."""
    if log_base == "nats":
        return value
    if log_base == "bits":
        return value / math.log(2.0)
    raise DomainError(f"unknown log base {log_base!r}")


def check_lengths(*arrays: Sequence) -> None:
    sizes = {len(a) for a in arrays}
    if len(sizes) > 1:
        raise DomainError(f"dimension mismatch: {sorted(sizes)}")
