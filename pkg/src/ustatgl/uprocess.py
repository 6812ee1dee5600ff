"""
U-statistics, the empirical U-distribution function and the empirical
Hoeffding decomposition.

Samples are plain one-dimensional float64 arrays in time order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .kernels import AnalyticModel, KernelSpec

__all__ = [
    "DEFAULT_MAX_PAIRS",
    "as_sample",
    "u_statistic",
    "EmpiricalUDist",
    "empirical_u_dist",
    "pair_statistics",
    "streaming_u_dist",
    "HoeffdingParts",
    "hoeffding_parts",
    "prefix_length",
    "u_process_path",
]

DEFAULT_MAX_PAIRS = 50_000_000


def as_sample(values, min_n: int = 2) -> np.ndarray:
    """Validate and return a 1-D float64 sample."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"sample must be one-dimensional, got shape {x.shape}")
    if x.size < min_n:
        raise ValueError(f"need at least {min_n} observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    return x


def _row_chunks(n: int, budget: int = 4_000_000):
    # Consecutive row blocks [i0, i1) of the upper triangle holding about `budget` pairs.
    i0 = 0
    while i0 < n - 1:
        i1 = i0 + 1
        size = n - i1
        while i1 < n - 1 and size + (n - i1 - 1) <= budget:
            i1 += 1
            size += n - i1
        yield i0, i1
        i0 = i1


def _pair_sum(x: np.ndarray, func: Callable) -> float:
    # Sum of func(x_i, x_j) over i < j.  numpy reductions are pairwise; the
    # per-block partial sums are combined with an exactly rounded fsum.
    n = x.size
    partials = []
    for i0, i1 in _row_chunks(n):
        ii = np.concatenate([np.full(n - i - 1, i) for i in range(i0, i1)])
        jj = np.concatenate([np.arange(i + 1, n) for i in range(i0, i1)])
        partials.append(float(np.sum(func(x[ii], x[jj]))))
    return math.fsum(partials)


def u_statistic(sample, g: Callable) -> float:
    """
    U-statistic 2/(n(n-1)) * sum_{i<j} g(X_i, X_j) for a fixed kernel g.

    ``g`` must be vectorised.  Memory use is bounded by processing the
    pair triangle in row blocks.
    """
    x = as_sample(sample)
    n = x.size
    return _pair_sum(x, g) / (n * (n - 1) / 2)


def pair_statistics(sample, kernel: KernelSpec, *, sort: bool = True) -> np.ndarray:
    """
    All n(n-1)/2 pair statistics.

    Distance kernels are evaluated as ``phi(x_(j) - x_(i))`` on the sorted
    sample; the difference of the sorted values has the same bits as
    ``|x_i - x_j|`` in the original order.
    """
    x = as_sample(sample)
    n = x.size
    if kernel.distance_map is not None:
        xs = np.sort(x)
        out = np.concatenate([xs[i + 1:] - xs[i] for i in range(n - 1)])
        out = kernel.distance_map(out)
    elif kernel.pair_statistic is not None:
        out = np.concatenate([kernel.pair_statistic(x[i], x[i + 1:]) for i in range(n - 1)])
    else:
        raise ValueError(f"kernel {kernel.id!r} has no pair statistic")
    out = np.asarray(out, dtype=np.float64)
    if sort:
        out.sort(kind="stable")
    return out


class EmpiricalUDist:
    """
    The empirical U-distribution function t -> U_n(t).

    On the step path U_n is stored exactly as sorted jump locations
    ``values`` and integer cumulative jump counts ``cum`` out of
    ``denom``: every pair statistic weighs 1 out of n(n-1)/2 for
    indicator kernels, every sample point weighs n-1 out of n(n-1) for
    the cdf-average kernel.  Otherwise ``U_n(t)`` is evaluated directly
    from the kernel in O(n**2).
    """

    def __init__(self, kernel: KernelSpec, n: int, values=None, cum=None,
                 denom: Optional[int] = None, sample=None):
        self.kernel = kernel
        self.n = n
        self.values = values
        self.cum = cum
        self.denom = denom
        self._sample = sample

    @property
    def is_step(self) -> bool:
        return self.values is not None

    @property
    def n_pairs(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def sorted_pairs(self) -> np.ndarray:
        """Sorted pair statistics (indicator kernels only)."""
        if not self.is_step or self.kernel.marginal:
            raise ValueError("sorted pair statistics are only kept for pair-statistic kernels")
        return self.values

    def counts(self, t) -> np.ndarray:
        """Integer numerator of U_n(t) over ``denom``."""
        if not self.is_step:
            raise ValueError("counts are only defined on the step path")
        idx = np.searchsorted(self.values, np.asarray(t, dtype=float), side="right")
        padded = np.concatenate([[0], self.cum])
        return padded[idx]

    def __call__(self, t):
        if self.is_step:
            out = self.counts(t) / self.denom
            return out if np.ndim(out) else float(out)
        t_arr = np.asarray(t, dtype=float)
        x = self._sample
        res = np.array([_pair_sum(x, lambda a, b, s=s: self.kernel.h(a, b, s))
                        for s in t_arr.ravel()]) / self.n_pairs
        res = res.reshape(t_arr.shape)
        return res if res.ndim else float(res)

    def jump_points(self) -> np.ndarray:
        """Distinct locations where U_n jumps."""
        if not self.is_step:
            raise ValueError("jump points are only available on the step path")
        return np.unique(self.values)

    def rank_for(self, p: float) -> int:
        """Smallest integer count k with k / denom >= p (see ``rank_at_least``)."""
        return rank_at_least(p, self.denom)

    def quantile(self, p: float) -> float:
        """Generalised inverse inf{t : U_n(t) >= p}."""
        if not self.is_step:
            raise ValueError(
                f"kernel {self.kernel.id!r} has no step representation; "
                "the U-quantile needs an indicator or cdf-average kernel")
        k = self.rank_for(p)
        return float(self.values[np.searchsorted(self.cum, k, side="left")])


def rank_at_least(p: float, denom: int) -> int:
    """
    Smallest k with float(k / denom) >= p.

    U_n(t) is reported as the correctly rounded ratio count / denom, so this
    realises inf{t : U_n(t) >= p} exactly for the function as evaluated.
    It equals ceil(p * denom) in exact arithmetic except when p lies within
    rounding of a ratio k / denom, where it returns that k.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    k = math.ceil(Fraction(p) * denom)
    while k > 1 and (k - 1) / denom >= p:
        k -= 1
    return k


def empirical_u_dist(sample, kernel: KernelSpec,
                     max_pairs: int = DEFAULT_MAX_PAIRS) -> EmpiricalUDist:
    """
    Build U_n for a sample.

    Indicator kernels materialise and sort all pair statistics
    (O(n**2 log n) time, O(n**2) memory); U_n(t) is then a binary search.
    The cdf-average kernel only needs the sorted sample.  Kernels without
    a fast path get an O(n**2)-per-evaluation closure.
    """
    x = as_sample(sample)
    n = x.size
    if kernel.marginal:
        values = np.sort(x)
        cum = (n - 1) * np.arange(1, n + 1, dtype=np.int64)
        return EmpiricalUDist(kernel, n, values, cum, n * (n - 1))
    if kernel.pair_statistic is not None:
        n_pairs = n * (n - 1) // 2
        if n_pairs > max_pairs:
            raise MemoryError(
                f"{n_pairs} pairs exceed the cap of {max_pairs}; use streaming_u_dist "
                "for U_n(t) and uquantile.qn_select for quantiles")
        values = pair_statistics(x, kernel)
        return EmpiricalUDist(kernel, n, values, np.arange(1, n_pairs + 1, dtype=np.int64), n_pairs)
    return EmpiricalUDist(kernel, n, sample=x)


def _distance_counts(xs: np.ndarray, phi: Callable, t: float) -> int:
    # sum_i #{j > i : phi(xs[j] - xs[i]) <= t}, vectorised bisection over rows
    n = xs.size
    i = np.arange(n - 1)
    lo = i.copy()
    hi = np.full(n - 1, n - 1)
    while True:
        active = lo < hi
        if not active.any():
            break
        mid = (lo + hi + 1) // 2
        ok = phi(xs[mid] - xs[i]) <= t
        lo = np.where(active & ok, mid, lo)
        hi = np.where(active & ~ok, mid - 1, hi)
    return int(np.sum(lo - i))


def streaming_u_dist(sample, kernel: KernelSpec, t, *, presorted: bool = False):
    """
    U_n(t) without materialising the pairs.

    Distance kernels cost O(n log n) per t, the cdf-average kernel
    O(log n) after sorting; other kernels fall back to O(n**2) blocks.
    """
    x = as_sample(sample)
    n = x.size
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if kernel.marginal:
        xs = x if presorted else np.sort(x)
        out = np.searchsorted(xs, t_arr, side="right") / n
    elif kernel.distance_map is not None:
        xs = x if presorted else np.sort(x)
        n_pairs = n * (n - 1) // 2
        out = np.array([_distance_counts(xs, kernel.distance_map, s) for s in t_arr]) / n_pairs
    else:
        out = np.atleast_1d(EmpiricalUDist(kernel, n, sample=x)(t_arr))
    out = out.reshape(np.shape(t))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class HoeffdingParts:
    """Linear and degenerate parts of U_n(t) - U(t) under an analytic model."""

    linear: Callable
    degenerate: Callable
    model: AnalyticModel


def hoeffding_parts(sample, kernel: KernelSpec, model: AnalyticModel) -> HoeffdingParts:
    """
    Empirical Hoeffding decomposition U_n = U + linear + degenerate.

    linear(t) = (2/n) sum_i h1(X_i, t) and
    degenerate(t) = 2/(n(n-1)) sum_{i<j} h2(X_i, X_j, t) with
    h2(x, y, t) = h(x, y, t) - h1(x, t) - h1(y, t) - U(t).
    The degenerate part costs O(n**2) per evaluation point.
    """
    if model.h1 is None:
        raise ValueError(f"model {model.name!r} does not provide h1")
    x = as_sample(sample)
    n = x.size
    h1, U = model.h1, model.U

    def linear(t):
        t_arr = np.asarray(t, dtype=float)
        res = np.array([2.0 * math.fsum(h1(x, s)) / n for s in t_arr.ravel()])
        res = res.reshape(t_arr.shape)
        return res if res.ndim else float(res)

    def degenerate(t):
        t_arr = np.asarray(t, dtype=float)
        res = []
        for s in t_arr.ravel():
            Us = float(U(s))

            def h2(a, b, s=s, Us=Us):
                return kernel.h(a, b, s) - h1(a, s) - h1(b, s) - Us

            res.append(_pair_sum(x, h2) / (n * (n - 1) / 2))
        res = np.array(res).reshape(t_arr.shape)
        return res if res.ndim else float(res)

    return HoeffdingParts(linear, degenerate, model)


def prefix_length(n: int, s: float) -> int:
    """floor(n * s), robust to decimal inputs such as s = 0.29."""
    return int(math.floor(round(n * s, 9)))


def u_process_path(sample, kernel: KernelSpec, model: AnalyticModel, t_grid, s_grid) -> np.ndarray:
    """
    The normalised two-parameter process floor(ns)/sqrt(n) * (U_floor(ns)(t) - U(t)).

    Rows follow ``s_grid`` and columns ``t_grid``.  Prefixes with fewer
    than two observations give a row of zeros.  Each prefix is evaluated
    with the streaming counters, so no pair set is ever materialised.
    """
    x = as_sample(sample)
    n = x.size
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    s_grid = np.atleast_1d(np.asarray(s_grid, dtype=float))
    if t_grid.size == 0 or s_grid.size == 0:
        raise ValueError("grids must be non-empty")
    if np.any(s_grid <= 0.0) or np.any(s_grid > 1.0):
        raise ValueError("s_grid must lie in (0, 1]")
    U_t = np.asarray(model.U(t_grid), dtype=float)
    out = np.zeros((s_grid.size, t_grid.size))
    for r, s in enumerate(s_grid):
        m = prefix_length(n, s)
        if m < 2:
            continue
        prefix = np.sort(x[:m])
        Um = np.atleast_1d(streaming_u_dist(prefix, kernel, t_grid, presorted=True))
        out[r] = m / math.sqrt(n) * (Um - U_t)
    return out
