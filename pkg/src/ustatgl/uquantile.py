"""
Empirical U-quantiles, fast pairwise-distance selection and Bahadur
remainder diagnostics.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _numba
from .kernels import AnalyticModel, KernelSpec
from .uprocess import (DEFAULT_MAX_PAIRS, EmpiricalUDist, as_sample, empirical_u_dist, rank_at_least,
                       streaming_u_dist)

__all__ = [
    "u_quantile",
    "pair_rank",
    "qn_select",
    "fast_u_quantile",
    "BahadurDiagnostic",
    "bahadur_grid",
    "bahadur_remainder",
    "StepFunction",
    "StabilityResult",
    "generalized_inverse_stability_check",
    "stability_fuzz",
]


def u_quantile(dist: EmpiricalUDist, p: float) -> float:
    """
    Empirical U-quantile inf{t : U_n(t) >= p}.

    For an indicator kernel this is the k-th smallest pair statistic with
    k = ceil(p * n(n-1)/2), taken as the smallest k whose ratio k / N
    reaches p in floating point.
    """
    return dist.quantile(p)


def pair_rank(n: int, p: float) -> int:
    """k = ceil(p * N), N = n(n-1)/2, in the sense of ``rank_at_least``."""
    return rank_at_least(p, n * (n - 1) // 2)


def qn_select(sample, kernel: KernelSpec, p: float, *, presorted: bool = False) -> float:
    """
    U-quantile of a distance kernel in O(n log n) time and O(n) memory.

    Valid for kernels whose pair statistic is phi(|x - y|) with phi
    non-decreasing (qn, gini, variance, winsorized-variance).  The k-th
    smallest absolute difference is selected on the sorted sample and
    mapped through phi, which commutes with order statistics.
    """
    if kernel.distance_map is None:
        raise ValueError(
            f"kernel {kernel.id!r} is not a function of |x - y|; use u_quantile")
    x = as_sample(sample)
    k = pair_rank(x.size, p)
    xs = x if presorted else np.sort(x)
    d = _numba.kth_pair_distance(np.ascontiguousarray(xs), k)
    return float(kernel.distance_map(d))


def fast_u_quantile(sample, kernel: KernelSpec, p: float) -> float:
    """U-quantile by the cheapest exact route available for the kernel."""
    if kernel.distance_map is not None:
        return qn_select(sample, kernel, p)
    return empirical_u_dist(sample, kernel).quantile(p)


@dataclass
class BahadurDiagnostic:
    """Remainders R_n(p) of the Bahadur linearisation on a p-grid."""

    p_grid: np.ndarray
    remainders: np.ndarray
    n: int
    gamma: float
    sup: float
    grid_error: float


def bahadur_grid(interval=(0.2, 0.8), m: int = 200) -> np.ndarray:
    """m + 1 equispaced points on the closed p-interval."""
    a, b = interval
    return a + np.arange(m + 1) * ((b - a) / m)


def bahadur_remainder(sample, kernel: KernelSpec, model: AnalyticModel, p_grid=None, *,
                      gamma: float = 1.0, method: str = "sort",
                      max_pairs: int = DEFAULT_MAX_PAIRS) -> BahadurDiagnostic:
    """
    R_n(p) = U_n^{-1}(p) - t_p - (p - U_n(t_p)) / u(t_p) on ``p_grid``.

    ``method="sort"`` materialises U_n once; ``method="select"`` uses
    ``qn_select`` per grid point and streaming counts for U_n(t_p).
    ``grid_error`` is the largest change of R_n between neighbouring grid
    points, a practical bound on what the grid can miss.
    """
    x = as_sample(sample)
    n = x.size
    p_grid = bahadur_grid() if p_grid is None else np.asarray(p_grid, dtype=float)
    t_p = np.asarray(model.quantile(p_grid), dtype=float)
    u_p = np.asarray(model.u(t_p), dtype=float)
    if np.any(u_p <= 0.0):
        raise ValueError("u(t_p) vanishes on the grid; p_grid leaves the model's interval")
    if method == "sort":
        dist = empirical_u_dist(x, kernel, max_pairs=max_pairs)
        q = np.array([dist.quantile(p) for p in p_grid])
        Ut = np.asarray(dist(t_p), dtype=float)
    elif method == "select":
        xs = np.sort(x)
        q = np.array([qn_select(xs, kernel, p, presorted=True) for p in p_grid])
        Ut = np.atleast_1d(streaming_u_dist(xs, kernel, t_p, presorted=True))
    else:
        raise ValueError(f"unknown method {method!r}")
    R = q - t_p - (p_grid - Ut) / u_p
    grid_error = float(np.max(np.abs(np.diff(R)))) if R.size > 1 else 0.0
    return BahadurDiagnostic(p_grid, R, n, gamma, float(np.max(np.abs(R))), grid_error)


@dataclass(frozen=True)
class StepFunction:
    """
    Right-continuous non-decreasing step function.

    F(t) = levels[0] for t < breaks[0] and levels[k] on
    [breaks[k-1], breaks[k]); ``levels`` has one more entry than ``breaks``.
    """

    breaks: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        b = np.ascontiguousarray(self.breaks, dtype=np.float64)
        v = np.ascontiguousarray(self.levels, dtype=np.float64)
        if v.size != b.size + 1:
            raise ValueError("levels must have exactly one more entry than breaks")
        if np.any(np.diff(b) <= 0) or np.any(np.diff(v) < 0):
            raise ValueError("breaks must increase strictly and levels must not decrease")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "levels", v)

    def __call__(self, t):
        return self.levels[np.searchsorted(self.breaks, t, side="right")]

    def inverse(self, p):
        """inf{t : F(t) >= p}; -inf / +inf outside the range of F."""
        p = np.asarray(p, dtype=float)
        k = np.searchsorted(self.levels, p, side="left")
        padded = np.concatenate([[-np.inf], self.breaks, [np.inf]])
        return padded[k]

    @classmethod
    def from_u_dist(cls, dist: EmpiricalUDist, model: AnalyticModel) -> "StepFunction":
        """p -> U_n(U^{-1}(p)), as used when inverting U_n around the diagonal."""
        jumps = dist.jump_points()
        breaks = np.asarray(model.U(jumps), dtype=float)
        levels = np.concatenate([[0.0], dist(jumps)])
        keep = np.concatenate([[True], np.diff(breaks) > 0])
        # U is flat outside its support; merge coinciding images, keep the last level
        idx = np.flatnonzero(keep)
        last = np.concatenate([idx[1:] - 1, [breaks.size - 1]])
        return cls(breaks[idx], np.concatenate([[0.0], levels[1:][last]]))


class StabilityResult(enum.Enum):
    HOLDS = "conclusion holds"
    VIOLATED = "conclusion violated"
    HYPOTHESIS_NOT_SATISFIED = "hypothesis not satisfied"

    def __bool__(self):
        return self is StabilityResult.HOLDS


def generalized_inverse_stability_check(F: StepFunction, c: float, l: float,
                                        C1: float, C2: float, *, tol: float = 1e-9,
                                        grid: int = 2001) -> StabilityResult:
    """
    Check the local stability of the generalised inverse of a step function.

    Hypothesis: |F(t) - F(t') - (t - t')| <= c for t, t' in [C1, C2] with
    |t - t'| <= l + 2c.  Conclusion: |F^-1(p) - F^-1(p') - (p - p')| <= c
    whenever |p - p'| <= l and both inverses lie in (C1 + 2c + l, C2 - 2c - l).

    Both suprema are computed exactly from the vertices of the piecewise
    linear difference functions; a dense p-grid is scanned in addition.
    """
    if c <= 0 or l <= 0 or C2 <= C1:
        raise ValueError("need c > 0, l > 0 and C1 < C2")
    hyp = _numba.hypothesis_sup(F.breaks, F.levels, l + 2.0 * c, C1, C2, 0.0)
    if hyp > c:
        return StabilityResult.HYPOTHESIS_NOT_SATISFIED
    lo, hi = C1 + 2.0 * c + l, C2 - 2.0 * c - l
    worst = _numba.conclusion_sup(F.breaks, F.levels, l, lo, hi, tol)
    if grid:
        p = np.linspace(F.levels[0], F.levels[-1], grid)
        inv = F.inverse(p)
        ok = (inv > lo) & (inv < hi)
        if ok.sum() > 1:
            pv, hv = p[ok], inv[ok] - p[ok]
            worst = max(worst, _numba._banded_sup(pv, hv, l))
    return StabilityResult.HOLDS if worst <= c + tol else StabilityResult.VIOLATED


def stability_fuzz(trials: int, seed: int = 0, max_breaks: int = 400,
                tol: float = 1e-9, chunk: int = 20_000) -> dict:
    """
    Fuzz the inverse-stability property until ``trials`` random step
    functions satisfying the hypothesis have been checked.
    """
    sat = checked = bad = 0
    block = 0
    while sat < trials:
        want = min(chunk, int(1.1 * (trials - sat)) + 10)
        s, ch, b = _numba.stability_fuzz_block(seed * 1_000_003 + block, want, max_breaks, tol)
        sat += s
        checked += ch
        bad += b
        block += 1
    return {"hypothesis_satisfied": sat, "conclusion_checked": checked, "violations": bad}
