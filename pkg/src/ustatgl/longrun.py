"""
Long-run covariance of the linear Hoeffding term and density estimates.

    Gamma(t, t') = 4 cov(h1(X_1, t), h1(X_1, t'))
                   + 4 sum_k cov(h1(X_1, t), h1(X_{k+1}, t'))
                   + 4 sum_k cov(h1(X_{k+1}, t), h1(X_1, t'))

is estimated with a lag-window (HAC) estimator applied to the series
h1(X_i, t).  The estimator is an implementation choice; the population
object has no canonical estimator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .kernels import AnalyticModel, KernelSpec
from .uprocess import as_sample, streaming_u_dist
from .uquantile import fast_u_quantile

__all__ = [
    "LongRunCov",
    "lag_weights",
    "bandwidth_for",
    "h1_series",
    "lrv_matrix",
    "estimate_gamma",
    "estimate_u",
    "estimate_ustat_lrv",
    "plugin_model",
    "gamma_provider",
]

MIN_N = 50


def lag_weights(name: str, b: int) -> np.ndarray:
    """Weights w(k / b) for lags k = 1..b."""
    if b <= 0:
        return np.empty(0)
    x = np.arange(1, b + 1) / b
    if name == "bartlett":
        return 1.0 - x
    if name == "truncated":
        return np.ones(b)
    if name == "flat-top":
        return np.where(x <= 0.5, 1.0, 2.0 * (1.0 - x))
    raise ValueError(f"unknown lag window {name!r}")


def bandwidth_for(n: int, rule: Union[str, int] = "cube-root") -> int:
    """Lag truncation b_n.  ``"cube-root"`` is the smallest b with b**3 >= n."""
    if isinstance(rule, (int, np.integer)) and not isinstance(rule, bool):
        if rule < 0:
            raise ValueError("bandwidth must be non-negative")
        return int(rule)
    if rule == "cube-root":
        b = max(1, int(round(n ** (1.0 / 3.0))))
        while b**3 < n:
            b += 1
        while b > 1 and (b - 1) ** 3 >= n:
            b -= 1
        return b
    if rule == "zero":
        return 0
    if isinstance(rule, str) and rule.isdigit():
        return int(rule)
    raise ValueError(f"unknown bandwidth rule {rule!r}")


def lrv_matrix(Y: np.ndarray, b: int, weights: str = "bartlett") -> np.ndarray:
    """
    c_0 + sum_k w(k/b) (c_k + c_k^T) for the columns of Y, where
    c_k[a, c] = (1/n) sum_i (Y[i, a] - mean_a)(Y[i + k, c] - mean_c).
    """
    n = Y.shape[0]
    Z = Y - Y.mean(axis=0)
    out = Z.T @ Z / n
    for k, w in enumerate(lag_weights(weights, b), start=1):
        if w == 0.0 or k >= n:
            continue
        ck = Z[:-k].T @ Z[k:] / n
        out = out + w * (ck + ck.T)
    return 0.5 * (out + out.T)


def _row_counts_distance(xs: np.ndarray, phi: Callable, t: float) -> np.ndarray:
    # For each i: #{j : phi(|xs[j] - xs[i]|) <= t}, j = i included.
    n = xs.size
    i = np.arange(n)
    counts = np.zeros(n, dtype=np.int64)
    self_ok = phi(np.zeros(1))[0] <= t
    # right side: largest r >= i with phi(xs[r] - xs[i]) <= t (or r = i)
    lo, hi = i.copy(), np.full(n, n - 1)
    while True:
        act = lo < hi
        if not act.any():
            break
        mid = (lo + hi + 1) // 2
        ok = phi(xs[mid] - xs[i]) <= t
        lo = np.where(act & ok, mid, lo)
        hi = np.where(act & ~ok, mid - 1, hi)
    counts += lo - i
    # left side: smallest l <= i with phi(xs[i] - xs[l]) <= t (or l = i)
    lo, hi = np.zeros(n, dtype=np.int64), i.copy()
    while True:
        act = lo < hi
        if not act.any():
            break
        mid = (lo + hi) // 2
        ok = phi(xs[i] - xs[mid]) <= t
        hi = np.where(act & ok, mid, hi)
        lo = np.where(act & ~ok, mid + 1, lo)
    counts += i - hi
    return counts + int(self_ok)


def h1_series(sample, kernel: KernelSpec, grid, model: Optional[AnalyticModel] = None) -> np.ndarray:
    """
    The n x len(grid) matrix of h1(X_i, t).

    With ``model`` the analytic h1 is used.  Otherwise the plug-in
    h1(x, t) = (1/n) sum_j h(x, X_j, t) - U(t) with the V-statistic
    U(t) = (1/n**2) sum_{i,j} h(X_i, X_j, t); including j = i costs an
    O(1/n) bias that sits well below the estimator's noise.
    """
    x = as_sample(sample)
    n = x.size
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if model is not None:
        if model.h1 is None:
            raise ValueError(f"model {model.name!r} does not provide h1")
        return np.column_stack([model.h1(x, t) for t in grid])
    if kernel.marginal:
        ind = (x[:, None] <= grid[None, :]).astype(float)
        return 0.5 * (ind - ind.mean(axis=0))
    if kernel.distance_map is not None:
        order = np.argsort(x, kind="stable")
        xs = x[order]
        cols = []
        for t in grid:
            c = np.empty(n)
            c[order] = _row_counts_distance(xs, kernel.distance_map, t) / n
            cols.append(c - c.mean())
        return np.column_stack(cols)
    cols = []
    for t in grid:
        c = np.array([np.mean(kernel.h(x[i], x, t)) for i in range(n)])
        cols.append(c - c.mean())
    return np.column_stack(cols)


@dataclass
class LongRunCov:
    """Estimated Gamma on a grid, with bilinear interpolation between nodes."""

    grid: np.ndarray
    matrix: np.ndarray
    bandwidth: int
    weights: str
    h1_source: str
    n: int = 0

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.matrix = np.asarray(self.matrix, dtype=float)
        self._order = np.argsort(self.grid, kind="stable")

    @property
    def interpolation_error(self) -> float:
        """Largest spread of Gamma over a grid cell; bounds the bilinear error
        for any Gamma monotone within cells."""
        if self.grid.size < 2:
            return 0.0
        M = self.matrix[np.ix_(self._order, self._order)]
        corners = np.stack([M[:-1, :-1], M[1:, :-1], M[:-1, 1:], M[1:, 1:]])
        return float(np.max(corners.max(axis=0) - corners.min(axis=0)))

    def __call__(self, t, t2):
        """Bilinear interpolation; arguments are clamped to the grid range."""
        g = self.grid[self._order]
        M = self.matrix[np.ix_(self._order, self._order)]
        t, t2 = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(t2, dtype=float))
        if g.size == 1:
            out = np.full(t.shape, M[0, 0])
            return out if out.ndim else float(out)

        def locate(v):
            v = np.clip(v, g[0], g[-1])
            i = np.clip(np.searchsorted(g, v, side="right") - 1, 0, g.size - 2)
            frac = (v - g[i]) / (g[i + 1] - g[i])
            return i, frac

        i, a = locate(t)
        j, b = locate(t2)
        out = ((1 - a) * (1 - b) * M[i, j] + a * (1 - b) * M[i + 1, j]
               + (1 - a) * b * M[i, j + 1] + a * b * M[i + 1, j + 1])
        return out if out.ndim else float(out)

    def to_dict(self) -> dict:
        return {"schema_version": 1, "grid": self.grid.tolist(), "matrix": self.matrix.tolist(),
                "bandwidth": self.bandwidth, "weights": self.weights,
                "h1_source": self.h1_source, "n": self.n}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "LongRunCov":
        return cls(np.array(d["grid"]), np.array(d["matrix"]), int(d["bandwidth"]),
                   d["weights"], d["h1_source"], int(d.get("n", 0)))

    @classmethod
    def from_json(cls, text: str) -> "LongRunCov":
        return cls.from_dict(json.loads(text))


def estimate_gamma(sample, kernel: KernelSpec, grid,
                   h1_source: Union[str, AnalyticModel] = "plugin",
                   bandwidth: Union[str, int] = "cube-root",
                   weights: str = "bartlett") -> LongRunCov:
    """
    Gamma_hat(t, t') = 4 [c_0(t, t') + sum_{k=1}^{b} w(k/b) (c_k(t, t') + c_k(t', t))]
    over the h1 series, with Bartlett weights and b = ceil(n**(1/3)) by default.
    """
    x = as_sample(sample)
    n = x.size
    if n < MIN_N:
        raise ValueError(f"long-run covariance needs n >= {MIN_N}, got {n}")
    model = h1_source if isinstance(h1_source, AnalyticModel) else None
    if model is None and h1_source != "plugin":
        raise ValueError("h1_source must be 'plugin' or an AnalyticModel")
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    Y = h1_series(x, kernel, grid, model)
    b = bandwidth_for(n, bandwidth)
    M = 4.0 * lrv_matrix(Y, b, weights)
    return LongRunCov(grid, M, b, weights, "analytic" if model else "plugin", n)


def estimate_ustat_lrv(sample, g: Callable, bandwidth: Union[str, int] = "cube-root",
                       weights: str = "bartlett") -> float:
    """Gamma for a fixed-kernel U-statistic: 4 x long-run variance of g1(X_i)."""
    x = as_sample(sample)
    n = x.size
    if n < MIN_N:
        raise ValueError(f"long-run covariance needs n >= {MIN_N}, got {n}")
    g1 = np.empty(n)
    step = max(1, 2_000_000 // n)
    for i0 in range(0, n, step):
        block = x[i0:i0 + step]
        g1[i0:i0 + step] = np.mean(g(block[:, None], x[None, :]), axis=1)
    b = bandwidth_for(n, bandwidth)
    return float(4.0 * lrv_matrix(g1[:, None], b, weights)[0, 0])


def estimate_u(kernel: KernelSpec, t: float, model: Optional[AnalyticModel] = None,
               sample=None, c: float = 0.5) -> float:
    """
    Density u(t) of the U-distribution.

    Analytic when ``model`` is given.  Otherwise the central difference
    (U_n(t + d) - U_n(t - d)) / (2d) with d = c * n**(-1/4) * IQR, the IQR
    being that of the pair statistics (of the sample for cdf-average).
    """
    if model is not None:
        return float(model.u(t))
    if sample is None:
        raise ValueError("either a model or a sample is required")
    x = as_sample(sample)
    n = x.size
    xs = np.sort(x)
    if kernel.marginal:
        lo_t, hi_t = xs[0], xs[-1]
    elif kernel.distance_map is not None:
        lo_t = float(kernel.distance_map(np.min(np.diff(xs))))
        hi_t = float(kernel.distance_map(xs[-1] - xs[0]))
    else:
        raise ValueError(f"kernel {kernel.id!r} has no fast path for density estimation")
    if not lo_t <= t <= hi_t:
        raise ValueError(f"t = {t} lies outside the data range [{lo_t}, {hi_t}]")
    iqr = fast_u_quantile(xs, kernel, 0.75) - fast_u_quantile(xs, kernel, 0.25)
    if iqr <= 0:
        raise ValueError("degenerate sample: zero inter-quartile range")
    d = c * n ** (-0.25) * iqr
    U = np.atleast_1d(streaming_u_dist(xs, kernel, np.array([t - d, t + d]), presorted=True))
    return float((U[1] - U[0]) / (2.0 * d))


def plugin_model(sample, kernel: KernelSpec, c: float = 0.5) -> AnalyticModel:
    """
    Sample stand-in for an analytic model: t_p from the empirical
    U-quantile and u from ``estimate_u``.  Used for plug-in intervals.
    """
    x = np.sort(as_sample(sample))

    def quantile(p):
        p = np.asarray(p, dtype=float)
        out = np.array([fast_u_quantile(x, kernel, float(v)) for v in p.ravel()])
        return out.reshape(p.shape) if p.ndim else float(out[0])

    def u(t):
        t = np.asarray(t, dtype=float)
        out = np.array([estimate_u(kernel, float(v), sample=x, c=c) for v in t.ravel()])
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def U(t):
        return streaming_u_dist(x, kernel, t, presorted=True)

    lo, hi = quantile(np.array([0.0 + 1e-12, 1.0]))
    return AnalyticModel(name=f"plugin-{kernel.id}", U=U, u=u, interval=(float(lo), float(hi)),
                         quantile=quantile)


def gamma_provider(sample, kernel: KernelSpec, bandwidth: Union[str, int] = "cube-root",
                   weights: str = "bartlett") -> Callable:
    """
    Vectorised Gamma_hat(t, t') evaluated exactly at the requested points:
    each call estimates Gamma on the union of its arguments.
    """
    x = as_sample(sample)

    def gamma(t, t2):
        t, t2 = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(t2, dtype=float))
        grid = np.unique(np.concatenate([t.ravel(), t2.ravel()]))
        est = estimate_gamma(x, kernel, grid, bandwidth=bandwidth, weights=weights)
        i = np.searchsorted(grid, t)
        j = np.searchsorted(grid, t2)
        out = est.matrix[i, j]
        return out if out.ndim else float(out)

    return gamma
