"""
Kernel functions and analytic U-distribution models.

A kernel h(x, y, t) is symmetric in (x, y) and, for U-quantile work,
non-decreasing in t with limits 0 and 1.  All kernels here are
vectorised: ``h`` accepts broadcastable arrays.

Builtins
--------
variance             g(x, y) = (x - y)**2 / 2, indicator form 1{g <= t}
gini                 g(x, y) = |x - y|, indicator form 1{g <= t}
qn                   h(x, y, t) = 1{|x - y| <= t}
cdf-average          h(x, y, t) = (1{x <= t} + 1{y <= t}) / 2
winsorized-variance  h(x, y, t) = 1{(x - y)**2 / 2 <= t}
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

__all__ = [
    "KernelSpec",
    "AnalyticModel",
    "BUILTIN_KERNELS",
    "builtin_kernel",
    "analytic_model_uniform_qn",
    "analytic_model_uniform_cdf_average",
    "analytic_model_uniform_winsorized",
    "analytic_model",
    "iid_gamma",
]


@dataclass(frozen=True)
class KernelSpec:
    """
    A bivariate kernel with optional fast paths.

    Attributes
    ----------
    id : str
        Stable identifier (CLI-facing for builtins).
    h : callable
        ``h(x, y, t)``, vectorised, returns float array.
    bounded_by : float
        Bound B with |h| <= B.
    monotone_in_t : bool
        Whether h is non-decreasing in t (required for U-quantiles).
    pair_statistic : callable, optional
        ``s(x, y)`` with ``h(x, y, t) == 1{s(x, y) <= t}``.
    distance_map : callable, optional
        Non-decreasing ``phi`` with ``s(x, y) == phi(|x - y|)``.  Enables
        the O(n log n) selection and counting routines.
    g : callable, optional
        Fixed U-statistic kernel for the non-indicator builtins.
    marginal : bool
        True for ``h = (1{x <= t} + 1{y <= t}) / 2``; U_n is then a step
        function with jumps at the sample points.
    """

    id: str
    h: Callable
    bounded_by: float = 1.0
    monotone_in_t: bool = True
    pair_statistic: Optional[Callable] = None
    distance_map: Optional[Callable] = None
    g: Optional[Callable] = None
    marginal: bool = False

    @property
    def has_step_path(self) -> bool:
        """Whether U_n is an exact step function we can materialise."""
        return self.pair_statistic is not None or self.marginal

    def __call__(self, x, y, t):
        return self.h(x, y, t)


def _abs_diff(x, y):
    return np.abs(np.subtract(x, y))


def _half_sq_diff(x, y):
    # d * d rather than d ** 2: scalar pow is not always correctly rounded
    d = np.subtract(x, y)
    return 0.5 * (d * d)


def _identity(d):
    return np.asarray(d, dtype=float)


def _half_sq(d):
    d = np.asarray(d, dtype=float)
    return 0.5 * (d * d)


def _indicator_of(stat):
    def h(x, y, t):
        return (stat(x, y) <= t).astype(float)
    return h


def _cdf_average(x, y, t):
    return 0.5 * ((np.asarray(x) <= t).astype(float) + (np.asarray(y) <= t).astype(float))


BUILTIN_KERNELS = {
    "variance": KernelSpec(
        id="variance", h=_indicator_of(_half_sq_diff),
        pair_statistic=_half_sq_diff, distance_map=_half_sq, g=_half_sq_diff),
    "gini": KernelSpec(
        id="gini", h=_indicator_of(_abs_diff),
        pair_statistic=_abs_diff, distance_map=_identity, g=_abs_diff),
    "qn": KernelSpec(
        id="qn", h=_indicator_of(_abs_diff),
        pair_statistic=_abs_diff, distance_map=_identity),
    "cdf-average": KernelSpec(id="cdf-average", h=_cdf_average, marginal=True),
    "winsorized-variance": KernelSpec(
        id="winsorized-variance", h=_indicator_of(_half_sq_diff),
        pair_statistic=_half_sq_diff, distance_map=_half_sq),
}


def builtin_kernel(name: str) -> KernelSpec:
    """Return a builtin kernel by name (underscores and hyphens are interchangeable)."""
    key = name.strip().lower().replace("_", "-")
    try:
        return BUILTIN_KERNELS[key]
    except KeyError:
        raise ValueError(
            f"unknown kernel {name!r}; choose from {sorted(BUILTIN_KERNELS)}") from None


@dataclass(frozen=True)
class AnalyticModel:
    """
    Population quantities for a kernel under an i.i.d. marginal.

    ``U`` is the U-distribution function, ``u`` its derivative on
    ``interval``, ``h1`` the linear Hoeffding term and ``quantile`` the
    inverse t_p = U^{-1}(p).  ``density``/``support`` describe the
    marginal law of X_1 and are only used by numerical integration.
    """

    name: str
    U: Callable
    u: Callable
    interval: tuple
    quantile: Callable
    h1: Optional[Callable] = None
    density: Optional[Callable] = None
    support: tuple = (0.0, 1.0)
    kinks: Optional[Callable] = None


def _uniform_qn_U(t):
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    return 2.0 * t - t * t


def _uniform_qn_u(t):
    t = np.asarray(t, dtype=float)
    return np.where((t >= 0.0) & (t <= 1.0), 2.0 - 2.0 * t, 0.0)


def _uniform_qn_h1(x, t):
    x = np.asarray(x, dtype=float)
    tc = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    inner = np.minimum(x + tc, 1.0) - np.maximum(x - tc, 0.0)
    return inner - _uniform_qn_U(tc)


def _uniform_qn_quantile(p):
    p = np.asarray(p, dtype=float)
    return 1.0 - np.sqrt(1.0 - p)


def _uniform_density(x):
    return np.ones_like(np.asarray(x, dtype=float))


def analytic_model_uniform_qn() -> AnalyticModel:
    """Reference model: X i.i.d. Uniform[0, 1], kernel 1{|x - y| <= t}.

    U(t) = 2t - t**2 and u(t) = 2 - 2t on [0, 1];
    E 1{|x - Y| <= t} = min(x + t, 1) - max(x - t, 0).
    """
    return AnalyticModel(
        name="uniform-qn", U=_uniform_qn_U, u=_uniform_qn_u, interval=(0.0, 0.9),
        quantile=_uniform_qn_quantile, h1=_uniform_qn_h1,
        density=_uniform_density, support=(0.0, 1.0),
        kinks=lambda t: (t, 1.0 - t))


def analytic_model_uniform_cdf_average() -> AnalyticModel:
    """Reference model: X i.i.d. Uniform[0, 1] with the cdf-average kernel (U = F)."""
    def U(t):
        return np.clip(np.asarray(t, dtype=float), 0.0, 1.0)

    def u(t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= 0.0) & (t <= 1.0), 1.0, 0.0)

    def h1(x, t):
        return 0.5 * ((np.asarray(x) <= t).astype(float) - U(t))

    return AnalyticModel(
        name="uniform-cdf-average", U=U, u=u, interval=(0.0, 1.0),
        quantile=lambda p: np.asarray(p, dtype=float), h1=h1,
        density=_uniform_density, support=(0.0, 1.0), kinks=lambda t: (t,))


def analytic_model_uniform_winsorized() -> AnalyticModel:
    """Reference model: X i.i.d. Uniform[0, 1], kernel 1{(x - y)**2 / 2 <= t}.

    Obtained from the qn model through t -> sqrt(2t).  The derivative
    blows up at t = 0, so the usable interval starts away from zero.
    """
    def r(t):
        return np.sqrt(2.0 * np.clip(np.asarray(t, dtype=float), 0.0, 0.5))

    def u(t):
        t = np.asarray(t, dtype=float)
        inside = (t > 0.0) & (t <= 0.5)
        rt = np.where(inside, r(t), 1.0)
        return np.where(inside, _uniform_qn_u(rt) / rt, 0.0)

    return AnalyticModel(
        name="uniform-winsorized-variance",
        U=lambda t: _uniform_qn_U(r(t)), u=u, interval=(0.005, 0.45),
        quantile=lambda p: 0.5 * _uniform_qn_quantile(p) ** 2,
        h1=lambda x, t: _uniform_qn_h1(x, r(t)),
        density=_uniform_density, support=(0.0, 1.0),
        kinks=lambda t: (float(r(t)), 1.0 - float(r(t))))


_ANALYTIC = {
    ("iid_uniform", "qn"): analytic_model_uniform_qn,
    ("iid_uniform", "cdf-average"): analytic_model_uniform_cdf_average,
    ("iid_uniform", "winsorized-variance"): analytic_model_uniform_winsorized,
}


def analytic_model(sequence_id: str, kernel_id: str) -> AnalyticModel:
    """Look up the analytic model for a (sequence model, kernel) pair."""
    try:
        return _ANALYTIC[(sequence_id, builtin_kernel(kernel_id).id)]()
    except KeyError:
        raise ValueError(
            f"no analytic model for sequence {sequence_id!r} with kernel {kernel_id!r}") from None


def iid_gamma(model: AnalyticModel) -> Callable:
    """
    Long-run covariance for i.i.d. data, by numerical integration.

    Under independence every lag term vanishes and
    Gamma(t, t') = 4 E[h1(X, t) h1(X, t')].  Returns a vectorised
    callable ``gamma(t, t2)``; values are memoised.
    """
    if model.h1 is None or model.density is None:
        raise ValueError("model needs h1 and a marginal density")
    a, b = model.support
    cache: dict = {}

    def one(t, t2):
        key = (float(t), float(t2)) if t <= t2 else (float(t2), float(t))
        if key not in cache:
            pts = []
            if model.kinks is not None:
                pts = [p for s in key for p in model.kinks(s) if a < p < b]

            def f(x):
                return float(model.h1(x, key[0]) * model.h1(x, key[1]) * model.density(x))

            val, _ = integrate.quad(f, a, b, points=sorted(set(pts)) or None,
                                    limit=200, epsabs=1e-13, epsrel=1e-11)
            cache[key] = 4.0 * val
        return cache[key]

    def gamma(t, t2):
        t, t2 = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(t2, dtype=float))
        out = np.empty(t.shape)
        for idx in np.ndindex(t.shape):
            out[idx] = one(t[idx], t2[idx])
        return out if out.ndim else float(out)

    return gamma
