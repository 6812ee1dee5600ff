"""
Generalised linear statistics of U-quantiles.

    T_n = int_I J(p) U_n^{-1}(p) dp + sum_j b_j U_n^{-1}(p_j)

The integral is evaluated as the cell sum over the n(n-1)/2 cells of
width 2/(n(n-1)) on which U_n^{-1} is constant, so it is exact up to the
integration of J over each cell.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .kernels import AnalyticModel, KernelSpec, builtin_kernel
from .uprocess import as_sample, empirical_u_dist, prefix_length
from .uquantile import fast_u_quantile

__all__ = [
    "WeightFunction",
    "ZeroJ",
    "ConstantJ",
    "PolynomialJ",
    "TabulatedJ",
    "CallableJ",
    "weight_from_dict",
    "GLSpec",
    "iqr_spec",
    "winsorized_variance_spec",
    "named_gl_spec",
    "single_quantile_spec",
    "gl_statistic",
    "gl_functional",
    "GLVariance",
    "gl_sigma2",
    "gl_process_path",
]


class WeightFunction:
    """Bounded weight J, zero outside ``support``."""

    support: Optional[tuple] = None

    def __call__(self, p):
        raise NotImplementedError

    def integrate(self, lo, hi) -> np.ndarray:
        """Vectorised int_lo^hi J(p) dp."""
        raise NotImplementedError

    def breakpoints(self) -> list:
        """Points where J may be discontinuous, support edges included."""
        return [] if self.support is None else list(self.support)

    @property
    def is_zero(self) -> bool:
        return False

    def to_dict(self) -> dict:
        raise NotImplementedError


class ZeroJ(WeightFunction):
    def __call__(self, p):
        return np.zeros_like(np.asarray(p, dtype=float))

    def integrate(self, lo, hi):
        return np.zeros(np.broadcast(np.asarray(lo), np.asarray(hi)).shape)

    @property
    def is_zero(self):
        return True

    def to_dict(self):
        return {"type": "zero", "params": {}}


class _Antiderivative(WeightFunction):
    # J with a closed-form antiderivative A; integrate() = A(hi) - A(lo).

    def _A(self, p):
        raise NotImplementedError

    def integrate(self, lo, hi):
        a, b = self.support
        lo = np.clip(np.asarray(lo, dtype=float), a, b)
        hi = np.clip(np.asarray(hi, dtype=float), a, b)
        return self._A(hi) - self._A(lo)


@dataclass
class ConstantJ(_Antiderivative):
    value: float
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("constant weight needs a < b")
        self.support = (float(self.a), float(self.b))

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return np.where((p >= self.a) & (p <= self.b), float(self.value), 0.0)

    def _A(self, p):
        return float(self.value) * (p - self.a)

    def to_dict(self):
        return {"type": "constant", "params": {"value": self.value, "a": self.a, "b": self.b}}


@dataclass
class PolynomialJ(_Antiderivative):
    """J(p) = sum_k coeffs[k] p**k on [a, b]."""

    coeffs: list
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("polynomial weight needs a < b")
        self.support = (float(self.a), float(self.b))
        self._poly = np.polynomial.Polynomial(np.asarray(self.coeffs, dtype=float))
        self._anti = self._poly.integ()

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return np.where((p >= self.a) & (p <= self.b), self._poly(p), 0.0)

    def _A(self, p):
        return self._anti(p) - self._anti(self.a)

    def to_dict(self):
        return {"type": "polynomial",
                "params": {"coeffs": list(self.coeffs), "a": self.a, "b": self.b}}


@dataclass
class TabulatedJ(_Antiderivative):
    """
    Tabulated J with midpoint interpolation: J takes the value of the
    nearest knot, switching halfway between knots, and vanishes outside
    [knots[0], knots[-1]].
    """

    knots: list
    values: list

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if k.size < 2 or k.size != v.size or np.any(np.diff(k) <= 0):
            raise ValueError("need at least two strictly increasing knots, one value each")
        self._k, self._v = k, v
        self._edges = np.concatenate([[k[0]], 0.5 * (k[1:] + k[:-1]), [k[-1]]])
        self._cum = np.concatenate([[0.0], np.cumsum(v * np.diff(self._edges))])
        self.support = (float(k[0]), float(k[-1]))

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        idx = np.clip(np.searchsorted(self._edges, p, side="right") - 1, 0, self._v.size - 1)
        inside = (p >= self._k[0]) & (p <= self._k[-1])
        return np.where(inside, self._v[idx], 0.0)

    def _A(self, p):
        idx = np.clip(np.searchsorted(self._edges, p, side="right") - 1, 0, self._v.size - 1)
        return self._cum[idx] + self._v[idx] * (p - self._edges[idx])

    def breakpoints(self):
        return list(self._edges)

    def to_dict(self):
        return {"type": "tabulated",
                "params": {"knots": list(map(float, self._k)), "values": list(map(float, self._v))}}


@dataclass
class CallableJ(WeightFunction):
    """
    Arbitrary vectorised J on [a, b] (library use only; not serialisable).

    Cells are integrated with 8- and 16-node Gauss-Legendre rules; cells
    where the two disagree by more than ``tol`` go to adaptive quadrature.
    """

    func: Callable
    a: float
    b: float
    tol: float = 1e-10

    def __post_init__(self):
        self.support = (float(self.a), float(self.b))

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        return np.where((p >= self.a) & (p <= self.b), self.func(p), 0.0)

    def _gl(self, lo, hi, deg):
        x, w = np.polynomial.legendre.leggauss(deg)
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        pts = mid[..., None] + half[..., None] * x
        return half * np.sum(w * self(pts), axis=-1)

    def integrate(self, lo, hi):
        lo = np.clip(np.asarray(lo, dtype=float), self.a, self.b)
        hi = np.clip(np.asarray(hi, dtype=float), self.a, self.b)
        lo, hi = np.broadcast_arrays(lo, hi)
        coarse = self._gl(lo, hi, 8)
        fine = self._gl(lo, hi, 16)
        bad = np.abs(fine - coarse) > self.tol
        out = np.array(fine, dtype=float)
        for idx in zip(*np.nonzero(bad)):
            out[idx] = integrate.quad(lambda s: float(self(s)), lo[idx], hi[idx],
                                      epsabs=self.tol, limit=200)[0]
        return out

    def to_dict(self):
        raise TypeError("callable weights cannot be serialised")


_WEIGHT_PARAMS = {"zero": (), "constant": ("value", "a", "b"), "polynomial": ("coeffs", "a", "b"),
                  "tabulated": ("knots", "values")}


def weight_from_dict(d: dict) -> WeightFunction:
    kind = d.get("type", "zero")
    params = d.get("params", {})
    if kind not in _WEIGHT_PARAMS:
        raise ValueError(f"unknown weight type {kind!r}")
    if set(params) != set(_WEIGHT_PARAMS[kind]):
        raise ValueError(f"weight type {kind!r} takes params {list(_WEIGHT_PARAMS[kind])}, got {sorted(params)}")
    if kind == "zero":
        return ZeroJ()
    if kind == "constant":
        return ConstantJ(float(params["value"]), float(params["a"]), float(params["b"]))
    if kind == "polynomial":
        return PolynomialJ(list(params["coeffs"]), float(params["a"]), float(params["b"]))
    return TabulatedJ(list(params["knots"]), list(params["values"]))


@dataclass
class GLSpec:
    """Weight J, atoms (p_j, b_j) and the interval I = [a, b] carrying them."""

    J: WeightFunction = field(default_factory=ZeroJ)
    atoms: tuple = ()
    interval: tuple = (0.0, 1.0)
    kernel: Optional[str] = None

    def __post_init__(self):
        a, b = map(float, self.interval)
        if not 0.0 <= a < b <= 1.0:
            raise ValueError(f"interval must satisfy 0 <= a < b <= 1, got {self.interval}")
        self.interval = (a, b)
        self.atoms = tuple((float(p), float(w)) for p, w in self.atoms)
        for p, _ in self.atoms:
            if not a <= p <= b or p <= 0.0:
                raise ValueError(f"atom location {p} outside interval {self.interval}")
        if self.J.support is not None:
            lo, hi = self.J.support
            if lo < a - 1e-15 or hi > b + 1e-15:
                raise ValueError(f"J support {self.J.support} exceeds interval {self.interval}")

    @property
    def atom_p(self) -> np.ndarray:
        return np.array([p for p, _ in self.atoms], dtype=float)

    @property
    def atom_b(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)

    def to_dict(self) -> dict:
        return {"kernel": self.kernel, "interval": list(self.interval),
                "J": self.J.to_dict(), "atoms": [[p, w] for p, w in self.atoms]}

    @classmethod
    def from_dict(cls, d: dict) -> "GLSpec":
        unknown = set(d) - {"J", "atoms", "interval", "kernel"}
        if unknown:
            raise ValueError(f"unknown GL spec fields: {sorted(unknown)}")
        return cls(J=weight_from_dict(d.get("J", {"type": "zero"})),
                   atoms=tuple(tuple(a) for a in d.get("atoms", [])),
                   interval=tuple(d.get("interval", (0.0, 1.0))),
                   kernel=d.get("kernel"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GLSpec":
        return cls.from_dict(json.loads(text))


def iqr_spec() -> GLSpec:
    """Inter-quartile distance: cdf-average kernel, atoms (0.25, -1), (0.75, +1)."""
    return GLSpec(ZeroJ(), ((0.25, -1.0), (0.75, 1.0)), (0.25, 0.75), kernel="cdf-average")


def winsorized_variance_spec() -> GLSpec:
    """Winsorised variance: J = 1 on [0, 0.75] plus the atom (0.75, 0.25)."""
    return GLSpec(ConstantJ(1.0, 0.0, 0.75), ((0.75, 0.25),), (0.0, 0.75),
                  kernel="winsorized-variance")


def named_gl_spec(spec) -> GLSpec:
    """``"iqr"``, ``"winsorized-variance"``, a GLSpec or its dict form."""
    if isinstance(spec, GLSpec):
        return spec
    if spec == "iqr":
        return iqr_spec()
    if spec == "winsorized-variance":
        return winsorized_variance_spec()
    if isinstance(spec, dict):
        return GLSpec.from_dict(spec)
    raise ValueError(f"unknown GL spec {spec!r}; use 'iqr', 'winsorized-variance' or a spec object")


def single_quantile_spec(p: float, kernel: Optional[str] = None) -> GLSpec:
    return GLSpec(ZeroJ(), ((p, 1.0),), (min(p, 0.5) / 2, max(p, 0.5)), kernel=kernel)


def _resolve_kernel(kernel, spec: GLSpec) -> KernelSpec:
    if kernel is None:
        if spec.kernel is None:
            raise ValueError("no kernel given and the GL spec names none")
        return builtin_kernel(spec.kernel)
    return builtin_kernel(kernel) if isinstance(kernel, str) else kernel


def _cell_bounds(cum: np.ndarray, denom: int, n_cells: int) -> np.ndarray:
    # Last cell index i (1-based) whose right end i/N maps to each jump:
    # floor(cum * N / denom), in exact integer arithmetic.
    g = math.gcd(n_cells, denom)
    num, den = n_cells // g, denom // g
    if int(cum[-1]) * num < 2**62:
        return (cum.astype(np.int64) * num) // den
    return np.array([int(c) * num // den for c in cum], dtype=object)


def gl_statistic(sample, kernel, spec: GLSpec, *, dist=None) -> float:
    """
    GL-statistic T_n.

    With J = 0 only the atoms are evaluated, by fast selection where the
    kernel allows it.  Otherwise U_n is materialised and the integral is
    the cell sum  sum_i (int over cell i of J) * U_n^{-1}(i / N).  Cells
    sharing a value of U_n^{-1} are merged (exact in real arithmetic; for
    indicator kernels without ties every group is a single cell).
    """
    kernel = _resolve_kernel(kernel, spec)
    x = as_sample(sample)
    n = x.size
    atom_term = 0.0
    if spec.atoms:
        if dist is not None:
            qs = [dist.quantile(p) for p in spec.atom_p]
        else:
            qs = [fast_u_quantile(x, kernel, p) for p in spec.atom_p]
        atom_term = math.fsum(b * q for b, q in zip(spec.atom_b, qs))
    if spec.J.is_zero:
        return atom_term
    if dist is None:
        dist = empirical_u_dist(x, kernel)
    if not dist.is_step:
        raise ValueError(f"kernel {kernel.id!r} has no step representation")
    n_cells = n * (n - 1) // 2
    last = _cell_bounds(dist.cum, dist.denom, n_cells)
    first = np.concatenate([[0], last[:-1]])
    lo = np.asarray(first, dtype=float) / n_cells
    hi = np.asarray(last, dtype=float) / n_cells
    weights = spec.J.integrate(lo, hi)
    nz = weights != 0.0
    integral = math.fsum(weights[nz] * dist.values[nz])
    return integral + atom_term


def _gauss_pieces(J: WeightFunction, nodes: int, extra=()):
    # Gauss-Legendre nodes/weights over each continuity piece of J's support,
    # further split at ``extra`` points inside it.
    x, w = np.polynomial.legendre.leggauss(nodes)
    bps = sorted(set(J.breakpoints()))
    if bps:
        bps = sorted(set(bps) | {float(e) for e in extra if bps[0] < e < bps[-1]})
    ps, ws = [], []
    for a, b in zip(bps[:-1], bps[1:]):
        if b <= a:
            continue
        ps.append(0.5 * (a + b) + 0.5 * (b - a) * x)
        ws.append(0.5 * (b - a) * w)
    if not ps:
        return np.empty(0), np.empty(0)
    return np.concatenate(ps), np.concatenate(ws)


def gl_functional(model: AnalyticModel, spec: GLSpec, nodes: int = 64) -> tuple:
    """
    Population value T(U^{-1}) = int J(p) t_p dp + sum_j b_j t_{p_j}.

    Returns ``(value, error)`` with the error estimated by comparing the
    ``nodes``-point rule with the half-order rule.
    """
    def integral(m):
        if spec.J.is_zero:
            return 0.0
        p, w = _gauss_pieces(spec.J, m)
        return float(np.sum(w * spec.J(p) * model.quantile(p)))

    atoms = float(np.sum(spec.atom_b * model.quantile(spec.atom_p))) if spec.atoms else 0.0
    full = integral(nodes)
    half = integral(max(nodes // 2, 1))
    return full + atoms, abs(full - half)


@dataclass
class GLVariance:
    """Asymptotic variance and its three components."""

    sigma2: float
    double_integral: float
    cross_term: float
    atom_term: float
    quadrature_error: float

    @property
    def components(self) -> tuple:
        return (self.double_integral, self.cross_term, self.atom_term)


def _sigma2_parts(model, spec, gamma, nodes):
    b = spec.atom_b
    t_a = np.asarray(model.quantile(spec.atom_p), dtype=float)
    u_a = np.asarray(model.u(t_a), dtype=float)
    if np.any(u_a <= 0):
        raise ValueError("u(t_p) vanishes at an atom")
    atom = 0.0
    if b.size:
        G_aa = np.asarray(gamma(t_a[:, None], t_a[None, :]), dtype=float)
        atom = float(b @ (G_aa / np.outer(u_a, u_a)) @ b)
    if spec.J.is_zero:
        return 0.0, 0.0, atom
    # Gamma(t_{p_j}, t_p) typically has a kink at p = p_j
    p, w = _gauss_pieces(spec.J, nodes, extra=spec.atom_p)
    t_q = np.asarray(model.quantile(p), dtype=float)
    u_q = np.asarray(model.u(t_q), dtype=float)
    if np.any(u_q <= 0):
        raise ValueError("u(t_p) vanishes on the quadrature grid")
    a_q = w * spec.J(p) / u_q
    G_qq = np.asarray(gamma(t_q[:, None], t_q[None, :]), dtype=float)
    double = float(a_q @ G_qq @ a_q)
    cross = 0.0
    if b.size:
        G_aq = np.asarray(gamma(t_a[:, None], t_q[None, :]), dtype=float)
        cross = 2.0 * float((b / u_a) @ G_aq @ a_q)
    return double, cross, atom


def gl_sigma2(kernel: Optional[KernelSpec], model, spec: GLSpec, gamma: Callable,
              nodes: int = 64) -> GLVariance:
    """
    Asymptotic variance of sqrt(n)(T_n - T(U^{-1})).

    sigma^2 = int int Gamma(t_p, t_q) / (u(t_p) u(t_q)) J(p) J(q) dp dq
              + 2 sum_j b_j int Gamma(t_{p_j}, t_p) / (u(t_{p_j}) u(t_p)) J(p) dp
              + sum_{i,j} b_i b_j Gamma(t_{p_i}, t_{p_j}) / (u(t_{p_i}) u(t_{p_j}))

    ``model`` provides ``quantile`` (p -> t_p) and ``u``; ``gamma`` is a
    vectorised Gamma(t, t').  Integrals use tensor Gauss-Legendre rules;
    the quadrature error is the change against the half-order rule.
    """
    if kernel is not None and not kernel.monotone_in_t:
        raise ValueError("GL-statistics need a kernel that is monotone in t")
    parts = _sigma2_parts(model, spec, gamma, nodes)
    coarse = _sigma2_parts(model, spec, gamma, max(nodes // 2, 1))
    total = math.fsum(parts)
    return GLVariance(total, *parts, abs(total - math.fsum(coarse)))


def gl_process_path(sample, kernel, model: AnalyticModel, spec: GLSpec, s_grid) -> np.ndarray:
    """floor(ns)/sqrt(n) * (T_floor(ns) - T(U^{-1})) on ``s_grid``; 0 below two points."""
    kernel = _resolve_kernel(kernel, spec)
    x = as_sample(sample)
    n = x.size
    s_grid = np.atleast_1d(np.asarray(s_grid, dtype=float))
    if np.any(s_grid <= 0.0) or np.any(s_grid > 1.0):
        raise ValueError("s_grid must lie in (0, 1]")
    centre, _ = gl_functional(model, spec)
    out = np.zeros(s_grid.size)
    for r, s in enumerate(s_grid):
        m = prefix_length(n, s)
        if m >= 2:
            out[r] = m / math.sqrt(n) * (gl_statistic(x[:m], kernel, spec) - centre)
    return out
