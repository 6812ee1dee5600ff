"""
Stationary sequence generators with documented dependence profiles.

Every model records the dependence class it belongs to and the rate
exponents taken from the literature (not estimated):

iid_uniform   i.i.d. Uniform[0, 1].
ar1           X_k = phi X_{k-1} + e_k.  Gaussian or uniform innovations
              give a geometrically absolutely regular chain; two-point
              innovations give a process that is not strongly mixing
              (Andrews 1984) but is L1 near epoch dependent on its
              i.i.d. innovations with a_l = O(|phi|^l).
doubling_map  X_{k+1} = 2 X_k mod 1, realised as the binary expansion
              X_k = sum_{j=1}^{53} 2^{-j} B_{k+j} of i.i.d. fair bits;
              NED on the bits with a_l = O(2^{-l}).
garch11       X_k = sigma_k e_k, sigma_k^2 = omega + a X_{k-1}^2 + b sigma_{k-1}^2;
              geometrically absolutely regular for a + b < 1.

Random streams: ``Seed(base, stream)`` maps to a Philox counter-based
generator keyed through ``numpy.random.SeedSequence``, so replication
streams are independent and reproducible regardless of execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

__all__ = [
    "Seed",
    "SequenceModel",
    "MODEL_IDS",
    "sequence_model",
    "model_from_dict",
    "rng_for",
    "generate",
    "theoretical_gamma",
]

MODEL_IDS = ("iid_uniform", "ar1", "doubling_map", "garch11")

_BITS = 53


@dataclass(frozen=True)
class Seed:
    base: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.base < 2**64 or self.stream < 0:
            raise ValueError("seed base must be a 64-bit unsigned integer and stream >= 0")


def rng_for(seed: Seed) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed.base, spawn_key=(seed.stream,))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SequenceModel:
    """
    A stationary sequence model.

    ``dependence_profile`` holds ``class`` (``iid``, ``strong_mixing`` or
    ``ned``) and optional rate exponents ``alpha``, ``beta``, ``a`` or
    ``rates="geometric"``.
    """

    id: str
    params: dict = field(default_factory=dict)
    marginal: str = ""
    dependence_profile: dict = field(default_factory=dict)

    @property
    def gamma(self) -> float:
        return theoretical_gamma(self)

    def to_dict(self) -> dict:
        return {"id": self.id, "params": dict(self.params)}


def _ar1_profile(innovation):
    if innovation == "two_point":
        return {"class": "ned", "rates": "geometric",
                "note": "not strongly mixing; NED on i.i.d. innovations, a_l = O(|phi|^l)"}
    return {"class": "strong_mixing", "rates": "geometric",
            "note": "geometrically absolutely regular AR(1) with a continuous innovation density"}


def sequence_model(model_id: str, **params) -> SequenceModel:
    """Construct and validate a builtin model."""
    if model_id == "iid_uniform":
        if params:
            raise ValueError("iid_uniform takes no parameters")
        return SequenceModel("iid_uniform", {}, "Uniform[0, 1]", {"class": "iid"})
    if model_id == "ar1":
        phi = float(params.get("phi", 0.5))
        innovation = params.get("innovation", "gaussian")
        scale = float(params.get("scale", 1.0))
        if not abs(phi) < 1.0:
            raise ValueError(f"ar1 needs |phi| < 1, got {phi}")
        if innovation not in ("gaussian", "uniform", "two_point"):
            raise ValueError(f"unknown innovation {innovation!r}")
        if scale <= 0:
            raise ValueError("scale must be positive")
        marginal = (f"N(0, {scale**2 / (1 - phi**2):.6g})" if innovation == "gaussian"
                    else f"stationary law of AR(1) with {innovation} innovations")
        return SequenceModel("ar1", {"phi": phi, "innovation": innovation, "scale": scale},
                             marginal, _ar1_profile(innovation))
    if model_id == "doubling_map":
        if params:
            raise ValueError("doubling_map takes no parameters")
        return SequenceModel("doubling_map", {}, "Uniform[0, 1] (53-bit)",
                             {"class": "ned", "rates": "geometric",
                              "note": "functional of i.i.d. bits, a_l = O(2^-l)"})
    if model_id == "garch11":
        omega = float(params.get("omega", 0.1))
        a = float(params.get("a", 0.1))
        b = float(params.get("b", 0.8))
        if omega <= 0 or a < 0 or b < 0 or not a + b < 1:
            raise ValueError("garch11 needs omega > 0, a, b >= 0 and a + b < 1")
        return SequenceModel("garch11", {"omega": omega, "a": a, "b": b},
                             "symmetric, variance omega / (1 - a - b)",
                             {"class": "strong_mixing", "rates": "geometric",
                              "note": "geometrically absolutely regular for a + b < 1"})
    raise ValueError(f"unknown model {model_id!r}; choose from {MODEL_IDS}")


def model_from_dict(d: dict) -> SequenceModel:
    """Build a model from ``{"id": ..., "params": {...}}``."""
    if "id" not in d:
        raise ValueError("model document needs an 'id'")
    return sequence_model(d["id"], **d.get("params", {}))


def _innovations(rng, innovation, size, scale):
    if innovation == "gaussian":
        return scale * rng.standard_normal(size)
    if innovation == "uniform":
        # centred, unit variance before scaling
        return scale * math.sqrt(12.0) * (rng.random(size) - 0.5)
    return scale * np.where(rng.random(size) < 0.5, -1.0, 1.0)


def _ar1(rng, n, phi, innovation, scale):
    if innovation == "gaussian":
        x0 = rng.standard_normal() * scale / math.sqrt(1.0 - phi * phi)
        burn = 0
    else:
        # start at 0 and discard until phi^burn is below double precision
        x0 = 0.0
        burn = 0 if phi == 0 else int(math.ceil(-_BITS * math.log(2) / math.log(abs(phi))))
    e = _innovations(rng, innovation, n + burn, scale)
    out, _ = signal.lfilter([1.0], [1.0, -phi], e, zi=[phi * x0])
    return out[burn:]


def _doubling(rng, n):
    bits = rng.integers(0, 2, size=n + _BITS, dtype=np.uint64)
    # M_k = sum_{j=1}^{53} B_{k+j} 2^{53-j}; X_k = M_k / 2^53
    m = np.zeros(n, dtype=np.uint64)
    for j in range(1, _BITS + 1):
        m |= bits[j:j + n] << np.uint64(_BITS - j)
    return m.astype(np.float64) / float(2**_BITS)


def _garch(rng, n, omega, a, b, burn=1000):
    e = rng.standard_normal(n + burn)
    out = np.empty(n + burn)
    s2 = omega / (1.0 - a - b)
    for k in range(n + burn):
        xk = math.sqrt(s2) * e[k]
        out[k] = xk
        s2 = omega + a * xk * xk + b * s2
    return out[burn:]


def generate(model: SequenceModel, n: int, seed: Seed) -> np.ndarray:
    """A length-n path of ``model`` driven by ``seed``."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    n = int(n)
    rng = rng_for(seed)
    p = model.params
    if model.id == "iid_uniform":
        return rng.random(n)
    if model.id == "ar1":
        return _ar1(rng, n, p["phi"], p["innovation"], p["scale"])
    if model.id == "doubling_map":
        return _doubling(rng, n)
    if model.id == "garch11":
        return _garch(rng, n, p["omega"], p["a"], p["b"])
    raise ValueError(f"unknown model {model.id!r}")


def theoretical_gamma(model: SequenceModel) -> float:
    """
    Rate exponent of the uniform Bahadur bound implied by the profile:
    (alpha - 2) / alpha for strongly mixing sequences with
    alpha(k) = O(k^-alpha), (beta - 3) / (beta + 1) for NED sequences on an
    absolutely regular process with beta(k) = O(k^-beta).  i.i.d. and
    geometric rates give the limit 1.
    """
    prof = model.dependence_profile
    cls = prof.get("class")
    if cls == "iid" or prof.get("rates") == "geometric":
        return 1.0
    if cls == "strong_mixing" and prof.get("alpha") is not None:
        alpha = float(prof["alpha"])
        return 1.0 if math.isinf(alpha) else (alpha - 2.0) / alpha
    if cls == "ned" and prof.get("beta") is not None:
        beta = float(prof["beta"])
        return 1.0 if math.isinf(beta) else (beta - 3.0) / (beta + 1.0)
    raise ValueError(f"rate unknown for model {model.id!r}")

