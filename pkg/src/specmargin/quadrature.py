"""One-dimensional quadrature on the open unit interval.

Deterministic rules run on the truncated grid ``p_i = i/N, i = 1..N-1``
(``N - 2`` panels), which keeps them clear of the endpoint singularities of
normal quantiles. Quasi- and pseudo-Monte Carlo rules average ``f`` over
``N`` points in ``(0, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate as _sp_integrate

from .errors import ValidationError

METHODS = ("trapezoid", "simpson", "niederreiter", "weyl", "pseudo_mc", "adaptive")
DETERMINISTIC = ("trapezoid", "simpson")
QUASI_MC = ("niederreiter", "weyl")

_NUDGE = 1e-12
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class QuadratureSpec:
    """Rule and slice count.

    ``adaptive`` ignores ``n`` and calls QUADPACK; it exists for reference
    values, not as a production rule.
    """

    method: str = "trapezoid"
    n: int = 30000
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValidationError(f"unknown quadrature method {self.method!r}; choose from {METHODS}")
        if self.method in DETERMINISTIC and self.n < 3:
            raise ValidationError(f"{self.method} needs N >= 3, got {self.n}")
        if self.n < 2:
            raise ValidationError(f"N must be >= 2, got {self.n}")
        if self.method == "simpson" and (self.n - 2) % 2:
            raise ValidationError(f"simpson needs an even panel count; N={self.n} gives {self.n - 2}")

    def as_dict(self) -> dict:
        d = {"method": self.method, "n": self.n}
        if self.seed is not None:
            d["seed"] = self.seed
        return d


def truncated_grid(n: int) -> np.ndarray:
    return np.arange(1, n, dtype=float) / n


def van_der_corput(n: int, base: int = 2, start: int = 1) -> np.ndarray:
    """Radical-inverse points for indices ``start .. start + n - 1``."""
    idx = np.arange(start, start + n, dtype=np.int64)
    out = np.zeros(n)
    denom = 1.0
    while np.any(idx > 0):
        denom *= base
        idx, digit = np.divmod(idx, base)
        out += digit / denom
    return out


def weyl(n: int, start: int = 1) -> np.ndarray:
    """Fractional parts of ``i * sqrt(2)``."""
    i = np.arange(start, start + n, dtype=float)
    return np.mod(i * _SQRT2, 1.0)


def _open_interval(p: np.ndarray) -> np.ndarray:
    return np.clip(p, _NUDGE, 1.0 - _NUDGE)


def points(spec: QuadratureSpec) -> np.ndarray:
    """Evaluation points of the Monte Carlo style rules."""
    if spec.method == "niederreiter":
        return _open_interval(van_der_corput(spec.n))
    if spec.method == "weyl":
        return _open_interval(weyl(spec.n))
    if spec.method == "pseudo_mc":
        rng = np.random.Generator(np.random.Philox(spec.seed if spec.seed is not None else 0))
        return _open_interval(rng.random(spec.n))
    return truncated_grid(spec.n)


def _fsum(x: np.ndarray) -> float:
    return math.fsum(x.tolist())


def trapezoid(f: Callable, n: int) -> float:
    p = truncated_grid(n)
    y = np.asarray(f(p), dtype=float)
    h = 1.0 / n
    return h * (_fsum(y) - 0.5 * (y[0] + y[-1]))


def simpson(f: Callable, n: int) -> float:
    p = truncated_grid(n)
    y = np.asarray(f(p), dtype=float)
    h = 1.0 / n
    w = np.ones_like(y)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return h / 3.0 * _fsum(w * y)


_BREAKS = (1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99,
           1 - 1e-3, 1 - 1e-4, 1 - 1e-6, 1 - 1e-8, 1 - 1e-10)


def adaptive(f: Callable, tol: float = 1e-11) -> float:
    total = 0.0
    edges = (0.0,) + _BREAKS + (1.0,)
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = _sp_integrate.quad(lambda p: float(f(p)), a, b, limit=400,
                                    epsabs=tol * 1e-2, epsrel=tol)
        total += val
    return total


def integrate(f: Callable[[np.ndarray], np.ndarray], quad: QuadratureSpec | None = None) -> float:
    """Estimate ``int_0^1 f(p) dp`` with the rule in ``quad``.

    ``f`` must accept a NumPy array of points in ``(0, 1)``.
    """
    quad = quad or QuadratureSpec()
    if quad.method == "trapezoid":
        return trapezoid(f, quad.n)
    if quad.method == "simpson":
        return simpson(f, quad.n)
    if quad.method == "adaptive":
        return adaptive(f)
    y = np.asarray(f(points(quad)), dtype=float)
    return _fsum(y) / len(y)
