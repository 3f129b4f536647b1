"""Closed-form width bounds for Gaussian fan-in and SUO initialised layers.

All quantities are plain float formulas of ``(m, k, C, eps, delta)``.  Tail
probabilities are evaluated in log space and capped at one.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from .activation import Activation, UnboundedActivationError

__all__ = [
    "BoundInputs",
    "BoundReport",
    "SUOConditions",
    "bound_report",
    "chatterjee_bound",
    "concentration_tail",
    "daniely_delta",
    "daniely_min_width",
    "gradient_h",
    "h_value",
    "implied_delta",
    "lipschitz_g",
    "lipschitz_h",
    "log_concentration_tail",
    "mean_bias_bound",
    "meckes_tail",
    "suo_conditions",
    "theorem_delta",
    "theorem_radius",
    "wasserstein_bound",
]

_SQRT2 = math.sqrt(2.0)


def _finite_C(C: float) -> float:
    if not math.isfinite(C):
        raise UnboundedActivationError("bound requires a finite sup-norm constant C")
    if C < 0:
        raise ValueError(f"C must be nonnegative, got {C!r}")
    return float(C)


def _need_n(n: int, lo: int) -> None:
    if n < lo:
        raise ValueError(f"n must be >= {lo}, got {n}")


@dataclass(frozen=True)
class BoundInputs:
    m: int
    k: int
    C: float
    eps: float
    delta: float

    def __post_init__(self):
        if self.m < 1 or self.k < 1:
            raise ValueError("m and k must be positive")
        _finite_C(self.C)
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def n(self) -> int:
        return max(self.m, self.k)


def daniely_min_width(C: float, eps: float, delta: float) -> float:
    """Gaussian fan-in width sufficient for ``|kappa - kappa~| <= eps`` w.p. ``1 - delta``.

    ``4 C^4 log(8/delta) / eps^2``.
    """
    C = _finite_C(C)
    if C < 1:
        raise ValueError("C >= 1 for any normalized activation")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return 4.0 * C**4 * math.log(8.0 / delta) / eps**2


def daniely_delta(m: int, C: float, eps: float) -> float:
    """Failure probability certified at width ``m``: the inverse of :func:`daniely_min_width`."""
    C = _finite_C(C)
    return min(1.0, 8.0 * math.exp(-m * eps**2 / (4.0 * C**4)))


@dataclass(frozen=True)
class SUOConditions:
    cond1_lhs: float
    cond1_rhs: float
    cond2_lhs: float
    cond2_rhs: float

    @property
    def cond1(self) -> bool:
        return self.cond1_lhs >= self.cond1_rhs

    @property
    def cond2(self) -> bool:
        return self.cond2_lhs >= self.cond2_rhs

    @property
    def satisfied(self) -> bool:
        return self.cond1 and self.cond2


def suo_conditions(b: BoundInputs) -> SUOConditions:
    """Both width conditions for the SUO guarantee.

    ``m^{5/2} / (n+1)^2 >= log(2/delta)`` and
    ``(n-1) / m^{3/4} >= 8 sqrt(2) C^2 / eps``; inequalities are inclusive.
    """
    m, n = b.m, b.n
    return SUOConditions(
        cond1_lhs=m**2.5 / (n + 1) ** 2,
        cond1_rhs=math.log(2.0 / b.delta),
        cond2_lhs=(n - 1) / m**0.75,
        cond2_rhs=8.0 * _SQRT2 * b.C**2 / b.eps,
    )


def mean_bias_bound(m: int, n: int, C: float) -> float:
    """``|E kappa - kappa~| <= 4 sqrt(2) sqrt(m) C^2 / (n - 1)`` for SUO weights."""
    _need_n(n, 2)
    C = _finite_C(C)
    return 4.0 * _SQRT2 * math.sqrt(m) * C**2 / (n - 1)


def wasserstein_bound(m: int, n: int) -> float:
    """W1 distance between ``(Wz, Wz')`` and its Gaussian counterpart: ``4m/(n-1)``."""
    _need_n(n, 2)
    return 4.0 * m / (n - 1)


def chatterjee_bound(d: int, n: int, opnorm_A: float) -> float:
    """``d sqrt(2 ||A||) / (n - 1)`` for ``d`` trace projections of a Haar O(n) matrix."""
    _need_n(n, 2)
    if opnorm_A < 0:
        raise ValueError("operator norm must be nonnegative")
    return d * math.sqrt(2.0 * opnorm_A) / (n - 1)


def lipschitz_g(C: float, m: int) -> float:
    """Lipschitz constant of ``g(x, x') = phi(x).phi(x') / m``: ``sqrt(2) C^2 / sqrt(m)``."""
    return _SQRT2 * _finite_C(C) ** 2 / math.sqrt(m)


def lipschitz_h(C: float, m: int, n: int) -> float:
    """Hilbert-Schmidt Lipschitz bound of ``M -> g(Vv, Vv')``: ``2 C^2 sqrt(n/m)``."""
    return 2.0 * _finite_C(C) ** 2 * math.sqrt(n / m)


def meckes_tail(r: float, n: int, L: float) -> float:
    """``2 exp(-r^2 (n-2) / (8 L^2))`` capped at 1 (concentration on SO(n))."""
    _need_n(n, 3)
    if r < 0:
        raise ValueError("r must be nonnegative")
    return math.exp(min(0.0, math.log(2.0) - r * r * (n - 2) / (8.0 * L * L)))


def log_concentration_tail(r: float, m: int, n: int, C: float) -> float:
    _need_n(n, 3)
    if r < 0:
        raise ValueError("r must be nonnegative")
    C = _finite_C(C)
    return min(0.0, math.log(2.0) - r * r * (n - 2) * m / (32.0 * n * C**4))


def concentration_tail(r: float, m: int, n: int, C: float) -> float:
    """``min(1, 2 exp(-r^2 (n-2) m / (32 n C^4)))``."""
    return math.exp(log_concentration_tail(r, m, n, C))


def theorem_radius(m: int, n: int, C: float) -> float:
    """Deviation radius ``4 sqrt(2) m^{3/4} C^2 / (n - 1)`` used in the SUO guarantee."""
    _need_n(n, 2)
    return 4.0 * _SQRT2 * m**0.75 * _finite_C(C) ** 2 / (n - 1)


def theorem_delta(m: int, n: int) -> float:
    """``2 exp(-(n-2) m^{5/2} / (n (n-1)^2))``, capped at 1."""
    _need_n(n, 2)
    return math.exp(min(0.0, math.log(2.0) - (n - 2) * m**2.5 / (n * (n - 1) ** 2)))


def implied_delta(eps: float, m: int, n: int, C: float) -> float:
    """Failure probability the SUO argument certifies for a given ``eps``.

    ``P(|kappa - kappa~| >= eps) <= concentration_tail(eps - bias)`` whenever
    ``eps`` exceeds the mean-bias bound; otherwise nothing is certified and 1
    is returned.
    """
    bias = mean_bias_bound(m, n, C)
    if eps <= bias:
        return 1.0
    return concentration_tail(eps - bias, m, n, C)


def h_value(M: np.ndarray, v: np.ndarray, v_prime: np.ndarray, a: Activation, m: int, k: int) -> float:
    """``h(M) = g(Vv, Vv')`` with ``V`` the top-left ``m x k`` block of ``sqrt(n/k) M``."""
    n = M.shape[0]
    V = math.sqrt(n / k) * M[:m, :k]
    return float(np.mean(a.eval(V @ v) * a.eval(V @ v_prime)))


def gradient_h(M: np.ndarray, v: np.ndarray, v_prime: np.ndarray, a: Activation, m: int, k: int) -> np.ndarray:
    """Euclidean gradient of :func:`h_value` with respect to ``M``.

    Only the top-left ``m x k`` block is nonzero::

        G = sqrt(n) / (m sqrt(k)) [ s1 v^T + s2 v'^T ],
        s1 = phi(Vv') * phi'(Vv),  s2 = phi(Vv) * phi'(Vv').
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.shape != (n, n) or n < max(m, k):
        raise ValueError(f"M must be square with side >= max(m, k), got {M.shape}")
    if v.shape != (k,) or v_prime.shape != (k,):
        raise ValueError("v and v' must have length k")
    V = math.sqrt(n / k) * M[:m, :k]
    x, xp = V @ v, V @ v_prime
    s1 = a.eval(xp) * a.deriv(x)
    s2 = a.eval(x) * a.deriv(xp)
    G = np.zeros_like(M)
    G[:m, :k] = math.sqrt(n) / (m * math.sqrt(k)) * (np.outer(s1, v) + np.outer(s2, v_prime))
    return G


@dataclass
class BoundReport:
    m: int
    k: int
    n: int
    C: float
    eps: float
    delta: float
    daniely_min_m: Optional[float]
    suo_condition_1_lhs: float
    suo_condition_1_rhs: float
    suo_condition_2_lhs: float
    suo_condition_2_rhs: float
    suo_satisfied: bool
    mean_bias: Optional[float]
    wasserstein: Optional[float]
    lipschitz_g: float
    lipschitz_h: float
    theorem_radius: Optional[float]
    theorem_delta: Optional[float]
    implied_delta: Optional[float]
    tail: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def bound_report(b: BoundInputs, r_values: Sequence[float] = ()) -> BoundReport:
    """Evaluate every bound for ``b``; ``tail`` tabulates the concentration tail at ``r_values``.

    Quantities whose formula needs ``n >= 2`` (or ``n >= 3`` for tails) are
    ``None`` when ``n`` is too small; ``daniely_min_m`` is ``None`` for ``C < 1``.
    """
    m, k, n, C = b.m, b.k, b.n, b.C
    cond = suo_conditions(b)
    big = n >= 2
    tail = {}
    if n >= 3:
        tail = {f"{r:.17g}": concentration_tail(r, m, n, C) for r in r_values}
    return BoundReport(
        m=m,
        k=k,
        n=n,
        C=C,
        eps=b.eps,
        delta=b.delta,
        daniely_min_m=daniely_min_width(C, b.eps, b.delta) if C >= 1 else None,
        suo_condition_1_lhs=cond.cond1_lhs,
        suo_condition_1_rhs=cond.cond1_rhs,
        suo_condition_2_lhs=cond.cond2_lhs,
        suo_condition_2_rhs=cond.cond2_rhs,
        suo_satisfied=cond.satisfied,
        mean_bias=mean_bias_bound(m, n, C) if big else None,
        wasserstein=wasserstein_bound(m, n) if big else None,
        lipschitz_g=lipschitz_g(C, m),
        lipschitz_h=lipschitz_h(C, m, n),
        theorem_radius=theorem_radius(m, n, C) if big else None,
        theorem_delta=theorem_delta(m, n) if big else None,
        implied_delta=implied_delta(b.eps, m, n, C) if n >= 3 else None,
        tail=tail,
    )
