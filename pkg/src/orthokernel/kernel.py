"""Empirical and approximate (infinite-width) kernels of a combined layer.

For ``f(z) = phi(W z)`` with ``W`` of shape ``m x k`` the empirical kernel is
``(1/m) f(z)^T f(z')``.  Its Gaussian counterpart is
``E[phi(u1) phi(u2)]`` with ``(u1, u2) ~ N(0, Sigma)`` and
``Sigma = (1/k) [[z.z, z.z'], [z'.z, z'.z']]``.  With the norm constraint
``||z||^2 = ||z'||^2 = k`` the diagonal of ``Sigma`` is one and the kernel
depends on the correlation ``c`` only.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .activation import Activation, alpha_rescale, canonical_name
from .quadrature import normal_rule
from .sampler import Seed, WeightMatrix, make_rng

__all__ = [
    "InputPair",
    "KernelEstimate",
    "Method",
    "SigmaPair",
    "approx_kernel",
    "approx_kernel_mc",
    "approx_kernel_quadrature",
    "canonical_pair",
    "closed_form_kernel",
    "empirical_kernel",
    "kernel_values",
    "sigma_of_pair",
]

CLAMP_TOL = 1e-12
NORM_RTOL = 1e-9
DEFAULT_ORDER = 64
MAX_ORDER = 1024
AUTO_ORDER_TOL = 1e-9


def _clamp_correlation(c: float) -> float:
    if abs(c) > 1.0 + CLAMP_TOL or not math.isfinite(c):
        raise ValueError(f"correlation {c!r} outside [-1, 1]")
    return min(1.0, max(-1.0, float(c)))


@dataclass(frozen=True, eq=False)
class InputPair:
    """Two inputs with ``||z||^2 = ||z'||^2 = alpha^2 k``."""

    z: np.ndarray
    z_prime: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        zp = np.asarray(self.z_prime, dtype=float)
        if z.ndim != 1 or z.shape != zp.shape:
            raise ValueError(f"z and z' must be vectors of equal length, got {z.shape}, {zp.shape}")
        target = self.alpha**2 * z.size
        for label, v in (("z", z), ("z'", zp)):
            sq = float(v @ v)
            if abs(sq - target) > NORM_RTOL * target:
                raise ValueError(f"||{label}||^2 = {sq!r}, expected alpha^2 k = {target!r}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "z_prime", zp)

    @property
    def k(self) -> int:
        return self.z.size

    @property
    def c(self) -> float:
        return _clamp_correlation(
            float(self.z @ self.z_prime) / (np.linalg.norm(self.z) * np.linalg.norm(self.z_prime))
        )

    def swapped(self) -> "InputPair":
        return InputPair(self.z_prime, self.z, self.alpha)

    def reduce(self, activation: Activation) -> Tuple["InputPair", Activation]:
        """Map to unit scale: ``f(alpha z) = psi(W z)`` with ``psi(x) = phi(alpha x)``."""
        if self.alpha == 1.0:
            return self, activation
        return (
            InputPair(self.z / self.alpha, self.z_prime / self.alpha),
            alpha_rescale(activation, self.alpha),
        )


def canonical_pair(k: int, c: float, alpha: float = 1.0) -> InputPair:
    """``z = sqrt(k) e1`` and ``z' = sqrt(k) (c e1 + sqrt(1 - c^2) e2)``, times ``alpha``."""
    c = _clamp_correlation(c)
    z = np.zeros(k)
    zp = np.zeros(k)
    z[0] = math.sqrt(k)
    if k == 1:
        if abs(c) != 1.0:
            raise ValueError("with k = 1 the correlation must be +1 or -1")
        zp[0] = c * math.sqrt(k)
    else:
        zp[0] = c * math.sqrt(k)
        zp[1] = math.sqrt(1.0 - c * c) * math.sqrt(k)
    return InputPair(alpha * z, alpha * zp, alpha)


@dataclass(frozen=True, eq=False)
class SigmaPair:
    matrix: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.matrix, dtype=float)
        if S.shape != (2, 2):
            raise ValueError("Sigma must be 2x2")
        if abs(S[0, 1] - S[1, 0]) > 1e-12 * max(1.0, abs(S[0, 1])):
            raise ValueError("Sigma must be symmetric")
        if np.linalg.eigvalsh(S)[0] < -1e-12:
            raise ValueError("Sigma must be positive semidefinite")
        object.__setattr__(self, "matrix", S)

    @classmethod
    def from_correlation(cls, c: float) -> "SigmaPair":
        c = _clamp_correlation(c)
        return cls(np.array([[1.0, c], [c, 1.0]]))

    @property
    def unit_diagonal(self) -> bool:
        return bool(np.all(np.abs(np.diagonal(self.matrix) - 1.0) <= NORM_RTOL))

    @property
    def c(self) -> float:
        S = self.matrix
        return _clamp_correlation(S[0, 1] / math.sqrt(S[0, 0] * S[1, 1]))


def sigma_of_pair(p: InputPair) -> SigmaPair:
    Z = np.stack([p.z, p.z_prime])
    return SigmaPair(Z @ Z.T / p.k)


class Method(str, enum.Enum):
    EMPIRICAL = "empirical"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"
    CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class KernelEstimate:
    value: float
    method: Method
    stderr: Optional[float] = None


def kernel_values(x: np.ndarray, x_prime: np.ndarray, a: Activation) -> np.ndarray:
    """``mean(phi(x) * phi(x'), axis=-1)``; batched over leading axes."""
    return np.mean(a.eval(x) * a.eval(x_prime), axis=-1)


def empirical_kernel(W: Union[WeightMatrix, np.ndarray], p: InputPair, a: Activation) -> KernelEstimate:
    data = W.data if isinstance(W, WeightMatrix) else np.asarray(W, dtype=float)
    if data.shape[1] != p.k:
        raise ValueError(f"W has {data.shape[1]} columns but inputs have length {p.k}")
    val = kernel_values(data @ p.z, data @ p.z_prime, a)
    return KernelEstimate(float(val), Method.EMPIRICAL)


def _quad_fixed(c: float, a: Activation, order: int) -> float:
    x, w = normal_rule(order)
    fx = a.eval(x)
    if abs(c) == 1.0:
        return float(np.dot(w, fx * a.eval(c * x)))
    s = math.sqrt(1.0 - c * c)
    inner = a.eval(c * x[:, None] + s * x[None, :]) @ w
    return float(np.dot(w, fx * inner))


def approx_kernel_quadrature(
    s: SigmaPair,
    a: Activation,
    order: int = DEFAULT_ORDER,
    auto: bool = True,
) -> KernelEstimate:
    """Tensor Gauss-Hermite value of ``E[phi(u1) phi(u2)]``.

    Uses ``u1 = x``, ``u2 = c x + sqrt(1 - c^2) y`` with independent standard
    normals ``x, y``; ``|c| = 1`` reduces to the 1-D integral
    ``E[phi(x) phi(+-x)]``.  With ``auto`` the order is doubled until two
    successive orders agree within ``1e-9`` and the higher-order value is
    returned.
    """
    if order < 16:
        raise ValueError("quadrature order must be at least 16")
    if not s.unit_diagonal:
        raise ValueError("approximate kernel needs unit diagonal; reduce alpha first")
    c = s.c
    val = _quad_fixed(c, a, order)
    if auto:
        while order < MAX_ORDER:
            order *= 2
            nxt = _quad_fixed(c, a, order)
            done = abs(nxt - val) <= AUTO_ORDER_TOL
            val = nxt
            if done:
                break
    return KernelEstimate(val, Method.QUADRATURE)


def approx_kernel(c: float, a: Activation) -> float:
    """Shorthand for the quadrature value at correlation ``c``."""
    return approx_kernel_quadrature(SigmaPair.from_correlation(c), a).value


def approx_kernel_mc(
    s: SigmaPair,
    a: Activation,
    samples: int,
    seed: Seed,
    chunk: int = 1_000_000,
) -> KernelEstimate:
    """Monte Carlo mean of ``phi(u1) phi(u2)`` with its standard error.

    Samples are drawn in fixed-size chunks and reduced in chunk order, so the
    result depends only on ``(samples, seed, chunk)``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    c = s.c
    sc = math.sqrt(1.0 - c * c)
    rng = make_rng(seed)
    sums, sqs = [], []
    left = samples
    while left > 0:
        b = min(chunk, left)
        xy = rng.standard_normal((2, b))
        prod = a.eval(xy[0]) * a.eval(c * xy[0] + sc * xy[1])
        sums.append(float(np.sum(prod)))
        sqs.append(float(np.sum(prod * prod)))
        left -= b
    mean = math.fsum(sums) / samples
    if samples > 1:
        var = max(0.0, (math.fsum(sqs) - samples * mean * mean) / (samples - 1))
        stderr = math.sqrt(var / samples)
    else:
        stderr = math.inf
    return KernelEstimate(mean, Method.MONTE_CARLO, stderr)


def closed_form_kernel(
    name: Union[str, Activation],
    c: float,
    alpha: float = 1.0,
    scale: float = 1.0,
) -> KernelEstimate:
    """Known closed forms of ``E[phi(u1) phi(u2)]`` for unit-variance inputs.

    ``erf``: ``(2/pi) arcsin(2 a^2 c / (1 + 2 a^2))``;
    ``scaled_shifted_cos``: ``exp(-a^2 (1 - c))``;
    ``relu``: the degree-1 arc-cosine kernel ``a^2 (sqrt(1-c^2) + (pi - arccos c) c) / (2 pi)``
    (unbounded, kept only as a cross-reference);
    ``identity``: ``a^2 c``.  Here ``a`` is the input rescaling ``alpha`` and
    every value is multiplied by ``scale^2``.  Passing an :class:`Activation`
    takes ``alpha`` and ``scale`` from it.
    """
    if isinstance(name, Activation):
        alpha, scale, key = name.alpha, name.scale, name.name
    else:
        key = canonical_name(name)
    c = _clamp_correlation(c)
    a2 = alpha * alpha
    if key == "erf":
        val = 2.0 / math.pi * math.asin(2.0 * a2 * c / (1.0 + 2.0 * a2))
    elif key == "scaled_shifted_cos":
        val = math.exp(-a2 * (1.0 - c))
    elif key == "relu":
        val = a2 * (math.sqrt(max(0.0, 1.0 - c * c)) + (math.pi - math.acos(c)) * c) / (2.0 * math.pi)
    elif key == "identity":
        val = a2 * c
    else:
        raise ValueError(f"no closed form for activation {name!r}")
    return KernelEstimate(scale * scale * val, Method.CLOSED_FORM)
