"""Scalar activations with exact derivatives and certified sup-norm bounds.

An :class:`Activation` is ``x -> scale * base(alpha * x)`` for one of the
builtin ``base`` functions.  ``sup_bound_C`` is a joint bound on
``sup|phi|`` and ``sup|phi'|``; unbounded activations carry ``inf`` so the
width-bound calculators can refuse them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, NamedTuple, Optional

import numpy as np
from scipy import special

from .quadrature import normal_expectation

__all__ = [
    "Activation",
    "BUILTIN_NAMES",
    "UnboundedActivationError",
    "alpha_rescale",
    "builtin",
    "normalize",
    "second_moment",
]

DEFAULT_ORDER = 128

_SQRT2 = math.sqrt(2.0)
_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


class UnboundedActivationError(ValueError):
    """An operation needs a finite sup-norm bound ``C`` but got ``inf``."""


class _Base(NamedTuple):
    f: Callable
    df: Callable
    C: float
    d2_bound: Optional[float]


def _relu_grad(x):
    return (np.asarray(x) > 0).astype(float)


_BASES: Dict[str, _Base] = {
    "erf": _Base(
        special.erf,
        lambda x: _TWO_OVER_SQRT_PI * np.exp(-np.square(x)),
        _TWO_OVER_SQRT_PI,
        # |erf''| peaks at x = 1/sqrt(2)
        2.0 * _SQRT2 / math.sqrt(math.pi) * math.exp(-0.5),
    ),
    "tanh": _Base(
        np.tanh,
        lambda x: 1.0 - np.square(np.tanh(x)),
        1.0,
        4.0 / (3.0 * math.sqrt(3.0)),
    ),
    "scaled_shifted_cos": _Base(
        lambda x: _SQRT2 * np.cos(np.asarray(x) + math.pi / 4),
        lambda x: -_SQRT2 * np.sin(np.asarray(x) + math.pi / 4),
        _SQRT2,
        _SQRT2,
    ),
    "identity": _Base(
        lambda x: np.asarray(x, dtype=float) * 1.0,
        lambda x: np.ones_like(np.asarray(x, dtype=float)),
        math.inf,
        0.0,
    ),
    "relu": _Base(lambda x: np.maximum(x, 0.0), _relu_grad, math.inf, None),
}

BUILTIN_NAMES = tuple(_BASES)

_ALIASES = {
    "erf": "erf",
    "tanh": "tanh",
    "scaledshiftedcos": "scaled_shifted_cos",
    "cos": "scaled_shifted_cos",
    "identity": "identity",
    "linear": "identity",
    "relu": "relu",
}


def canonical_name(name: str) -> str:
    key = name.lower().replace("_", "").replace("-", "")
    try:
        return _ALIASES[key]
    except KeyError:
        raise ValueError(f"unknown activation {name!r}; choose from {BUILTIN_NAMES}") from None


@dataclass(frozen=True)
class Activation:
    """``phi(x) = scale * base(alpha * x)``."""

    name: str
    sup_bound_C: float
    second_deriv_bound: Optional[float] = None
    normalized: bool = False
    scale: float = 1.0
    alpha: float = 1.0

    @property
    def _base(self) -> _Base:
        return _BASES[self.name]

    def eval(self, x):
        return self.scale * self._base.f(self.alpha * np.asarray(x, dtype=float))

    __call__ = eval

    def deriv(self, x):
        return (self.scale * self.alpha) * self._base.df(self.alpha * np.asarray(x, dtype=float))

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.sup_bound_C)

    @property
    def is_odd(self) -> bool:
        return self.name in ("erf", "tanh", "identity")

    def require_bounded(self) -> float:
        if not self.bounded:
            raise UnboundedActivationError(
                f"activation {self.name!r} has no finite sup-norm bound"
            )
        return self.sup_bound_C

    def describe(self) -> dict:
        return {
            "name": self.name,
            "alpha": self.alpha,
            "scale": self.scale,
            "normalized": self.normalized,
            "C": self.sup_bound_C,
        }


def builtin(name: str) -> Activation:
    """Named activation: ``erf``, ``tanh``, ``scaled_shifted_cos``, ``identity`` or ``relu``.

    ``scaled_shifted_cos`` is ``sqrt(2) cos(x + pi/4)``.  ``identity`` and
    ``relu`` are unbounded and carry ``sup_bound_C = inf``.
    """
    key = canonical_name(name)
    b = _BASES[key]
    act = Activation(key, b.C, b.d2_bound)
    if key == "identity":
        # E[x^2] = 1 exactly
        act = replace(act, normalized=True)
    return act


def second_moment(a: Activation, order: int = DEFAULT_ORDER) -> float:
    """Gauss-Hermite estimate of ``E[phi(x)^2]`` for ``x ~ N(0, 1)``."""
    return normal_expectation(lambda x: np.square(a.eval(x)), order)


def normalize(a: Activation, quadrature_order: int = DEFAULT_ORDER) -> Activation:
    """Rescale ``a`` so that ``E[phi(x)^2] = 1`` under the standard normal.

    The bounds ``sup_bound_C`` and ``second_deriv_bound`` scale with it.

    Raises
    ------
    ValueError
        If the second moment is below ``1e-12``.
    """
    mom = second_moment(a, quadrature_order)
    if not mom >= 1e-12:
        raise ValueError(f"second moment {mom:.3e} too small to normalize")
    s = 1.0 / math.sqrt(mom)
    d2 = None if a.second_deriv_bound is None else a.second_deriv_bound * s
    return replace(
        a,
        scale=a.scale * s,
        sup_bound_C=a.sup_bound_C * s,
        second_deriv_bound=d2,
        normalized=True,
    )


def alpha_rescale(a: Activation, alpha: float) -> Activation:
    """``psi(x) = phi(alpha * x)``, the reduction used for inputs with ``||z||^2 = alpha^2 k``.

    ``sup|psi| <= C`` and ``sup|psi'| <= alpha * C``, so the stored joint bound
    becomes ``max(1, alpha) * C``.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    if alpha == 1.0:
        return a
    d2 = None if a.second_deriv_bound is None else a.second_deriv_bound * alpha**2
    return replace(
        a,
        alpha=a.alpha * alpha,
        sup_bound_C=a.sup_bound_C * max(1.0, alpha),
        second_deriv_bound=d2,
        normalized=False,
    )


def from_spec(name: str, normalized: bool = False, alpha: float = 1.0) -> Activation:
    """Build an activation from its config description (name, normalize flag, alpha)."""
    a = builtin(name)
    if alpha != 1.0:
        a = alpha_rescale(a, alpha)
    if normalized:
        a = normalize(a)
    return a
