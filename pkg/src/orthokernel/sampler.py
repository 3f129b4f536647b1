"""Random weight-matrix ensembles: Gaussian fan-in, Haar orthogonal and SUO.

Every sampler is a pure function of ``(shape, seed)``.  A seed is either a
plain integer or a tuple ``(root, key0, key1, ...)``; the tuple form derives
an independent stream from ``root`` through :class:`numpy.random.SeedSequence`
spawn keys, so trial ``i`` of a batch can be generated without touching the
streams of trials ``0..i-1``.
"""
from __future__ import annotations

import enum
import io
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

__all__ = [
    "DegenerateDrawError",
    "MatrixShape",
    "Scheme",
    "WeightMatrix",
    "make_rng",
    "sample",
    "sample_gaussian_fanin",
    "sample_haar_rect",
    "sample_haar_square",
    "sample_suo",
    "sample_suo_reference",
    "suo_multiplier",
]

Seed = Union[int, Tuple[int, ...]]

#: smallest admissible eigenvalue of X X^T in the inverse-square-root route
DEGENERATE_EIG_THRESHOLD = 1e-12


class DegenerateDrawError(ArithmeticError):
    """Raised when a Gaussian draw is numerically rank deficient."""


class Scheme(str, enum.Enum):
    GAUSSIAN_FANIN = "gaussian_fanin"
    HAAR_RECT = "haar_rect"
    SUO = "suo"
    HAAR_O = "haar_o"
    HAAR_SO = "haar_so"
    HAAR_SO_MINUS = "haar_so_minus"


@dataclass(frozen=True)
class MatrixShape:
    """Weight shape ``m x k`` (outputs x inputs)."""

    m: int
    k: int

    def __post_init__(self):
        for name in ("m", "k"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    @property
    def n(self) -> int:
        return max(self.m, self.k)


def make_rng(seed: Seed) -> np.random.Generator:
    """Return a fresh generator for ``seed`` (int or ``(root, *spawn_key)``)."""
    if isinstance(seed, tuple):
        root, *key = seed
        ss = np.random.SeedSequence(int(root), spawn_key=tuple(int(x) for x in key))
    else:
        ss = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    data: np.ndarray
    scheme: Scheme
    seed: Seed
    shape: MatrixShape

    def residual(self) -> float:
        """Frobenius residual of the orthogonality invariant of ``scheme``.

        Gaussian fan-in matrices carry no such invariant and return ``nan``.
        """
        W = self.data
        m, k = self.shape.m, self.shape.k
        if self.scheme is Scheme.GAUSSIAN_FANIN:
            return float("nan")
        if self.scheme in (Scheme.HAAR_O, Scheme.HAAR_SO, Scheme.HAAR_SO_MINUS):
            return float(np.linalg.norm(W.T @ W - np.eye(W.shape[1])))
        scale2 = suo_multiplier(m, k) ** 2 if self.scheme is Scheme.SUO else 1.0
        if m <= k:
            return float(np.linalg.norm(W @ W.T - np.eye(m)))
        return float(np.linalg.norm(W.T @ W - scale2 * np.eye(k)))

    def det(self) -> float:
        if self.data.shape[0] != self.data.shape[1]:
            raise ValueError("determinant of a non-square matrix")
        return float(np.linalg.det(self.data))

    def to_bytes(self) -> bytes:
        """Row-major little-endian float64 dump."""
        return np.ascontiguousarray(self.data, dtype="<f8").tobytes(order="C")

    def to_csv(self) -> str:
        buf = io.StringIO()
        for row in self.data:
            buf.write(",".join(f"{x:.17g}" for x in row))
            buf.write("\n")
        return buf.getvalue()

    @staticmethod
    def array_from_bytes(raw: bytes, m: int, k: int) -> np.ndarray:
        return np.frombuffer(raw, dtype="<f8").reshape(m, k).astype(np.float64)


def suo_multiplier(m: int, k: int) -> float:
    """``max(sqrt(m/k), 1)``, which equals ``sqrt(n/k)`` with ``n = max(m, k)``."""
    return max(np.sqrt(m / k), 1.0)


def _haar_frame(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    # rows >= cols; first `cols` columns of a Haar O(rows) matrix.
    X = rng.standard_normal((rows, cols))
    Q, R = np.linalg.qr(X)
    d = np.sign(np.diagonal(R))
    d[d == 0] = 1.0
    return Q * d


def _haar_rect(m: int, k: int, rng: np.random.Generator) -> np.ndarray:
    if m <= k:
        return _haar_frame(k, m, rng).T.copy()
    return _haar_frame(m, k, rng)


def sample_gaussian_fanin(shape: MatrixShape, seed: Seed) -> WeightMatrix:
    """Entries iid ``N(0, 1/k)``."""
    rng = make_rng(seed)
    data = rng.standard_normal((shape.m, shape.k)) / np.sqrt(shape.k)
    return WeightMatrix(data, Scheme.GAUSSIAN_FANIN, seed, shape)


def sample_haar_square(n: int, component: str, seed: Seed) -> WeightMatrix:
    """Haar-distributed ``n x n`` orthogonal matrix.

    Parameters
    ----------
    n : int
        Dimension, ``n >= 1``.
    component : {"O", "SO", "SOMinus"}
        ``"O"`` samples the full group, so the determinant is +1 or -1 with
        equal probability.  ``"SO"`` and ``"SOMinus"`` restrict to one
        connected component by negating the last column whenever the
        determinant has the wrong sign; that map preserves Haar measure.
    seed : int or tuple
    """
    shape = MatrixShape(n, n)
    schemes = {"O": Scheme.HAAR_O, "SO": Scheme.HAAR_SO, "SOMinus": Scheme.HAAR_SO_MINUS}
    if component not in schemes:
        raise ValueError(f"component must be one of {sorted(schemes)}, got {component!r}")
    M = _haar_frame(n, n, make_rng(seed))
    if component != "O":
        sign = np.linalg.slogdet(M)[0]
        want = 1.0 if component == "SO" else -1.0
        if sign != want:
            M[:, -1] *= -1.0
    return WeightMatrix(M, schemes[component], seed, shape)


def sample_haar_rect(shape: MatrixShape, seed: Seed) -> WeightMatrix:
    """Top-left ``m x k`` block of a Haar ``O(max(m, k))`` matrix."""
    data = _haar_rect(shape.m, shape.k, make_rng(seed))
    return WeightMatrix(data, Scheme.HAAR_RECT, seed, shape)


def sample_suo(shape: MatrixShape, seed: Seed) -> WeightMatrix:
    """SUO draw: :func:`sample_haar_rect` times ``max(sqrt(m/k), 1)``.

    Uses the same stream as :func:`sample_haar_rect`, so for ``m <= k`` the two
    agree bit for bit.
    """
    data = _haar_rect(shape.m, shape.k, make_rng(seed))
    if shape.m > shape.k:
        data *= suo_multiplier(shape.m, shape.k)
    return WeightMatrix(data, Scheme.SUO, seed, shape)


def _inverse_sqrt_step(X: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(X @ X.T)
    if vals[0] < DEGENERATE_EIG_THRESHOLD:
        raise DegenerateDrawError(f"smallest eigenvalue of XX^T is {vals[0]:.3e}")
    return ((vecs / np.sqrt(vals)) @ vecs.T) @ X


def _inverse_sqrt_orthonormalize(X: np.ndarray) -> np.ndarray:
    """``(X X^T)^{-1/2} X`` for a wide ``X`` via the symmetric eigendecomposition.

    Forming ``X X^T`` squares the condition number, so one pass leaves an
    orthogonality error of order ``eps * cond(X)^2``.  The map is applied a
    second time to the (nearly orthonormal) result; in exact arithmetic that
    pass is the identity, numerically it restores rows orthonormal to ~1e-15.
    """
    return _inverse_sqrt_step(_inverse_sqrt_step(X))


def sample_suo_reference(shape: MatrixShape, seed: Seed, max_tries: int = 8) -> WeightMatrix:
    """SUO draw by the inverse-square-root construction ``(X X^T)^{-1/2} X``.

    Slower and less stable than :func:`sample_suo`; kept as an independent
    route for distributional cross-checks.  A rank-deficient Gaussian draw is
    redrawn from the same stream, up to ``max_tries`` times.
    """
    m, k = shape.m, shape.k
    rng = make_rng(seed)
    lo, hi = min(m, k), max(m, k)
    for _ in range(max_tries):
        X = rng.standard_normal((lo, hi))
        try:
            W = _inverse_sqrt_orthonormalize(X)
        except DegenerateDrawError:
            continue
        break
    else:
        raise DegenerateDrawError(f"{max_tries} consecutive degenerate draws")
    if m > k:
        W = W.T * suo_multiplier(m, k)
    return WeightMatrix(np.ascontiguousarray(W), Scheme.SUO, seed, shape)


def sample(scheme: Union[Scheme, str], shape: MatrixShape, seed: Seed) -> WeightMatrix:
    """Dispatch on ``scheme``; the square Haar schemes require ``m == k``."""
    scheme = Scheme(scheme)
    if scheme is Scheme.GAUSSIAN_FANIN:
        return sample_gaussian_fanin(shape, seed)
    if scheme is Scheme.HAAR_RECT:
        return sample_haar_rect(shape, seed)
    if scheme is Scheme.SUO:
        return sample_suo(shape, seed)
    if shape.m != shape.k:
        raise ValueError(f"{scheme.value} needs a square shape, got {shape.m}x{shape.k}")
    component = {Scheme.HAAR_O: "O", Scheme.HAAR_SO: "SO", Scheme.HAAR_SO_MINUS: "SOMinus"}[scheme]
    return sample_haar_square(shape.n, component, seed)
