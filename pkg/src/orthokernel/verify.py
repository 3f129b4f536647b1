"""Monte Carlo checks of the kernel-approximation bounds.

Every experiment is a pure function of its configuration: trial ``i`` of grid
cell ``j`` draws its weights from the stream ``(seed, j, i)``, so results do
not depend on execution order and can be computed in parallel.  Assertions
are one-sided (the bounds are upper bounds): frequencies are compared through
the lower end of a 99% Wilson interval, means through ``3 * stderr``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from . import _io
from .activation import Activation, from_spec
from .bounds import (
    BoundInputs,
    daniely_delta,
    daniely_min_width,
    gradient_h,
    h_value,
    implied_delta,
    lipschitz_h,
    mean_bias_bound,
    suo_conditions,
    wasserstein_bound,
)
from .kernel import InputPair, SigmaPair, approx_kernel_quadrature, canonical_pair
from .sampler import MatrixShape, Scheme, make_rng, sample, sample_haar_square, sample_suo_reference

__all__ = [
    "CI_LEVEL",
    "ExperimentConfig",
    "TrialBatch",
    "determinant_split_test",
    "embedding_check",
    "embedding_matrices",
    "embedding_suite",
    "gradient_check",
    "kernel_error_experiment",
    "mean_bias_experiment",
    "random_pair",
    "rotation_invariance_check",
    "rotation_to_plane",
    "theorem1_check",
    "theorem2_sweep",
    "w1_to_normal",
    "wasserstein_experiment",
    "wilson_interval",
]

CI_LEVEL = 0.99
KS_ALPHA = 1e-3
SUO_REFERENCE = "suo_reference"
SCHEMES = tuple(s.value for s in Scheme) + (SUO_REFERENCE,)
_SUO_LIKE = {Scheme.SUO.value, SUO_REFERENCE}


def wilson_interval(successes: int, trials: int, level: float = CI_LEVEL) -> Tuple[float, float]:
    ci = stats.binomtest(int(successes), int(trials)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def _draw(scheme: str, shape: MatrixShape, seed) -> np.ndarray:
    if scheme == SUO_REFERENCE:
        return sample_suo_reference(shape, seed).data
    return sample(scheme, shape, seed).data


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings shared by the kernel experiments.

    ``grid`` lists ``(m, k)`` cells; single-cell experiments use ``grid[0]``.
    Inputs default to the canonical pair at correlation ``c``; explicit
    vectors ``z``/``z_prime`` (norm ``sqrt(k)``) override it.
    """

    scheme: str = Scheme.SUO.value
    activation: str = "tanh"
    normalized: bool = True
    alpha: float = 1.0
    grid: Tuple[Tuple[int, int], ...] = ((64, 64),)
    trials: int = 10_000
    eps: float = 0.1
    delta: float = 0.05
    eps_grid: Tuple[float, ...] = ()
    c: float = 0.5
    z: Optional[Tuple[float, ...]] = None
    z_prime: Optional[Tuple[float, ...]] = None
    seed: int = 0
    compare_bounds: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if not self.grid:
            raise ValueError("grid must contain at least one (m, k) cell")
        for m, k in self.grid:
            MatrixShape(m, k)
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if (self.z is None) != (self.z_prime is None):
            raise ValueError("give both z and z_prime or neither")

    def build_activation(self) -> Activation:
        return from_spec(self.activation, normalized=self.normalized, alpha=self.alpha)

    def pair(self, k: int) -> InputPair:
        if self.z is not None:
            p = InputPair(np.array(self.z), np.array(self.z_prime))
            if p.k != k:
                raise ValueError(f"explicit inputs have length {p.k}, grid cell needs {k}")
            return p
        return canonical_pair(k, self.c)

    @property
    def eps_values(self) -> Tuple[float, ...]:
        return tuple(sorted(set(self.eps_grid) | {self.eps}))

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        d = self.to_dict()
        d.pop("workers")
        return _io.content_hash(d)


def _kernel_trials(scheme: str, shape: MatrixShape, pair: InputPair, act: Activation,
                   trials: int, seed: int, cell: int, workers: int = 1) -> np.ndarray:
    Z = np.stack([pair.z, pair.z_prime], axis=1)

    def run(lo: int, hi: int) -> np.ndarray:
        out = np.empty(hi - lo)
        for i in range(lo, hi):
            X = _draw(scheme, shape, (seed, cell, i)) @ Z
            out[i - lo] = np.mean(act.eval(X[:, 0]) * act.eval(X[:, 1]))
        return out

    if workers <= 1:
        return run(0, trials)
    edges = np.linspace(0, trials, 4 * workers + 1).astype(int)
    with ThreadPoolExecutor(workers) as ex:
        parts = list(ex.map(run, edges[:-1], edges[1:]))
    return np.concatenate(parts)


@dataclass(eq=False)
class TrialBatch:
    """Per-trial kernel values for one grid cell and the statistics derived from them."""

    scheme: str
    m: int
    k: int
    c: float
    root_seed: int
    cell: int
    reference: float
    kappa: np.ndarray
    eps_values: Tuple[float, ...]
    C: Optional[float] = None
    config_hash: str = ""

    @property
    def n(self) -> int:
        return max(self.m, self.k)

    @property
    def trials(self) -> int:
        return self.kappa.size

    @property
    def errors(self) -> np.ndarray:
        return np.abs(self.kappa - self.reference)

    def seed_of(self, i: int) -> Tuple[int, int, int]:
        return (self.root_seed, self.cell, i)

    def exceed_count(self, eps: float) -> int:
        return int(np.count_nonzero(self.errors >= eps))

    def tail_frequency(self, eps: float) -> float:
        return self.exceed_count(eps) / self.trials

    def certified_delta(self, eps: float) -> Optional[float]:
        """Failure probability the relevant bound certifies at ``eps`` (``None`` if not applicable)."""
        if self.C is None:
            return None
        if self.scheme == Scheme.GAUSSIAN_FANIN.value:
            return daniely_delta(self.m, self.C, eps)
        if self.scheme in _SUO_LIKE or (self.scheme == Scheme.HAAR_RECT.value and self.m <= self.k):
            if self.n < 3:
                return None
            return implied_delta(eps, self.m, self.n, self.C)
        return None

    def quantiles(self, qs: Sequence[float]) -> np.ndarray:
        return np.quantile(self.errors, qs)

    def summary(self) -> dict:
        err = self.errors
        tails = []
        for eps in self.eps_values:
            hits = self.exceed_count(eps)
            lo, hi = wilson_interval(hits, self.trials)
            cert = self.certified_delta(eps)
            tails.append({
                "eps": eps,
                "exceed": hits,
                "p_hat": hits / self.trials,
                "ci_low": lo,
                "ci_high": hi,
                "certified_delta": cert,
                "bound_ok": None if cert is None else lo <= cert,
            })
        return {
            "scheme": self.scheme,
            "m": self.m,
            "k": self.k,
            "n": self.n,
            "c": self.c,
            "trials": self.trials,
            "root_seed": self.root_seed,
            "cell": self.cell,
            "config_hash": self.config_hash,
            "reference": self.reference,
            "kappa_mean": float(np.mean(self.kappa)),
            "kappa_std": float(np.std(self.kappa, ddof=1)) if self.trials > 1 else 0.0,
            "error_mean": float(np.mean(err)),
            "error_max": float(np.max(err)),
            "tails": tails,
        }

    @property
    def passed(self) -> bool:
        return all(t["bound_ok"] is not False for t in self.summary()["tails"])

    def to_csv(self) -> str:
        rows = ((i, f"{self.root_seed}/{self.cell}/{i}", kv, abs(kv - self.reference))
                for i, kv in enumerate(self.kappa.tolist()))
        return _io.csv_text(["trial", "seed", "kappa", "error"], rows)

    def to_json(self) -> str:
        return _io.dumps(self.summary())

    @classmethod
    def from_csv(cls, text: str, **meta) -> "TrialBatch":
        lines = text.strip().splitlines()[1:]
        kappa = np.array([float(line.split(",")[2]) for line in lines])
        return cls(kappa=kappa, **meta)


def _single_cell(cfg: ExperimentConfig) -> Tuple[int, int]:
    if len(cfg.grid) != 1:
        raise ValueError("single-cell experiment given a multi-cell grid")
    return cfg.grid[0]


def kernel_error_experiment(cfg: ExperimentConfig, cell: int = 0) -> TrialBatch:
    """Sample ``cfg.trials`` weight matrices and record ``|kappa - kappa~|`` for each.

    Raises
    ------
    UnboundedActivationError
        When ``cfg.compare_bounds`` is set and the activation has ``C = inf``.
    """
    m, k = _single_cell(cfg)
    act = cfg.build_activation()
    C = act.require_bounded() if cfg.compare_bounds else None
    pair = cfg.pair(k)
    ref = approx_kernel_quadrature(SigmaPair.from_correlation(pair.c), act).value
    kappa = _kernel_trials(cfg.scheme, MatrixShape(m, k), pair, act, cfg.trials, cfg.seed, cell, cfg.workers)
    return TrialBatch(
        scheme=cfg.scheme, m=m, k=k, c=pair.c, root_seed=cfg.seed, cell=cell,
        reference=ref, kappa=kappa, eps_values=cfg.eps_values, C=C,
        config_hash=cfg.digest(),
    )


@dataclass
class MeanBiasReport:
    scheme: str
    m: int
    k: int
    n: int
    c: float
    trials: int
    reference: float
    mean: float
    stderr: float
    bias: float
    bias_bound: float

    @property
    def allowance(self) -> float:
        return self.bias_bound + 3.0 * self.stderr

    @property
    def passed(self) -> bool:
        return self.bias <= self.allowance

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(allowance=self.allowance, passed=self.passed)
        return d


def mean_bias_experiment(cfg: ExperimentConfig, cell: int = 0) -> MeanBiasReport:
    """Compare the Monte Carlo mean of ``kappa`` with ``kappa~``.

    SUO weights are held to the mean-bias bound; Gaussian fan-in weights are
    unbiased, so their bound is zero and only sampling error is allowed.
    """
    batch = kernel_error_experiment(replace(cfg, compare_bounds=True), cell)
    mean = float(np.mean(batch.kappa))
    stderr = float(np.std(batch.kappa, ddof=1) / math.sqrt(batch.trials))
    if cfg.scheme == Scheme.GAUSSIAN_FANIN.value:
        bound = 0.0
    elif cfg.scheme in _SUO_LIKE or (cfg.scheme == Scheme.HAAR_RECT.value and batch.m <= batch.k):
        bound = mean_bias_bound(batch.m, batch.n, batch.C)
    else:
        raise ValueError(f"no mean-bias bound for scheme {cfg.scheme!r}")
    return MeanBiasReport(
        scheme=cfg.scheme, m=batch.m, k=batch.k, n=batch.n, c=batch.c, trials=batch.trials,
        reference=batch.reference, mean=mean, stderr=stderr,
        bias=abs(mean - batch.reference), bias_bound=bound,
    )


def w1_to_normal(sample: np.ndarray, sigma: float = 1.0) -> float:
    """Exact 1st Wasserstein distance between an empirical law and ``N(0, sigma^2)``.

    Integrates ``|F_emp^{-1}(p) - sigma Phi^{-1}(p)|`` over ``p`` piece by
    piece: on ``[(i-1)/N, i/N]`` the empirical quantile is the ``i``-th order
    statistic and the Gaussian quantile has the closed-form integral
    ``sigma (pdf(Phi^{-1}(a)) - pdf(Phi^{-1}(b)))``.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    N = x.size
    if sigma <= 0:
        return float(np.mean(np.abs(x)))
    p = np.arange(N + 1) / N
    a, b = p[:-1], p[1:]
    pstar = np.clip(stats.norm.cdf(x / sigma), a, b)

    def qint(lo, hi):
        # integral of sigma * Phi^{-1}(p) dp over [lo, hi]
        return sigma * (stats.norm.pdf(stats.norm.ppf(lo)) - stats.norm.pdf(stats.norm.ppf(hi)))

    below = x * (pstar - a) - qint(a, pstar)
    above = qint(pstar, b) - x * (b - pstar)
    return float(np.sum(below + above))


_PROBE_FUNCS = {
    "linear": (lambda s: s, lambda sig: 0.0),
    "abs": (np.abs, lambda sig: sig * math.sqrt(2.0 / math.pi)),
    "relu": (lambda s: np.maximum(s, 0.0), lambda sig: sig / math.sqrt(2.0 * math.pi)),
    "cos": (np.cos, lambda sig: math.exp(-0.5 * sig * sig)),
}


@dataclass
class WassersteinReport:
    scheme: str
    m: int
    k: int
    n: int
    c: float
    trials: int
    bound: float
    probes: List[dict] = field(default_factory=list)
    max_w1: float = 0.0
    baseline_w1: float = 0.0
    marginal_w1: float = 0.0

    @property
    def probes_ok(self) -> bool:
        return all(p["discrepancy"] <= self.bound + 3.0 * p["stderr"] for p in self.probes)

    @property
    def w1_ok(self) -> bool:
        return self.max_w1 <= self.bound + 3.0 * self.baseline_w1

    @property
    def passed(self) -> bool:
        return self.probes_ok and self.w1_ok

    @property
    def max_discrepancy(self) -> float:
        return max(p["discrepancy"] for p in self.probes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(probes_ok=self.probes_ok, w1_ok=self.w1_ok, passed=self.passed)
        return d


def wasserstein_experiment(
    m: int,
    k: int,
    c: float,
    trials: int,
    probes: int,
    seed: int,
    scheme: str = Scheme.SUO.value,
) -> WassersteinReport:
    """Probe the W1 distance between ``(Wz, Wz')`` and ``(y, y') ~ N(0, [[1,c],[c,1]] (x) I_m)``.

    The ``2m``-dimensional distance is bounded below by the largest 1-D W1
    distance over unit projections (coordinates plus ``probes`` random
    directions).  For each projection the mean discrepancy of four
    1-Lipschitz functionals (identity, ``|.|``, relu, cos) is also recorded
    with its standard error.  ``baseline_w1`` is the same maximum for an exact
    Gaussian sample of equal size, i.e. the pure sampling error.
    """
    n = max(m, k)
    if n < 2:
        raise ValueError("need n = max(m, k) >= 2")
    if abs(c) >= 1.0:
        raise ValueError("correlation must satisfy |c| < 1")
    pair = canonical_pair(k, c)
    Z = np.stack([pair.z, pair.z_prime], axis=1)
    shape = MatrixShape(m, k)
    X = np.empty((trials, 2 * m))
    for i in range(trials):
        Y = _draw(scheme, shape, (seed, 0, i)) @ Z
        X[i] = Y.T.reshape(-1)
    A = np.kron(np.array([[1.0, c], [c, 1.0]]), np.eye(m))
    dirs = [np.eye(2 * m)[j] for j in range(2 * m)]
    prng = make_rng((seed, 1))
    for _ in range(probes):
        u = prng.standard_normal(2 * m)
        dirs.append(u / np.linalg.norm(u))
    L = np.linalg.cholesky(A)
    G = make_rng((seed, 2)).standard_normal((trials, 2 * m)) @ L.T
    report = WassersteinReport(scheme, m, k, n, float(c), trials, wasserstein_bound(m, n))
    for j, u in enumerate(dirs):
        sig = math.sqrt(float(u @ A @ u))
        s = X @ u
        w1 = w1_to_normal(s, sig)
        report.max_w1 = max(report.max_w1, w1)
        report.baseline_w1 = max(report.baseline_w1, w1_to_normal(G @ u, sig))
        if j == 0:
            report.marginal_w1 = w1
        for name, (f, expect) in _PROBE_FUNCS.items():
            vals = f(s)
            report.probes.append({
                "direction": j,
                "functional": name,
                "sigma": sig,
                "discrepancy": abs(float(np.mean(vals)) - expect(sig)),
                "stderr": float(np.std(vals, ddof=1) / math.sqrt(trials)),
                "w1": w1,
            })
    return report


@dataclass
class EmbeddingReport:
    m: int
    k: int
    n: int
    c: float
    trace_residual: float
    gram_residual: float
    norm_residual: float
    rank: int
    linearly_independent: bool

    @property
    def passed(self) -> bool:
        return self.trace_residual <= 1e-10 and self.gram_residual <= 1e-12 and self.norm_residual <= 1e-10

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def embedding_matrices(m: int, n: int, z: np.ndarray, z_prime: np.ndarray) -> np.ndarray:
    """The ``2m`` matrices ``B_i`` (stacked, shape ``(2m, n, n)``).

    ``B_i`` is zero except for the first ``k`` entries of column ``i mod m``,
    which hold ``sqrt(n/k) z`` (first ``m``) or ``sqrt(n/k) z'`` (last ``m``).
    """
    k = z.size
    B = np.zeros((2 * m, n, n))
    s = math.sqrt(n / k)
    for i in range(m):
        B[i, :k, i] = s * z
        B[m + i, :k, i] = s * z_prime
    return B


def embedding_check(m: int, k: int, z, z_prime, seed, n: Optional[int] = None) -> EmbeddingReport:
    """Check that ``(tr(B_i M))_i = (Wz, Wz')`` and ``A = [[1,c],[c,1]] (x) I_m``.

    ``M`` is Haar on ``O(n)`` and ``W`` is the top-left ``m x k`` block of
    ``sqrt(n/k) M``.  ``z = z'`` yields rank ``m`` instead of ``2m``.
    """
    z = np.asarray(z, dtype=float)
    zp = np.asarray(z_prime, dtype=float)
    pair = InputPair(z, zp)
    if pair.k != k:
        raise ValueError("input length differs from k")
    n = max(m, k) if n is None else n
    if n < max(m, k):
        raise ValueError("n must be at least max(m, k)")
    M = sample_haar_square(n, "O", seed).data
    W = math.sqrt(n / k) * M[:m, :k]
    B = embedding_matrices(m, n, z, zp)
    traces = np.einsum("iab,ba->i", B, M)
    target = np.concatenate([W @ z, W @ zp])
    flat = B.reshape(2 * m, -1)
    A = flat @ flat.T / n
    c = float(z @ zp) / k
    A_expected = np.kron(np.array([[1.0, c], [c, 1.0]]), np.eye(m))
    rank = int(np.linalg.matrix_rank(flat))
    return EmbeddingReport(
        m=m, k=k, n=n, c=c,
        trace_residual=float(np.max(np.abs(traces - target))),
        gram_residual=float(np.max(np.abs(A - A_expected))),
        norm_residual=float(np.max(np.abs(np.einsum("iab,iab->i", B, B) - n))),
        rank=rank,
        linearly_independent=rank == 2 * m,
    )


def rotation_to_plane(z: np.ndarray, z_prime: np.ndarray) -> np.ndarray:
    """Orthogonal ``R`` with ``R z = ||z|| e1`` and ``R z'`` in ``span{e1, e2}``."""
    z = np.asarray(z, dtype=float)
    zp = np.asarray(z_prime, dtype=float)
    if np.linalg.norm(z) == 0 or np.linalg.norm(zp) == 0:
        raise ValueError("degenerate pair: zero vector")
    k = z.size
    Q, R = np.linalg.qr(np.stack([z, zp], axis=1), mode="complete")
    d = np.ones(k)
    d[0] = np.sign(R[0, 0]) or 1.0
    if k > 1 and abs(R[1, 1]) > 1e-12 * np.linalg.norm(zp):
        d[1] = np.sign(R[1, 1])
    return (Q * d).T


@dataclass
class RotationReport:
    m: int
    k: int
    trials: int
    orth_residual: float
    norm_residual: float
    pvalue_z: float
    pvalue_z_prime: float

    @property
    def passed(self) -> bool:
        return (self.orth_residual <= 1e-10 and self.norm_residual <= 1e-10
                and min(self.pvalue_z, self.pvalue_z_prime) > KS_ALPHA)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def rotation_invariance_check(
    m: int, k: int, pair: InputPair, trials: int, seed: int, scheme: str = Scheme.SUO.value
) -> RotationReport:
    """Two-sample KS tests of ``(Wz)_1`` against ``(W R z)_1`` (and likewise for ``z'``).

    The two samples use disjoint streams so they are independent.
    """
    if trials < 10_000:
        raise ValueError("rotation invariance check needs at least 10^4 trials")
    R = rotation_to_plane(pair.z, pair.z_prime)
    v, vp = R @ pair.z, R @ pair.z_prime
    shape = MatrixShape(m, k)
    orig = np.empty((trials, 2))
    rot = np.empty((trials, 2))
    for i in range(trials):
        W = _draw(scheme, shape, (seed, 0, i))
        orig[i] = W[0] @ pair.z, W[0] @ pair.z_prime
        W = _draw(scheme, shape, (seed, 1, i))
        rot[i] = W[0] @ v, W[0] @ vp
    return RotationReport(
        m=m, k=k, trials=trials,
        orth_residual=float(np.linalg.norm(R.T @ R - np.eye(k))),
        norm_residual=float(max(abs(np.linalg.norm(v) - np.linalg.norm(pair.z)),
                                abs(np.linalg.norm(vp) - np.linalg.norm(pair.z_prime)))),
        pvalue_z=float(stats.ks_2samp(orig[:, 0], rot[:, 0]).pvalue),
        pvalue_z_prime=float(stats.ks_2samp(orig[:, 1], rot[:, 1]).pvalue),
    )


@dataclass
class DeterminantReport:
    n: int
    component: str
    trials: int
    positive: int
    accept_low: float
    accept_high: float
    pvalue: float

    @property
    def fraction(self) -> float:
        return self.positive / self.trials

    @property
    def passed(self) -> bool:
        if self.component == "SO":
            return self.positive == self.trials
        if self.component == "SOMinus":
            return self.positive == 0
        return self.accept_low <= self.fraction <= self.accept_high

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(fraction=self.fraction, passed=self.passed)
        return d


def determinant_split_test(n: int, trials: int, seed: int, component: str = "O") -> DeterminantReport:
    """Fraction of Haar draws with positive determinant.

    For ``O(n)`` the fraction must fall in the central 99% region of
    ``Binomial(trials, 1/2) / trials``.
    """
    if trials < 10_000:
        raise ValueError("determinant split test needs at least 10^4 trials")
    pos = 0
    for i in range(trials):
        M = sample_haar_square(n, component, (seed, 0, i)).data
        pos += np.linalg.slogdet(M)[0] > 0
    lo, hi = stats.binom.interval(CI_LEVEL, trials, 0.5)
    return DeterminantReport(
        n=n, component=component, trials=trials, positive=int(pos),
        accept_low=lo / trials, accept_high=hi / trials,
        pvalue=float(stats.binomtest(int(pos), trials, 0.5).pvalue),
    )


SWEEP_COLUMNS = (
    "m", "k", "n", "eps", "delta", "delta_theory", "condition_met",
    "p_hat", "ci_low", "ci_high", "bias_bound", "bias_empirical", "passed",
)


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: List[Dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.rows)

    def to_csv(self) -> str:
        return _io.csv_text(SWEEP_COLUMNS, ([r[c] for c in SWEEP_COLUMNS] for r in self.rows))

    def to_json(self) -> str:
        return _io.dumps({
            "config": self.config.to_dict(),
            "config_hash": self.config.digest(),
            "rows": self.rows,
            "passed": self.passed,
        })


def theorem2_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Run :func:`kernel_error_experiment` on every ``(m, k)`` cell at ``cfg.eps``.

    ``delta_theory`` is the failure probability the relevant bound certifies at
    ``eps`` (concentration tail after the mean-bias shift for SUO, the
    Gaussian fan-in width formula inverted otherwise).  A row passes when the
    lower Wilson limit of the empirical failure frequency does not exceed
    ``delta_theory`` and, where both SUO width conditions hold, ``delta``.
    """
    out = SweepResult(cfg)
    act = cfg.build_activation()
    C = act.require_bounded()
    for cell, (m, k) in enumerate(cfg.grid):
        sub = replace(cfg, grid=((m, k),), eps_grid=())
        batch = kernel_error_experiment(sub, cell)
        n = batch.n
        cond = suo_conditions(BoundInputs(m, k, C, cfg.eps, cfg.delta)).satisfied
        hits = batch.exceed_count(cfg.eps)
        lo, hi = wilson_interval(hits, batch.trials)
        dtheory = batch.certified_delta(cfg.eps)
        bias_bound = mean_bias_bound(m, n, C) if n >= 2 else None
        ok = dtheory is None or lo <= dtheory
        if cond and cfg.scheme in _SUO_LIKE:
            ok = ok and lo <= cfg.delta
        out.rows.append({
            "m": m, "k": k, "n": n, "eps": cfg.eps, "delta": cfg.delta,
            "delta_theory": dtheory, "condition_met": cond,
            "p_hat": hits / batch.trials, "ci_low": lo, "ci_high": hi,
            "bias_bound": bias_bound,
            "bias_empirical": abs(float(np.mean(batch.kappa)) - batch.reference),
            "passed": bool(ok),
        })
    return out


@dataclass
class Theorem1Report:
    m: int
    k: int
    C: float
    eps: float
    delta: float
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float

    @property
    def passed(self) -> bool:
        return self.p_hat <= self.delta

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def theorem1_check(
    eps: float,
    delta: float,
    trials: int,
    seed: int,
    activation: str = "tanh",
    normalized: bool = True,
    k: int = 32,
    c: float = 0.5,
) -> Theorem1Report:
    """Gaussian fan-in at ``m = ceil(4 C^4 log(8/delta) / eps^2)``: failure frequency vs ``delta``."""
    act = from_spec(activation, normalized=normalized)
    C = act.require_bounded()
    m = math.ceil(daniely_min_width(C, eps, delta))
    cfg = ExperimentConfig(
        scheme=Scheme.GAUSSIAN_FANIN.value, activation=activation, normalized=normalized,
        grid=((m, k),), trials=trials, eps=eps, delta=delta, c=c, seed=seed,
    )
    batch = kernel_error_experiment(cfg)
    hits = batch.exceed_count(eps)
    lo, hi = wilson_interval(hits, trials)
    return Theorem1Report(m=m, k=k, C=C, eps=eps, delta=delta, trials=trials,
                          p_hat=hits / trials, ci_low=lo, ci_high=hi)


def random_pair(k: int, rng: np.random.Generator, c: Optional[float] = None) -> InputPair:
    """Random inputs with ``||z||^2 = ||z'||^2 = k``; correlation ``c`` if given (needs ``k >= 2``)."""
    z = rng.standard_normal(k)
    z *= math.sqrt(k) / np.linalg.norm(z)
    if c is None:
        zp = rng.standard_normal(k)
    else:
        w = rng.standard_normal(k)
        w -= (w @ z) / k * z
        w *= math.sqrt(k) / np.linalg.norm(w)
        zp = c * z + math.sqrt(1.0 - c * c) * w
    zp *= math.sqrt(k) / np.linalg.norm(zp)
    return InputPair(z, zp)


def embedding_suite(configs: int, max_dim: int, seed: int) -> List[EmbeddingReport]:
    """:func:`embedding_check` on ``configs`` random ``(m, k, c)`` with ``m, k <= max_dim``."""
    rng = make_rng((seed, 0))
    out = []
    for i in range(configs):
        m = int(rng.integers(1, max_dim + 1))
        k = int(rng.integers(2, max_dim + 1))
        c = float(rng.uniform(-0.99, 0.99))
        p = random_pair(k, rng, c)
        out.append(embedding_check(m, k, p.z, p.z_prime, (seed, 1, i)))
    return out


@dataclass
class GradientReport:
    m: int
    k: int
    n: int
    activation: str
    rel_error: float
    hs_norm: float
    lipschitz_bound: float
    zero_outside: bool

    @property
    def passed(self) -> bool:
        return self.rel_error <= 1e-4 and self.hs_norm <= self.lipschitz_bound and self.zero_outside

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def gradient_check(m: int, k: int, act: Activation, seed: int, n: Optional[int] = None,
                   step: float = 1e-6) -> GradientReport:
    """Central differences of ``h(M) = g(Vv, Vv')`` against :func:`~orthokernel.bounds.gradient_h`.

    ``M`` is Haar on ``SO(n)``; ``(v, v') = (Rz, Rz')`` for a random
    norm-constrained pair.  The error is Frobenius-relative over the
    top-left ``m x k`` block.
    """
    n = max(m, k) if n is None else n
    pair = random_pair(k, make_rng((seed, 0)))
    R = rotation_to_plane(pair.z, pair.z_prime)
    v, vp = R @ pair.z, R @ pair.z_prime
    M = sample_haar_square(n, "SO", (seed, 1)).data
    G = gradient_h(M, v, vp, act, m, k)
    fd = np.empty((m, k))
    for i in range(m):
        for j in range(k):
            Mp = M.copy()
            Mp[i, j] += step
            Mm = M.copy()
            Mm[i, j] -= step
            fd[i, j] = (h_value(Mp, v, vp, act, m, k) - h_value(Mm, v, vp, act, m, k)) / (2 * step)
    block = G[:m, :k]
    outside = G.copy()
    outside[:m, :k] = 0.0
    return GradientReport(
        m=m, k=k, n=n, activation=act.name,
        rel_error=float(np.linalg.norm(fd - block) / np.linalg.norm(block)),
        hs_norm=float(np.sqrt(np.trace(G @ G.T))),
        lipschitz_bound=lipschitz_h(act.require_bounded(), m, n),
        zero_outside=not np.any(outside),
    )
