"""``orthokernel`` command line: sample, kernel, bounds, verify, sweep.

Every invocation writes ``manifest.json`` (resolved configuration plus its
content hash) to the output directory, which defaults to
``$ORTHOKERNEL_OUTPUT_DIR`` or ``./orthokernel-out``.  Exit status is 0 when
all requested checks pass, 1 when a check fails and 2 on usage or config
errors.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence

from . import __version__, _io
from .activation import from_spec
from .bounds import BoundInputs, bound_report, daniely_min_width
from .config import ConfigError, RunConfig, cells, parse_config
from .kernel import (
    SigmaPair,
    approx_kernel_mc,
    approx_kernel_quadrature,
    canonical_pair,
    closed_form_kernel,
    empirical_kernel,
)
from .sampler import MatrixShape, Scheme, sample, sample_suo_reference
from .verify import (
    ExperimentConfig,
    SUO_REFERENCE,
    determinant_split_test,
    embedding_suite,
    kernel_error_experiment,
    mean_bias_experiment,
    rotation_invariance_check,
    theorem1_check,
    theorem2_sweep,
    wasserstein_experiment,
)

ENV_OUTPUT = "ORTHOKERNEL_OUTPUT_DIR"
RESIDUAL_TOL = 1e-9

_SCHEME_ALIASES = {
    "gaussian": Scheme.GAUSSIAN_FANIN.value,
    "gaussian_fanin": Scheme.GAUSSIAN_FANIN.value,
    "haar": Scheme.HAAR_RECT.value,
    "haar_rect": Scheme.HAAR_RECT.value,
    "suo": Scheme.SUO.value,
    "suo_reference": SUO_REFERENCE,
    "o": Scheme.HAAR_O.value,
    "haar_o": Scheme.HAAR_O.value,
    "so": Scheme.HAAR_SO.value,
    "haar_so": Scheme.HAAR_SO.value,
    "so_minus": Scheme.HAAR_SO_MINUS.value,
    "haar_so_minus": Scheme.HAAR_SO_MINUS.value,
}


class UsageError(Exception):
    pass


def _scheme(s: str) -> str:
    key = s.strip().lower().replace("-", "_")
    if key not in _SCHEME_ALIASES:
        raise ValueError(f"unknown scheme {s!r}; choose from {sorted(_SCHEME_ALIASES)}")
    return _SCHEME_ALIASES[key]


def _int_list(s: str) -> tuple:
    try:
        return tuple(int(x) for x in s.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(ENV_OUTPUT) or "orthokernel-out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _manifest(out: Path, command: str, config: dict) -> None:
    _io.write_text(out / "manifest.json", _io.dumps({
        "command": command,
        "config": config,
        "config_hash": _io.content_hash({"command": command, "config": config}),
        "version": __version__,
    }))


def cmd_sample(args) -> int:
    scheme = args.scheme
    if scheme in (Scheme.HAAR_O.value, Scheme.HAAR_SO.value, Scheme.HAAR_SO_MINUS.value):
        n = args.n or args.m or args.k
        if n is None:
            raise UsageError("square schemes need --n")
        m = k = n
    else:
        if args.m is None or args.k is None:
            raise UsageError(f"scheme {scheme} needs --m and --k")
        m, k = args.m, args.k
    shape = MatrixShape(m, k)
    if scheme == SUO_REFERENCE:
        W = sample_suo_reference(shape, args.seed)
    else:
        W = sample(scheme, shape, args.seed)
    out = _out_dir(args)
    config = {"scheme": scheme, "m": m, "k": k, "seed": args.seed, "format": args.format}
    _manifest(out, "sample", config)
    if args.format == "csv":
        _io.write_text(out / "matrix.csv", W.to_csv())
    else:
        (out / "matrix.bin").write_bytes(W.to_bytes())
    residual = None if scheme == Scheme.GAUSSIAN_FANIN.value else W.residual()
    report = {**config, "residual": residual}
    if m == k:
        report["det"] = W.det()
    report["passed"] = residual is None or residual <= RESIDUAL_TOL
    text = _io.dumps(report)
    _io.write_text(out / "residual.json", text)
    sys.stdout.write(text)
    return 0 if report["passed"] else 1


def cmd_kernel(args) -> int:
    act = from_spec(args.activation, normalized=args.normalize, alpha=args.alpha)
    s = SigmaPair.from_correlation(args.c)
    res = {"activation": act.describe(), "c": s.c,
           "quadrature": approx_kernel_quadrature(s, act, order=args.order).value}
    try:
        res["closed_form"] = closed_form_kernel(act, s.c).value
    except ValueError:
        res["closed_form"] = None
    if args.mc_samples:
        mc = approx_kernel_mc(s, act, args.mc_samples, args.seed)
        res["monte_carlo"] = {"value": mc.value, "stderr": mc.stderr, "samples": args.mc_samples}
    if args.m is not None:
        k = args.k or args.m
        W = sample(args.scheme, MatrixShape(args.m, k), args.seed)
        res["empirical"] = {"scheme": args.scheme, "m": args.m, "k": k,
                            "value": empirical_kernel(W, canonical_pair(k, s.c), act).value}
    out = _out_dir(args)
    _manifest(out, "kernel", {k_: v for k_, v in vars(args).items() if k_ not in ("func", "out")})
    text = _io.dumps(res)
    _io.write_text(out / "kernel.json", text)
    sys.stdout.write(text)
    return 0


def cmd_bounds(args) -> int:
    if not 0 < args.delta < 1:
        raise UsageError("--delta must lie in (0, 1)")
    if not args.eps > 0:
        raise UsageError("--eps must be positive")
    if args.C < 1:
        print("warning: C < 1 cannot hold for a normalized activation", file=sys.stderr)
    out = _out_dir(args)
    config = {k_: v for k_, v in vars(args).items() if k_ not in ("func", "out")}
    _manifest(out, "bounds", config)
    if args.gaussian:
        res = {"C": args.C, "eps": args.eps, "delta": args.delta,
               "daniely_min_m": daniely_min_width(args.C, args.eps, args.delta) if args.C >= 1 else None}
    else:
        if args.m is None or args.k is None:
            raise UsageError("bounds needs --m and --k (or --gaussian)")
        r_values = [float(x) for x in args.r.split(",")] if args.r else []
        res = bound_report(BoundInputs(args.m, args.k, args.C, args.eps, args.delta), r_values).to_dict()
    text = _io.dumps(res)
    _io.write_text(out / "bounds.json", text)
    sys.stdout.write(text)
    return 0


def _experiment_config(sec: dict, seed: int, **defaults) -> ExperimentConfig:
    fields = dict(defaults)
    for key in ("scheme", "activation", "normalized", "alpha", "trials", "eps", "delta", "c", "workers"):
        if key in sec:
            fields[key] = sec[key]
    if "scheme" in fields:
        fields["scheme"] = _scheme(fields["scheme"])
    if "eps_grid" in sec:
        fields["eps_grid"] = tuple(sec["eps_grid"])
    return ExperimentConfig(grid=cells(sec), seed=int(sec.get("seed", seed)), **fields)


def _run_determinant(sec, seed, out):
    reps = [determinant_split_test(n, sec.get("trials", 10_000), sec.get("seed", seed),
                                   sec.get("component", "O")).to_dict()
            for n in sec.get("n", (1, 2, 5, 10))]
    return all(r["passed"] for r in reps), {"reports": reps}


def _run_kernel_error(sec, seed, out):
    cfg = _experiment_config(sec, seed)
    reps = []
    ok = True
    for cell, mk in enumerate(cfg.grid):
        batch = kernel_error_experiment(replace(cfg, grid=(mk,)), cell)
        _io.write_text(out / f"kernel_error_{mk[0]}x{mk[1]}.csv", batch.to_csv())
        reps.append(batch.summary())
        ok = ok and batch.passed
    return ok, {"config": cfg.to_dict(), "config_hash": cfg.digest(), "batches": reps}


def _run_mean_bias(sec, seed, out):
    cfg = _experiment_config(sec, seed)
    reps = [mean_bias_experiment(replace(cfg, grid=(mk,)), cell).to_dict()
            for cell, mk in enumerate(cfg.grid)]
    return all(r["passed"] for r in reps), {"config": cfg.to_dict(), "reports": reps}


def _run_sweep(sec, seed, out):
    cfg = _experiment_config(sec, seed)
    res = theorem2_sweep(cfg)
    _io.write_text(out / "theorem2_sweep.csv", res.to_csv())
    return res.passed, {"config": cfg.to_dict(), "config_hash": cfg.digest(), "rows": res.rows}


def _run_theorem1(sec, seed, out):
    rep = theorem1_check(
        eps=sec.get("eps", 0.25), delta=sec.get("delta", 0.1), trials=sec.get("trials", 10_000),
        seed=sec.get("seed", seed), activation=sec.get("activation", "tanh"),
        normalized=sec.get("normalized", True), k=sec.get("k", 32), c=sec.get("c", 0.5),
    ).to_dict()
    return rep["passed"], rep


def _run_wasserstein(sec, seed, out):
    reps = [wasserstein_experiment(m, k, sec.get("c", 0.0), sec.get("trials", 100_000),
                                   sec.get("probes", 8), sec.get("seed", seed),
                                   _scheme(sec.get("scheme", "suo"))).to_dict()
            for m, k in cells(sec, default=(1,))]
    return all(r["passed"] for r in reps), {"reports": reps}


def _run_embedding(sec, seed, out):
    reps = [r.to_dict() for r in embedding_suite(sec.get("configs", 100), sec.get("max_dim", 8),
                                                 sec.get("seed", seed))]
    return all(r["passed"] for r in reps), {"reports": reps}


def _run_rotation(sec, seed, out):
    reps = []
    for m, k in cells(sec, default=(4,)):
        pair = canonical_pair(k, sec.get("c", 0.5)) if k > 1 else canonical_pair(k, 1.0)
        reps.append(rotation_invariance_check(m, k, pair, sec.get("trials", 10_000),
                                              sec.get("seed", seed),
                                              _scheme(sec.get("scheme", "suo"))).to_dict())
    return all(r["passed"] for r in reps), {"reports": reps}


RUNNERS: Dict[str, Callable] = {
    "determinant_split": _run_determinant,
    "kernel_error": _run_kernel_error,
    "mean_bias": _run_mean_bias,
    "theorem2_sweep": _run_sweep,
    "theorem1": _run_theorem1,
    "wasserstein": _run_wasserstein,
    "embedding": _run_embedding,
    "rotation_invariance": _run_rotation,
}


def _run_experiments(run: RunConfig, out: Path, command: str) -> int:
    _manifest(out, command, run.resolved())
    status = {}
    for name, sec in run.experiments.items():
        try:
            ok, payload = RUNNERS[name](sec, run.seed, out)
        except (ValueError, ConfigError) as exc:
            raise UsageError(f"[{name}]: {exc}") from None
        payload = {"experiment": name, "passed": ok, **payload}
        _io.write_text(out / f"{name}.json", _io.dumps(payload))
        status[name] = ok
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    _io.write_text(out / "summary.json", _io.dumps({"passed": all(status.values()), "experiments": status}))
    return 0 if all(status.values()) else 1


def _read_config(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file {p} not found")
    return p.read_text()


def cmd_verify(args) -> int:
    run = parse_config(_read_config(args.config), args.config, overrides=args.set or (), seed=args.seed)
    return _run_experiments(run, _out_dir(args), "verify")


def cmd_sweep(args) -> int:
    if args.config:
        run = parse_config(_read_config(args.config), args.config, overrides=args.set or (),
                           seed=args.seed)
        sec = dict(run.experiments.get("theorem2_sweep", {}))
        seed = run.seed
    else:
        sec, seed = {}, args.seed or 0
    flag_map = {"scheme": args.scheme, "activation": args.activation, "eps": args.eps,
                "delta": args.delta, "c": args.c, "trials": args.trials, "m": args.m, "k": args.k}
    sec.update({k_: v for k_, v in flag_map.items() if v is not None})
    if args.no_normalize:
        sec["normalized"] = False
    if "m" not in sec:
        raise UsageError("sweep needs --m (or an m list in the config)")
    run = RunConfig(seed, {"theorem2_sweep": sec})
    return _run_experiments(run, _out_dir(args), "sweep")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orthokernel", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help=f"output directory (default ${ENV_OUTPUT} or ./orthokernel-out)")

    sp = sub.add_parser("sample", help="draw one weight matrix and report its orthogonality residual")
    sp.add_argument("--scheme", type=_scheme, required=True)
    sp.add_argument("--m", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--format", choices=("csv", "bin"), default="csv")
    common(sp)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("kernel", help="approximate (and optionally empirical) kernel at correlation c")
    sp.add_argument("--activation", default="tanh")
    sp.add_argument("--normalize", action="store_true")
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--order", type=int, default=64)
    sp.add_argument("--mc-samples", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scheme", type=_scheme, default="suo")
    sp.add_argument("--m", type=int)
    sp.add_argument("--k", type=int)
    common(sp)
    sp.set_defaults(func=cmd_kernel)

    sp = sub.add_parser("bounds", help="evaluate the width bounds")
    sp.add_argument("--m", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--C", type=float, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--r", help="comma-separated radii for the concentration tail table")
    sp.add_argument("--gaussian", action="store_true", help="only the Gaussian fan-in minimum width")
    common(sp)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("verify", help="run the experiments listed in a config file")
    sp.add_argument("--config", required=True)
    sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    sp.add_argument("--seed", type=int)
    common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sweep", help="kernel-error sweep over an (m, k) grid")
    sp.add_argument("--config")
    sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
    sp.add_argument("--m", type=_int_list)
    sp.add_argument("--k", type=_int_list)
    sp.add_argument("--scheme")
    sp.add_argument("--activation")
    sp.add_argument("--no-normalize", action="store_true")
    sp.add_argument("--eps", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--c", type=float)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    common(sp)
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for line in exc.problems:
            print(f"config error: {line}", file=sys.stderr)
        return 2
    except (UsageError, ValueError) as exc:
        print(f"orthokernel {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
