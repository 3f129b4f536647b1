"""INI-style experiment configuration for ``orthokernel verify`` / ``sweep``.

Each section names one experiment; an optional ``[run]`` section holds the
root ``seed``.  Values are scalars or comma-separated lists::

    [run]
    seed = 7

    [determinant_split]
    n = 1, 2, 5, 10
    trials = 10000

Schema violations are collected and reported together, each with the line
of the offending key.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple


class ConfigError(ValueError):
    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _list(conv: Callable) -> Callable:
    def parse(s: str):
        items = [x.strip() for x in s.split(",") if x.strip()]
        if not items:
            raise ValueError("empty list")
        return tuple(conv(x) for x in items)
    return parse


def _component(s: str) -> str:
    table = {"o": "O", "so": "SO", "sominus": "SOMinus", "so-": "SOMinus"}
    key = s.strip().lower().replace("_", "")
    if key not in table:
        raise ValueError(f"component must be O, SO or SOMinus, got {s!r}")
    return table[key]


INT, FLOAT, STR, BOOL = int, float, str.strip, _bool
INTS, FLOATS = _list(int), _list(float)

_KERNEL_KEYS = {
    "scheme": STR, "activation": STR, "normalized": BOOL, "alpha": FLOAT,
    "m": INTS, "k": INTS, "trials": INT, "c": FLOAT, "seed": INT, "workers": INT,
}

SCHEMA: Dict[str, Dict[str, Callable]] = {
    "run": {"seed": INT},
    "determinant_split": {"n": INTS, "trials": INT, "component": _component, "seed": INT},
    "kernel_error": {**_KERNEL_KEYS, "eps": FLOAT, "eps_grid": FLOATS, "delta": FLOAT},
    "mean_bias": dict(_KERNEL_KEYS),
    "theorem2_sweep": {**_KERNEL_KEYS, "eps": FLOAT, "delta": FLOAT},
    "theorem1": {"activation": STR, "normalized": BOOL, "eps": FLOAT, "delta": FLOAT,
                 "k": INT, "c": FLOAT, "trials": INT, "seed": INT},
    "wasserstein": {"m": INTS, "k": INTS, "c": FLOAT, "trials": INT, "probes": INT,
                    "scheme": STR, "seed": INT},
    "embedding": {"configs": INT, "max_dim": INT, "seed": INT},
    "rotation_invariance": {"m": INTS, "k": INTS, "c": FLOAT, "trials": INT,
                            "scheme": STR, "seed": INT},
}

EXPERIMENTS = tuple(s for s in SCHEMA if s != "run")

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_index(text: str) -> Dict[Tuple[str, str], int]:
    idx: Dict[Tuple[str, str], int] = {}
    section = None
    for no, line in enumerate(text.splitlines(), 1):
        if line.lstrip().startswith(("#", ";")):
            continue
        ms = _SECTION_RE.match(line)
        if ms:
            section = ms.group(1).strip()
            idx[(section, "")] = no
            continue
        mk = _KEY_RE.match(line)
        if mk and section is not None and not line[:1].isspace():
            idx.setdefault((section, mk.group(1).strip().lower()), no)
    return idx


@dataclass
class RunConfig:
    """Parsed config: ``experiments`` maps section name to typed key/values."""

    seed: int
    experiments: Dict[str, Dict[str, object]]

    def resolved(self) -> dict:
        return {"run": {"seed": self.seed}, **self.experiments}


def parse_config(
    text: str,
    source: str = "<config>",
    overrides: Sequence[str] = (),
    seed: Optional[int] = None,
) -> RunConfig:
    """Parse and validate ``text``; ``overrides`` are ``section.key=value`` strings.

    Raises
    ------
    ConfigError
        Listing every problem found, with ``source:line`` context.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError([f"{source}: {exc}"]) from None
    lines = _line_index(text)
    raw: Dict[str, Dict[str, Tuple[str, str]]] = {}
    for sec in cp.sections():
        for key, val in cp.items(sec):
            raw.setdefault(sec, {})[key] = (val, f"{source}:{lines.get((sec, key), '?')}")
        raw.setdefault(sec, {})
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError([f"override {item!r} is not of the form section.key=value"])
        lhs, val = item.split("=", 1)
        sec, key = lhs.split(".", 1)
        raw.setdefault(sec.strip(), {})[key.strip().lower()] = (val.strip(), f"override {item!r}")

    problems: List[str] = []
    parsed: Dict[str, Dict[str, object]] = {}
    for sec, items in raw.items():
        if sec not in SCHEMA:
            where = f"{source}:{lines.get((sec, ''), '?')}"
            problems.append(
                f"{where}: unknown experiment [{sec}]; valid names: {', '.join(EXPERIMENTS)}"
            )
            continue
        out = parsed.setdefault(sec, {})
        for key, (val, where) in items.items():
            conv = SCHEMA[sec].get(key)
            if conv is None:
                problems.append(
                    f"{where}: unknown key {key!r} in [{sec}]; allowed: {', '.join(SCHEMA[sec])}"
                )
                continue
            try:
                out[key] = conv(val)
            except ValueError as exc:
                problems.append(f"{where}: bad value for {sec}.{key}: {exc}")
    if problems:
        raise ConfigError(problems)
    run = parsed.pop("run", {})
    root = seed if seed is not None else int(run.get("seed", 0))
    if not parsed:
        raise ConfigError([f"{source}: no experiment sections; valid names: {', '.join(EXPERIMENTS)}"])
    return RunConfig(root, parsed)


def cells(section: Mapping[str, object], default: Tuple[int, ...] = (64,)) -> Tuple[Tuple[int, int], ...]:
    """Zip the ``m`` and ``k`` lists of a section into grid cells (``k`` defaults to ``m``)."""
    ms = tuple(section.get("m", default))
    ks = tuple(section.get("k", ms))
    if len(ks) == 1 and len(ms) > 1:
        ks = ks * len(ms)
    if len(ms) == 1 and len(ks) > 1:
        ms = ms * len(ks)
    if len(ms) != len(ks):
        raise ConfigError([f"m and k lists differ in length ({len(ms)} vs {len(ks)})"])
    return tuple(zip(ms, ks))
