"""Run configuration: a flat ``key = value`` file merged with command-line flags.

Grammar
-------
One ``key = value`` (or ``key: value``) per line; ``#`` and ``;`` start
comment lines; keys are case-insensitive unless that is ambiguous (``T``
is the horizon, ``t`` an observation time); no sections.  Lists are
comma-separated.  A lightning schedule is ``t0:lam0,t1:lam1,...`` with
``t0 = 0``; ``lambda = x`` is shorthand for ``schedule = 0:x``.  A ``w`` grid
is either a list or ``start:stop:num``.  Flags given on the command line
override file values.
"""
from __future__ import annotations

import configparser
import dataclasses
import os
import re
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .errors import ConfigError, ParseError
from .spectrum import parse_spectrum_source

_SECTION = "fplab"


def _to_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple:
    s = s.strip()
    return tuple(float(x) for x in s.split(",") if x.strip()) if s else ()


def _ints(s: str) -> tuple:
    s = s.strip()
    return tuple(int(float(x)) for x in s.split(",") if x.strip()) if s else ()


def _int(s: str) -> int:
    x = float(s)
    if x != int(x):
        raise ValueError(f"not an integer: {s!r}")
    return int(x)


def parse_schedule(s: str) -> tuple:
    """``"0:1.0,2.5:0.1"`` -> ``((0.0, 1.0), (2.5, 0.1))``."""
    out = []
    for part in s.split(","):
        part = part.strip()
        if not part:
            continue
        a, sep, b = part.partition(":")
        if not sep:
            raise ValueError(f"schedule entry {part!r} is not 'start:rate'")
        out.append((float(a), float(b)))
    if not out:
        raise ValueError("empty schedule")
    if out[0][0] != 0.0:
        raise ValueError("schedule must start at t=0")
    if any(b[0] <= a[0] for a, b in zip(out, out[1:])):
        raise ValueError("schedule breakpoints must be strictly increasing")
    if any(lam < 0 for _, lam in out):
        raise ValueError("schedule rates must be nonnegative")
    return tuple(out)


def format_schedule(sched) -> str:
    return ",".join(f"{a!r}:{b!r}" for a, b in sched)


def parse_w_grid(s: str) -> tuple:
    s = s.strip()
    if s.count(":") == 2:
        a, b, n = s.split(":")
        return tuple(np.linspace(float(a), float(b), _int(n)).tolist())
    return _floats(s)


@dataclass(frozen=True)
class CliConfig:
    """Fully resolved settings of one CLI run."""

    command: str = ""
    target: str = ""
    init: str = "mono:1.0"
    N: int = 100_000
    K: int = 200
    T: float = 3.0
    grid: float = 1e-3
    alpha: float = 0.5
    schedule: tuple = ((0.0, 1.0),)
    seed: int = 0
    replicas: int = 1
    jobs: int = 1
    out: str = "out"
    burns: tuple = ()
    gels: tuple = ()
    spectra_at: tuple = ()
    K_obs: int = 10
    samples: int = 31
    w: tuple = ()
    t: float = 2.0
    lambdas: tuple = (0.1, 0.01, 0.001)
    threshold: float | None = None
    eps: float | None = None
    n_controls: int = 200
    alphas: tuple = (0.2, 0.6)
    N_list: tuple = (10_000, 100_000, 1_000_000)
    K_big: int = 10_000
    times: tuple = (1.0,)
    min_events: int = 2000
    debug: bool = False
    record_events: bool = False

    @property
    def lam(self) -> float:
        """Rate of the first schedule segment."""
        return self.schedule[0][1]

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


# field -> (parser, formatter, validator or None)
def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _fmt_float(x):
    return repr(float(x))


def _fmt_list(xs):
    return ",".join(repr(x) for x in xs)


_FIELDS: dict[str, tuple[Callable[[str], Any], Callable[[Any], str], Callable[[Any], bool] | None, str]] = {
    "command": (str, str, None, ""),
    "target": (str, str, None, ""),
    "init": (str, str, None, ""),
    "N": (_int, str, _pos, "must be a positive integer"),
    "K": (_int, str, _pos, "must be a positive integer"),
    "T": (float, _fmt_float, _pos, "must be positive"),
    "grid": (float, _fmt_float, _pos, "must be positive"),
    "alpha": (float, _fmt_float, lambda a: 0.0 <= a <= 1.0, "must lie in [0, 1]"),
    "schedule": (parse_schedule, format_schedule, None, ""),
    "seed": (_int, str, _nonneg, "must be a nonnegative integer"),
    "replicas": (_int, str, _pos, "must be a positive integer"),
    "jobs": (_int, str, _pos, "must be a positive integer"),
    "out": (str, str, lambda s: bool(s), "must be nonempty"),
    "burns": (_floats, _fmt_list, None, ""),
    "gels": (_floats, _fmt_list, None, ""),
    "spectra_at": (_floats, _fmt_list, lambda xs: all(x >= 0 for x in xs), "must be nonnegative"),
    "K_obs": (_int, str, _pos, "must be a positive integer"),
    "samples": (_int, str, lambda n: n >= 2, "must be at least 2"),
    "w": (parse_w_grid, _fmt_list, lambda xs: all(x > 0 for x in xs), "grid points must be positive"),
    "t": (float, _fmt_float, _pos, "must be positive"),
    "lambdas": (_floats, _fmt_list, lambda xs: all(x > 0 for x in xs), "rates must be positive"),
    "threshold": (float, _fmt_float, _pos, "must be positive"),
    "eps": (float, _fmt_float, _pos, "must be positive"),
    "n_controls": (_int, str, _nonneg, "must be a nonnegative integer"),
    "alphas": (_floats, _fmt_list, lambda xs: all(0 < x < 1 for x in xs), "must lie in (0, 1)"),
    "N_list": (_ints, _fmt_list, lambda xs: all(x > 0 for x in xs), "must be positive"),
    "K_big": (_int, str, _pos, "must be a positive integer"),
    "times": (_floats, _fmt_list, lambda xs: all(x > 0 for x in xs), "must be positive"),
    "min_events": (_int, str, _pos, "must be a positive integer"),
    "debug": (_to_bool, lambda b: "true" if b else "false", None, ""),
    "record_events": (_to_bool, lambda b: "true" if b else "false", None, ""),
}
_ALIASES = {"lambda": "schedule", "h": "grid", "nlist": "N_list", "n_list": "N_list"}
# case-insensitive lookup except where two fields differ only by case (T / t)
_CANON = {k.lower(): k for k in _FIELDS
          if sum(f.lower() == k.lower() for f in _FIELDS) == 1}


def _canonical(key: str) -> str | None:
    key = key.strip().replace("-", "_")
    if key in _FIELDS:
        return key
    k = key.lower()
    if k in _ALIASES:
        return k  # resolved by the caller (lambda needs special handling)
    return _CANON.get(k)


def _read_file(path: str) -> tuple[dict[str, str], dict[str, int]]:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError("config", f"cannot read {path}: {exc}") from exc
    if re.search(r"^\s*\[", text, re.M):
        raise ParseError("config", "sections are not allowed in the flat config format")
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#",), strict=True)
    cp.optionxform = str
    try:
        cp.read_string(f"[{_SECTION}]\n{text}", source=path)
    except configparser.DuplicateOptionError as exc:
        raise ParseError(exc.option, "duplicate key", exc.lineno - 1) from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] - 1 if exc.errors else None
        raise ParseError("config", "malformed line; expected 'key = value'", lineno) from exc
    lines = {}
    for i, raw in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*([^=:#;\s]+)\s*[=:]", raw)
        if m:
            lines.setdefault(m.group(1), i)
    return dict(cp[_SECTION]), lines


def load_config(path: str | None = None, flags: dict | None = None, *,
                command: str | None = None, target: str | None = None,
                env: dict | None = None) -> CliConfig:
    """Merge a config file (if any) with flag values (strings or typed).

    ``flags`` entries set to ``None`` are ignored.  ``jobs`` falls back to the
    ``FPL_JOBS`` environment variable when neither source sets it.
    """
    raw: dict[str, tuple[Any, int | None]] = {}
    if path:
        values, lines = _read_file(path)
        for key, val in values.items():
            raw[key] = (val, lines.get(key))
    for key, val in (flags or {}).items():
        if val is not None:
            raw[key] = (val, None)
    env = os.environ if env is None else env
    if "jobs" not in {(_canonical(k) or k) for k in raw} and env.get("FPL_JOBS"):
        raw["jobs"] = (env["FPL_JOBS"], None)

    resolved: dict[str, Any] = {}
    # file keys first then flags override: process in insertion order, later wins
    for key, (val, line) in raw.items():
        name = _canonical(key)
        if name is None:
            raise ParseError(key, "unknown key", line)
        field_name = "schedule" if name == "lambda" else _ALIASES.get(name, name)
        label = "lambda" if name == "lambda" else field_name
        parser, _, ok, why = _FIELDS[field_name]
        try:
            if name == "lambda":
                lam = float(val)
                if not lam >= 0:
                    raise ValueError("rate must be nonnegative")
                parsed = ((0.0, lam),)
            elif isinstance(val, str):
                parsed = parser(val)
            else:
                parsed = val
        except (ValueError, TypeError) as exc:
            raise ParseError(label, str(exc), line) from exc
        if ok is not None and not ok(parsed):
            raise ParseError(label, why, line)
        resolved[field_name] = parsed
    if command is not None:
        resolved["command"] = command
    if target is not None:
        resolved["target"] = target
    if "init" in resolved:
        try:
            parse_spectrum_source(resolved["init"])
        except (ValueError, OSError) as exc:
            raise ParseError("init", str(exc)) from exc
    return CliConfig(**resolved)


def dump_config(cfg: CliConfig) -> str:
    """Render ``cfg`` in the flat grammar; ``load_config`` inverts it."""
    out = []
    for f in dataclasses.fields(cfg):
        val = getattr(cfg, f.name)
        if val is None:
            continue
        fmt = _FIELDS[f.name][1]
        out.append(f"{f.name} = {fmt(val)}")
    return "\n".join(out) + "\n"


def write_config(cfg: CliConfig, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(dump_config(cfg))


def require(cond: bool, field: str, message: str) -> None:
    if not cond:
        raise ConfigError(field, message)
