"""Flat key = value run configuration: parsing, merging, validation, hashing.

The config format is intentionally flat text so runs diff cleanly:

    # comment lines and blanks are ignored
    grid_n = 48
    variant = cor2
    k = 2.0

Values are booleans (true/false), integers, floats, or bare/quoted strings.
Unknown keys are rejected at parse time, as are parameter values outside
their mathematical ranges, so a bad configuration never starts a run.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields as dataclass_fields
from typing import Dict, Optional, Tuple, Union

Scalar = Union[bool, int, float, str]

COMMANDS = (
    "algebra-verify",
    "inversion-verify",
    "norms",
    "inequality-check",
    "extremal-search",
    "zero-mode",
    "coupling-scan",
)

ZERO_MODE_ACTIONS = ("residual", "theorem3", "theorem4", "decay", "weighted")


class ConfigError(ValueError):
    """Configuration problem; the message names the offending key."""


@dataclass
class RunConfig:
    """Resolved run parameters shared by every campaign.

    Grid and mask geometry, exponents, scan bounds, seeding, threading, and
    tolerance overrides. None means "use the campaign default".
    """

    grid_n: Optional[int] = None
    grid_l: Optional[float] = None
    r_outer: Optional[float] = None
    eps_in: float = 0.0
    t_min: float = 0.0
    t_max: float = 2.0
    t_step: float = 0.05
    p: float = 2.0
    q: Optional[float] = None
    k: Optional[float] = None
    t: float = 1.0
    s: float = 1.3
    alpha: float = -1.0
    variant: str = "cor2"
    potential: str = "loss_yau"
    statistic: str = "shell_mean"
    fit_r_min: float = 2.0
    fit_r_max: float = 8.0
    trials: int = 20
    budget: int = 100
    sweep_points: int = 10000
    seed: int = 0
    threads: int = 1
    out: str = "reports"
    tolerances: Dict[str, float] = field(default_factory=dict)

    def resolved_items(self) -> Tuple[Tuple[str, Scalar], ...]:
        """All non-default-None settings as sorted (key, value) pairs.

        The output directory is excluded: it decides where reports land,
        not what is computed, and the same run written to two places must
        hash identically.
        """
        items = []
        for f in dataclass_fields(self):
            if f.name in ("tolerances", "out"):
                continue
            value = getattr(self, f.name)
            if value is None:
                continue
            items.append((f.name, value))
        for key, value in self.tolerances.items():
            items.append((key, value))
        return tuple(sorted(items))


_FIELD_TYPES = {
    "grid_n": int,
    "grid_l": float,
    "r_outer": float,
    "eps_in": float,
    "t_min": float,
    "t_max": float,
    "t_step": float,
    "p": float,
    "q": float,
    "k": float,
    "t": float,
    "s": float,
    "alpha": float,
    "variant": str,
    "potential": str,
    "statistic": str,
    "fit_r_min": float,
    "fit_r_max": float,
    "trials": int,
    "budget": int,
    "sweep_points": int,
    "seed": int,
    "threads": int,
    "out": str,
}


def _parse_scalar(text: str) -> Scalar:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in ("'", '"'):
        return text[1:-1]
    low = text.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_text(text: str) -> Dict[str, Scalar]:
    """Parse flat key = value lines into a raw settings dict."""
    settings: Dict[str, Scalar] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in settings:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        settings[key] = _parse_scalar(value)
    return settings


def _coerce(key: str, value: Scalar) -> Scalar:
    want = _FIELD_TYPES[key]
    if want is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if want is int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(f"key '{key}': expected an integer, got {value!r}")
        return value
    if want is str and not isinstance(value, str):
        raise ConfigError(f"key '{key}': expected a string, got {value!r}")
    if want is float and not isinstance(value, float):
        raise ConfigError(f"key '{key}': expected a number, got {value!r}")
    return value


def build_config(settings: Dict[str, Scalar]) -> RunConfig:
    """Typed RunConfig from raw settings; unknown keys are rejected.

    Keys starting with tol_ collect into the tolerance-override table.
    """
    cfg = RunConfig()
    for key, value in settings.items():
        if key.startswith("tol_"):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"key '{key}': tolerance overrides must be numbers")
            cfg.tolerances[key] = float(value)
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key '{key}'")
        setattr(cfg, key, _coerce(key, value))
    return cfg


def load_config(path: str, overrides: Optional[Dict[str, Scalar]] = None) -> RunConfig:
    """Read a config file and apply flag overrides on top."""
    with open(path, "r", encoding="utf-8") as fh:
        settings = parse_config_text(fh.read())
    if overrides:
        settings.update(overrides)
    return build_config(settings)


def _fail(key: str, value: Scalar, valid_range: str) -> None:
    raise ConfigError(
        f"config key '{key}': {value} outside the valid range {valid_range}"
    )


def validate_for(command: str, action: Optional[str], cfg: RunConfig) -> None:
    """Range-check every parameter the command will consume.

    Raises ConfigError with a message naming the key and quoting the violated
    range, before any computation starts.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command '{command}'")
    if cfg.grid_n is not None and (cfg.grid_n < 8 or cfg.grid_n % 2 != 0):
        _fail("grid_n", cfg.grid_n, "even integers >= 8")
    if cfg.grid_l is not None and not cfg.grid_l > 0:
        _fail("grid_l", cfg.grid_l, "grid_l > 0")
    if cfg.threads < 1:
        _fail("threads", cfg.threads, "threads >= 1")
    if cfg.eps_in < 0:
        _fail("eps_in", cfg.eps_in, "eps_in >= 0")
    if cfg.trials < 1:
        _fail("trials", cfg.trials, "trials >= 1")
    if cfg.sweep_points < 1:
        _fail("sweep_points", cfg.sweep_points, "sweep_points >= 1")
    if cfg.potential not in ("loss_yau", "free"):
        raise ConfigError(
            f"config key 'potential': {cfg.potential!r} is not one of "
            f"('loss_yau', 'free')"
        )

    if command == "zero-mode":
        if action not in ZERO_MODE_ACTIONS:
            raise ConfigError(
                f"unknown zero-mode action '{action}'; expected one of "
                f"{ZERO_MODE_ACTIONS}"
            )
        if action == "theorem3":
            k = 3.0 if cfg.k is None else cfg.k
            if not 1.0 <= k < 10.0 / 3.0:
                _fail("k", k, "k ∈ [1,10/3)")
        if action == "theorem4":
            if not 0.0 < cfg.t < 1.1:
                _fail("t", cfg.t, "t ∈ (0,11/10)")
            if not 1.0 <= cfg.s < 4.0 / 3.0:
                _fail("s", cfg.s, "s ∈ [1,4/3)")
        if action == "decay":
            if not 0 < cfg.fit_r_min < cfg.fit_r_max:
                _fail(
                    "fit_r_min",
                    cfg.fit_r_min,
                    "0 < fit_r_min < fit_r_max",
                )
            if cfg.statistic not in ("shell_mean", "shell_max"):
                raise ConfigError(
                    f"config key 'statistic': {cfg.statistic!r} is not one of "
                    f"('shell_mean', 'shell_max')"
                )

    if command in ("inequality-check", "extremal-search"):
        _validate_inequality_exponents(cfg)
        if command == "extremal-search" and cfg.budget < 100:
            _fail("budget", cfg.budget, "budget >= 100")

    if command == "coupling-scan":
        if not cfg.t_step > 0:
            _fail("t_step", cfg.t_step, "t_step > 0")
        if not cfg.t_min <= cfg.t_max:
            _fail("t_min", cfg.t_min, "t_min <= t_max")

    if command == "norms":
        if cfg.p < 1:
            _fail("p", cfg.p, "p >= 1")
        if cfg.q is not None and cfg.q <= 0:
            _fail("q", cfg.q, "q > 0")
        if not cfg.alpha < 0:
            _fail("alpha", cfg.alpha, "alpha < 0")


def _validate_inequality_exponents(cfg: RunConfig) -> None:
    variant = cfg.variant
    if variant not in ("dsineq", "cor1", "cor2"):
        raise ConfigError(
            f"config key 'variant': {variant!r} is not one of "
            f"('dsineq', 'cor1', 'cor2')"
        )
    p = cfg.p
    if p < 1:
        _fail("p", p, "p >= 1")
    if variant == "dsineq":
        if cfg.q is None:
            raise ConfigError("config key 'q': required for variant dsineq")
        if not cfg.q > p:
            _fail("q", cfg.q, f"1 ≤ p < q (p = {p:g})")
    elif variant == "cor1":
        if cfg.q is None:
            raise ConfigError("config key 'q': required for variant cor1")
        r = 3.0 * (cfg.q / p - 1.0)
        if not 1.0 - 1e-12 <= r <= p + 1e-12:
            _fail("q", cfg.q, f"r = 3(q/p−1) ∈ [1,p] (computed r = {r:.6g})")
        k = r if cfg.k is None else cfg.k
        if not 0 < k < cfg.q:
            _fail("k", k, f"k ∈ (0,q) (q = {cfg.q:g})")
    else:
        k = 2.0 if cfg.k is None else cfg.k
        upper = p * (p + 3.0) / 3.0
        if not 1.0 <= k < upper:
            _fail("k", k, f"k ∈ [1, p(p+3)/3) (upper bound {upper:g})")


def config_hash(command: str, action: Optional[str], cfg: RunConfig) -> str:
    """Deterministic digest of the resolved settings for the manifest."""
    payload = {
        "action": action,
        "command": command,
        "settings": [[k, v] for k, v in cfg.resolved_items()],
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
