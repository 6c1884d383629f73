"""Flat key=value run configuration.

Blank lines and text after '#' are ignored.  List values are comma
separated.  Unknown keys are errors, so typos never pass silently.
"""
from dataclasses import dataclass, fields, replace
import math
from pathlib import Path

from .errors import ConfigError

MODES = ("verify-identities", "flow", "convergence", "bounds-only")
TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class RunConfig:
    mode: str = "flow"
    dims: tuple = (32, 1, 1, 1)
    lengths: tuple = (TWO_PI,) * 4
    fd_order: int = 2
    metric_profile: str = "flat"
    metric_amplitude: float = 0.05
    metric_mode: int = 1
    metric_warp: float = 0.05
    metric_file: str = ""
    phi_profile: str = "zero"
    phi_amplitude: float = 0.05
    phi_mode: int = 1
    phi_axis: int = 0
    phi_value: float = 0.0
    phi_file: str = ""
    alpha: float = 0.0
    alpha_times: tuple = ()
    alpha_values: tuple = ()
    C: float = math.nan  # nan: max(0, -min S(0)) + 1
    chi: float = 0.0
    t_end: float = 0.1
    record_every: int = 1
    dt: float = math.nan  # nan: adaptive
    cfl: float = 0.1
    seed: int = 0
    out: str = "out"
    samples: int = 10000
    ladder: tuple = (16, 32, 64)
    conv_dt: float = 1e-4
    conv_t0: float = 0.0
    bound_s: tuple = (0.0, 0.1, 0.5)
    int_f0: float = 0.0
    int_sic2_0: float = 0.0
    int_sic2_over_S0: float = 0.0
    A1: float = 0.0
    vol0: float = 1.0

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return _validated(replace(self, **kw))


_INT_TUPLES = {"dims", "ladder"}
_FLOAT_TUPLES = {"lengths", "alpha_times", "alpha_values", "bound_s"}
_NAN_OK = {"C", "dt"}


def _convert(name, raw, proto):
    raw = raw.strip()
    try:
        if name in _INT_TUPLES:
            return tuple(int(x) for x in raw.split(",") if x.strip())
        if name in _FLOAT_TUPLES:
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if isinstance(proto, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(proto, int):
            return int(raw)
        if isinstance(proto, float):
            return math.nan if name in _NAN_OK and raw in ("", "auto") else float(raw)
    except ValueError as exc:
        raise ConfigError(name, f"cannot parse {raw!r} ({exc})") from None
    return raw


def _validated(cfg):
    if cfg.mode not in MODES:
        raise ConfigError("mode", f"{cfg.mode!r} is not one of {', '.join(MODES)}")
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        vals = v if isinstance(v, tuple) else (v,)
        for x in vals:
            if isinstance(x, float) and not math.isfinite(x) and not (f.name in _NAN_OK and math.isnan(x)):
                raise ConfigError(f.name, f"value {x!r} is not finite")
    if len(cfg.dims) != 4:
        raise ConfigError("dims", "needs 4 comma-separated integers")
    if len(cfg.lengths) != 4 or min(cfg.lengths) <= 0:
        raise ConfigError("lengths", "needs 4 positive numbers")
    if cfg.fd_order not in (2, 4):
        raise ConfigError("fd_order", "must be 2 or 4")
    if cfg.mode == "flow" and not cfg.t_end > 0:
        raise ConfigError("t_end", "must be > 0 in flow mode")
    if cfg.record_every < 1:
        raise ConfigError("record_every", "must be >= 1")
    if cfg.cfl <= 0:
        raise ConfigError("cfl", "must be > 0")
    if not math.isnan(cfg.dt) and cfg.dt <= 0:
        raise ConfigError("dt", "must be > 0 or auto")
    if cfg.alpha < 0:
        raise ConfigError("alpha", "must be >= 0")
    if len(cfg.alpha_times) != len(cfg.alpha_values):
        raise ConfigError("alpha_values", "needs one value per entry of alpha_times")
    if cfg.samples < 1:
        raise ConfigError("samples", "must be >= 1")
    if cfg.conv_dt <= 0:
        raise ConfigError("conv_dt", "must be > 0")
    if len(cfg.ladder) < 2:
        raise ConfigError("ladder", "needs at least two resolutions")
    if not (0 <= cfg.phi_axis < 4):
        raise ConfigError("phi_axis", "must be 0..3")
    return cfg


def parse_config(text):
    proto = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key=value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(key, "unknown key")
        values[key] = _convert(key, raw, getattr(proto, key))
    return _validated(replace(proto, **values))


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from None
    return parse_config(text)


def dump_config(cfg):
    """Render a config back to key=value text that parse_config accepts."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(repr(x) for x in v)
        elif isinstance(v, float):
            v = "auto" if math.isnan(v) else repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
