"""
Run configuration: a flat ``key = value`` text file.

Grammar::

    # comment
    key = value        # trailing comments allowed

Blank lines are ignored; keys are case-sensitive; each key may appear once.
Values are decimal numbers, integers, booleans (true/false) or bare strings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from ..errors import InvalidConfigError
from ..model import NOMINAL_ALPHA, NOMINAL_PARAMS, ResonantParams
from ..sim import SimConfig

__all__ = ["RunConfig", "load_config", "parse_config", "hz_to_rad_s", "rad_s_to_hz"]


def hz_to_rad_s(f_hz: float) -> float:
    return 2.0 * math.pi * f_hz


def rad_s_to_hz(omega: float) -> float:
    return omega / (2.0 * math.pi)


@dataclass(frozen=True)
class RunConfig:
    kappa: float = NOMINAL_PARAMS.kappa
    zeta: float = NOMINAL_PARAMS.zeta
    omega_r_rad_s: float = NOMINAL_PARAMS.omega_r
    alpha_mag: float = NOMINAL_ALPHA
    mu1: float = 0.5
    mu2: float = 0.0
    delta_points: int = 41
    eps_lo: float = 1e-2
    eps_hi: float = 1e6
    eps_points: int = 200
    bode_lo_rad_s: Optional[float] = None
    bode_hi_rad_s: Optional[float] = None
    bode_points: int = 400
    sim_dt: float = 1e-8
    sim_t_settle: float = 0.1
    sim_t_measure: float = 0.5
    sim_batches: int = 40
    sim_control_variate: bool = True
    seed: int = 1
    out_dir: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        def need(cond, key, msg):
            if not cond:
                raise InvalidConfigError(f"{key}: {msg}")

        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, float):
                need(math.isfinite(v), f.name, "must be finite")
        need(self.zeta > 0, "zeta", "must be > 0")
        need(self.omega_r_rad_s > 0, "omega_r_rad_s", "must be > 0")
        need(self.alpha_mag > 0, "alpha_mag", "must be > 0")
        need(0 <= self.mu1 <= 1, "mu1", "must lie in [0, 1]")
        need(0 <= self.mu2 <= 1, "mu2", "must lie in [0, 1]")
        need(self.delta_points >= 2, "delta_points", "must be >= 2")
        need(0 < self.eps_lo < self.eps_hi, "eps_lo", "need 0 < eps_lo < eps_hi")
        need(self.eps_points >= 2, "eps_points", "must be >= 2")
        need(self.bode_points >= 1, "bode_points", "frequency grid is empty")
        lo, hi = self.bode_range
        need(0 < lo <= hi, "bode_lo_rad_s", "need 0 < bode_lo_rad_s <= bode_hi_rad_s")
        need(self.seed >= 0, "seed", "must be non-negative")
        need(bool(self.out_dir), "out_dir", "must not be empty")
        try:
            self.sim_config()
        except InvalidConfigError as exc:
            raise InvalidConfigError(f"sim: {exc}") from None

    @property
    def params(self) -> ResonantParams:
        return ResonantParams(self.kappa, self.zeta, self.omega_r_rad_s)

    @property
    def bode_range(self):
        lo = self.omega_r_rad_s / 100.0 if self.bode_lo_rad_s is None else self.bode_lo_rad_s
        hi = self.omega_r_rad_s * 100.0 if self.bode_hi_rad_s is None else self.bode_hi_rad_s
        return lo, hi

    def sim_config(self, seed=None) -> SimConfig:
        return SimConfig(
            dt=self.sim_dt,
            t_settle=self.sim_t_settle,
            t_measure=self.sim_t_measure,
            seed=self.seed if seed is None else seed,
            n_batches=self.sim_batches,
            control_variate=self.sim_control_variate,
        )

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


_TYPES = {f.name: f.type for f in fields(RunConfig)}
# alternative spelling converted to omega_r_rad_s
_ALIASES = {"resonance_hz": "omega_r_rad_s"}


def _convert(key, raw):
    typ = _TYPES[key]
    try:
        if typ == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if typ == "int":
            return int(raw)
        if typ == "str":
            return raw
        if typ in ("float", "Optional[float]"):
            return float(raw)
    except ValueError:
        pass
    raise InvalidConfigError(f"{key}: cannot parse {raw!r} as {typ}")


def parse_config(text: str) -> RunConfig:
    """Parse config text; errors name the offending key or line."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if not key or not raw:
            raise InvalidConfigError(f"line {lineno}: empty key or value")
        if key in _ALIASES:
            target = _ALIASES[key]
            try:
                value = hz_to_rad_s(float(raw))
            except ValueError:
                raise InvalidConfigError(f"{key}: cannot parse {raw!r} as float") from None
        elif key in _TYPES:
            target, value = key, _convert(key, raw)
        else:
            raise InvalidConfigError(f"{key}: unknown configuration key (line {lineno})")
        if target in values:
            raise InvalidConfigError(f"{key}: duplicate setting (line {lineno})")
        values[target] = value
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text)
