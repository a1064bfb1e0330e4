"""Solver configuration and its flat ``section.key = value`` text format.

Example::

    # default scenario
    mesh.nx = 16
    mesh.ny = 16
    kernel.kind = elongation
    kernel.d = 0.5
    load.f = 0, -0.5
    time.dt = 0.01

Blank lines and ``#`` comments are ignored.  Unknown keys are errors; every
omitted key takes the default listed in :data:`KEYS`.  Relative paths
(``kernel.table``, ``init.u0``, ``init.chi0``) resolve against the directory
of the config file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import InvalidValue, MissingKey, UnknownKey

__all__ = ["SolverConfig", "KEYS", "parse_config", "parse_config_text",
           "emit_config", "validate"]


@dataclass(frozen=True)
class SolverConfig:
    nx: int = 16
    ny: int = 16
    lam: float = 1.0
    mu: float = 1.0
    lam_v: float = 0.5
    mu_v: float = 0.5
    kernel_kind: str = "elongation"
    kernel_d: float = 0.5
    kernel_k0: float = 0.0
    kernel_table: str | None = None
    gamma_c0: float = 0.1
    gamma_c1: float = -0.1
    gamma_c2: float = 0.0
    eps: float = 1e-3
    eps_u: float = 1e-4
    dt: float = 1e-2
    T_final: float = 1.0
    tol_fp: float = 1e-8
    max_fp: int = 50
    theta: float = 1.0
    newton_tol_u: float = 1e-10
    newton_max_u: int = 50
    newton_tol_chi: float = 1e-10
    newton_max_chi: int = 100
    f: tuple = (0.0, -0.5)
    h: tuple = (0.0, 0.0)
    load_profile: str = "constant"
    ramp_time: float = 1.0
    traction_edges: tuple = ("top", "right")
    u0: str = "zero"
    chi0: float | str = 1.0

    @property
    def n_steps(self) -> int:
        return int(round(self.T_final / self.dt))

    def load_factor(self, t: float) -> float:
        if self.load_profile == "constant":
            return 1.0
        return min(t / self.ramp_time, 1.0)


# dotted key -> attribute name
KEYS = {
    "mesh.nx": "nx",
    "mesh.ny": "ny",
    "material.lam": "lam",
    "material.mu": "mu",
    "material.lam_v": "lam_v",
    "material.mu_v": "mu_v",
    "kernel.kind": "kernel_kind",
    "kernel.d": "kernel_d",
    "kernel.k0": "kernel_k0",
    "kernel.table": "kernel_table",
    "cohesion.c0": "gamma_c0",
    "cohesion.c1": "gamma_c1",
    "cohesion.c2": "gamma_c2",
    "reg.eps": "eps",
    "reg.eps_u": "eps_u",
    "time.dt": "dt",
    "time.T": "T_final",
    "fixed_point.tol": "tol_fp",
    "fixed_point.max_iter": "max_fp",
    "fixed_point.theta": "theta",
    "newton.tol_u": "newton_tol_u",
    "newton.max_iter_u": "newton_max_u",
    "newton.tol_chi": "newton_tol_chi",
    "newton.max_iter_chi": "newton_max_chi",
    "load.f": "f",
    "load.h": "h",
    "load.profile": "load_profile",
    "load.ramp_time": "ramp_time",
    "load.traction_edges": "traction_edges",
    "init.u0": "u0",
    "init.chi0": "chi0",
}
_ATTR_TO_KEY = {v: k for k, v in KEYS.items()}
_INT = {"nx", "ny", "max_fp", "newton_max_u", "newton_max_chi"}
_STR = {"kernel_kind", "load_profile", "u0"}
_VEC = {"f", "h"}
_PATHS = {"kernel_table", "u0", "chi0"}


def _convert(key, attr, raw, base_dir):
    try:
        if attr in _INT:
            return int(raw)
        if attr in _VEC:
            parts = [float(p) for p in raw.split(",")]
            if len(parts) != 2:
                raise ValueError("expected two comma-separated components")
            return tuple(parts)
        if attr == "traction_edges":
            return tuple(p.strip() for p in raw.split(",") if p.strip())
        if attr == "chi0":
            try:
                return float(raw)
            except ValueError:
                return _resolve(raw, base_dir)
        if attr == "u0":
            return raw if raw == "zero" else _resolve(raw, base_dir)
        if attr == "kernel_table":
            return None if raw in ("", "none") else _resolve(raw, base_dir)
        if attr in _STR:
            return raw
        return float(raw)
    except ValueError as exc:
        raise InvalidValue(key, f"cannot parse {raw!r}: {exc}") from None


def _resolve(raw, base_dir):
    p = Path(raw)
    if not p.is_absolute() and base_dir is not None:
        p = Path(base_dir) / p
    return str(p)


def validate(cfg: SolverConfig) -> SolverConfig:
    def bad(attr, msg):
        raise InvalidValue(_ATTR_TO_KEY[attr], msg)

    for attr in ("nx", "ny"):
        if getattr(cfg, attr) < 2:
            bad(attr, "must be >= 2")
    for attr in ("mu", "mu_v"):
        if not getattr(cfg, attr) > 0.0:
            bad(attr, "must be positive (ellipticity)")
    for attr in ("lam", "lam_v"):
        if not getattr(cfg, attr) >= 0.0:
            bad(attr, "must be nonnegative")
    if cfg.kernel_kind not in ("elongation", "constant", "tabulated"):
        bad("kernel_kind", f"unknown kernel {cfg.kernel_kind!r}")
    if cfg.kernel_kind == "elongation" and not cfg.kernel_d > 0.0:
        bad("kernel_d", "must be positive")
    if cfg.kernel_kind == "constant" and not cfg.kernel_k0 >= 0.0:
        bad("kernel_k0", "must be nonnegative")
    for attr in ("eps", "eps_u", "dt", "tol_fp", "newton_tol_u", "newton_tol_chi",
                 "ramp_time"):
        if not getattr(cfg, attr) > 0.0:
            bad(attr, "must be positive")
    if not (cfg.T_final >= 0.0 and math.isfinite(cfg.T_final)):
        bad("T_final", "must be finite and nonnegative")
    if abs(cfg.n_steps * cfg.dt - cfg.T_final) > 1e-9 * max(cfg.T_final, cfg.dt):
        bad("T_final", f"{cfg.T_final!r} is not a multiple of dt={cfg.dt!r}")
    if not 0.0 < cfg.theta <= 1.0:
        bad("theta", "must lie in (0, 1]")
    for attr in ("max_fp", "newton_max_u", "newton_max_chi"):
        if getattr(cfg, attr) < 1:
            bad(attr, "must be >= 1")
    if cfg.load_profile not in ("constant", "ramp"):
        bad("load_profile", f"unknown profile {cfg.load_profile!r}")
    for edge in cfg.traction_edges:
        if edge not in ("top", "right"):
            bad("traction_edges", f"unknown Neumann edge {edge!r}")
    if isinstance(cfg.chi0, float) and not 0.0 <= cfg.chi0 <= 1.0:
        bad("chi0", f"initial damage {cfg.chi0!r} outside [0, 1]")
    return cfg


def parse_config_text(text: str, base_dir=None) -> SolverConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidValue(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise UnknownKey(key, f"unknown key (line {lineno})")
        values[KEYS[key]] = _convert(key, KEYS[key], raw, base_dir)
    kind = values.get("kernel_kind", SolverConfig.kernel_kind)
    if kind == "constant" and "kernel_k0" not in values:
        raise MissingKey("kernel.k0", "required for kernel.kind = constant")
    if kind == "tabulated" and values.get("kernel_table") is None:
        raise MissingKey("kernel.table", "required for kernel.kind = tabulated")
    return validate(SolverConfig(**values))


def parse_config(path) -> SolverConfig:
    path = Path(path)
    return parse_config_text(path.read_text(), base_dir=path.parent)


def _format(value):
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if value is None:
        return "none"
    return str(value)


def emit_config(cfg: SolverConfig) -> str:
    """Fully resolved text form; ``parse_config_text(emit_config(c)) == c``."""
    lines = [f"{_ATTR_TO_KEY[fd.name]} = {_format(getattr(cfg, fd.name))}"
             for fd in fields(cfg)]
    return "\n".join(lines) + "\n"


def with_eps(cfg: SolverConfig, eps: float) -> SolverConfig:
    return validate(replace(cfg, eps=float(eps)))
