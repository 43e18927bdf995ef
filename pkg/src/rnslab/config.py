"""Run configuration: a small line-based key-value format.

Grammar
-------
One ``key = value`` assignment per line.  ``#`` starts a comment (full line
or trailing); blank lines are ignored.  Keys are dotted paths
(``grid.size``); values are scalars, comma-separated lists, or
comma-separated ``p:q`` pairs.  Assigning the same key twice is an error,
and so is any key not in the schema: misspellings never fall back to
defaults silently.

Every key has a documented default, so the empty string parses to a fully
usable configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Any

from .errors import ParseError, ValidationError


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.split(",") if tok.strip())


def _parse_int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in raw.split(",") if tok.strip())


def _parse_pq_list(raw: str) -> tuple[tuple[float, float], ...]:
    pairs = []
    for tok in raw.split(","):
        tok = tok.strip()
        if not tok:
            continue
        p, _, q = tok.partition(":")
        if not q:
            raise ValueError(f"pair {tok!r} must look like p:q")
        pairs.append((float(p), float(q)))
    return tuple(pairs)


@dataclass
class RunConfig:
    """Everything a subcommand needs, with reproducibility metadata."""

    alpha: float = 0.5
    seed: int = 1
    outdir: str | None = None

    grid_size: int = 16
    family_kind: str = "power_law"
    family_gamma: float = 2.0
    family_amplitude: float = 1.0
    family_support_radius: int = 2

    norms_pq: tuple = ((3.0, 9.0), (4.0, 4.0))
    norms_horizons: tuple = (0.25, 1.0)
    norms_nodes: int = 33

    jt_alphas: tuple = (0.1, 0.25, 0.5)
    jt_ps: tuple = (3.0, 4.0)
    jt_horizons: tuple = (0.01, 0.1, 1.0)

    moments_coeffs: tuple = (1.0,)
    moments_rs: tuple = (2.0, 3.0, 4.0, 6.0, 8.0)

    ensemble_samples: int = 1000
    ensemble_lambdas: tuple = (0.25, 0.5, 1.0, 2.0, 4.0)
    ensemble_ladder_depth: int = 10
    ensemble_lambda_fixed: float = 1.0
    ensemble_batch: int = 128

    solver_cutoff: int = 4
    solver_dt: float = 2e-3
    solver_horizon: float = 0.25
    solver_snapshot_every: int = 1
    solver_track_identity: bool = True

    restart_tau: float = 0.1
    restart_horizon: float = 0.2
    restart_dt: float = 5e-4


# key path -> (attribute, caster, validator description)
_SCHEMA: dict[str, tuple[str, Any]] = {
    "alpha": ("alpha", float),
    "seed": ("seed", int),
    "outdir": ("outdir", str),
    "grid.size": ("grid_size", int),
    "family.kind": ("family_kind", str),
    "family.gamma": ("family_gamma", float),
    "family.amplitude": ("family_amplitude", float),
    "family.support_radius": ("family_support_radius", int),
    "norms.pq": ("norms_pq", _parse_pq_list),
    "norms.horizons": ("norms_horizons", _parse_float_list),
    "norms.nodes": ("norms_nodes", int),
    "jt.alphas": ("jt_alphas", _parse_float_list),
    "jt.ps": ("jt_ps", _parse_float_list),
    "jt.horizons": ("jt_horizons", _parse_float_list),
    "moments.coeffs": ("moments_coeffs", _parse_float_list),
    "moments.rs": ("moments_rs", _parse_float_list),
    "ensemble.samples": ("ensemble_samples", int),
    "ensemble.lambdas": ("ensemble_lambdas", _parse_float_list),
    "ensemble.ladder_depth": ("ensemble_ladder_depth", int),
    "ensemble.lambda_fixed": ("ensemble_lambda_fixed", float),
    "ensemble.batch": ("ensemble_batch", int),
    "solver.cutoff": ("solver_cutoff", int),
    "solver.dt": ("solver_dt", float),
    "solver.horizon": ("solver_horizon", float),
    "solver.snapshot_every": ("solver_snapshot_every", int),
    "solver.track_identity": ("solver_track_identity", _parse_bool),
    "restart.tau": ("restart_tau", float),
    "restart.horizon": ("restart_horizon", float),
    "restart.dt": ("restart_dt", float),
}


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; reject unknown keys, duplicates and bad values."""
    assignments: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if not key or not raw_value:
            raise ParseError(f"line {lineno}: empty key or value in {raw_line!r}")
        if key in assignments:
            raise ParseError(f"line {lineno}: duplicate key {key!r}")
        assignments[key] = raw_value

    cfg = RunConfig()
    for key, raw_value in assignments.items():
        if key not in _SCHEMA:
            raise ValidationError(f"unknown key {key!r}")
        attr, caster = _SCHEMA[key]
        try:
            value = caster(raw_value)
        except (ValueError, TypeError) as exc:
            raise ValidationError(f"{key}: cannot parse {raw_value!r} ({exc})") from exc
        setattr(cfg, attr, value)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.grid_size % 2:
        raise ValidationError("grid.size must be even")
    if cfg.grid_size < 4:
        raise ValidationError("grid.size must be >= 4")
    if not 0 < cfg.alpha <= 1:
        raise ValidationError("alpha must lie in (0, 1]")
    if cfg.family_kind not in ("power_law", "band_limited"):
        raise ValidationError("family.kind must be power_law or band_limited")
    if cfg.ensemble_samples < 1:
        raise ValidationError("ensemble.samples must be positive")
    if cfg.solver_dt <= 0 or cfg.solver_horizon <= 0:
        raise ValidationError("solver.dt and solver.horizon must be positive")
    if cfg.solver_cutoff < 1 or cfg.solver_cutoff > cfg.grid_size // 3:
        raise ValidationError("solver.cutoff must satisfy 1 <= N <= grid.size/3")
    if cfg.restart_tau <= 0 or cfg.restart_tau > cfg.solver_horizon:
        raise ValidationError("restart.tau must lie in (0, solver.horizon]")
    if any(d <= 0 for d in cfg.norms_horizons + cfg.jt_horizons):
        raise ValidationError("horizons must be positive")
    lam = cfg.ensemble_lambdas
    if any(b <= a for a, b in zip(lam, lam[1:])):
        raise ValidationError("ensemble.lambdas must be strictly increasing")


def config_lines(cfg: RunConfig) -> list[str]:
    """Render a config back to its text form (canonical key order)."""
    lines = []
    for key, (attr, _) in _SCHEMA.items():
        value = getattr(cfg, attr)
        if value is None:
            continue
        if isinstance(value, tuple):
            if value and isinstance(value[0], tuple):
                rendered = ", ".join(f"{p:g}:{q:g}" for p, q in value)
            else:
                rendered = ", ".join(f"{v:g}" for v in value)
        elif isinstance(value, bool):
            rendered = "true" if value else "false"
        else:
            rendered = str(value)
        lines.append(f"{key} = {rendered}")
    return lines
