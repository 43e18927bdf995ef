"""Command-line entry point: experiment orchestration and report emission.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(blow-up or unconverged quadrature), 4 invariant-suite failure.

All outputs land under the configured directory together with a manifest
(same key-value grammar as the input config) recording the tool version,
the full configuration, the seeds and the generator identifiers, which is
sufficient to reproduce every file bit for bit.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import RunConfig, config_lines, parse_config
from .ensemble import (
    EnsembleConfig,
    coverage_study,
    run_moment_experiment,
    run_tail_experiment,
)
from .errors import (
    DegenerateTail,
    InsufficientSamples,
    NonFiniteState,
    ParseError,
    RnslabError,
    UnconvergedQuadrature,
    ValidationError,
)
from .heat import (
    NormTable,
    TimeGrid,
    envelope_table,
    envelope_table_to_csv,
    heat_lplq,
    heat_evolve,
)
from .randomize import RNG_ID, TRANSFORM_ID, DataFamily, draw_gaussians, make_data, randomize
from .snapshots import write_snapshot
from .solver import SolverConfig, energy_identity_residual, restart_full_nse, solve
from .spectral import GridSpec, sobolev_norm
from .verify import run_suite

SUBCOMMANDS = (
    "gen",
    "heat-norms",
    "jt-table",
    "mc-tail",
    "mc-moments",
    "coverage",
    "solve",
    "restart",
    "energy-report",
    "verify",
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INVARIANT = 4


def _family(cfg: RunConfig) -> DataFamily:
    if cfg.family_kind == "band_limited":
        return DataFamily(
            "band_limited",
            amplitude=cfg.family_amplitude,
            support_radius=cfg.family_support_radius,
        )
    return DataFamily("power_law", amplitude=cfg.family_amplitude, gamma=cfg.family_gamma)


def _randomized(cfg: RunConfig):
    grid = GridSpec(cfg.grid_size)
    f = make_data(grid, _family(cfg), cfg.alpha, cfg.seed)
    draw = draw_gaussians(grid, cfg.seed)
    return grid, f, randomize(f, draw)


def _ensemble_config(cfg: RunConfig, grid: GridSpec) -> EnsembleConfig:
    return EnsembleConfig(
        grid=grid,
        samples=cfg.ensemble_samples,
        master_seed=cfg.seed,
        alpha=cfg.alpha,
        family=_family(cfg),
        pq=cfg.norms_pq,
        horizons=cfg.norms_horizons,
        lambda_grid=cfg.ensemble_lambdas,
        r_grid=cfg.moments_rs,
        ladder_depth=cfg.ensemble_ladder_depth,
        lambda_fixed=cfg.ensemble_lambda_fixed,
        data_seed=cfg.seed,
        time_nodes=cfg.norms_nodes,
        batch=cfg.ensemble_batch,
    )


def _write_manifest(outdir: Path, cfg: RunConfig, subcommand: str, extra: dict | None = None) -> None:
    lines = [
        f"tool.version = {__version__}",
        f"tool.subcommand = {subcommand}",
        f"tool.numpy = {np.__version__}",
        f"tool.scipy = {scipy.__version__}",
        f"tool.timestamp = {datetime.now(timezone.utc).isoformat()}",
        f"rng.generator = {RNG_ID}",
        f"rng.transform = {TRANSFORM_ID}",
    ]
    lines.extend(config_lines(cfg))
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {value}")
    (outdir / "manifest.txt").write_text("\n".join(lines) + "\n")


def _cmd_gen(cfg: RunConfig, outdir: Path) -> int:
    grid, f, rd = _randomized(cfg)
    write_snapshot(outdir / "base.rns1", f)
    write_snapshot(outdir / "randomized.rns1", rd.randomized)
    _write_manifest(
        outdir,
        cfg,
        "gen",
        {
            "data.base_norm": repr(sobolev_norm(f, -cfg.alpha)),
            "data.randomized_norm": repr(sobolev_norm(rd.randomized, -cfg.alpha)),
        },
    )
    return EXIT_OK


def _cmd_heat_norms(cfg: RunConfig, outdir: Path) -> int:
    grid, f, rd = _randomized(cfg)
    table = NormTable()
    for p, q in cfg.norms_pq:
        for horizon in cfg.norms_horizons:
            tg = TimeGrid.log_spaced(horizon, cfg.norms_nodes)
            value = heat_lplq(rd.randomized, p, q, tg)
            table.append(cfg.alpha, p, q, horizon, cfg.seed, value)
    table.to_csv(outdir / "normtable.csv")
    _write_manifest(outdir, cfg, "heat-norms")
    return EXIT_OK


def _cmd_jt_table(cfg: RunConfig, outdir: Path) -> int:
    rows = envelope_table(cfg.jt_alphas, cfg.jt_ps, cfg.jt_horizons)
    envelope_table_to_csv(rows, outdir / "jt.csv")
    from .heat import lattice_lp_heat_envelope

    with open(outdir / "jt_lattice.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("alpha", "p", "T", "J_lattice"))
        for alpha in cfg.jt_alphas:
            for p in cfg.jt_ps:
                if alpha * p > 2.0 + 1e-12:
                    continue
                for horizon in cfg.jt_horizons:
                    writer.writerow(
                        [
                            repr(float(alpha)),
                            repr(float(p)),
                            repr(float(horizon)),
                            repr(lattice_lp_heat_envelope(horizon, alpha, p)),
                        ]
                    )
    _write_manifest(outdir, cfg, "jt-table")
    return EXIT_OK


def _cmd_mc_tail(cfg: RunConfig, outdir: Path) -> int:
    grid, f, _ = _randomized(cfg)
    ecfg = _ensemble_config(cfg, grid)
    rows = []
    fits = []
    for p, q in cfg.norms_pq:
        for horizon in cfg.norms_horizons:
            table = run_tail_experiment(f, p, q, horizon, cfg.ensemble_lambdas, ecfg)
            fits.append((p, q, horizon, table.beta_hat, table.r_squared))
            for lam, fr, lo, hi in zip(table.lambdas, table.freqs, table.ci_lo, table.ci_hi):
                rows.append((p, q, horizon, lam, fr, lo, hi))
    with open(outdir / "tails.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("p", "q", "T", "lambda", "freq", "ci_lo", "ci_hi"))
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
    extra = {
        f"fit.p{p:g}q{q:g}T{T:g}.beta_hat": repr(b)
        for p, q, T, b, _ in fits
    }
    extra.update(
        {f"fit.p{p:g}q{q:g}T{T:g}.r_squared": repr(r) for p, q, T, _, r in fits}
    )
    _write_manifest(outdir, cfg, "mc-tail", extra)
    return EXIT_OK


def _cmd_mc_moments(cfg: RunConfig, outdir: Path) -> int:
    grid = GridSpec(cfg.grid_size)
    ecfg = _ensemble_config(cfg, grid)
    table = run_moment_experiment(cfg.moments_coeffs, cfg.moments_rs, ecfg)
    table.to_csv(outdir / "moments.csv")
    _write_manifest(outdir, cfg, "mc-moments", {"moments.coeff_norm": repr(table.coeff_norm)})
    return EXIT_OK


def _cmd_coverage(cfg: RunConfig, outdir: Path) -> int:
    grid = GridSpec(cfg.grid_size)
    ecfg = _ensemble_config(cfg, grid)
    report = coverage_study(ecfg)
    report.to_csv(outdir / "coverage.csv")
    _write_manifest(outdir, cfg, "coverage")
    return EXIT_OK


def _solver_config(cfg: RunConfig, grid, rd) -> SolverConfig:
    return SolverConfig(
        grid=grid,
        data=rd,
        cutoff=cfg.solver_cutoff,
        dt=cfg.solver_dt,
        horizon=cfg.solver_horizon,
        alpha=cfg.alpha,
        snapshot_every=cfg.solver_snapshot_every,
        track_identity=cfg.solver_track_identity,
    )


def _cmd_solve(cfg: RunConfig, outdir: Path) -> int:
    grid, f, rd = _randomized(cfg)
    scfg = _solver_config(cfg, grid, rd)
    try:
        traj, ledger = solve(scfg)
    except NonFiniteState as exc:
        ledger_path = outdir / "ledger.csv"
        _write_manifest(outdir, cfg, "solve", {"status": f"blowup: {exc}"})
        raise
    ledger.to_csv(outdir / "ledger.csv")
    for t, fld in zip(traj.times, traj.fields):
        write_snapshot(outdir / f"v_{t:012.6f}.rns1", fld)
    _write_manifest(outdir, cfg, "solve", {"status": "completed"})
    return EXIT_OK


def _cmd_restart(cfg: RunConfig, outdir: Path) -> int:
    grid, f, rd = _randomized(cfg)
    scfg = _solver_config(cfg, grid, rd)
    pre = SolverConfig(
        grid=grid,
        data=rd,
        cutoff=cfg.solver_cutoff,
        dt=cfg.solver_dt,
        horizon=cfg.restart_tau,
        alpha=cfg.alpha,
        snapshot_every=max(1, int(round(cfg.restart_tau / cfg.solver_dt))),
        track_identity=False,
    )
    traj, _ = solve(pre)
    tau = traj.times[-1]
    v_tau = traj.fields[-1]
    u_tau = v_tau.with_coeffs(v_tau.coeffs + heat_evolve(rd.randomized, tau).coeffs)
    rcfg = SolverConfig(
        grid=grid,
        data=rd,
        cutoff=cfg.solver_cutoff,
        dt=cfg.restart_dt,
        horizon=cfg.restart_horizon,
        alpha=cfg.alpha,
        snapshot_every=cfg.solver_snapshot_every,
        track_identity=False,
    )
    rtraj, rledger = restart_full_nse(u_tau, rcfg)
    rledger.to_csv(outdir / "restart_ledger.csv")
    write_snapshot(outdir / "u_tau.rns1", u_tau)
    margin = float(np.max(rledger.margins()))
    _write_manifest(outdir, cfg, "restart", {"restart.max_margin": repr(margin)})
    return EXIT_OK


def _cmd_energy_report(cfg: RunConfig, outdir: Path) -> int:
    grid, f, rd = _randomized(cfg)
    residuals = {}
    for label, dt in (("dt", cfg.solver_dt), ("dt_half", cfg.solver_dt / 2)):
        scfg = SolverConfig(
            grid=grid,
            data=rd,
            cutoff=cfg.solver_cutoff,
            dt=dt,
            horizon=cfg.solver_horizon,
            alpha=cfg.alpha,
            snapshot_every=cfg.solver_snapshot_every,
        )
        traj, ledger = solve(scfg)
        ledger.to_csv(outdir / f"ledger_{label}.csv")
        residuals[label] = float(abs(energy_identity_residual(traj)[-1]))
    ratio = residuals["dt"] / max(residuals["dt_half"], 1e-300)
    _write_manifest(
        outdir,
        cfg,
        "energy-report",
        {
            "energy.residual_dt": repr(residuals["dt"]),
            "energy.residual_dt_half": repr(residuals["dt_half"]),
            "energy.richardson_ratio": repr(ratio),
        },
    )
    return EXIT_OK


def _cmd_verify(cfg: RunConfig, outdir: Path) -> int:
    failures = run_suite()
    return EXIT_INVARIANT if failures else EXIT_OK


_DISPATCH = {
    "gen": _cmd_gen,
    "heat-norms": _cmd_heat_norms,
    "jt-table": _cmd_jt_table,
    "mc-tail": _cmd_mc_tail,
    "mc-moments": _cmd_mc_moments,
    "coverage": _cmd_coverage,
    "solve": _cmd_solve,
    "restart": _cmd_restart,
    "energy-report": _cmd_energy_report,
    "verify": _cmd_verify,
}


def dispatch(subcommand: str, cfg: RunConfig, outdir: str | Path | None = None) -> int:
    """Run one subcommand; returns the process exit code."""
    if subcommand not in _DISPATCH:
        raise ValidationError(f"unknown subcommand {subcommand!r}")
    out = Path(outdir or cfg.outdir or os.environ.get("RNSLAB_OUTDIR", "rnslab_out"))
    out.mkdir(parents=True, exist_ok=True)
    return _DISPATCH[subcommand](cfg, out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rnslab",
        description="Pseudo-spectral laboratory for randomized rough-data flows",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("-c", "--config", help="path to a key-value config file")
    parser.add_argument("-o", "--outdir", help="output directory (default: $RNSLAB_OUTDIR or ./rnslab_out)")
    args = parser.parse_args(argv)

    try:
        text = Path(args.config).read_text() if args.config else ""
        cfg = parse_config(text)
    except (ParseError, ValidationError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        return dispatch(args.subcommand, cfg, args.outdir)
    except (ParseError, ValidationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonFiniteState, UnconvergedQuadrature, DegenerateTail, InsufficientSamples) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RnslabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
