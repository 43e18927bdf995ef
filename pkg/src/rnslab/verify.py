"""Invariant suite: fast structural checks runnable on a fresh checkout.

Each check is a named callable that raises AssertionError on failure; the
runner prints one line per invariant and reports the failure count.  The
suite covers the exact identities the package is built on, at small grid
sizes so the whole run stays under a minute.
"""

from __future__ import annotations

import time

import numpy as np

from . import snapshots
from .heat import (
    TimeGrid,
    envelope_constant,
    heat_evolve,
    lp_heat_envelope,
    time_scaling_exponent,
)
from .ensemble import EnsembleConfig, gaussian_moment_root, run_moment_experiment
from .randomize import DataFamily, draw_gaussians, make_data, randomize
from .solver import (
    SolverConfig,
    cancellation_check,
    holder_interpolation_check,
    negative_interpolation_check,
    solve,
)
from .spectral import (
    GridSpec,
    SpectralField,
    band_projector,
    divergence,
    forward_transform,
    inverse_transform,
    lebesgue_norm,
    leray_project,
    smooth_cutoff,
    sobolev_norm,
    white_noise_field,
)


def _check_transform_roundtrip() -> None:
    grid = GridSpec(16)
    F = white_noise_field(grid, 101)
    back = forward_transform(inverse_transform(F))
    scale = max(np.max(np.abs(F.coeffs)), 1e-300)
    assert np.max(np.abs(back.coeffs - F.coeffs)) <= 1e-12 * scale


def _check_projector() -> None:
    grid = GridSpec(16)
    F = white_noise_field(grid, 102)
    P = leray_project(F)
    assert np.max(np.abs(leray_project(P).coeffs - P.coeffs)) <= 1e-12 * P.l2()
    assert np.max(np.abs(divergence(P))) <= 1e-12 * P.l2()
    assert P.is_hermitian()


def _check_telescoping() -> None:
    grid = GridSpec(16)
    F = white_noise_field(grid, 103)
    recon = smooth_cutoff(F, 1).coeffs.copy()
    scale = 2
    while scale <= 2 * grid.size:
        recon = recon + band_projector(F, scale).coeffs
        scale *= 2
    assert np.max(np.abs(recon - F.coeffs)) <= 1e-12 * max(np.max(np.abs(F.coeffs)), 1e-300)


def _check_plancherel() -> None:
    grid = GridSpec(16)
    F = white_noise_field(grid, 104, mean_zero=True)
    a = lebesgue_norm(inverse_transform(F), 2.0)
    b = sobolev_norm(F, 0.0)
    assert abs(a - b) <= 1e-10 * max(b, 1e-300)


def _check_heat_semigroup() -> None:
    grid = GridSpec(8)
    F = white_noise_field(grid, 105)
    one = heat_evolve(F, 0.3)
    two = heat_evolve(heat_evolve(F, 0.1), 0.2)
    assert np.max(np.abs(one.coeffs - two.coeffs)) <= 1e-12 * max(np.max(np.abs(F.coeffs)), 1e-300)
    single = heat_evolve(F, 0.25)
    expected = F.coeffs * np.exp(-0.25 * grid.k_sq)[None]
    assert np.max(np.abs(single.coeffs - expected)) <= 1e-13


def _check_randomizer() -> None:
    grid = GridSpec(8)
    f = make_data(grid, DataFamily("power_law", gamma=2.0), 0.5, seed=7)
    d1 = draw_gaussians(grid, 99)
    d2 = draw_gaussians(grid, 99)
    assert np.array_equal(d1.values, d2.values)
    rd = randomize(f, d1)
    assert rd.randomized.is_hermitian()
    assert np.max(np.abs(divergence(rd.randomized))) <= 1e-12 * max(rd.randomized.l2(), 1e-300)
    assert np.max(np.abs(rd.randomized.mean_mode())) == 0.0


def _check_envelope_scaling() -> None:
    for alpha, p in ((0.5, 3.0), (0.25, 4.0)):
        sigma = time_scaling_exponent(p, alpha)
        vals = [lp_heat_envelope(T, alpha, p) / T**sigma for T in (1e-2, 1.0, 1e2)]
        assert max(vals) - min(vals) <= 1e-6 * max(vals)
    assert abs(lp_heat_envelope(3.7, 0.5, 4.0) - 1.0) <= 1e-10
    assert abs(envelope_constant(0.5, 4.0) - 1.0) <= 1e-10


def _check_moment_growth() -> None:
    grid = GridSpec(8)
    cfg = EnsembleConfig(
        grid=grid,
        samples=20000,
        master_seed=5150,
        alpha=0.5,
        family=DataFamily("band_limited", support_radius=1),
    )
    table = run_moment_experiment([0.6, 0.8], (2.0, 4.0, 8.0), cfg)
    for r, estimate, oracle in table.rows:
        assert abs(estimate - oracle) <= 0.05 * oracle
        assert estimate <= 1.05 * table.bound(r)


def _check_cancellation_and_interpolation() -> None:
    grid = GridSpec(16)
    v = leray_project(white_noise_field(grid, 106, band=4.0))
    scale = v.l2() * max(sobolev_norm(v, 1.0), 1e-300) ** 2
    assert cancellation_check(v) <= 1e-10 * scale
    assert holder_interpolation_check(v).passed
    assert negative_interpolation_check(v).passed


def _check_zero_forcing_fixed_point() -> None:
    grid = GridSpec(8)
    zero = SpectralField.zero(grid)
    rd = randomize(zero, draw_gaussians(grid, 1))
    cfg = SolverConfig(grid=grid, data=rd, cutoff=2, dt=1e-3, horizon=5e-3)
    traj, ledger = solve(cfg)
    assert all(np.all(f.coeffs == 0) for f in traj.fields)
    assert ledger.E_v[0] == 0.0 and ledger.E_v[-1] == 0.0


def _check_snapshot_roundtrip() -> None:
    import os
    import tempfile

    grid = GridSpec(8)
    F = white_noise_field(grid, 107)
    fd, path = tempfile.mkstemp(suffix=".rns1")
    os.close(fd)
    try:
        snapshots.write_snapshot(path, F)
        back = snapshots.read_snapshot(path)
        assert np.array_equal(back.coeffs, F.coeffs)
        snapshots.write_snapshot(path, F)
        second = open(path, "rb").read()
        snapshots.write_snapshot(path, F)
        assert open(path, "rb").read() == second
    finally:
        os.unlink(path)


CHECKS = (
    ("transform-roundtrip", "inverse then forward transform is the identity", _check_transform_roundtrip),
    ("projector-idempotent-divfree", "projection squares to itself and kills divergence", _check_projector),
    ("shell-telescoping", "low-pass plus dyadic shells reconstruct the identity", _check_telescoping),
    ("plancherel", "grid quadrature L2 equals the coefficient L2", _check_plancherel),
    ("heat-semigroup", "per-mode heat decay is exact and composes", _check_heat_semigroup),
    ("randomizer-structure", "draws are reproducible and preserve field structure", _check_randomizer),
    ("envelope-scaling-law", "horizon envelope factorizes with the stated exponent", _check_envelope_scaling),
    ("moment-growth", "Gaussian sum moments match closed forms under sqrt-r growth", _check_moment_growth),
    ("cancellation-interpolation", "transport integrals vanish; interpolation inequalities hold", _check_cancellation_and_interpolation),
    ("zero-forcing-fixed-point", "zero data keeps the difference field identically zero", _check_zero_forcing_fixed_point),
    ("snapshot-roundtrip", "binary snapshots are byte-stable and lossless", _check_snapshot_roundtrip),
)


def run_suite(stream=None) -> int:
    """Run every invariant; print one line each; return the failure count."""
    failures = 0
    for name, description, check in CHECKS:
        start = time.time()
        try:
            check()
        except Exception as exc:  # noqa: BLE001 - report any failure mode
            failures += 1
            print(f"FAIL {name}: {description} [{exc!r}]", file=stream)
        else:
            print(f"PASS {name}: {description} ({time.time() - start:.2f}s)", file=stream)
    return failures
