"""Monte Carlo verification of the probabilistic estimates.

Everything here is an ensemble average over independent draws: moment growth
of weighted Gaussian sums, exceedance tails of randomized heat-flow norms,
and coverage of the dyadic event ladders whose unions realize the
almost-sure statements.

Members are independent with counter-derived per-member seeds, so reports
are reproducible at any batch size or parallel schedule.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from .errors import DegenerateTail, InsufficientSamples
from .heat import TimeGrid, heat_evolve, heat_multiplier, validated_time_grid
from .randomize import (
    DataFamily,
    counter_normals,
    derive_seed,
    make_data,
    pair_structure,
    symmetrize_pairs,
)
from .spectral import (
    GridSpec,
    SpectralField,
    ifftn,
    inverse_transform,
    lebesgue_norm,
    sobolev_norm,
)

TWO_PI = 2.0 * np.pi


@dataclass
class EnsembleConfig:
    """Parameters shared by the Monte Carlo experiments."""

    grid: GridSpec
    samples: int
    master_seed: int
    alpha: float
    family: DataFamily
    pq: tuple[tuple[float, float], ...] = ((3.0, 9.0), (4.0, 4.0))
    horizons: tuple[float, ...] = (1.0,)
    lambda_grid: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)
    r_grid: tuple[float, ...] = (2.0, 3.0, 4.0, 6.0, 8.0)
    ladder_depth: int = 10
    lambda_fixed: float = 1.0
    data_seed: int = 0
    time_nodes: int = 33
    batch: int = 128

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError("samples must be positive")
        lam = np.asarray(self.lambda_grid)
        if lam.size and np.any(np.diff(lam) <= 0):
            raise ValueError("lambda grid must be strictly increasing")


# ---------------------------------------------------------------------------
# moment growth


def gaussian_abs_moment(r: float) -> float:
    """E|Z|^r for Z ~ N(0,1): 2^(r/2) Gamma((r+1)/2) / sqrt(pi)."""
    return float(np.exp(0.5 * r * np.log(2.0) + gammaln((r + 1.0) / 2.0) - 0.5 * np.log(np.pi)))


def gaussian_moment_root(r: float) -> float:
    """(E|Z|^r)^(1/r), the exact L^r(Omega) norm of a standard Gaussian."""
    return gaussian_abs_moment(r) ** (1.0 / r)


def sqrt_growth_constant(r_grid) -> float:
    """max over the grid of (E|Z|^r)^(1/r) / sqrt(r): the sqrt-r growth constant."""
    return max(gaussian_moment_root(r) / np.sqrt(r) for r in r_grid)


@dataclass
class MomentTable:
    """Per-r Monte Carlo estimates of ||sum c_i h_i||_{L^r(Omega)}."""

    rows: list[tuple[float, float, float]] = field(default_factory=list)
    growth_constant: float = 0.0
    coeff_norm: float = 0.0

    HEADER = ("r", "estimate", "oracle")

    def bound(self, r: float) -> float:
        return self.growth_constant * np.sqrt(r) * self.coeff_norm

    def to_csv(self, path: str | Path) -> None:
        _write_csv(path, self.HEADER, self.rows)


def run_moment_experiment(c, r_grid, cfg: EnsembleConfig) -> MomentTable:
    """Estimate (E|X|^r)^(1/r) for X = sum c_i h_i across the r grid.

    X is exactly N(0, ||c||^2), so the Gaussian closed form serves as the
    oracle column; estimates must stay below the sqrt-r growth bound.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.size == 0 or not np.any(c):
        raise ValueError("coefficient sequence must be nonzero")
    if cfg.samples < 100:
        raise InsufficientSamples(f"{cfg.samples} samples < 100")
    h = counter_normals(cfg.master_seed, cfg.samples * c.size)
    x = h.reshape(cfg.samples, c.size) @ c
    cnorm = float(np.sqrt(np.sum(c**2)))
    table = MomentTable(growth_constant=sqrt_growth_constant(r_grid), coeff_norm=cnorm)
    ax = np.abs(x)
    for r in r_grid:
        estimate = float(np.mean(ax**r) ** (1.0 / r))
        table.rows.append((float(r), estimate, gaussian_moment_root(r) * cnorm))
    return table


# ---------------------------------------------------------------------------
# batched space-time norms across an ensemble


def _member_draw_block(grid: GridSpec, master_seed: int, members: np.ndarray) -> np.ndarray:
    """Symmetrized Gaussian draws for a block of members, shape (B, M^3)."""
    m = grid.size
    h = np.stack([counter_normals(derive_seed(master_seed, int(i)), m**3) for i in members])
    return symmetrize_pairs(h, m)


def ensemble_time_profiles(
    f: SpectralField,
    q: float,
    tgrid: TimeGrid,
    cfg: EnsembleConfig,
) -> np.ndarray:
    """||g_i(t)||_{L^q} for every member i and node t, shape (samples, nodes+1).

    Column 0 is the t = 0 value.  Member i uses the counter-derived seed
    (master_seed, i).  Spectra with few active modes are evaluated by a
    direct modal sum; dense spectra go through tiled batched transforms.
    Both paths give identical results up to roundoff.
    """
    pair_slot = _single_pair_slot(f)
    if pair_slot is not None:
        return _profiles_single_pair(f, q, tgrid, cfg, pair_slot)
    return _profiles_batched_fft(f, q, tgrid, cfg)


def _time_points(tgrid: TimeGrid) -> np.ndarray:
    return np.concatenate([[0.0], tgrid.array()])


def _half_power(sq: np.ndarray, q: float) -> np.ndarray:
    """mag**q from mag**2, with a multiplication chain for integer q."""
    if q == int(q):
        qi = int(q)
        acc = np.ones_like(sq) if qi % 2 == 0 else np.sqrt(sq)
        base = sq.copy()
        e = qi // 2
        while e:
            if e & 1:
                acc = acc * base
            e >>= 1
            if e:
                base = base * base
        return acc
    return sq ** (0.5 * q)


def _single_pair_slot(f: SpectralField) -> int | None:
    """Flat slot of the pair representative when f lives on one conjugate pair."""
    active = np.nonzero(np.any(f.coeffs != 0, axis=0).ravel())[0]
    if active.size == 0 or active.size > 2:
        return None
    rep, partner = pair_structure(f.grid.size)
    rep_flat = rep.ravel()
    slots = {int(s) if rep_flat[s] else int(partner[s]) for s in active}
    if len(slots) != 1:
        return None
    return slots.pop()


def _profiles_single_pair(f, q, tgrid, cfg, pair_slot: int) -> np.ndarray:
    """Exact 1-homogeneous path: member profiles are |h(pair)| * base profile."""
    ts = _time_points(tgrid)
    base = np.empty(ts.size)
    base[0] = lebesgue_norm(inverse_transform(f), q)
    for j, t in enumerate(ts[1:], start=1):
        base[j] = lebesgue_norm(inverse_transform(heat_evolve(f, t)), q)
    h = np.array(
        [
            counter_normals(derive_seed(cfg.master_seed, i), pair_slot + 1)[pair_slot]
            for i in range(cfg.samples)
        ]
    )
    return np.abs(h)[:, None] * base[None, :]


def _profiles_batched_fft(f, q, tgrid, cfg) -> np.ndarray:
    grid = f.grid
    m = grid.size
    ts = _time_points(tgrid)
    basehat = np.stack([f.coeffs * heat_multiplier(grid, t)[None] for t in ts])
    scale = m**3 / TWO_PI**1.5
    vol = grid.cell_volume

    # tile members x nodes so each transform stays near 4M points
    node_chunk = max(1, int(4e6 / (cfg.batch * 3 * m**3)))
    out = np.empty((cfg.samples, ts.size))
    members = np.arange(cfg.samples)
    for start in range(0, cfg.samples, cfg.batch):
        block = members[start : start + cfg.batch]
        h = _member_draw_block(grid, cfg.master_seed, block).reshape(-1, 1, 1, m, m, m)
        for j0 in range(0, ts.size, node_chunk):
            sl = slice(j0, min(j0 + node_chunk, ts.size))
            width = sl.stop - sl.start
            coeffs = (h * basehat[None, sl]).reshape(-1, m, m, m)
            phys = ifftn(coeffs).real * scale
            sq = np.sum(phys.reshape(block.size, width, 3, m, m, m) ** 2, axis=2)
            out[block, sl] = (
                np.sum(_half_power(sq, q), axis=(-3, -2, -1)) * vol
            ) ** (1.0 / q)
    return out


def _lp_time_norm(profiles: np.ndarray, nodes: np.ndarray, p: float) -> np.ndarray:
    """Trapezoid L^p-in-time norms from per-node L^q profiles (t=0 included)."""
    ts = np.concatenate([[0.0], nodes])
    return np.trapezoid(profiles**p, ts, axis=1) ** (1.0 / p)


def ensemble_norms(
    f: SpectralField, p: float, q: float, horizon: float, cfg: EnsembleConfig
) -> np.ndarray:
    """Space-time norms of the randomized heat flows, one per member.

    The quadrature grid is validated once on the base field via the
    refinement-accepted deterministic quadrature and then reused for every
    member.
    """
    tg = TimeGrid.log_spaced(horizon, cfg.time_nodes)
    accepted = validated_time_grid(f, p, q, tg)
    profiles = ensemble_time_profiles(f, q, accepted, cfg)
    return _lp_time_norm(profiles, accepted.array(), p)


# ---------------------------------------------------------------------------
# tails


def event_membership(norm_value: float, lam: float, f_norm: float) -> bool:
    """Membership in the event {norm < lam * f_norm} (strict inequality)."""
    if f_norm <= 0:
        raise ValueError("f_norm must be positive")
    if np.isinf(lam):
        return True
    return bool(norm_value < lam * f_norm)


@dataclass
class TailTable:
    """Empirical exceedance frequencies with CIs and the fitted tail slope."""

    p: float
    q: float
    horizon: float
    lambdas: np.ndarray
    freqs: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    beta_hat: float
    r_squared: float
    window: np.ndarray  # bool mask of grid points used in the fit

    HEADER = ("p", "q", "T", "lambda", "freq", "ci_lo", "ci_hi")

    def to_csv(self, path: str | Path) -> None:
        rows = [
            (self.p, self.q, self.horizon, lam, fr, lo, hi)
            for lam, fr, lo, hi in zip(self.lambdas, self.freqs, self.ci_lo, self.ci_hi)
        ]
        _write_csv(path, self.HEADER, rows)


def fit_tail_slope(
    lambdas: np.ndarray, freqs: np.ndarray, samples: int
) -> tuple[float, float, np.ndarray]:
    """Weighted LS fit of log(freq) against lambda^2 inside the fit window.

    Only frequencies in [10/samples, 0.5] enter; weights are the inverse
    delta-method variances samples * freq / (1 - freq).  Returns
    (beta_hat, weighted R^2, window mask); beta_hat is minus the slope.
    """
    lambdas = np.asarray(lambdas, dtype=np.float64)
    freqs = np.asarray(freqs, dtype=np.float64)
    window = (freqs >= 10.0 / samples) & (freqs <= 0.5)
    if np.count_nonzero(window) < 2:
        return float("nan"), float("nan"), window
    x = lambdas[window] ** 2
    y = np.log(freqs[window])
    w = samples * freqs[window] / (1.0 - freqs[window] + 1e-300)
    wsum = np.sum(w)
    xbar, ybar = np.sum(w * x) / wsum, np.sum(w * y) / wsum
    sxx = np.sum(w * (x - xbar) ** 2)
    sxy = np.sum(w * (x - xbar) * (y - ybar))
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    resid = y - (intercept + slope * x)
    ss_res = np.sum(w * resid**2)
    ss_tot = np.sum(w * (y - ybar) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    return float(-slope), float(r2), window


def run_tail_experiment(
    f: SpectralField,
    p: float,
    q: float,
    horizon: float,
    lambda_grid,
    cfg: EnsembleConfig,
) -> TailTable:
    """Empirical P(||heat flow of f^omega||_{LpLq} > lam ||f||) per lambda.

    Confidence intervals are 95% normal-approximation binomial bands; the
    subgaussian decay rate beta_hat comes from the windowed log-frequency
    regression against lambda^2.
    """
    if cfg.samples < 100:
        raise InsufficientSamples(f"{cfg.samples} samples < 100")
    lambdas = np.asarray(lambda_grid, dtype=np.float64)
    fnorm = sobolev_norm(f, -cfg.alpha)
    norms = ensemble_norms(f, p, q, horizon, cfg)
    freqs = np.array([np.mean(norms > lam * fnorm) for lam in lambdas])
    if np.all((freqs == 0.0) | (freqs == 1.0)):
        raise DegenerateTail("all exceedance frequencies are 0 or 1")
    half = 1.96 * np.sqrt(freqs * (1.0 - freqs) / cfg.samples)
    beta_hat, r2, window = fit_tail_slope(lambdas, freqs, cfg.samples)
    return TailTable(
        p=p,
        q=q,
        horizon=horizon,
        lambdas=lambdas,
        freqs=freqs,
        ci_lo=np.clip(freqs - half, 0.0, 1.0),
        ci_hi=np.clip(freqs + half, 0.0, 1.0),
        beta_hat=beta_hat,
        r_squared=r2,
        window=window,
    )


# ---------------------------------------------------------------------------
# coverage ladders


@dataclass
class CoverageReport:
    """Empirical coverage of the dyadic event unions as the ladders deepen.

    lambda_ladder[j]: fraction with norm over the fixed horizon below
    2^j ||f||.  delta_ladder[i]: fraction with norm over horizon 2^-i below
    lambda_fixed ||f||.  joint[d]: fraction covered by the union over
    i <= d of {both conditions at horizon 2^-i with the lambda union at
    depth d}.
    """

    depths: np.ndarray
    lambda_ladder: np.ndarray
    delta_ladder: np.ndarray
    joint: np.ndarray

    HEADER = ("ladder", "J", "fraction")

    def to_csv(self, path: str | Path) -> None:
        rows = []
        for name, fr in (
            ("lambda", self.lambda_ladder),
            ("delta", self.delta_ladder),
            ("joint", self.joint),
        ):
            rows.extend((name, int(j), f) for j, f in zip(self.depths, fr))
        _write_csv(path, self.HEADER, rows)


def coverage_study(cfg: EnsembleConfig) -> CoverageReport:
    """Coverage fractions of the almost-sure event ladders.

    Uses cfg.pq[0] for the growing-lambda ladder at the fixed unit horizon
    and cfg.pq[1] for the shrinking-horizon ladder at lambda_fixed.  The
    shrinking-horizon ladder requires alpha * p < 2 strictly so that the
    tail bound improves as the horizon shrinks.
    """
    if cfg.samples < 100:
        raise InsufficientSamples(f"{cfg.samples} samples < 100")
    if len(cfg.pq) < 2:
        raise ValueError("coverage study needs two (p, q) pairs")
    (p1, q1), (p2, q2) = cfg.pq[0], cfg.pq[1]
    if cfg.alpha * p2 >= 2.0:
        raise ValueError(
            "shrinking-horizon ladder needs alpha * p < 2 for its second pair"
        )
    f = make_data(cfg.grid, cfg.family, cfg.alpha, cfg.data_seed)
    fnorm = sobolev_norm(f, -cfg.alpha)
    depths = np.arange(cfg.ladder_depth + 1)
    deltas = 2.0 ** (-depths)
    horizon = 1.0

    # master node set: log-spaced with every ladder horizon included
    base = np.geomspace(min(deltas) * 1e-3, horizon, 48 + 8 * cfg.ladder_depth)
    nodes = np.unique(np.concatenate([base, deltas]))
    tg = TimeGrid(tuple(nodes), "log_spaced", horizon)

    prof1 = ensemble_time_profiles(f, q1, tg, cfg)
    prof2 = ensemble_time_profiles(f, q2, tg, cfg)
    ts = np.concatenate([[0.0], nodes])
    cum1 = _cumulative_lp(prof1, ts, p1)
    cum2 = _cumulative_lp(prof2, ts, p2)
    idx = np.searchsorted(ts, deltas)
    norm1_at_delta = cum1[:, idx]  # (samples, depths)
    norm2_at_delta = cum2[:, idx]
    norm1_full = cum1[:, -1]

    lam = 2.0**depths
    lambda_ladder = np.array([np.mean(norm1_full < l * fnorm) for l in lam])
    delta_ladder = np.array(
        [np.mean(norm2_at_delta[:, i] < cfg.lambda_fixed * fnorm) for i in range(depths.size)]
    )
    joint = np.empty(depths.size)
    for d in range(depths.size):
        ok2 = norm2_at_delta[:, : d + 1] < cfg.lambda_fixed * fnorm
        ok1 = norm1_at_delta[:, : d + 1] < lam[d] * fnorm
        joint[d] = np.mean(np.any(ok2 & ok1, axis=1))
    return CoverageReport(depths, lambda_ladder, delta_ladder, joint)


def _cumulative_lp(profiles: np.ndarray, ts: np.ndarray, p: float) -> np.ndarray:
    """Running L^p-in-time norms over [0, t] at every node (t=0 column dropped)."""
    integrand = profiles**p
    seg = 0.5 * (integrand[:, 1:] + integrand[:, :-1]) * np.diff(ts)[None, :]
    return np.cumsum(seg, axis=1) ** (1.0 / p)


# ---------------------------------------------------------------------------
# aggregate report


@dataclass
class EnsembleReport:
    """Bundle of the harness outputs for one configuration."""

    config: EnsembleConfig
    moments: MomentTable | None = None
    tails: list[TailTable] = field(default_factory=list)
    coverage: CoverageReport | None = None

    def write(self, outdir: str | Path) -> list[Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        written = []
        if self.moments is not None:
            path = outdir / "moments.csv"
            self.moments.to_csv(path)
            written.append(path)
        if self.tails:
            path = outdir / "tails.csv"
            rows = []
            for t in self.tails:
                for lam, fr, lo, hi in zip(t.lambdas, t.freqs, t.ci_lo, t.ci_hi):
                    rows.append((t.p, t.q, t.horizon, lam, fr, lo, hi))
            _write_csv(path, TailTable.HEADER, rows)
            written.append(path)
        if self.coverage is not None:
            path = outdir / "coverage.csv"
            self.coverage.to_csv(path)
            written.append(path)
        return written


def _write_csv(path: str | Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row]
            )
