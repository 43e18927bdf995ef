"""Truncated Galerkin integration of the nonlinear difference field.

The unknown v is the solution minus its linear heat part g: it starts at
zero and is forced through quadratic interactions with g.  The integrated
system is the smooth frequency truncation of

    dv/dt = Lap P^2 v - Leray div( Pv x Pv + Pv x g + g x Pv + g x g )

restricted to the dealiased band, with P the smooth low-pass at scale N.
The linear multiplier is applied exactly (integrating-factor RK4), products
are formed pseudo-spectrally under the 2/3 rule, and g is evaluated exactly
at every stage time.

Because the low-pass and dealias multipliers are self-adjoint, the discrete
system inherits the exact energy cancellations of the continuum equations:
with w = Pv (dealiased) and gd the dealiased g,

    ||v(t)||^2 + 2 int_0^t ||grad w||^2
        = 2 int_0^t int ( grad w : (gd x w) + grad w : (gd x gd) ) dx ds

holds up to time-quadrature and stepping error; the ledger tracks the
residual of this identity alongside the plain energy functional
E(v, t) = ||v(t)||^2 + int_0^t ||grad v||^2.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import (
    FrequencyOverflow,
    NonFiniteState,
    StabilityWarning,
    StateInvariantViolation,
)
from .heat import heat_multiplier
from .randomize import RandomizedData
from .spectral import (
    TWO_PI,
    GridSpec,
    SpectralField,
    fftn,
    ifftn,
    smooth_cutoff_multiplier,
    sobolev_norm,
)

# (j, k) index pairs of the symmetric tensor s_j s_k in packed order
_SYM_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
# packed slot of (j, k) for the contraction sum_k n_k T[j, k]
_SYM_SLOT = {(0, 0): 0, (0, 1): 1, (0, 2): 2, (1, 0): 1, (1, 1): 3, (1, 2): 4, (2, 0): 2, (2, 1): 4, (2, 2): 5}


@dataclass
class SolverConfig:
    """Run parameters for the truncated system."""

    grid: GridSpec
    data: RandomizedData | None
    cutoff: int
    dt: float
    horizon: float
    alpha: float = 0.5
    dealias: str = "two_thirds"
    integrator: str = "if_rk4"
    snapshot_every: int = 1
    include_nonlinear: bool = True
    track_identity: bool = True

    def __post_init__(self) -> None:
        if self.dt <= 0 or self.horizon <= 0:
            raise ValueError("dt and horizon must be positive")
        if self.cutoff < 1 or self.cutoff > self.grid.size // 3:
            raise ValueError("cutoff must satisfy 1 <= N <= M/3")
        if self.dealias != "two_thirds":
            raise ValueError("only two_thirds dealiasing is implemented")
        if self.integrator not in ("if_rk4", "picard"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")
        if self.data is not None and self.data.randomized.grid != self.grid:
            raise ValueError("data grid does not match solver grid")


class _Operators:
    """Per-config multiplier arrays shared by the stepper."""

    def __init__(self, cfg: SolverConfig):
        if cfg.data is None:
            raise ValueError("this operation requires forcing data in the config")
        grid = cfg.grid
        self.grid = grid
        self.n = grid.wavenumbers
        self.ksq = grid.k_sq
        self.rho = smooth_cutoff_multiplier(grid, cfg.cutoff)
        self.dealias = grid.dealias_mask.astype(np.float64)
        self.lin = -self.ksq * self.rho**2
        ksq_safe = self.ksq.copy()
        ksq_safe[0, 0, 0] = 1.0
        self.n_over_ksq = self.n / ksq_safe[None]
        self.fwd_scale = TWO_PI**1.5 / grid.size**3
        self.inv_scale = grid.size**3 / TWO_PI**1.5
        self.fhat = cfg.data.randomized.coeffs

    def g_hat(self, t: float) -> np.ndarray:
        return self.fhat * heat_multiplier(self.grid, t)[None]


def _get_operators(cfg: SolverConfig) -> _Operators:
    ops = getattr(cfg, "_ops", None)
    if ops is None:
        ops = _Operators(cfg)
        object.__setattr__(cfg, "_ops", ops)
    return ops


def _nonlinear_tendency(
    vhat: np.ndarray, t: float, cfg: SolverConfig, ops: _Operators, speed_out: list | None = None
) -> np.ndarray:
    """-Leray rho D i n . F[(s x s)] with s = dealiased (Pv + g)."""
    mask = ops.dealias[None]
    w_hat = vhat * ops.rho[None] * mask
    s_hat = w_hat + ops.g_hat(t) * mask
    s = ifftn(s_hat).real * ops.inv_scale
    if speed_out is not None:
        speed_out.append(float(np.max(np.abs(s))))
    prods = np.stack([s[j] * s[k] for j, k in _SYM_PAIRS])
    that = fftn(prods) * ops.fwd_scale
    div = np.stack(
        [
            1j
            * (
                ops.n[0] * that[_SYM_SLOT[(j, 0)]]
                + ops.n[1] * that[_SYM_SLOT[(j, 1)]]
                + ops.n[2] * that[_SYM_SLOT[(j, 2)]]
            )
            for j in range(3)
        ]
    )
    div *= (ops.rho * ops.dealias)[None]
    ndotu = np.einsum("cxyz,cxyz->xyz", ops.n, div)
    proj = div - ops.n_over_ksq * ndotu[None]
    proj[:, 0, 0, 0] = div[:, 0, 0, 0]
    return -proj


def assemble_rhs(vhat: SpectralField | np.ndarray, t: float, cfg: SolverConfig) -> np.ndarray:
    """Full spectral tendency: exact linear part plus the projected nonlinearity."""
    arr = vhat.coeffs if isinstance(vhat, SpectralField) else vhat
    if not np.all(np.isfinite(arr)):
        raise StateInvariantViolation("state contains non-finite coefficients")
    if np.any(arr[:, 0, 0, 0] != 0):
        raise StateInvariantViolation("state mean mode must vanish")
    ops = _get_operators(cfg)
    out = ops.lin[None] * arr
    if cfg.include_nonlinear:
        out = out + _nonlinear_tendency(arr, t, cfg, ops)
    return out


# ---------------------------------------------------------------------------
# energy ledger


@dataclass
class EnergyLedger:
    """Time series of the energy bookkeeping for one run.

    cum_dissipation integrates ||grad v||^2 (plain energy functional);
    the identity residual uses the smoothed dissipation ||grad Pv||^2 and
    the smoothed right-hand side, both carried internally.
    """

    t: list = dc_field(default_factory=list)
    l2sq_v: list = dc_field(default_factory=list)
    cum_dissipation: list = dc_field(default_factory=list)
    E_v: list = dc_field(default_factory=list)
    E_u: list = dc_field(default_factory=list)
    rhs_identity: list = dc_field(default_factory=list)
    residual: list = dc_field(default_factory=list)
    cum_dissipation_smoothed: list = dc_field(default_factory=list)
    _prev: dict = dc_field(default_factory=dict)

    HEADER = ("t", "l2sq_v", "cum_dissipation", "E_v", "E_u", "rhs_identity", "residual")

    def append(
        self,
        t: float,
        l2sq_v: float,
        grad_sq_v: float,
        grad_sq_w: float,
        l2sq_u: float,
        grad_sq_u: float,
        rhs_integrand: float,
    ) -> None:
        if not self.t:
            cum_v = cum_w = cum_u = rhs = 0.0
        else:
            dt = t - self.t[-1]
            cum_v = self.cum_dissipation[-1] + 0.5 * dt * (self._prev["gv"] + grad_sq_v)
            cum_w = self.cum_dissipation_smoothed[-1] + 0.5 * dt * (
                self._prev["gw"] + grad_sq_w
            )
            cum_u = self._prev["cum_u"] + 0.5 * dt * (self._prev["gu"] + grad_sq_u)
            rhs = self.rhs_identity[-1] + 0.5 * dt * (self._prev["rhs"] + rhs_integrand)
        self.t.append(t)
        self.l2sq_v.append(l2sq_v)
        self.cum_dissipation.append(cum_v)
        self.cum_dissipation_smoothed.append(cum_w)
        self.E_v.append(l2sq_v + cum_v)
        self.E_u.append(l2sq_u + cum_u)
        self.rhs_identity.append(rhs)
        raw = l2sq_v + 2.0 * cum_w - rhs
        self.residual.append(raw / max(self.E_v[-1], 1e-30))
        self._prev = {
            "gv": grad_sq_v,
            "gw": grad_sq_w,
            "gu": grad_sq_u,
            "cum_u": cum_u,
            "rhs": rhs_integrand,
        }

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.HEADER)
            for i in range(len(self.t)):
                writer.writerow(
                    [
                        repr(float(col[i]))
                        for col in (
                            self.t,
                            self.l2sq_v,
                            self.cum_dissipation,
                            self.E_v,
                            self.E_u,
                            self.rhs_identity,
                            self.residual,
                        )
                    ]
                )


@dataclass
class SolverState:
    """Current time, spectral unknown and the accumulating ledger."""

    t: float
    vhat: SpectralField
    ledger: EnergyLedger


@dataclass
class Trajectory:
    """Snapshots of the unknown along a run, with the producing config."""

    cfg: SolverConfig
    times: list = dc_field(default_factory=list)
    fields: list = dc_field(default_factory=list)

    def store(self, t: float, vhat: SpectralField) -> None:
        self.times.append(t)
        self.fields.append(vhat)


def _spectral_sums(ops: _Operators, vhat: np.ndarray, t: float) -> tuple:
    """Plancherel sums entering the ledger at one instant."""
    asq = np.sum(np.abs(vhat) ** 2, axis=0)
    l2sq_v = float(np.sum(asq))
    grad_sq_v = float(np.sum(ops.ksq * asq))
    grad_sq_w = float(np.sum(ops.ksq * ops.rho**2 * ops.dealias * asq))
    ghat = ops.g_hat(t)
    usq = np.sum(np.abs(vhat + ghat) ** 2, axis=0)
    l2sq_u = float(np.sum(usq))
    grad_sq_u = float(np.sum(ops.ksq * usq))
    return l2sq_v, grad_sq_v, grad_sq_w, l2sq_u, grad_sq_u


def _identity_integrand(ops: _Operators, vhat: np.ndarray, t: float) -> float:
    """2 int ( grad w : (gd x w) + grad w : (gd x gd) ) dx at time t."""
    mask = ops.dealias[None]
    w_hat = vhat * ops.rho[None] * mask
    gd_hat = ops.g_hat(t) * mask
    w = ifftn(w_hat).real * ops.inv_scale
    gd = ifftn(gd_hat).real * ops.inv_scale
    grad_w = ifftn(1j * ops.n[None, :] * w_hat[:, None]).real * ops.inv_scale
    # grad_w[j, k] = d_k w_j; contract against gd_j * (w_k + gd_k)
    total = 0.0
    for j in range(3):
        for k in range(3):
            total += np.sum(grad_w[j, k] * gd[j] * (w[k] + gd[k]))
    return 2.0 * float(total) * ops.grid.cell_volume


def step(state: SolverState, cfg: SolverConfig) -> SolverState:
    """One integrating-factor RK4 step; ledger extended at the new time.

    The stiff linear multiplier is applied exactly through exp(lin * dt);
    only the projected nonlinearity is integrated by the RK4 stages, with g
    evaluated exactly at t, t + dt/2 and t + dt.
    """
    ops = _get_operators(cfg)
    dt = cfg.dt
    t = state.t
    v = state.vhat.coeffs

    e_half = np.exp(ops.lin * (dt / 2.0))[None]
    e_full = e_half * e_half

    if cfg.include_nonlinear:
        speed: list = []
        k1 = _nonlinear_tendency(v, t, cfg, ops, speed_out=speed)
        kmax = np.sqrt(3.0) * ((cfg.grid.size - 1) // 3)
        if speed[0] > 0 and dt > 1.0 / (kmax * speed[0]):
            warnings.warn(
                f"dt = {dt} exceeds the advective stability estimate "
                f"{1.0 / (kmax * speed[0]):.3e}",
                StabilityWarning,
                stacklevel=2,
            )
        k2 = _nonlinear_tendency(e_half * (v + 0.5 * dt * k1), t + dt / 2, cfg, ops)
        k3 = _nonlinear_tendency(e_half * v + 0.5 * dt * k2, t + dt / 2, cfg, ops)
        k4 = _nonlinear_tendency(e_full * v + dt * e_half * k3, t + dt, cfg, ops)
        v_new = e_full * v + (dt / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)
    else:
        v_new = e_full * v

    if not np.all(np.isfinite(v_new)):
        raise NonFiniteState(f"non-finite coefficients at t = {t + dt}")

    t_new = t + dt
    sums = _spectral_sums(ops, v_new, t_new)
    integrand = _identity_integrand(ops, v_new, t_new) if cfg.track_identity else 0.0
    state.ledger.append(t_new, *sums, integrand)
    return SolverState(t_new, state.vhat.with_coeffs(v_new), state.ledger)


def solve(cfg: SolverConfig) -> tuple[Trajectory, EnergyLedger]:
    """Integrate from v = 0 over [0, horizon], emitting snapshots and the ledger."""
    ops = _get_operators(cfg)
    ledger = EnergyLedger()
    v0 = SpectralField.zero(cfg.grid)
    state = SolverState(0.0, v0, ledger)
    sums = _spectral_sums(ops, v0.coeffs, 0.0)
    integrand = _identity_integrand(ops, v0.coeffs, 0.0) if cfg.track_identity else 0.0
    ledger.append(0.0, *sums, integrand)

    traj = Trajectory(cfg)
    traj.store(0.0, v0)
    n_steps = int(round(cfg.horizon / cfg.dt))
    for k in range(1, n_steps + 1):
        state = step(state, cfg)
        if k % cfg.snapshot_every == 0 or k == n_steps:
            traj.store(state.t, state.vhat)
    return traj, ledger


# ---------------------------------------------------------------------------
# fixed-point diagnostic


@dataclass
class PicardResult:
    """Iterate history of the integral fixed-point map started from zero."""

    times: np.ndarray
    iterates: np.ndarray  # (iters + 1, nodes, 3, M, M, M)
    differences: list
    ratios: list
    non_contraction: bool

    def final(self) -> np.ndarray:
        return self.iterates[-1]


def _x_norm(diff: np.ndarray, ts: np.ndarray, grid: GridSpec) -> float:
    """sup-in-time L2 plus first-moment-weighted L2-in-time of a trajectory."""
    l2 = np.sqrt(np.sum(np.abs(diff) ** 2, axis=(1, 2, 3, 4)))
    kmag = grid.k_mag[None, None]
    weighted = np.sum((kmag * np.abs(diff)) ** 2, axis=(1, 2, 3, 4))
    return float(np.max(l2) + np.sqrt(np.trapezoid(weighted, ts)))


def picard_iterate(cfg: SolverConfig, t1: float, iters: int, nodes: int = 33) -> PicardResult:
    """Iterate the time-integral map on [0, t1] starting from zero.

    Each sweep evaluates the full tendency along the current iterate and
    integrates it cumulatively by trapezoid on a fixed uniform subgrid;
    successive differences are measured in the solver's fixed-point norm.
    The non_contraction flag is raised (not fatal) when a difference ratio
    exceeds 1.
    """
    if iters < 3:
        raise ValueError("need at least 3 iterations to observe contraction")
    if t1 <= 0:
        raise ValueError("t1 must be positive")
    m = cfg.grid.size
    ts = np.linspace(0.0, t1, nodes)
    current = np.zeros((nodes, 3, m, m, m), dtype=np.complex128)
    history = [current]
    diffs: list[float] = []
    for _ in range(iters):
        rhs = np.stack([assemble_rhs(current[i], ts[i], cfg) for i in range(nodes)])
        nxt = np.zeros_like(current)
        seg = 0.5 * (rhs[1:] + rhs[:-1]) * np.diff(ts)[:, None, None, None, None]
        nxt[1:] = np.cumsum(seg, axis=0)
        diffs.append(_x_norm(nxt - current, ts, cfg.grid))
        history.append(nxt)
        current = nxt
    ratios = [
        diffs[i + 1] / diffs[i] if diffs[i] > 0 else 0.0 for i in range(len(diffs) - 1)
    ]
    return PicardResult(
        times=ts,
        iterates=np.stack(history),
        differences=diffs,
        ratios=ratios,
        non_contraction=any(r > 1.0 for r in ratios),
    )


# ---------------------------------------------------------------------------
# identity and inequality checks


def energy_identity_residual(traj: Trajectory) -> np.ndarray:
    """Residual series of the smoothed energy identity on stored snapshots.

    residual(t) = [ ||v||^2 + 2 int ||grad w||^2 ] - rhs, relative to
    max(E(v, t), eps), both time integrals by trapezoid on the snapshot
    times.
    """
    cfg = traj.cfg
    ops = _get_operators(cfg)
    ts = np.asarray(traj.times)
    l2sq = np.empty(ts.size)
    grad_w_sq = np.empty(ts.size)
    grad_v_sq = np.empty(ts.size)
    integrand = np.empty(ts.size)
    for i, (t, fld) in enumerate(zip(traj.times, traj.fields)):
        asq = np.sum(np.abs(fld.coeffs) ** 2, axis=0)
        l2sq[i] = np.sum(asq)
        grad_v_sq[i] = np.sum(ops.ksq * asq)
        grad_w_sq[i] = np.sum(ops.ksq * ops.rho**2 * ops.dealias * asq)
        integrand[i] = _identity_integrand(ops, fld.coeffs, t)
    cum_w = _cumtrapz(grad_w_sq, ts)
    cum_v = _cumtrapz(grad_v_sq, ts)
    rhs = _cumtrapz(integrand, ts)
    energy = l2sq + cum_v
    raw = l2sq + 2.0 * cum_w - rhs
    return raw / np.maximum(energy, 1e-30)


def _cumtrapz(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def cancellation_check(v: SpectralField, transport: SpectralField | None = None) -> float:
    """|int v . Leray div(v x b) dx| with b = transport (default v), dealiased.

    Exactly zero for divergence-free b on alias-free products; the return
    value is the absolute integral, to be compared against the
    ||v|| ||grad v||^2 scale.  The projection is a no-op inside the inner
    product against divergence-free v, so the gradient part drops out.
    """
    grid = v.grid
    mask = grid.dealias_mask[None]
    vd = v.coeffs * mask
    bd = (transport.coeffs if transport is not None else v.coeffs) * mask
    m = grid.size
    scale_inv = m**3 / TWO_PI**1.5
    scale_fwd = TWO_PI**1.5 / m**3
    vphys = ifftn(vd).real * scale_inv
    bphys = ifftn(bd).real * scale_inv
    n = grid.wavenumbers
    total = 0.0 + 0.0j
    for j in range(3):
        that_j = fftn(np.stack([vphys[j] * bphys[k] for k in range(3)])) * scale_fwd
        div_j = 1j * (n[0] * that_j[0] + n[1] * that_j[1] + n[2] * that_j[2])
        total += np.sum(np.conj(vd[j]) * div_j * mask[0])
    return abs(float(total.real))


@dataclass
class CheckResult:
    passed: bool
    lhs: float
    rhs: float
    margin: float


def holder_interpolation_check(v: SpectralField, slack: float = 1e-10) -> CheckResult:
    """||v||_{18/7} <= ||v||_2^(2/3) ||v||_6^(1/3) on the grid quadrature."""
    from .spectral import inverse_transform, lebesgue_norm

    f = inverse_transform(v)
    lhs = lebesgue_norm(f, 18.0 / 7.0)
    rhs = lebesgue_norm(f, 2.0) ** (2.0 / 3.0) * lebesgue_norm(f, 6.0) ** (1.0 / 3.0)
    margin = (rhs - lhs) / rhs if rhs > 0 else 0.0
    return CheckResult(lhs <= rhs * (1.0 + slack), lhs, rhs, margin)


def negative_interpolation_check(w: SpectralField, slack: float = 1e-10) -> CheckResult:
    """||w||_{L2} <= ||w||_{H^-2}^(1/3) ||w||_{H^1}^(2/3) for mean-zero w."""
    lhs = sobolev_norm(w, 0.0)
    rhs = sobolev_norm(w, -2.0) ** (1.0 / 3.0) * sobolev_norm(w, 1.0) ** (2.0 / 3.0)
    margin = (rhs - lhs) / rhs if rhs > 0 else 0.0
    return CheckResult(lhs <= rhs * (1.0 + slack), lhs, rhs, margin)


# ---------------------------------------------------------------------------
# scaling transform and full-system restart


def scaling_transform(traj: Trajectory, lam: int, target: GridSpec) -> Trajectory:
    """Parabolic rescaling u_lam(n, s) = lam * u(n / lam, lam^2 s) on lam Z^3.

    Times are divided by lam^2; frequencies are dilated by lam into the
    target grid.  FrequencyOverflow if the dilated spectrum does not fit.
    """
    if lam < 1 or int(lam) != lam:
        raise ValueError("scaling factor must be a positive integer")
    src = traj.cfg.grid
    radius = 0
    absn = np.abs(src.wavenumbers)
    for fld in traj.fields:
        active = np.any(fld.coeffs != 0, axis=0)
        if np.any(active):
            radius = max(radius, int(np.max(absn[:, active])))
    if lam * radius > target.size // 2 - 1:
        raise FrequencyOverflow(
            f"scaled per-axis support {lam * radius} exceeds target grid {target.size}"
        )
    src_labels = src.axis_wavenumbers
    # restrict the scatter to the active band so slot images stay injective
    keep = np.nonzero(np.abs(src_labels) <= radius)[0]
    tgt_index = (lam * src_labels[keep]) % target.size
    out = Trajectory(traj.cfg)
    mt = target.size
    for t, fld in zip(traj.times, traj.fields):
        coeffs = np.zeros((3, mt, mt, mt), dtype=np.complex128)
        coeffs[np.ix_(range(3), tgt_index, tgt_index, tgt_index)] = (
            lam * fld.coeffs[np.ix_(range(3), keep, keep, keep)]
        )
        out.store(t / lam**2, SpectralField(target, coeffs, fld.hermitian))
    return out


def unsmoothed_tendency(u: SpectralField) -> np.ndarray:
    """Tendency of the plain system: -|n|^2 u - Leray div(u x u), dealiased."""
    grid = u.grid
    mask = grid.dealias_mask[None]
    n = grid.wavenumbers
    m = grid.size
    ud = u.coeffs * mask
    phys = ifftn(ud).real * (m**3 / TWO_PI**1.5)
    prods = np.stack([phys[j] * phys[k] for j, k in _SYM_PAIRS])
    that = fftn(prods) * (TWO_PI**1.5 / m**3)
    div = np.stack(
        [
            1j
            * (
                n[0] * that[_SYM_SLOT[(j, 0)]]
                + n[1] * that[_SYM_SLOT[(j, 1)]]
                + n[2] * that[_SYM_SLOT[(j, 2)]]
            )
            for j in range(3)
        ]
    )
    div *= mask
    ksq_safe = grid.k_sq.copy()
    ksq_safe[0, 0, 0] = 1.0
    ndotu = np.einsum("cxyz,cxyz->xyz", n, div)
    proj = div - (n / ksq_safe[None]) * ndotu[None]
    proj[:, 0, 0, 0] = div[:, 0, 0, 0]
    return -grid.k_sq[None] * u.coeffs - proj


def nse_residual(traj: Trajectory) -> np.ndarray:
    """Weak-form defect of a trajectory in the plain (unsmoothed) system.

    Central time differences against the dealiased tendency at interior
    snapshot times, normalized by the tendency magnitude.
    """
    ts = np.asarray(traj.times)
    out = np.empty(ts.size - 2)
    for i in range(1, ts.size - 1):
        dudt = (traj.fields[i + 1].coeffs - traj.fields[i - 1].coeffs) / (
            ts[i + 1] - ts[i - 1]
        )
        rhs = unsmoothed_tendency(traj.fields[i])
        scale = np.sqrt(np.sum(np.abs(rhs) ** 2))
        out[i - 1] = np.sqrt(np.sum(np.abs(dudt - rhs) ** 2)) / max(scale, 1e-30)
    return out


@dataclass
class RestartLedger:
    """Dissipation bookkeeping for a plain-system run from rough data."""

    t: list = dc_field(default_factory=list)
    l2sq_u: list = dc_field(default_factory=list)
    cum_dissipation: list = dc_field(default_factory=list)
    _prev_grad: float = 0.0

    HEADER = ("t", "l2sq_u", "cum_dissipation", "lhs", "margin")

    def append(self, t: float, l2sq: float, grad_sq: float) -> None:
        if not self.t:
            cum = 0.0
        else:
            cum = self.cum_dissipation[-1] + 0.5 * (t - self.t[-1]) * (
                self._prev_grad + grad_sq
            )
        self.t.append(t)
        self.l2sq_u.append(l2sq)
        self.cum_dissipation.append(cum)
        self._prev_grad = grad_sq

    def lhs(self) -> np.ndarray:
        """||u(t)||^2 + 2 int ||grad u||^2, constant for the exact flow."""
        return np.asarray(self.l2sq_u) + 2.0 * np.asarray(self.cum_dissipation)

    def margins(self) -> np.ndarray:
        """lhs / initial energy - 1; nonpositive up to scheme tolerance."""
        return self.lhs() / self.l2sq_u[0] - 1.0

    def stepwise_margins(self) -> np.ndarray:
        """Per-step defect of ||u||^2_{k+1} <= ||u||^2_k - 2 dt ||grad u||^2."""
        l2 = np.asarray(self.l2sq_u)
        diss = np.diff(np.asarray(self.cum_dissipation))
        return (l2[1:] - l2[:-1] + 2.0 * diss) / l2[0]

    def to_csv(self, path: str | Path) -> None:
        lhs = self.lhs()
        margins = self.margins()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.HEADER)
            for i in range(len(self.t)):
                writer.writerow(
                    [
                        repr(float(x))
                        for x in (
                            self.t[i],
                            self.l2sq_u[i],
                            self.cum_dissipation[i],
                            lhs[i],
                            margins[i],
                        )
                    ]
                )


def restart_full_nse(u_tau: SpectralField, cfg: SolverConfig) -> tuple[Trajectory, RestartLedger]:
    """Integrate the plain system from u(tau); the forcing is absorbed.

    Integrating-factor RK4 with the exact full heat multiplier and the
    dealiased quadratic term; the ledger records the discrete dissipation
    inequality margins.
    """
    grid = u_tau.grid
    mask = grid.dealias_mask[None]
    u = u_tau.coeffs * mask
    u[:, 0, 0, 0] = 0.0
    lin = -grid.k_sq
    dt = cfg.dt
    e_half = np.exp(lin * (dt / 2.0))[None]
    e_full = e_half * e_half
    field = SpectralField(grid, u, u_tau.hermitian)

    def nl(arr: np.ndarray) -> np.ndarray:
        return unsmoothed_tendency(SpectralField(grid, arr, True)) + grid.k_sq[None] * arr

    ledger = RestartLedger()
    traj = Trajectory(cfg)

    def record(t: float, arr: np.ndarray) -> None:
        asq = np.sum(np.abs(arr) ** 2, axis=0)
        ledger.append(t, float(np.sum(asq)), float(np.sum(grid.k_sq * asq)))

    record(0.0, u)
    traj.store(0.0, field)
    n_steps = int(round(cfg.horizon / cfg.dt))
    v = u
    t = 0.0
    for k in range(1, n_steps + 1):
        k1 = nl(v)
        k2 = nl(e_half * (v + 0.5 * dt * k1))
        k3 = nl(e_half * v + 0.5 * dt * k2)
        k4 = nl(e_full * v + dt * e_half * k3)
        v = e_full * v + (dt / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)
        if not np.all(np.isfinite(v)):
            raise NonFiniteState(f"non-finite coefficients at t = {t + dt}")
        t += dt
        record(t, v)
        if k % cfg.snapshot_every == 0 or k == n_steps:
            traj.store(t, SpectralField(grid, v, u_tau.hermitian))
    return traj, ledger
