"""Heat semigroup evaluation, decay diagnostics and space-time norm quadrature.

The heat flow acts exactly per mode, so every quantity here reduces to
weighted sums over the frequency lattice plus one-dimensional quadrature or
maximization in time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, NegativeTime, UnconvergedQuadrature, ZeroField
from .spectral import SpectralField, inverse_transform, lebesgue_norm, sobolev_norm


def heat_evolve(f: SpectralField, t: float) -> SpectralField:
    """Multiply each mode by exp(-t |n|^2); t = 0 is the identity."""
    if t < 0:
        raise NegativeTime(f"heat evolution undefined for t = {t}")
    return f.with_coeffs(f.coeffs * np.exp(-t * f.grid.k_sq)[None, :, :, :])


def heat_multiplier(grid, t: float) -> np.ndarray:
    """The scalar multiplier exp(-t |n|^2) on the lattice."""
    if t < 0:
        raise NegativeTime(f"heat evolution undefined for t = {t}")
    return np.exp(-t * grid.k_sq)


# ---------------------------------------------------------------------------
# time grids


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing positive quadrature nodes in (0, T].

    log_spaced grids accumulate nodes near t = 0 to resolve the initial
    boundary layer of rough-data heat evolutions; at least 16 nodes are
    required, and log-spaced grids must start at or below T/100.
    """

    nodes: tuple[float, ...]
    scheme: str
    horizon: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.nodes)
        if arr.size < 16:
            raise ValueError("time grids need at least 16 nodes")
        if np.any(arr <= 0) or np.any(np.diff(arr) <= 0):
            raise ValueError("nodes must be strictly increasing and positive")
        if abs(arr[-1] - self.horizon) > 1e-12 * self.horizon:
            raise ValueError("last node must equal the horizon")
        if self.scheme == "log_spaced" and arr[0] > self.horizon / 100 * (1 + 1e-12):
            raise ValueError("log-spaced grids must start at or below T/100")
        if self.scheme not in ("log_spaced", "uniform"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @classmethod
    def log_spaced(cls, horizon: float, n: int = 48, first: float | None = None) -> "TimeGrid":
        if first is None:
            first = horizon * 1e-4
        nodes = np.geomspace(first, horizon, n)
        nodes[-1] = horizon
        return cls(tuple(nodes), "log_spaced", horizon)

    @classmethod
    def uniform(cls, horizon: float, n: int = 64) -> "TimeGrid":
        nodes = np.linspace(horizon / n, horizon, n)
        return cls(tuple(nodes), "uniform", horizon)

    def refined(self) -> "TimeGrid":
        """Same scheme and horizon with twice the node count."""
        n = 2 * len(self.nodes)
        if self.scheme == "log_spaced":
            return TimeGrid.log_spaced(self.horizon, n, first=self.nodes[0])
        return TimeGrid.uniform(self.horizon, n)

    def array(self) -> np.ndarray:
        return np.asarray(self.nodes)


# ---------------------------------------------------------------------------
# deterministic decay


def decay_envelope_constant(a: float) -> float:
    """sup over y > 0 of y^a exp(-y^2): the per-mode decay envelope constant.

    Closed form (a/2)^(a/2) exp(-a/2); equals 1 at a = 0.
    """
    if a < 0:
        raise ValueError("order must be nonnegative")
    if a == 0:
        return 1.0
    return float((a / 2.0) ** (a / 2.0) * np.exp(-a / 2.0))


def deterministic_decay_ratio(
    f: SpectralField, alpha: float, k: int, tgrid: TimeGrid
) -> float:
    """sup over grid nodes of t^((alpha+k)/2) ||D^k g(t)||_L2 / ||f||_{H^-alpha}.

    Bounded by decay_envelope_constant(alpha + k) since each mode contributes
    at most its scalar envelope.
    """
    if k < 0:
        raise ValueError("derivative order k must be nonnegative")
    fnorm = sobolev_norm(f, -alpha)
    if fnorm == 0.0:
        raise ZeroField("decay ratio undefined for the zero field")
    ksq = f.grid.k_sq.ravel()
    w = np.sum(np.abs(f.coeffs) ** 2, axis=0).ravel()
    ts = tgrid.array()
    # ||D^k g(t)||^2 = sum |n|^(2k) exp(-2 t |n|^2) |f(n)|^2
    decay = np.exp(-2.0 * np.outer(ts, ksq))
    norms = np.sqrt(decay @ (ksq**k * w))
    ratios = ts ** ((alpha + k) / 2.0) * norms / fnorm
    return float(np.max(ratios))


# ---------------------------------------------------------------------------
# space-time norms


def _lplq_on_grid(f: SpectralField, p: float, q: float, tgrid: TimeGrid) -> float:
    """Trapezoid of ||g(t)||_q^p over [0, T] including the t = 0 endpoint."""
    ts = np.concatenate([[0.0], tgrid.array()])
    vals = np.empty_like(ts)
    vals[0] = lebesgue_norm(inverse_transform(f), q) ** p
    for i, t in enumerate(tgrid.nodes, start=1):
        vals[i] = lebesgue_norm(inverse_transform(heat_evolve(f, t)), q) ** p
    return float(np.trapezoid(vals, ts) ** (1.0 / p))


def heat_lplq(
    f: SpectralField,
    p: float,
    q: float,
    tgrid: TimeGrid,
    rel_tol: float = 0.005,
    max_doublings: int = 3,
    return_grid: bool = False,
):
    """Space-time norm ||g||_{L^p([0,T], L^q)} of the heat evolution of f.

    Composite trapezoid over the time grid, accepted once doubling the node
    count changes the value by less than rel_tol; UnconvergedQuadrature after
    max_doublings failed refinements.
    """
    if not (2 <= p < np.inf and 2 <= q < np.inf):
        raise ValueError("need 2 <= p, q < infinity")
    value = _lplq_on_grid(f, p, q, tgrid)
    for _ in range(max_doublings):
        finer = tgrid.refined()
        refined_value = _lplq_on_grid(f, p, q, finer)
        if abs(refined_value - value) <= rel_tol * max(refined_value, 1e-300):
            return (refined_value, finer) if return_grid else refined_value
        value, tgrid = refined_value, finer
    raise UnconvergedQuadrature(
        f"value still moving by more than {rel_tol:.1%} after {max_doublings} doublings"
    )


def validated_time_grid(
    f: SpectralField,
    p: float,
    q: float,
    tgrid: TimeGrid,
    rel_tol: float = 0.005,
    max_doublings: int = 3,
) -> TimeGrid:
    """Coarsest grid in the doubling ladder already within rel_tol of its refinement.

    Used to validate a quadrature grid once on a base field before reusing
    it across a Monte Carlo ensemble.
    """
    value = _lplq_on_grid(f, p, q, tgrid)
    for _ in range(max_doublings):
        finer = tgrid.refined()
        refined_value = _lplq_on_grid(f, p, q, finer)
        if abs(refined_value - value) <= rel_tol * max(refined_value, 1e-300):
            return tgrid
        value, tgrid = refined_value, finer
    raise UnconvergedQuadrature(
        f"grid still moving by more than {rel_tol:.1%} after {max_doublings} doublings"
    )


@dataclass
class NormTable:
    """Sampled space-time norms with (alpha, p, q, T, seed) provenance."""

    rows: list[tuple[float, float, float, float, int, float]] = field(default_factory=list)

    HEADER = ("alpha", "p", "q", "T", "seed", "value")

    def append(self, alpha, p, q, horizon, seed, value) -> None:
        if value < 0:
            raise ValueError("norms are nonnegative")
        self.rows.append((alpha, p, q, horizon, seed, value))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.HEADER)
            for row in self.rows:
                writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


# ---------------------------------------------------------------------------
# the horizon envelope of the L^p-in-time heat factor


def time_scaling_exponent(p: float, alpha: float) -> float:
    """The horizon exponent 1/p - alpha/2; nonnegative exactly when alpha p <= 2."""
    return 1.0 / p - alpha / 2.0


def _envelope_maximand(u: np.ndarray, alpha: float, p: float) -> np.ndarray:
    e = (alpha - 2.0 / p) / 2.0
    return u**e * (1.0 - np.exp(-p * u)) ** (1.0 / p)


def envelope_constant(alpha: float, p: float, tol: float = 1e-10) -> float:
    """sup over u > 0 of u^((alpha - 2/p)/2) (1 - exp(-p u))^(1/p).

    The horizon-free constant of the envelope factorization; equals 1 when
    alpha p = 2.  Golden-section search on a bracket located by a coarse
    grid; the maximand is verified unimodal on each call.
    """
    _check_envelope_domain(alpha, p)
    if abs(alpha * p - 2.0) < 1e-12:
        return 1.0
    hi = 50.0 * max(1.0, 1.0 / p)
    us = np.geomspace(1e-10, hi, 4096)
    vals = _envelope_maximand(us, alpha, p)
    diffs = np.diff(vals)
    signs = np.sign(diffs[np.abs(diffs) > 1e-16 * vals.max()])
    flips = np.count_nonzero(np.diff(signs))
    if flips != 1:
        raise RuntimeError(
            f"maximand not unimodal on the coarse grid ({flips} sign changes)"
        )
    i = int(np.argmax(vals))
    lo, hi = us[max(i - 1, 0)], us[min(i + 1, us.size - 1)]

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = _envelope_maximand(np.array([c, d]), alpha, p)
    while b - a > tol * (1.0 + b):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = float(_envelope_maximand(np.array([c]), alpha, p)[0])
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = float(_envelope_maximand(np.array([d]), alpha, p)[0])
    return float(max(fc, fd))


def lp_heat_envelope(horizon: float, alpha: float, p: float) -> float:
    """sup over frequency of |xi|^(alpha - 2/p) (1 - exp(-p |xi|^2 T))^(1/p).

    Factorizes exactly as envelope_constant(alpha, p) * T^(1/p - alpha/2);
    identically 1 when alpha p = 2.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    _check_envelope_domain(alpha, p)
    if abs(alpha * p - 2.0) < 1e-12:
        return 1.0
    return envelope_constant(alpha, p) * horizon ** time_scaling_exponent(p, alpha)


def _check_envelope_domain(alpha: float, p: float) -> None:
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    if p < 2:
        raise DomainError("p must be >= 2")
    if alpha * p > 2.0 + 1e-12:
        raise DomainError(f"alpha*p = {alpha * p} > 2 outside the envelope domain")


def _representable_as_three_squares(m: int) -> bool:
    # Legendre: m is a sum of three squares iff m != 4^a (8b + 7)
    while m % 4 == 0:
        m //= 4
    return m % 8 != 7


def lattice_lp_heat_envelope(
    horizon: float, alpha: float, p: float, max_norm_sq: int = 4096
) -> float:
    """The same envelope restricted to nonzero integer frequencies.

    Always at most the continuous value; the maximum is taken over
    achievable squared norms |n|^2 up to max_norm_sq.
    """
    _check_envelope_domain(alpha, p)
    ms = np.array(
        [m for m in range(1, max_norm_sq + 1) if _representable_as_three_squares(m)],
        dtype=np.float64,
    )
    ys = np.sqrt(ms)
    vals = ys ** (alpha - 2.0 / p) * (1.0 - np.exp(-p * ys**2 * horizon)) ** (1.0 / p)
    return float(np.max(vals))


def envelope_table(
    alphas, ps, horizons
) -> list[tuple[float, float, float, float, float, float]]:
    """Rows (alpha, p, T, J, K, sigma) over the parameter product."""
    rows = []
    for alpha in alphas:
        for p in ps:
            if alpha * p > 2.0 + 1e-12:
                continue
            K = envelope_constant(alpha, p)
            sigma = time_scaling_exponent(p, alpha)
            for horizon in horizons:
                rows.append(
                    (alpha, p, horizon, lp_heat_envelope(horizon, alpha, p), K, sigma)
                )
    return rows


def envelope_table_to_csv(rows, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("alpha", "p", "T", "J", "K", "sigma"))
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
