"""Deterministic rough data construction and per-mode Gaussian randomization.

Randomization multiplies each conjugate pair {n, -n} of Fourier modes by one
standard Gaussian scalar, which preserves real-valuedness, divergence freedom
and the mean-zero property of the base field while improving its space-time
integrability in distribution.

All randomness is counter-based and reproducible: the k-th value of a stream
is a pure function of (seed, k), independent of evaluation order and of any
parallel schedule.  The exact generator and uniform-to-normal transform are
recorded in run manifests (see RNG_ID and TRANSFORM_ID).
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import InvalidFamilyWarning
from .spectral import (
    GridSpec,
    SpectralField,
    leray_project,
    require_same_grid,
)

#: generator identifier recorded in manifests
RNG_ID = "philox4x64:random_raw"
#: uniform-to-normal transform identifier recorded in manifests
TRANSFORM_ID = "u=((raw>>11)+0.5)*2^-53; h=ndtri(u)"

_MASK64 = (1 << 64) - 1
_GOLDEN64 = 0x9E3779B97F4A7C15


def derive_seed(master_seed: int, index: int) -> int:
    """Derive an independent 64-bit stream seed from (master_seed, index).

    SplitMix64 finalizer applied to the master seed xor the golden-ratio
    multiple of the index; collision-free in the index for fixed master seed.
    """
    x = (int(master_seed) ^ (((index + 1) * _GOLDEN64) & _MASK64)) & _MASK64
    z = (x + _GOLDEN64) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def counter_uniforms(seed: int, n: int) -> np.ndarray:
    """n uniforms in the open interval (0, 1); value k depends only on (seed, k)."""
    raw = np.random.Philox(key=int(seed) & _MASK64).random_raw(n)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def counter_normals(seed: int, n: int) -> np.ndarray:
    """n standard normals via the inverse CDF of counter-based uniforms."""
    return ndtri(counter_uniforms(seed, n))


# ---------------------------------------------------------------------------
# conjugate-pair bookkeeping


@functools.lru_cache(maxsize=None)
def pair_structure(size: int) -> tuple[np.ndarray, np.ndarray]:
    """Representative mask and partner permutation for conjugate pairs.

    Returns (rep_mask, partner) where rep_mask marks, for each mode slot, the
    lexicographically larger member of its pair {n, -n} (self-paired slots,
    i.e. all components in {0, M/2}, are their own representatives), and
    partner is the flat C-order permutation sending each slot to its partner.
    """
    grid = GridSpec(size)
    lab = grid.axis_wavenumbers.astype(np.int64)
    neg = (-np.arange(size)) % size
    plab = lab[neg]

    a1, b1 = lab[:, None, None], plab[:, None, None]
    a2, b2 = lab[None, :, None], plab[None, :, None]
    a3, b3 = lab[None, None, :], plab[None, None, :]
    rep = (a1 > b1) | ((a1 == b1) & (a2 > b2)) | ((a1 == b1) & (a2 == b2) & (a3 >= b3))

    flat = np.arange(size**3).reshape(size, size, size)
    partner = flat[np.ix_(neg, neg, neg)].ravel()
    rep = np.ascontiguousarray(rep)
    rep.setflags(write=False)
    partner.setflags(write=False)
    return rep, partner


def symmetrize_pairs(h_flat: np.ndarray, size: int) -> np.ndarray:
    """Copy each pair representative's value onto its conjugate partner.

    h_flat has the flat mode axis last; the result satisfies h(n) = h(-n).
    """
    rep, partner = pair_structure(size)
    rep_flat = rep.ravel()
    return np.where(rep_flat, h_flat, h_flat[..., partner])


# ---------------------------------------------------------------------------
# draws


@dataclass
class RandomDraw:
    """A seeded family of i.i.d. standard Gaussians, one per conjugate pair.

    ``values`` holds the scalar for every mode slot with h(n) = h(-n), ready
    for elementwise multiplication against coefficient arrays.
    """

    grid: GridSpec
    master_seed: int
    values: np.ndarray

    def __post_init__(self) -> None:
        m = self.grid.size
        if self.values.shape != (m, m, m):
            raise ValueError("draw values must have shape (M, M, M)")
        self.values.setflags(write=False)

    def iid_values(self) -> np.ndarray:
        """The independent scalars, one per pair, in canonical (C-order) sequence."""
        rep, _ = pair_structure(self.grid.size)
        return self.values[rep]


def draw_gaussians(grid: GridSpec, master_seed: int) -> RandomDraw:
    """One N(0,1) scalar per conjugate pair, counter-derived from master_seed.

    The value attached to the pair whose representative occupies flat slot k
    is the k-th element of the counter stream, so draws are reproducible and
    schedule-independent.
    """
    m = grid.size
    h = counter_normals(master_seed, m**3)
    h_sym = symmetrize_pairs(h, m).reshape(m, m, m)
    return RandomDraw(grid, int(master_seed), h_sym)


def weighted_gaussian_sum(c: np.ndarray, draw: RandomDraw) -> float:
    """The linear statistic sum_i c_i h_i over the draw's independent scalars."""
    c = np.asarray(c, dtype=np.float64)
    h = draw.iid_values()
    if c.size > h.size:
        raise ValueError(f"coefficient sequence longer than available pairs ({h.size})")
    return float(c @ h[: c.size])


# ---------------------------------------------------------------------------
# data families


@dataclass(frozen=True)
class DataFamily:
    """Family of deterministic divergence-free mean-zero base fields.

    * band_limited: unit-magnitude coefficients on 0 < |n| <= support_radius.
    * power_law: coefficient magnitude |n|^(-gamma) on every representable
      mode (Nyquist planes excluded).

    Membership of the untruncated power-law family in the negative-order
    Sobolev space of order -alpha requires 2 (alpha + gamma) > 3.
    """

    kind: str
    amplitude: float = 1.0
    gamma: float | None = None
    support_radius: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("band_limited", "power_law"):
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind == "power_law" and self.gamma is None:
            raise ValueError("power_law family requires gamma")
        if self.kind == "band_limited" and self.support_radius is None:
            raise ValueError("band_limited family requires support_radius")


#: fixed direction seed; irrational ratios guarantee a x n != 0 for integer n != 0
_DIRECTION_AXIS = np.array([1.0, (np.sqrt(5.0) - 1.0) / 2.0, ((np.sqrt(5.0) - 1.0) / 2.0) ** 2])


def make_data(
    grid: GridSpec, family: DataFamily, alpha: float, seed: int
) -> SpectralField:
    """Construct the family's deterministic base field on the grid.

    The coefficient at each representative mode n is
    amplitude * m(n) * exp(i theta_n) * d(n) with m the family magnitude
    profile, theta_n a seed-derived phase and d(n) the unit vector along
    a x n for a fixed axis a, so n . u(n) = 0 exactly; conjugate partners
    are filled symmetrically.  The Leray projection is applied once more as
    a guard, and the mean mode is zero.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if family.kind == "power_law" and 2.0 * (alpha + family.gamma) <= 3.0:
        warnings.warn(
            "power-law family with 2(alpha+gamma) <= 3: truncation is finite but "
            "not representative of the infinite family",
            InvalidFamilyWarning,
            stacklevel=2,
        )
    m = grid.size
    half = m // 2
    kmag = grid.k_mag
    n = grid.wavenumbers

    # active modes: exclude mean mode and Nyquist planes
    off_nyquist = np.all(np.abs(n) < half, axis=0)
    active = off_nyquist & (kmag > 0)
    if family.kind == "band_limited":
        if family.support_radius > half - 1:
            raise ValueError("support_radius does not fit inside the grid")
        active &= kmag <= family.support_radius
        profile = np.ones_like(kmag)
    else:
        safe = np.where(kmag > 0, kmag, 1.0)
        profile = safe ** (-family.gamma)

    rep, _ = pair_structure(m)
    rep_active = rep & active

    phases = 2.0 * np.pi * counter_uniforms(derive_seed(seed, 1), m**3).reshape(m, m, m)
    cross = np.stack(
        [
            _DIRECTION_AXIS[1] * n[2] - _DIRECTION_AXIS[2] * n[1],
            _DIRECTION_AXIS[2] * n[0] - _DIRECTION_AXIS[0] * n[2],
            _DIRECTION_AXIS[0] * n[1] - _DIRECTION_AXIS[1] * n[0],
        ]
    )
    cross_norm = np.sqrt(np.sum(cross**2, axis=0))
    direction = cross / np.where(cross_norm > 0, cross_norm, 1.0)[None]

    scalar = np.where(rep_active, family.amplitude * profile * np.exp(1j * phases), 0.0)
    coeffs = scalar[None, :, :, :] * direction

    # fill conjugate partners: u(-n) = conj(u(n))
    flat = coeffs.reshape(3, -1)
    coeffs = symmetrize_conjugate(flat, m).reshape(3, m, m, m)

    field = SpectralField(grid, coeffs, hermitian=True)
    return leray_project(field)


def symmetrize_conjugate(c_flat: np.ndarray, size: int) -> np.ndarray:
    """Fill partner slots with conjugated representative values."""
    rep, partner = pair_structure(size)
    rep_flat = rep.ravel()
    return np.where(rep_flat, c_flat, np.conj(c_flat[..., partner]))


# ---------------------------------------------------------------------------
# randomization


@dataclass
class RandomizedData:
    """A base field together with a draw and the resulting randomized field."""

    base: SpectralField
    draw: RandomDraw
    randomized: SpectralField


def randomize(f: SpectralField, draw: RandomDraw) -> RandomizedData:
    """Multiply each conjugate pair of f by the draw's Gaussian scalar.

    Because the scalar is real and shared within each pair, the result stays
    hermitian, divergence-free and mean-zero whenever f is; the expected
    squared negative-order Sobolev norm equals that of f.
    """
    require_same_grid(f, draw)
    coeffs = f.coeffs * draw.values[None, :, :, :]
    return RandomizedData(f, draw, f.with_coeffs(coeffs))


def manifest_entries(
    family: DataFamily, alpha: float, master_seed: int, grid: GridSpec
) -> dict[str, str]:
    """Key-value pairs recording how a randomized data set was produced."""
    entries = {
        "grid.size": str(grid.size),
        "alpha": repr(alpha),
        "master_seed": str(master_seed),
        "family.kind": family.kind,
        "family.amplitude": repr(family.amplitude),
        "rng.generator": RNG_ID,
        "rng.transform": TRANSFORM_ID,
    }
    if family.gamma is not None:
        entries["family.gamma"] = repr(family.gamma)
    if family.support_radius is not None:
        entries["family.support_radius"] = str(family.support_radius)
    return entries
