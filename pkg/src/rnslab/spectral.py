"""Fourier representation of periodic vector fields and the operator algebra on them.

Conventions
-----------
The domain is the torus [0, 2*pi)^3 sampled on an M^3 grid, M even.  Fields are
expanded in the orthonormal basis e_n(x) = (2*pi)^(-3/2) * exp(i n.x) over the
integer frequency lattice n in (-M/2, M/2]^3, so the Laplacian acts per mode as
multiplication by -|n|^2 and the heat multiplier is exp(-t |n|^2).

A vector field is stored as a (3, M, M, M) complex coefficient array in the
standard FFT axis ordering.  All multiplier operators here are real, even
functions of n and therefore preserve the conjugate symmetry
conj(u(n)) = u(-n) of real-valued fields.
"""

from __future__ import annotations

import functools
import os
from dataclasses import dataclass

import numpy as np
import scipy.fft as _sfft

from .errors import (
    GridMismatch,
    NegativeOrderOnNonzeroMean,
    NonHermitianInput,
    ZeroField,
)

TWO_PI = 2.0 * np.pi

_FFT_WORKERS = os.cpu_count() or 1


def fftn(a: np.ndarray, axes=(-3, -2, -1)) -> np.ndarray:
    """Batched complex FFT over the frequency axes."""
    return _sfft.fftn(a, axes=axes, workers=_FFT_WORKERS)


def ifftn(a: np.ndarray, axes=(-3, -2, -1)) -> np.ndarray:
    """Batched complex inverse FFT over the frequency axes."""
    return _sfft.ifftn(a, axes=axes, workers=_FFT_WORKERS)

#: relative tolerance for the conjugate-symmetry invariant
HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Cubic collocation grid: M points per axis on [0, 2*pi)^3.

    The frequency lattice is {n : -M/2 < n_i <= M/2}; the mode n = 0 is the
    mean mode.  Requires M >= 4 and M even.
    """

    size: int

    def __post_init__(self) -> None:
        if self.size < 4:
            raise ValueError("grid size must be >= 4")
        if self.size % 2:
            raise ValueError("grid size must be even")

    @functools.cached_property
    def axis_wavenumbers(self) -> np.ndarray:
        """1D integer frequencies per axis, FFT storage order, Nyquist labeled +M/2."""
        k = (np.fft.fftfreq(self.size) * self.size).astype(np.int64)
        k[self.size // 2] = self.size // 2
        k.setflags(write=False)
        return k

    @functools.cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer frequency vectors, shape (3, M, M, M)."""
        k = self.axis_wavenumbers
        n1, n2, n3 = np.meshgrid(k, k, k, indexing="ij")
        out = np.stack([n1, n2, n3]).astype(np.float64)
        out.setflags(write=False)
        return out

    @functools.cached_property
    def k_sq(self) -> np.ndarray:
        """|n|^2 per mode, shape (M, M, M)."""
        n = self.wavenumbers
        out = n[0] ** 2 + n[1] ** 2 + n[2] ** 2
        out.setflags(write=False)
        return out

    @functools.cached_property
    def k_mag(self) -> np.ndarray:
        """|n| per mode, shape (M, M, M)."""
        out = np.sqrt(self.k_sq)
        out.setflags(write=False)
        return out

    @functools.cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean mask keeping |n_i| <= (M-1)//3 on every axis.

        Products of two masked fields are then alias-free on the retained
        band: aliased images land at |n_i| >= M - 2*(M-1)//3 > (M-1)//3.
        """
        cut = (self.size - 1) // 3
        k = self.axis_wavenumbers
        ax = np.abs(k) <= cut
        out = ax[:, None, None] & ax[None, :, None] & ax[None, None, :]
        out.setflags(write=False)
        return out

    @functools.cached_property
    def conjugate_index(self) -> tuple[np.ndarray, ...]:
        """Index arrays mapping each mode slot to its conjugate partner -n."""
        neg = (-np.arange(self.size)) % self.size
        return np.ix_(neg, neg, neg)

    @property
    def spacing(self) -> float:
        return TWO_PI / self.size

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @functools.cached_property
    def mesh(self) -> np.ndarray:
        """Physical coordinates x_j = 2*pi*j/M, shape (3, M, M, M)."""
        x = np.arange(self.size) * self.spacing
        out = np.stack(np.meshgrid(x, x, x, indexing="ij"))
        out.setflags(write=False)
        return out

    def mode_index(self, n: tuple[int, int, int]) -> tuple[int, int, int]:
        """Array index of the frequency label n; raises if n is off-lattice."""
        half = self.size // 2
        idx = []
        for c in n:
            if not (-half < c <= half):
                raise ValueError(f"mode {n} outside (-M/2, M/2] for M={self.size}")
            idx.append(int(c) % self.size)
        return tuple(idx)


@dataclass
class SpectralField:
    """3-component complex coefficient array on the frequency lattice.

    ``hermitian`` asserts conj(u(n)) = u(-n), i.e. the physical field is
    real-valued.  Coefficient arrays are treated as immutable values; every
    operator returns a fresh field.
    """

    grid: GridSpec
    coeffs: np.ndarray
    hermitian: bool = True

    def __post_init__(self) -> None:
        m = self.grid.size
        if self.coeffs.shape != (3, m, m, m):
            raise ValueError(f"coefficient array must have shape (3, {m}, {m}, {m})")
        if self.coeffs.dtype != np.complex128:
            self.coeffs = self.coeffs.astype(np.complex128)
        self.coeffs.setflags(write=False)

    @classmethod
    def zero(cls, grid: GridSpec) -> "SpectralField":
        m = grid.size
        return cls(grid, np.zeros((3, m, m, m), dtype=np.complex128))

    def l2(self) -> float:
        """Plancherel norm sqrt(sum |u(n)|^2) over all modes and components."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def hermitian_defect(self) -> float:
        """max |conj(u(n)) - u(-n)| over modes and components."""
        ix = self.grid.conjugate_index
        d = 0.0
        for c in range(3):
            d = max(d, float(np.max(np.abs(np.conj(self.coeffs[c]) - self.coeffs[c][ix]))))
        return d

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        scale = max(np.max(np.abs(self.coeffs)), 1e-300)
        return self.hermitian_defect() <= rtol * scale

    def mean_mode(self) -> np.ndarray:
        return self.coeffs[:, 0, 0, 0].copy()

    def with_coeffs(self, coeffs: np.ndarray, hermitian: bool | None = None) -> "SpectralField":
        return SpectralField(
            self.grid, coeffs, self.hermitian if hermitian is None else hermitian
        )


@dataclass
class RealField:
    """3-component real field sampled at the collocation points."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        m = self.grid.size
        if self.values.shape != (3, m, m, m):
            raise ValueError(f"value array must have shape (3, {m}, {m}, {m})")
        if self.values.dtype != np.float64:
            self.values = self.values.astype(np.float64)
        self.values.setflags(write=False)

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean vector magnitude, shape (M, M, M)."""
        return np.sqrt(np.sum(self.values**2, axis=0))


# ---------------------------------------------------------------------------
# transforms


def forward_transform(f: RealField) -> SpectralField:
    """Expand a grid field in the orthonormal basis.

    The normalization is unitary with respect to grid quadrature: the
    Plancherel sum of the coefficients equals the quadrature L^2 norm of f.
    """
    m = f.grid.size
    scale = TWO_PI**1.5 / m**3
    coeffs = fftn(f.values.astype(np.complex128)) * scale
    return SpectralField(f.grid, coeffs, hermitian=True)


def inverse_transform(F: SpectralField) -> RealField:
    """Evaluate a hermitian spectral field at the collocation points.

    Raises NonHermitianInput when the conjugate symmetry fails beyond
    tolerance (the result would not be real-valued).
    """
    if not F.is_hermitian():
        raise NonHermitianInput(
            f"hermitian defect {F.hermitian_defect():.3e} exceeds tolerance"
        )
    m = F.grid.size
    scale = m**3 / TWO_PI**1.5
    values = ifftn(F.coeffs).real * scale
    return RealField(F.grid, values)


# ---------------------------------------------------------------------------
# multiplier operators


def _scalar_multiplier(F: SpectralField, mult: np.ndarray) -> SpectralField:
    """Apply a real multiplier m(n) (even in n) to every component."""
    return F.with_coeffs(F.coeffs * mult[None, :, :, :])


def leray_project(F: SpectralField) -> SpectralField:
    """Project onto divergence-free fields: per mode I - n n^T / |n|^2.

    The mean mode n = 0 passes through unchanged.
    """
    n = F.grid.wavenumbers
    ksq = F.grid.k_sq.copy()
    ksq[0, 0, 0] = 1.0  # avoid 0/0; the n=0 mode is restored below
    ndotu = np.einsum("cxyz,cxyz->xyz", n, F.coeffs)
    out = F.coeffs - n * (ndotu / ksq)[None, :, :, :]
    out[:, 0, 0, 0] = F.coeffs[:, 0, 0, 0]
    return F.with_coeffs(out)


def divergence(F: SpectralField) -> np.ndarray:
    """Scalar spectral coefficients of div u: i n . u(n), shape (M, M, M)."""
    n = F.grid.wavenumbers
    return 1j * np.einsum("cxyz,cxyz->xyz", n, F.coeffs)


def frequency_ramp(r: np.ndarray | float) -> np.ndarray | float:
    """C^1 radial ramp: 1 for r <= 1, 0 for r >= 2, cos^2(pi (r-1)/2) between."""
    r = np.asarray(r, dtype=np.float64)
    mid = np.cos(0.5 * np.pi * (r - 1.0)) ** 2
    out = np.where(r <= 1.0, 1.0, np.where(r >= 2.0, 0.0, mid))
    return out if out.ndim else float(out)


def smooth_cutoff(F: SpectralField, N: float) -> SpectralField:
    """Low-pass with the smooth ramp: multiply by ramp(|n| / N).

    Modes with |n| <= N are untouched and modes with |n| >= 2N are removed;
    idempotent only where the ramp is 0 or 1.
    """
    if N < 1:
        raise ValueError("cutoff scale must be >= 1")
    return _scalar_multiplier(F, frequency_ramp(F.grid.k_mag / N))


def smooth_cutoff_multiplier(grid: GridSpec, N: float) -> np.ndarray:
    """The ramp(|n| / N) multiplier array used by smooth_cutoff."""
    return frequency_ramp(grid.k_mag / N)


def band_projector(F: SpectralField, M: int) -> SpectralField:
    """Dyadic frequency-shell projector: ramp(|n|/M) - ramp(2|n|/M).

    M must be a dyadic integer >= 2.  Together with the low-pass at scale 1
    these telescope to the identity on any finitely supported spectrum.
    """
    if M < 2 or (M & (M - 1)) != 0:
        raise ValueError("band scale must be a dyadic integer >= 2")
    km = F.grid.k_mag
    return _scalar_multiplier(F, frequency_ramp(km / M) - frequency_ramp(2.0 * km / M))


# ---------------------------------------------------------------------------
# norms


def sobolev_norm(F: SpectralField, s: float) -> float:
    """Homogeneous Sobolev norm (sum over n != 0 of |n|^(2s) |u(n)|^2)^(1/2).

    For s < 0 the mean mode must vanish; s = 0 reproduces the L^2 norm on
    mean-zero fields.
    """
    mean_scale = float(np.max(np.abs(F.mean_mode())))
    if s < 0 and mean_scale > 1e-14 * (1.0 + F.l2()):
        raise NegativeOrderOnNonzeroMean(
            f"|u(0)| = {mean_scale:.3e} but requested order s = {s}"
        )
    ksq = F.grid.k_sq.copy()
    ksq[0, 0, 0] = 1.0  # n = 0 excluded below; dummy value avoids 0**negative
    weight = ksq**s
    weight[0, 0, 0] = 0.0
    total = np.sum(weight[None, :, :, :] * np.abs(F.coeffs) ** 2)
    return float(np.sqrt(total))


def lebesgue_norm(f: RealField, q: float) -> float:
    """Grid-quadrature L^q norm of the pointwise vector magnitude.

    q = inf returns the grid maximum.  Exact for band-limited integrands
    whose q-fold products stay below the Nyquist frequency.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    mag = f.magnitude()
    if np.isinf(q):
        return float(np.max(mag))
    return float((np.sum(mag**q) * f.grid.cell_volume) ** (1.0 / q))


def support_radius(F: SpectralField) -> float:
    """max |n| over modes carrying a nonzero coefficient; ZeroField if none."""
    active = np.any(F.coeffs != 0, axis=0)
    if not np.any(active):
        raise ZeroField("field has no active modes")
    return float(np.max(F.grid.k_mag[active]))


def bernstein_ratio(F: SpectralField, p: float, q: float) -> float:
    """Ratio ||F||_q / (N^(3(1/p - 1/q)) ||F||_p) with N the support radius.

    The frequency-localization gain of band-limited fields: the ratio stays
    bounded by an N-independent constant.
    """
    if not 1 <= p <= q:
        raise ValueError("need 1 <= p <= q")
    N = support_radius(F)
    f = inverse_transform(F)
    expo = 3.0 * (1.0 / p - (0.0 if np.isinf(q) else 1.0 / q))
    return lebesgue_norm(f, q) / (N**expo * lebesgue_norm(f, p))


# ---------------------------------------------------------------------------
# construction helpers


def field_from_modes(
    grid: GridSpec,
    modes: dict[tuple[int, int, int], np.ndarray],
    add_conjugates: bool = True,
) -> SpectralField:
    """Build a field from {frequency label: 3-vector coefficient}.

    With add_conjugates the conjugate partner u(-n) = conj(u(n)) is filled in
    for every listed mode, producing a hermitian (real-valued) field.
    """
    m = grid.size
    coeffs = np.zeros((3, m, m, m), dtype=np.complex128)
    for n, vec in modes.items():
        vec = np.asarray(vec, dtype=np.complex128)
        idx = grid.mode_index(n)
        coeffs[(slice(None), *idx)] += vec
        if add_conjugates:
            nidx = grid.mode_index(tuple(-c if c != m // 2 else c for c in n))
            if nidx != idx:
                coeffs[(slice(None), *nidx)] += np.conj(vec)
    field = SpectralField(grid, coeffs, hermitian=add_conjugates)
    if add_conjugates and not field.is_hermitian():
        raise NonHermitianInput("conflicting mode assignments broke conjugate symmetry")
    return field


def white_noise_field(
    grid: GridSpec,
    seed: int,
    mean_zero: bool = True,
    band: float | None = None,
) -> SpectralField:
    """Hermitian field with i.i.d. Gaussian point values (test utility).

    The Nyquist planes |n_i| = M/2 are zeroed: they are self-conjugate in one
    axis only, so axis-mixing multipliers (Leray, divergence) cannot act on
    them without breaking conjugate symmetry.  Optionally zero the mean mode
    and band-limit to |n| <= band.
    """
    rng = np.random.default_rng(seed)
    m = grid.size
    values = rng.standard_normal((3, m, m, m))
    F = forward_transform(RealField(grid, values))
    coeffs = F.coeffs.copy()
    off_nyquist = np.all(np.abs(grid.wavenumbers) < m // 2, axis=0)
    coeffs *= off_nyquist[None, :, :, :]
    if mean_zero:
        coeffs[:, 0, 0, 0] = 0.0
    if band is not None:
        coeffs *= (grid.k_mag <= band)[None, :, :, :]
    return SpectralField(grid, coeffs, hermitian=True)


def require_same_grid(a, b) -> None:
    if a.grid != b.grid:
        raise GridMismatch(f"grid sizes {a.grid.size} and {b.grid.size} differ")
