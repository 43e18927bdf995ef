"""Pseudo-spectral laboratory for randomized rough-data incompressible flows.

The package constructs divergence-free mean-zero data in negative-order
Sobolev spaces, randomizes it per Fourier mode with reproducible Gaussian
draws, evaluates the heat evolution exactly, verifies the probabilistic
space-time estimates by Monte Carlo, and integrates the truncated nonlinear
difference field with full energy accounting.
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateTail,
    DomainError,
    FrequencyOverflow,
    GridMismatch,
    InsufficientSamples,
    InvalidFamilyWarning,
    NegativeOrderOnNonzeroMean,
    NegativeTime,
    NonFiniteState,
    NonHermitianInput,
    ParseError,
    RnslabError,
    StabilityWarning,
    StateInvariantViolation,
    UnconvergedQuadrature,
    ValidationError,
    ZeroField,
)
from .spectral import (
    GridSpec,
    RealField,
    SpectralField,
    band_projector,
    bernstein_ratio,
    divergence,
    field_from_modes,
    forward_transform,
    inverse_transform,
    lebesgue_norm,
    leray_project,
    smooth_cutoff,
    sobolev_norm,
    white_noise_field,
)
from .snapshots import read_snapshot, write_snapshot
from .randomize import (
    DataFamily,
    RandomDraw,
    RandomizedData,
    counter_normals,
    derive_seed,
    draw_gaussians,
    make_data,
    randomize,
    weighted_gaussian_sum,
)
from .heat import (
    NormTable,
    TimeGrid,
    decay_envelope_constant,
    deterministic_decay_ratio,
    envelope_constant,
    heat_evolve,
    heat_lplq,
    lattice_lp_heat_envelope,
    lp_heat_envelope,
    time_scaling_exponent,
)
from .ensemble import (
    CoverageReport,
    EnsembleConfig,
    EnsembleReport,
    MomentTable,
    TailTable,
    coverage_study,
    event_membership,
    fit_tail_slope,
    gaussian_abs_moment,
    gaussian_moment_root,
    run_moment_experiment,
    run_tail_experiment,
)
from .solver import (
    EnergyLedger,
    PicardResult,
    SolverConfig,
    SolverState,
    Trajectory,
    assemble_rhs,
    cancellation_check,
    energy_identity_residual,
    holder_interpolation_check,
    negative_interpolation_check,
    nse_residual,
    picard_iterate,
    restart_full_nse,
    scaling_transform,
    solve,
    step,
)
from .config import RunConfig, parse_config
from .cli import dispatch, main
