"""Exception and warning types shared across the package."""


class RnslabError(Exception):
    """Base class for all rnslab errors."""


class GridMismatch(RnslabError):
    """Two fields live on different grids."""


class NonHermitianInput(RnslabError):
    """Conjugate symmetry conj(u(n)) = u(-n) fails beyond tolerance."""


class NegativeOrderOnNonzeroMean(RnslabError):
    """Negative-order Sobolev norm requested for a field with nonzero mean mode."""


class ZeroField(RnslabError):
    """Operation undefined on the zero field."""


class NegativeTime(RnslabError):
    """Heat evolution requested for t < 0."""


class UnconvergedQuadrature(RnslabError):
    """Time quadrature failed the refinement acceptance criterion."""


class DomainError(RnslabError):
    """Parameters outside the admissible region of an analytic formula."""


class InsufficientSamples(RnslabError):
    """Ensemble too small for the requested statistic."""


class DegenerateTail(RnslabError):
    """All empirical exceedance frequencies are 0 or 1; no tail to fit."""


class NonFiniteState(RnslabError):
    """Solver state contains NaN or Inf (discrete blow-up)."""


class StateInvariantViolation(RnslabError):
    """Solver state broke a structural invariant (hermitian / div-free / mean-zero)."""


class FrequencyOverflow(RnslabError):
    """Rescaled frequencies do not fit in the target grid."""


class ParseError(RnslabError):
    """Malformed configuration text."""


class ValidationError(RnslabError):
    """Well-formed configuration with an invalid or unknown entry."""


class InvalidFamilyWarning(UserWarning):
    """Data family parameters outside the representative regime (run continues)."""


class StabilityWarning(UserWarning):
    """Time step exceeds the advective stability estimate (run continues)."""
