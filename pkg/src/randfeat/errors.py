"""Exception hierarchy shared across the package."""


class RandFeatError(Exception):
    """Base class for all library errors."""


# -- activation ---------------------------------------------------------

class UnsupportedDerivativeOrder(RandFeatError):
    """Requested derivative order exceeds the model's certified order."""


class UnknownFamily(RandFeatError):
    """Composite family name not in the stencil table."""


class DecayCertificateViolation(RandFeatError):
    """Sampled derivative values exceed the claimed polynomial-decay bound."""


class DegenerateActivation(RandFeatError):
    """Activation (or its first difference) vanishes identically."""


class NotAbsolutelyIntegrable(RandFeatError):
    """Fourier transform by quadrature requires a decaying activation."""


class NoUsableFrequency(RandFeatError):
    """No grid frequency with |sigma_hat| above the floor."""


class QuadratureBudgetExceeded(RandFeatError):
    """Adaptive quadrature did not converge within its evaluation budget."""


# -- target -------------------------------------------------------------

class BarronNormDivergent(RandFeatError):
    """Tail test indicates the weighted spectral integral diverges."""


# -- representation -----------------------------------------------------

class PhaseUndefined(RandFeatError):
    """Spectral phase requested at a point of vanishing magnitude."""


class EpsilonTooLarge(RandFeatError):
    """Localization window exceeds the interval where sigma_hat is known."""


class DegenerateNormalization(RandFeatError):
    """A normalizing constant (sigma_hat(a), a_i, C(eps)) fell below floor."""


class ResolutionTooLow(RandFeatError):
    """Mollifier table too coarse to certify its defining constraints."""


# -- sampler ------------------------------------------------------------

class ProposalMismatch(RandFeatError):
    """Rejection sampler acceptance rate collapsed below 1e-3."""


class MollifierTableOverflow(RandFeatError):
    """Requested bias value lies outside the tabulated mollifier range."""


class PilotUnderresolved(RandFeatError):
    """Pilot draw too small to resolve the stratification cells."""


class CellSamplingStalled(RandFeatError):
    """Per-cell rejection sampling exceeded its proposal budget."""


class PlanSampleMismatch(RandFeatError):
    """Stratified sample groups inconsistent with the plan's cell counts."""


# -- metrics ------------------------------------------------------------

class InsufficientData(RandFeatError):
    """Rate fit needs at least two distinct sample sizes."""


class InvalidErrorValue(RandFeatError):
    """Rate fit received a nonpositive error value."""


# -- cli ----------------------------------------------------------------

class ConfigError(RandFeatError):
    """Config file failed validation; message carries file:line."""
