"""Exception types raised across the package."""


class BipstabError(Exception):
    """Base class for all errors raised by bipstab."""


class AllWeightsUnderflow(BipstabError, FloatingPointError):
    """Every likelihood weight underflowed; the model is badly mis-specified."""


class EvidenceUnderflow(AllWeightsUnderflow):
    """Reweighting underflowed while assembling a bound."""


class DimensionMismatch(BipstabError, ValueError):
    pass


class UnbalancedWeights(BipstabError, ValueError):
    pass


class InstanceTooLarge(BipstabError, ValueError):
    pass


class NotMonotone(BipstabError, ValueError):
    pass


class MissingEnvelope(BipstabError, ValueError):
    pass


class FitDiverged(BipstabError, RuntimeError):
    pass


class DomainEscape(BipstabError, ValueError):
    pass


class BallSupFailure(BipstabError, RuntimeError):
    pass


class NonPositiveInput(BipstabError, ValueError):
    pass


class EnvelopeViolation(BipstabError, AssertionError):
    """An envelope or Lipschitz certificate failed on sampled points."""


class ConfigError(BipstabError, ValueError):
    pass


class MaxIterExceeded(UserWarning):
    """An iterative solver stopped at its iteration budget; the best iterate is returned."""
