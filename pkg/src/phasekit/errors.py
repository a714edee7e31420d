"""Exception and warning types raised across phasekit.

Every error carries a short machine-readable ``code`` so the CLI can emit a
structured error object without string matching.
"""


class PhasekitError(Exception):
    """Base class for all phasekit failures."""

    code = "phasekit_error"


class ConfigError(PhasekitError):
    code = "invalid_config"


class NumericalError(PhasekitError):
    """Base class for failures of a numerical procedure (CLI exit code 3)."""

    code = "numerical_failure"


# tensors
class EvaluationOutsideValidity(NumericalError):
    code = "evaluation_outside_validity"


class NonFiniteValue(NumericalError):
    code = "non_finite_value"


class InsufficientOrder(PhasekitError):
    code = "insufficient_order"


# characteristics
class SingularLeadingBlock(NumericalError):
    code = "singular_leading_block"


class NoConvergence(NumericalError):
    code = "no_convergence"


class NotARoot(NumericalError):
    code = "not_a_root"


class NearDoubleRoot(NumericalError):
    code = "near_double_root"


class NearDoubleRootWarning(UserWarning):
    """Two characteristics nearly coalesce; the kernel of E(c) is close to 2-D."""


# reduction
class NotDegenerate(NumericalError):
    code = "not_degenerate"


class AlphaVanishes(NumericalError):
    code = "alpha_vanishes"


class BranchJump(NumericalError):
    code = "branch_jump"


class NoDispersionRelation(PhasekitError):
    code = "no_dispersion_relation"


class PoorFit(NumericalError):
    code = "poor_fit"


# models
class InvalidAmplitude(PhasekitError):
    code = "invalid_amplitude"


class EllipticRegime(PhasekitError):
    code = "elliptic_regime"


class UnstableStratification(PhasekitError):
    code = "unstable_stratification"


class LidViolation(PhasekitError):
    code = "lid_violation"


# pdesim
class Blowup(NumericalError):
    code = "blowup"


class StabilityViolation(NumericalError):
    code = "stability_violation"


class FocusingRegime(PhasekitError):
    code = "focusing_regime"


class CrossingLost(NumericalError):
    code = "crossing_lost"


class AliasWarning(UserWarning):
    """Spectral energy in the top third of the band exceeds the alias budget."""
