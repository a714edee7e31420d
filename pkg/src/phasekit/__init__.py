"""phasekit: Whitham modulation characteristics and their dispersive reductions.

Given the averaged conservation laws A(k, omega)_T + B(k, omega)_X = 0 of a
multiphase wavetrain, phasekit finds the characteristic speeds, tests genuine
nonlinearity, assembles KdV / Gardner / mKdV coefficients and integrates the
reduced equations.
"""

__version__ = "0.1.0"

from .characteristics import (  # noqa: E402
    Characteristic,
    ClassificationResult,
    classify_bundle,
    classify_point,
    extract_null_vector,
    find_characteristics,
    genuine_nonlinearity_scalar,
    genuine_nonlinearity_vector,
    infinite_characteristics,
    nearest_characteristic,
    solve_kappa,
)
from .errors import ConfigError, NumericalError, PhasekitError  # noqa: E402
from .models import (  # noqa: E402
    HonlsParams,
    StokesParams,
    StratParams,
    classification_map,
    honls_degenerate_point,
    honls_model,
    polynomial_omega0,
    stokes_model,
    stratified_model,
)
from .pdesim import (  # noqa: E402
    GridSpec,
    integrate_honls,
    integrate_reduced,
    invariants,
    kink_pair_initial,
    kdv_soliton,
    track_front_speed,
)
from .reduction import (  # noqa: E402
    ReducedCoefficients,
    assemble_gardner,
    assemble_kdv,
    assemble_mkdv,
    attach_dispersion,
    consistency_report,
    normalized_coefficients,
    track_dispersion_branch,
)
from .tensors import ConservationModel, DerivativeBundle, PhasePoint, build_pencil, evaluate_bundle  # noqa: E402

__all__ = [
    "__version__",
    "Characteristic",
    "ClassificationResult",
    "classify_bundle",
    "classify_point",
    "extract_null_vector",
    "find_characteristics",
    "genuine_nonlinearity_scalar",
    "genuine_nonlinearity_vector",
    "infinite_characteristics",
    "nearest_characteristic",
    "solve_kappa",
    "HonlsParams",
    "StokesParams",
    "StratParams",
    "classification_map",
    "honls_degenerate_point",
    "honls_model",
    "polynomial_omega0",
    "stokes_model",
    "stratified_model",
    "GridSpec",
    "integrate_honls",
    "integrate_reduced",
    "invariants",
    "kink_pair_initial",
    "kdv_soliton",
    "track_front_speed",
    "ReducedCoefficients",
    "assemble_gardner",
    "assemble_kdv",
    "assemble_mkdv",
    "attach_dispersion",
    "consistency_report",
    "normalized_coefficients",
    "track_dispersion_branch",
    "ConfigError",
    "NumericalError",
    "PhasekitError",
    "ConservationModel",
    "DerivativeBundle",
    "PhasePoint",
    "build_pencil",
    "evaluate_bundle",
]
