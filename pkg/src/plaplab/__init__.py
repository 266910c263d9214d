"""plaplab: a 2-D degenerate p-Poisson laboratory.

Solves -div(|grad u|^{p-2} grad u) = f (p > 2) on the square or the masked
unit disk by regularized energy minimization, and verifies the sharp
C^{1,1/(p-1)} regularity picture numerically: exponent chains, oscillation
growth at critical points, quasiregular structure of the complex gradient,
and the normalization/rescaling algebra behind the dyadic iteration.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateInputError,
    DegenerateProfileError,
    NodeLookupError,
    NumericalError,
    OutOfDomainError,
    PlaplabError,
    ResolutionError,
)
from .exponents import (
    ChainReport,
    ExponentSet,
    alpha_bk,
    alpha_crit,
    alpha_star,
    conjugate,
    exponent_chain,
    radial_constant,
    tau0,
)
from .grid import (
    Grid,
    GridFunction,
    VectorField,
    build_grid,
    interpolate,
    load_binary,
    load_csv,
    recover_gradient,
    save_binary,
    save_csv,
    sup_ball,
)
from .oscillation import (
    ExponentFit,
    OscillationProfile,
    classify_point,
    crack_bound_constant,
    fit_exponent,
    iteration_bound,
    oscillation_bound,
    profile,
)
from .quasiregular import (
    ComplexField,
    complex_gradient,
    gradient_mapping_defect,
    jacobian_check,
    kqr_defect,
    morrey_growth,
    nondegenerate_mask,
    wirtinger,
)
from .scaling import ScalingRecord, lambda_rescale, mu_rescale, theta_normalize
from .solver import (
    ProblemSpec,
    SolverConfig,
    SolverResult,
    energy,
    radial_benchmark_exact,
    residual,
    solve,
)
from .experiments import (
    ConvergenceRow,
    CorrectorRow,
    convergence_study,
    corrector_experiment,
    p_harmonic_replacement,
)
