"""Limit laws of normalized spin sums in multi-species Curie-Weiss models."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    ModelError,
    ModelSpec,
    SpeciesPartition,
    SpinConfig,
    ValidatedModel,
    energy_quadratic,
    g_per_spin,
    load_model,
    parse_model,
    validate_model,
)
from .landscape import (  # noqa: E402
    CriticalPoint,
    MinimaSet,
    MinimumType,
    NonConvergence,
    classify_minimum,
    eval_G,
    eval_phi,
    eval_pressure_functional,
    find_global_minima,
    grad_G,
    hess_G,
    solve_mean_field,
    taylor4_G,
)
from .limits import (  # noqa: E402
    DegeneracyError,
    LimitLaw,
    MomentReport,
    build_limit_law,
    chi_via_hessian,
    law_moments,
    susceptibility_chi,
)
from .exactdist import (  # noqa: E402
    BudgetExceeded,
    FiniteDist,
    compare_to_law,
    conditional_joint,
    exact_joint,
    glauber_sample,
    normalized_moments,
)
