"""Numerical verification of capacitary strong-type inequalities."""

from .errors import ConfigurationError, NumericalError
from .young import (
    E_E,
    ConditionReport,
    FactoredPair,
    GridSpec,
    YoungSpec,
    check_delta2,
    check_delta2_plus,
    check_pairing,
    check_submultiplicative_f,
    custom_table,
    derive_psi,
    eval_phi,
    eval_phi_prime,
    exp_log,
    exp_loglog,
    factored,
    power,
    power_log,
)
from .grid import (
    GridDomain,
    GridFunction,
    SetMask,
    ball_mask,
    build_domain,
    from_callable,
    gradient,
    gradient_magnitude,
    integrate,
    level_mask,
    zero_function,
)
from .norms import ModularValue, luxemburg_norm, modular, phi_inverse
from .capacity import (
    BallEstimate,
    CapacityCache,
    CapacityResult,
    ball_capacity_estimate,
    capacity_ball_radial,
    capacity_variational,
    riesz_capacity_variational,
)
from .strongtype import (
    PsiSpec,
    StrongTypeReport,
    SuiteVerdict,
    TestFunctionSpec,
    build_test_function,
    default_suite,
    derived_psi,
    explicit_psi,
    lhs_dyadic,
    rhs_energy,
    truncation_H,
    verify_strong_type,
)
from .averages import (
    AverageTrace,
    average_trace,
    capacitary_average,
    capacitary_maximal,
    default_centers,
    grid_lipschitz,
    snap_to_node,
    weak_type_sweep,
)

__version__ = "0.1.0"
