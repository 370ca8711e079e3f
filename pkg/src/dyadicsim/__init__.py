"""Simulation and verification workbench for dyadic shell cascades."""

from .integrate import (
    DenseStorageExceeded,
    IntegrationError,
    IntegratorConfig,
    Method,
    StepBudgetExceeded,
    StiffnessFailure,
    Trajectory,
    detect_event,
    integrate,
    residual_scan,
)
from .model import (
    Closure,
    EnergyProfile,
    ModelParams,
    State,
    energy_derivative,
    energy_profile,
    vector_field,
)
from .positivity import GammaUndefined, PositivitySchedule, build_schedule, measure_tau, waiting_time
from .region import (
    CertificateReport,
    ControlPolynomials,
    InvarianceReport,
    RegionParams,
    Verdict,
    YParams,
    build_polynomials,
    certify_signs,
    check_invariance,
    critical_rescale,
    decay_bounds_check,
    region_membership,
    sample_in_region,
    y_vector_field,
)
from .regularity import (
    AlphaLog,
    BetaCritical,
    EpsSuper,
    OccupationQuery,
    OccupationScan,
    component_occupation,
    cube_integral_check,
    occupation_measure,
    psi_gap,
    psi_series,
    sup_functional,
    sup_weights,
)
from .symmetry import transform_scale, transform_shift, transform_sign_flip

__version__ = "0.1.0"
