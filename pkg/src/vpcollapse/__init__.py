"""Gravitational collapse in the spherically symmetric Vlasov-Poisson system.

Closed-form dust and core-boundary dynamics, the homogeneous solution and
its cut-off initial data, a shell-model particle solver with pointwise
evaluation of ``f`` along characteristics, and diagnostics that compare the
simulation with the homogeneous core.
"""
__version__ = "0.1.0"

from .dust import (
    CoreBoundary,
    DustSolution,
    F_inv,
    F_of,
    a_of_t,
    adot_of_t,
    collapse_time,
    make_core_boundary,
    r_eps_of_t,
    rdot_eps_of_t,
)
from .errors import CollapseError, ConfigError, DomainError, NumericError, TimeRangeError
from .homogeneous import (
    HomogeneousSolution,
    IsotropicProfile,
    h_eval,
    m_h,
    make_default_profile,
    make_profile,
    rho_h,
)
from .initial_data import (
    CutoffFn,
    InitialData,
    SampledEnsemble,
    cutoff_eval,
    f0_eval,
    make_initial_data,
    sample_ensemble,
)
from .kernels import available_backends, backend
from .simulation import (
    FieldHistory,
    ParticleEnsemble,
    RadialField,
    Simulator,
    backward_characteristic,
    compute_field,
    f_eval_pointwise,
    step_leapfrog,
)
