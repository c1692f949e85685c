"""Dominance and dissipativity certification for linear and Lur'e systems."""

from .cones import (
    ProjectiveMeasure,
    QuadraticCone,
    classify,
    positivity_probe,
    projective_measure_from_split,
    ratio_trace,
)
from .differential import (
    Channel,
    LureSystem,
    Nonlinearity,
    check_diff_dissipativity,
    check_diff_dominance,
    diff_feedback_compose,
    jacobian,
    vertex_family,
)
from .dissipativity import (
    DissipativityCertificate,
    SupplyRate,
    dissipativity_block,
    find_passivity_storage,
    min_gain_bisection,
    small_gain_pair,
    supply_gain,
    supply_passivity,
    verify_dissipativity,
)
from .errors import (
    CouplingError,
    DimensionError,
    LmiInfeasibleError,
    NonHyperbolicError,
    NumericalError,
    PdomError,
    PropertyViolationError,
    RateMismatchError,
    SplitMismatchError,
    UnsupportedConfigurationError,
)
from .interconnect import (
    FeedbackLoop,
    closed_loop_certificate,
    compose_supply,
    coupling_condition,
    feedback_compose,
    static_feedback,
)
from .lti import (
    DominanceCertificate,
    LtiSystem,
    ModalSplit,
    check_dominance,
    construct_certificate,
    eigen_split_test,
    modal_split,
    residual,
)
from .matrixcore import Inertia, inertia_of, sym_eigen
from .policy import DEFAULT_POLICY, NumericPolicy
from .sim import (
    Trajectory,
    classify_asymptotics,
    integrate,
    integrate_batch,
    modal_decay_check,
    multistability_probe,
)

__version__ = "0.1.0"
