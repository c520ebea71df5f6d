"""Markov-Feller semigroups on metric spaces and probe-based regularity checks."""

from markov_feller.errors import (
    ConfigError,
    DataError,
    DimensionMismatch,
    FellerError,
    InvalidTime,
    NotALimitPoint,
    SignConstraintError,
    UnequalMass,
)
from markov_feller.hamel import (
    AdditiveFunction,
    SpanPoint,
    eval_additive,
    format_rational,
    parse_rational,
    span_add,
    span_scale,
)
from markov_feller.spaces import (
    FiniteMeasure,
    Metric,
    Point,
    PseudoMetricFamily,
    family_eval,
    integrate,
    measure_total,
    metric_eval,
    totally_separating_probe,
)
from markov_feller.semigroups import (
    DeterministicMap,
    FiniteKernel,
    Identity,
    LogScaleFactor,
    MarkovSemigroup,
    Scaling,
    duality_check,
)
from markov_feller.transport import (
    CostMatrix,
    duality_gap,
    wasserstein,
    wasserstein_dual,
    wasserstein_primal,
)
from markov_feller.checkers import (
    ProbeSchedule,
    PropertyReport,
    TestFunction,
    Verdict,
    blowup_certificate,
    check_asf,
    check_asymptotic_e_property,
    check_e_property,
    identity_asf_refutation,
    scaling_asf_bound,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DimensionMismatch",
    "FellerError",
    "InvalidTime",
    "NotALimitPoint",
    "SignConstraintError",
    "UnequalMass",
    "AdditiveFunction",
    "SpanPoint",
    "eval_additive",
    "format_rational",
    "parse_rational",
    "span_add",
    "span_scale",
    "FiniteMeasure",
    "Metric",
    "Point",
    "PseudoMetricFamily",
    "family_eval",
    "integrate",
    "measure_total",
    "metric_eval",
    "totally_separating_probe",
    "DeterministicMap",
    "FiniteKernel",
    "Identity",
    "LogScaleFactor",
    "MarkovSemigroup",
    "Scaling",
    "duality_check",
    "CostMatrix",
    "duality_gap",
    "wasserstein",
    "wasserstein_dual",
    "wasserstein_primal",
    "ProbeSchedule",
    "PropertyReport",
    "TestFunction",
    "Verdict",
    "blowup_certificate",
    "check_asf",
    "check_asymptotic_e_property",
    "check_e_property",
    "identity_asf_refutation",
    "scaling_asf_bound",
]
