"""Approximate AVG/SUM/COUNT queries with expensive predicates.

Estimates aggregates over the records matching an expensive-to-evaluate
predicate by stratifying on cheap proxy scores, spending a fixed oracle-call
budget in a pilot stage plus an optimally allocated main stage, and
attaching percentile-bootstrap confidence intervals.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .bootstrap import BootstrapConfig, BootstrapResult, bootstrap_ci
from .data import (
    BudgetExceededError,
    ColumnSchema,
    ConfigError,
    Dataset,
    OracleLedger,
    QueryConfig,
    Record,
    SchemaError,
    ValidationError,
    load_dataset,
    oracle_eval,
    write_dataset,
)
from .estimators import (
    AllocationPlan,
    NoPositiveSamplesError,
    StratumStats,
    aggregate_estimate,
    allocated_mse,
    combine_estimate,
    optimal_allocation,
    predicted_mse,
    stratum_stats,
)
from .predicates import (
    And,
    Base,
    BindingError,
    ExpressionSyntaxError,
    Not,
    Or,
    PredicateExpr,
    base_names,
    combine_scores,
    eval_oracle_expr,
    parse_predicate,
    to_text,
)
from .sampler import EstimateReport, SamplerState, abae_sample, uniform_sample
from .stratify import Stratification, stratify_by_quantile
from .synth import (
    GroundTruth,
    GroupSynthSpec,
    MultiPredicateSynthSpec,
    SynthSpec,
    exhaustive_ground_truth,
    generate,
    generate_groups,
    generate_multipred,
)

__version__ = "0.1.0"
