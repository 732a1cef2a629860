"""Rate limits and a protocol simulator for distributed source coding with Byzantine sensors."""

from .errors import ConvergenceFailure, FormatError, InvalidArgument, NumericFailure, ZeroProbabilityContext
from .info_core import (
    JointPmf,
    SequenceBlock,
    condition,
    conditional_entropy,
    conditional_mutual_information,
    entropy,
    marginalize,
    mutual_information,
    sample_block,
)
from .maxent import (
    Cover,
    QFamilySpec,
    brute_force_maxent,
    closed_form_t1,
    closed_form_tm1,
    enumerate_minimal_covers,
    fabrication_target,
    in_Q,
    max_entropy_over_family,
    solve_sum_rate_star,
    sum_rate_star,
)
from .regions import RatePoint, dfr_check, gap_demo, in_Rk, min_sum_rate, rfr_check, sw_region_check
from .typicality import (
    TypicalityParams,
    empirical_type,
    in_S_set,
    in_target_set,
    is_typical,
    lemma_marginal_closeness,
)

__version__ = "0.1.0"
